"""Resonant / non-resonant classification of zero-sum frequency tuples.

The classifier is a total, deterministic decision tree over a tuple's sorted
magnitudes, slot parities (odd slots unconjugated, even conjugated), and
signs.  Asymptotic comparisons are made concrete through a gap factor G:

    A << B  iff  A <= B / G,        A ~ B  iff  B/G < A <= G*B,

applied to raw magnitudes.  Every non-resonant verdict carries the claimed
lower bound for the resonance function so sweeps can measure the implied
constant; resonant verdicts record which part of the kept region fired.

One-dimensional rules, in order (six slots):
  1. all magnitudes <= N: below threshold (the smoothed resonance vanishes
     identically there, by exact cancellation);
  2. largest conjugated magnitude << largest magnitude  -> non-resonant;
  3. third largest >> fourth largest                    -> non-resonant;
  4. two dominant slots (N1* >> N3*): non-resonant when |k1*+k2*| >> N3*^2/N1*,
     else the near-collision resonant case (i);
  5. four dominant slots (N4* >> N5*): non-resonant when the three same-parity
     high slots share a sign, or one of them nearly collides with the
     opposite-parity high slot; else resonant case (ii);
  6. five comparable slots: resonant case (iii).

Rule 2 is sound outright (|Omega| >= (1 - 3/G^2) N1*^2 > 0 for G >= 2).  The
asymptotic proofs behind rules 3-5 hide constants that a finite gap factor
cannot honor: at G = 4 there are integer tuples meeting the structural
hypothesis of rule 3 (or 5) with vanishing resonance.  Those rules therefore
also require the tuple to witness the claimed bound numerically,

    |Omega_6| >= (claimed scale) / G,

and fall through to the resonant side otherwise.  A certified non-resonant
verdict always has the division by the resonance function under control.

Two dimensions (four slots): non-resonant exactly when one parity pair
dominates the other (then |Omega4| >= 2*(1-1/G^2)*min(pair)^2 > 0 follows
from the definition alone); otherwise resonant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .multipliers import as_tuple_array

# verdict codes (stable, used in census arrays and CSV output)
BELOW = 0
RES_I = 1
RES_II = 2
RES_III = 3
RES_2D = 4
NR_PAIR = 10
NR_TRIPLE = 11
NR_BILINEAR = 12
NR_SIGNS = 13
NR_2D = 14

RULE_NAMES = {
    NR_PAIR: "Lemma41-N2llN1",
    NR_TRIPLE: "Lemma41-N3ggN4",
    NR_BILINEAR: "Lemma42-bilinear",
    NR_SIGNS: "Lemma43-signs",
    NR_2D: "2d-Atilde",
}

CASE_NAMES = {RES_I: "i", RES_II: "ii", RES_III: "iii", RES_2D: "2d"}


def is_resonant(codes) -> np.ndarray:
    codes = np.asarray(codes)
    return (codes >= RES_I) & (codes <= RES_2D)


def is_nonresonant(codes) -> np.ndarray:
    return np.asarray(codes) >= NR_PAIR


def code_label(code: int) -> str:
    if code == BELOW:
        return "below-threshold"
    if code in RULE_NAMES:
        return f"NonResonant({RULE_NAMES[code]})"
    return f"Resonant(case {CASE_NAMES[code]})"


@dataclass(frozen=True)
class Thresholds:
    """Gap factor for << / ~ comparisons; the same G enters every rule."""

    gap: float = 4.0

    def __post_init__(self):
        if not self.gap > 1.0:
            raise ValueError(f"gap={self.gap} must exceed 1")


@dataclass(frozen=True)
class ResonanceClassification:
    code: int
    label: str
    witness: dict = field(default_factory=dict)

    @property
    def resonant(self) -> bool:
        return bool(is_resonant(self.code))

    @property
    def nonresonant(self) -> bool:
        return bool(is_nonresonant(self.code))


def _sorted_by_abs_desc(vals: np.ndarray) -> np.ndarray:
    """Sort the last axis by descending absolute value, keeping signs."""
    order = np.argsort(-np.abs(vals), axis=-1, kind="stable")
    return np.take_along_axis(vals, order, axis=-1)


def _sort3_abs_desc(v0, v1, v2):
    """Three-element compare-exchange network on |.|, keeping signed values."""
    def ce(a, b):
        swap = np.abs(a) < np.abs(b)
        return np.where(swap, b, a), np.where(swap, a, b)

    v0, v1 = ce(v0, v1)
    v1, v2 = ce(v1, v2)
    v0, v1 = ce(v0, v1)
    return v0, v1, v2


def _merge_sorted_triples(a, b):
    """Descending merge of two descending triples (selection formulas)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    n1 = np.maximum(a0, b0)
    n2 = np.maximum(np.minimum(a0, b0), np.maximum(a1, b1))
    n3 = np.maximum.reduce([np.minimum(a0, b1), np.minimum(a1, b0), a2, b2])
    n4 = np.maximum.reduce([np.minimum(a0, b2), np.minimum(a1, b1),
                            np.minimum(a2, b0)])
    n5 = np.maximum(np.minimum(a1, b2), np.minimum(a2, b1))
    n6 = np.minimum(a2, b2)
    return n1, n2, n3, n4, n5, n6


def classify_batch_1d(k, N: float, thresholds: Thresholds = Thresholds()):
    """Vectorized six-slot classifier.

    Returns (codes, info) with info carrying the canonicalized slot values
    used by the rules: odd/even slots sorted by magnitude (after the parity
    flip that makes the largest slot unconjugated) and the merged magnitudes.
    """
    arr = as_tuple_array(k, 1)
    if arr.shape[-1] != 6:
        raise ValueError("1d classifier expects six slots")
    G = thresholds.gap

    o0, o1, o2 = _sort3_abs_desc(arr[..., 0], arr[..., 2], arr[..., 4])
    e0, e1, e2 = _sort3_abs_desc(arr[..., 1], arr[..., 3], arr[..., 5])
    flip = np.abs(e0) > np.abs(o0)
    o0, e0 = np.where(flip, e0, o0), np.where(flip, o0, e0)
    o1, e1 = np.where(flip, e1, o1), np.where(flip, o1, e1)
    o2, e2 = np.where(flip, e2, o2), np.where(flip, o2, e2)
    o = np.stack([o0, o1, o2], axis=-1)
    e = np.stack([e0, e1, e2], axis=-1)

    ns = _merge_sorted_triples((np.abs(o0), np.abs(o1), np.abs(o2)),
                               (np.abs(e0), np.abs(e1), np.abs(e2)))
    n1, n2, n3, n4, n5 = ns[:5]
    mags = np.stack(ns, axis=-1)
    sq = arr * arr
    aom = np.abs(sq[..., 0] - sq[..., 1] + sq[..., 2] - sq[..., 3]
                 + sq[..., 4] - sq[..., 5])

    codes = np.full(arr.shape[:-1], RES_III, dtype=np.int8)
    undecided = np.ones(arr.shape[:-1], dtype=bool)

    def settle(mask, code):
        hit = undecided & mask
        codes[hit] = code
        undecided[hit] = False

    settle(n1 <= N, BELOW)
    settle(np.abs(e[..., 0]) * G <= n1, NR_PAIR)
    settle((n3 > 0) & (n3 >= G * n4) & (aom * G >= n1 * n3), NR_TRIPLE)

    two_high = undecided & (n1 >= G * n3)
    s12 = o[..., 0] + e[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.where(n1 > 0, n3**2 / np.maximum(n1, 1e-300), 0.0)
    settle(two_high & (np.abs(s12) > G * L) & (aom * G >= n1 * np.abs(s12)),
           NR_BILINEAR)
    settle(two_high, RES_I)

    four_high = undecided & (n4 >= G * n5) & (n4 > 0)
    cert = aom * G >= n1**2
    c_odd = np.sum(np.abs(o) >= n4[..., None], axis=-1)
    settle(four_high & (c_odd == 2), RES_II)

    # distribution (II): one odd high, trio = conjugated slots; (III): mirrored
    for c, trio, single in ((1, e, o), (3, o, e)):
        sel = four_high & undecided & (c_odd == c)
        if not np.any(sel):
            continue
        u = single[..., 0]
        same_sign_trio = (
            (np.sign(trio[..., 0]) == np.sign(trio[..., 1]))
            & (np.sign(trio[..., 1]) == np.sign(trio[..., 2]))
        )
        near = np.zeros_like(sel)
        for j in range(3):
            v = trio[..., j]
            same = np.sign(v) == np.sign(u)
            gap_ok = np.where(same, np.abs(v - u), np.abs(v + u)) * G <= n1
            near |= gap_ok
        settle(sel & (same_sign_trio | near) & cert, NR_SIGNS)
        settle(sel, RES_II)

    # remaining: five comparable magnitudes
    codes[undecided] = RES_III

    info = {"odd": o, "even": e, "mags": mags, "s12": s12, "L": L, "flip": flip,
            "abs_omega": aom}
    return codes, info


def classify_batch_2d(k, N: float, thresholds: Thresholds = Thresholds()):
    """Vectorized four-slot classifier with 2-vector frequencies."""
    arr = as_tuple_array(k, 2)
    if arr.shape[-2] != 4:
        raise ValueError("2d classifier expects four slots")
    G = thresholds.gap
    m = np.sqrt(np.sum(arr**2, axis=-1))  # (..., 4)
    n1 = np.max(m, axis=-1)

    codes = np.full(m.shape[:-1], RES_2D, dtype=np.int8)
    below = n1 <= N
    codes[below] = BELOW

    pair_lo = {}
    for name, (a, b) in (("odd", (0, 2)), ("even", (1, 3))):
        other = {"odd": (1, 3), "even": (0, 2)}[name]
        lo = np.minimum(m[..., a], m[..., b])
        hi = np.maximum(m[..., a], m[..., b])
        rest = np.maximum(m[..., other[0]], m[..., other[1]])
        dominant = (lo >= G * rest) & (lo > 0) & (hi <= G * lo)
        pair_lo[name] = (dominant, lo)
        codes[~below & dominant] = NR_2D

    info = {"mags": m, "odd_pair": pair_lo["odd"], "even_pair": pair_lo["even"]}
    return codes, info


def classify(entries, N: float, thresholds: Thresholds = Thresholds(),
             d: int = 1) -> ResonanceClassification:
    """Classify one tuple and report the compared quantities as a witness."""
    arr = as_tuple_array(np.array(entries, dtype=float), d)
    n_slots = arr.shape[0] if d == 1 else arr.shape[0]
    if (d, n_slots) not in ((1, 6), (2, 4)):
        raise ValueError(f"classification defined for 6 slots (1d) / 4 slots (2d), got {n_slots}")
    if d == 1:
        codes, info = classify_batch_1d(arr[None, :], N, thresholds)
        code = int(codes[0])
        mags = info["mags"][0]
        witness = {
            "sorted_mags": [float(x) for x in mags],
            "N": float(N),
            "gap": thresholds.gap,
        }
        if code == RES_I or code == NR_BILINEAR:
            witness["pair_sum"] = float(abs(info["s12"][0]))
            witness["collision_scale"] = float(info["L"][0])
        G = thresholds.gap
        if code == NR_PAIR:
            witness["omega_lower_bound"] = float((1 - 3 / G**2) * mags[0] ** 2)
        if code == NR_TRIPLE:
            witness["omega_lower_bound"] = float(mags[0] * mags[2] / G)
        if code == NR_BILINEAR:
            witness["omega_lower_bound"] = float(mags[0] * abs(info["s12"][0]) / G)
        if code == NR_SIGNS:
            witness["omega_lower_bound"] = float(mags[0] ** 2 / G)
    else:
        codes, info = classify_batch_2d(arr[None, ...], N, thresholds)
        code = int(codes[0])
        witness = {
            "sorted_mags": [float(x) for x in np.sort(info["mags"][0])[::-1]],
            "N": float(N),
            "gap": thresholds.gap,
        }
        if code == NR_2D:
            lo = max(info["odd_pair"][1][0], info["even_pair"][1][0])
            witness["omega_lower_bound"] = float(2 * (1 - 1 / thresholds.gap**2) * lo**2)
    return ResonanceClassification(code, code_label(code), witness)
