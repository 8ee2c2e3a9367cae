"""Resonance classifier: verdicts, witnesses, totality, and symmetry."""

import numpy as np
import pytest

from nlslab.classify import (BELOW, NR_2D, NR_BILINEAR, NR_PAIR, RES_I, RES_III,
                             ResonanceClassification, Thresholds, classify,
                             classify_batch_1d, classify_batch_2d,
                             is_nonresonant, is_resonant)
from nlslab.multipliers import omega, sohinger_tuple

RNG = np.random.default_rng(5)


def gamma6(count, lo=-32, hi=32):
    free = RNG.integers(lo, hi + 1, size=(count, 5)).astype(float)
    last = -free.sum(axis=1, keepdims=True)
    return np.concatenate([free, last], axis=1)


def test_near_collision_pair_is_resonant_case_i():
    t = (64.0, -63.0, 16.0, -16.0, -1.0, 0.0)
    v = classify(t, N=16.0)
    assert v.code == RES_I
    assert v.resonant
    assert v.witness["pair_sum"] == pytest.approx(1.0)
    assert v.witness["collision_scale"] == pytest.approx(16.0**2 / 64.0)


def test_separated_pair_is_nonresonant():
    t = (64.0, -32.0, -16.0, -16.0, 0.0, 0.0)
    om = abs(omega(np.array(t)))
    assert om == 3072.0
    # tight gap factor: the conjugated maximum is half the top -> pair rule
    v2 = classify(t, N=16.0, thresholds=Thresholds(gap=2.0))
    assert v2.code == NR_PAIR
    assert om >= v2.witness["omega_lower_bound"] > 0
    # default gap: same verdict through the bilinear separation rule
    v4 = classify(t, N=16.0)
    assert v4.code == NR_BILINEAR
    assert om >= v4.witness["omega_lower_bound"] > 0


def test_sohinger_is_resonant_case_iii():
    t = sohinger_tuple(8).entries
    v = classify(t, N=8.0)
    assert v.code == RES_III
    assert omega(np.array(t)) == 0.0


def test_below_threshold():
    v = classify((2.0, -1.0, 1.0, -2.0, 1.0, -1.0), N=16.0)
    assert v.code == BELOW
    assert not v.resonant and not v.nonresonant


def test_totality_and_determinism():
    tups = gamma6(5000)
    codes, _ = classify_batch_1d(tups, N=8.0)
    again, _ = classify_batch_1d(tups, N=8.0)
    assert np.array_equal(codes, again)
    # every tuple gets exactly one of the three families
    below = codes == BELOW
    assert np.all(below | is_resonant(codes) | is_nonresonant(codes))


def test_verdict_invariance_under_slot_symmetries():
    tups = gamma6(2000)
    codes, _ = classify_batch_1d(tups, N=8.0)

    # permute unconjugated slots (1,3,5) -> (3,5,1)
    perm = tups[:, [2, 1, 4, 3, 0, 5]]
    codes_p, _ = classify_batch_1d(perm, N=8.0)
    assert np.array_equal(codes, codes_p)

    # permute conjugated slots (2,4,6) -> (6,2,4)
    perm2 = tups[:, [0, 5, 2, 1, 4, 3]]
    codes_p2, _ = classify_batch_1d(perm2, N=8.0)
    assert np.array_equal(codes, codes_p2)

    # conjugation symmetry: swap parities and negate
    swapped = -tups[:, [1, 0, 3, 2, 5, 4]]
    codes_s, _ = classify_batch_1d(swapped, N=8.0)
    assert np.array_equal(codes, codes_s)

    # global negation
    codes_n, _ = classify_batch_1d(-tups, N=8.0)
    assert np.array_equal(codes, codes_n)


def test_nonresonant_never_sees_zero_resonance_small_sweep():
    # exhaustive over a small lattice: no nonresonant verdict with omega = 0
    K = 6
    rng = np.arange(-K, K + 1)
    grids = np.meshgrid(*([rng] * 5), indexing="ij")
    free = np.stack([g.ravel() for g in grids], axis=-1).astype(float)
    last = -free.sum(axis=1, keepdims=True)
    tups = np.concatenate([free, last], axis=1)
    tups = tups[np.abs(tups[:, 5]) <= K]
    for G in (3.0, 4.0, 6.0):
        codes, _ = classify_batch_1d(tups, N=2.0, thresholds=Thresholds(gap=G))
        om = omega(tups)
        bad = is_nonresonant(codes) & (om == 0.0)
        assert not np.any(bad), tups[bad][:5]


class Test2d:
    def test_dominant_unconjugated_pair(self):
        t = ((16.0, 1.0), (-1.0, 0.0), (-16.0, -2.0), (1.0, 1.0))
        v = classify(t, N=4.0, d=2)
        assert v.code == NR_2D
        om = abs(omega(np.array(t), d=2))
        assert om >= v.witness["omega_lower_bound"] > 0

    def test_mixed_pair_is_resonant(self):
        t = ((16.0, 0.0), (-16.0, -1.0), (1.0, 1.0), (-1.0, 0.0))
        v = classify(t, N=4.0, d=2)
        assert v.resonant

    def test_below(self):
        t = ((2.0, 0.0), (-2.0, -1.0), (1.0, 1.0), (-1.0, 0.0))
        assert classify(t, N=8.0, d=2).code == BELOW

    def test_2d_nonresonant_bound_provable(self):
        count = 4000
        free = RNG.integers(-16, 17, size=(count, 3, 2)).astype(float)
        last = -free.sum(axis=1, keepdims=True)
        tups = np.concatenate([free, last], axis=1)
        codes, _ = classify_batch_2d(tups, N=4.0)
        om = np.abs(omega(tups, d=2))
        nr = is_nonresonant(codes)
        assert not np.any(nr & (om == 0.0))


def test_wrong_slot_count_rejected():
    with pytest.raises(ValueError, match="slots"):
        classify((1.0, -1.0, 2.0, -2.0), N=2.0, d=1)
