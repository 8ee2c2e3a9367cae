"""Frequency tuples on the zero-sum hyperplane and the multilinear symbols.

A tuple (k_1, ..., k_n) lives on Gamma_n = {sum k_i = 0}; odd slots are
unconjugated, even slots conjugated.  Frequencies are scalars in one
dimension and 2-vectors in two.  Vectorized evaluators act on arrays of
shape (..., n) (1d) or (..., n, 2) (2d), last axes being slot / component.

Normalization: symbols here are the *bare* objects

    omega_n = sum_i (-1)^(i+1) |k_i|^2          (resonance function)
    alpha_n = i sum_j (-1)^j |k_j|^2 = -i omega_n
    M_n     = sum_i (-1)^(i+1) m^2(k_i) |k_i|^2  (smoothed resonance)
    sigma_n = prod_i m(k_i)

Prefactors (1/2, 1/6, 1/4, the i of the derivative formulas, and the
focusing/defocusing sign) belong to the energy-functional layer, which owns
a single constants table; see ``energies``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import sharp_shell_index
from .smoothing import SmoothingSymbol, m_value


def as_tuple_array(k, d: int) -> np.ndarray:
    """Coerce to (..., n) for d=1 or (..., n, d) for d=2, dtype float."""
    arr = np.asarray(k, dtype=float)
    if d == 1:
        if arr.ndim == 0:
            raise ValueError("a frequency tuple needs a slot axis")
        return arr
    if arr.ndim < 2 or arr.shape[-1] != d:
        raise ValueError(f"2d tuples need trailing component axis of size {d}")
    return arr


def squared_mags(k, d: int) -> np.ndarray:
    """|k_i|^2 per slot; shape (..., n)."""
    arr = as_tuple_array(k, d)
    return arr**2 if d == 1 else np.sum(arr**2, axis=-1)


def mags(k, d: int) -> np.ndarray:
    return np.sqrt(squared_mags(k, d))


def _alt_signs(n: int) -> np.ndarray:
    """(+1, -1, +1, ...): sign (-1)^(i+1) for 1-indexed slot i."""
    s = np.ones(n)
    s[1::2] = -1.0
    return s


def constraint_residual(k, d: int) -> np.ndarray:
    arr = as_tuple_array(k, d)
    return np.sum(arr, axis=-1 if d == 1 else -2)


def omega(k, d: int = 1) -> np.ndarray:
    """Resonance function sum (-1)^(i+1) |k_i|^2 (exact for integer input)."""
    sq = squared_mags(k, d)
    return np.sum(sq * _alt_signs(sq.shape[-1]), axis=-1)


def alpha_n(k, d: int = 1) -> np.ndarray:
    """i sum (-1)^j |k_j|^2; identically -i * omega."""
    return -1j * omega(k, d)


def bare_m6(k, sym: SmoothingSymbol, d: int = 1) -> np.ndarray:
    """sum (-1)^(i+1) m^2(k_i)|k_i|^2 for any even slot count."""
    sq = squared_mags(k, d)
    m2 = m_value(np.sqrt(sq), sym) ** 2
    return np.sum(m2 * sq * _alt_signs(sq.shape[-1]), axis=-1)


# bare M_4 is the same alternating sum on four slots
bare_m4 = bare_m6


def sigma_product(k, sym: SmoothingSymbol, d: int = 1) -> np.ndarray:
    """prod_i m(k_i)."""
    r = mags(k, d)
    return np.prod(m_value(r, sym), axis=-1)


@dataclass(frozen=True)
class FrequencyTuple:
    """A concrete point of Gamma_n with shell metadata."""

    entries: tuple
    d: int = 1

    def __post_init__(self):
        arr = as_tuple_array(np.array(self.entries, dtype=float), self.d)
        n = arr.shape[0] if self.d == 1 else arr.shape[0]
        if n not in (2, 4, 6, 10):
            raise ValueError(f"slot count {n} not in (2, 4, 6, 10)")
        res = constraint_residual(arr, self.d)
        if not np.all(np.abs(res) <= 1e-9 * max(1.0, float(np.max(np.abs(arr))))):
            raise ValueError(f"tuple off the zero-sum hyperplane (residual {res})")
        object.__setattr__(self, "entries", tuple(map(tuple, arr)) if self.d == 2
                           else tuple(float(x) for x in arr))

    @property
    def n(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def mags(self) -> np.ndarray:
        return mags(self.array(), self.d)

    def shells(self) -> np.ndarray:
        """Sharp dyadic shell of each slot."""
        return sharp_shell_index(self.mags())

    def sorted_mags(self) -> np.ndarray:
        return np.sort(self.mags())[::-1]


def sohinger_tuple(K: int = 1) -> FrequencyTuple:
    """The family K*(5, -3, 6, -2, 1, -7): zero sum and zero resonance."""
    return FrequencyTuple(tuple(K * np.array([5, -3, 6, -2, 1, -7], dtype=float)))


# -- generic symbol wrapper and substitution ----------------------------------


@dataclass(frozen=True)
class SymbolSpec:
    """A named multilinear symbol with a vectorized evaluator on Gamma_n.

    ``structure`` tags how the evaluator factors over slots:
    'sum' (sum of per-slot terms), 'product' (product of per-slot factors),
    or 'general'.  Box expansion exploits the first two.
    """

    name: str
    n: int
    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    structure: str = "general"
    slot_terms: tuple = ()  # per-slot callables for 'sum'/'product' structure

    def __call__(self, k) -> np.ndarray:
        arr = as_tuple_array(k, self.d)
        return self.evaluator(arr)


def slot_sq(k, d: int) -> np.ndarray:
    """|k|^2 of a single-slot frequency array ((...,) in 1d, (..., 2) in 2d)."""
    arr = np.asarray(k, dtype=float)
    return arr**2 if d == 1 else np.sum(arr**2, axis=-1)


def omega_symbol(n: int, d: int = 1) -> SymbolSpec:
    signs = _alt_signs(n)
    terms = tuple(
        (lambda s: (lambda k: s * slot_sq(k, d)))(signs[i]) for i in range(n)
    )
    return SymbolSpec(f"Omega{n}", n, d, lambda k: omega(k, d), "sum", terms)


def m_multiplier_symbol(n: int, sym: SmoothingSymbol, d: int = 1) -> SymbolSpec:
    signs = _alt_signs(n)

    def term(i):
        s = signs[i]

        def f(k):
            sq = slot_sq(k, d)
            return s * m_value(np.sqrt(sq), sym) ** 2 * sq

        return f

    return SymbolSpec(f"M{n}", n, d, lambda k: bare_m6(k, sym, d), "sum",
                      tuple(term(i) for i in range(n)))


def sigma_symbol(n: int, sym: SmoothingSymbol, d: int = 1) -> SymbolSpec:
    def factor(k):
        return m_value(np.sqrt(slot_sq(k, d)), sym)

    return SymbolSpec(f"Sigma{n}", n, d, lambda k: sigma_product(k, sym, d),
                      "product", tuple(factor for _ in range(n)))


def constant_symbol(value: complex, n: int, d: int = 1) -> SymbolSpec:
    def ev(k):
        sq = squared_mags(k, d)
        return np.full(sq.shape[:-1], value, dtype=complex)

    def lead(k):
        return np.full(np.shape(slot_sq(k, d)), value, dtype=complex)

    def one(k):
        return np.ones(np.shape(slot_sq(k, d)))

    return SymbolSpec(f"Const({value})", n, d, ev, "product",
                      (lead,) + tuple(one for _ in range(n - 1)))


def x_substitute(base: SymbolSpec, j: int) -> SymbolSpec:
    """Collapse slots j..j+4 (1-indexed) of a Gamma_(n+4) tuple into their sum.

    Returns the symbol on Gamma_(n+4) that evaluates ``base`` at
    (k_1, .., k_(j-1), k_j + ... + k_(j+4), k_(j+5), ..).
    """
    if not (1 <= j <= base.n):
        raise ValueError(f"substitution index {j} outside 1..{base.n}")
    d = base.d
    n_big = base.n + 4

    def ev(k):
        arr = as_tuple_array(k, d)
        slot_ax = -1 if d == 1 else -2
        group = np.take(arr, range(j - 1, j + 4), axis=slot_ax).sum(axis=slot_ax, keepdims=True)
        head = np.take(arr, range(0, j - 1), axis=slot_ax)
        tail = np.take(arr, range(j + 4, n_big), axis=slot_ax)
        collapsed = np.concatenate([head, group, tail], axis=slot_ax)
        return base(collapsed)

    return SymbolSpec(f"X{j}[{base.name}]", n_big, d, ev, "general")


def symmetrize(spec: SymbolSpec, k, rng=None, exhaustive: bool = True) -> np.ndarray:
    """Average the symbol over permutations of odd slots and of even slots.

    The multilinear pairing only sees this symmetrization, so identities
    between differently-written symbols are checked modulo it.
    """
    from itertools import permutations

    arr = as_tuple_array(k, spec.d)
    n = spec.n
    odd = list(range(0, n, 2))
    even = list(range(1, n, 2))
    total = None
    count = 0
    for po in permutations(odd):
        for pe in permutations(even):
            perm = [0] * n
            for src, dst in zip(odd, po):
                perm[dst] = src
            for src, dst in zip(even, pe):
                perm[dst] = src
            slot_ax = -1 if spec.d == 1 else -2
            shuffled = np.take(arr, perm, axis=slot_ax)
            v = spec(shuffled)
            total = v if total is None else total + v
            count += 1
    return total / count
