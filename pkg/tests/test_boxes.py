"""Box-localized Fourier expansion: delta property, decay, reconstruction."""

import numpy as np
import pytest

from nlslab.boxes import MultiplierBox, QuadratureError, fourier_expand
from nlslab.multipliers import constant_symbol, m_multiplier_symbol, sigma_symbol
from nlslab.smoothing import SmoothingSymbol

RNG = np.random.default_rng(31)
SYM = SmoothingSymbol(N=4.0, alpha=0.5)
M6 = m_multiplier_symbol(6, SYM)


def interior_points(box, count=300, margin=0.48):
    pts = []
    for i in range(box.n):
        (c, L), = box.slot_axes(i)
        pts.append(c + RNG.uniform(-margin, margin, count) * L)
    return np.stack(pts, axis=-1)


def test_box_validation():
    with pytest.raises(ValueError, match="length"):
        MultiplierBox(((4.0, -1.0),) * 6)
    with pytest.raises(ValueError, match="exceeds"):
        MultiplierBox(((4.0, 100.0),) * 6)


def test_constant_symbol_is_a_delta():
    box = MultiplierBox(((24.0, 8.0), (-25.0, 8.0), (6.0, 4.0), (-6.0, 4.0),
                         (1.0, 2.0), (0.0, 2.0)))
    exp = fourier_expand(constant_symbol(3.0, 6), box, trunc=8)
    assert abs(exp.dc() - 3.0 * box.volume()) < 1e-12 * abs(exp.dc())
    assert exp.max_offdc() < 1e-12


def test_smoothed_resonance_decay_and_reconstruction():
    # near-collision box crossing the transition annulus: curved symbol
    box = MultiplierBox(((6.0, 3.0), (-6.0, 3.0), (5.5, 2.5), (-5.5, 2.5),
                         (1.0, 2.0), (0.0, 2.0)))
    exp = fourier_expand(M6, box, trunc=8, order=6)
    assert exp.decay_report()["slope"] >= 6.0
    tup = interior_points(box)
    exact = M6(tup)
    err = np.max(np.abs(exp.reconstruct(tup) - exact))
    assert err <= 1e-6 * np.max(np.abs(exact))


def test_full_shell_box_reconstruction():
    box = MultiplierBox(((12.0, 8.0), (-12.0, 8.0), (10.0, 4.0), (-10.0, 4.0),
                         (1.0, 2.0), (-1.0, 2.0)))
    exp = fourier_expand(M6, box, trunc=8, order=6)
    tup = interior_points(box)
    exact = M6(tup)
    assert np.max(np.abs(exp.reconstruct(tup) - exact)) <= 1e-8 * np.max(np.abs(exact))


def test_coefficient_sum_tracks_sup_on_slow_boxes():
    sig = sigma_symbol(6, SYM)
    box = MultiplierBox(((60.0, 1.0), (-61.0, 1.0), (40.0, 1.0), (-40.0, 1.0),
                         (30.5, 1.0), (-29.5, 1.0)))
    exp = fourier_expand(sig, box, trunc=8)
    tup = interior_points(box, count=500, margin=0.49)
    exact = sig(tup)
    sup = np.max(np.abs(exact))
    l1 = exp.coefficient_l1_unit()
    assert abs(l1 - sup) <= 0.05 * sup
    # inversion at random points reproduces the symbol there
    assert np.max(np.abs(exp.reconstruct(tup) - exact)) <= 1e-8 * sup


def test_rejects_non_factorizable_symbols():
    from nlslab.multipliers import SymbolSpec

    bad = SymbolSpec("ratio", 6, 1, lambda k: np.sum(k, axis=-1), "general")
    box = MultiplierBox(((4.0, 2.0),) * 6)
    with pytest.raises(ValueError, match="factor"):
        fourier_expand(bad, box, trunc=4)


def test_2d_slot_expansion_reconstructs():
    s4 = sigma_symbol(4, SmoothingSymbol(N=2.0, alpha=0.4), d=2)
    box = MultiplierBox((
        ((5.0, 2.0), (4.0, 2.0)),
        ((-5.0, 2.0), (-4.0, 2.0)),
        ((1.0, 1.0), (0.0, 1.0)),
        ((-1.0, 1.0), (0.0, 1.0)),
    ), d=2)
    exp = fourier_expand(s4, box, trunc=2, order=3)
    pts = []
    for i in range(4):
        (cx, Lx), (cy, Ly) = box.slot_axes(i)
        pts.append(np.stack([cx + RNG.uniform(-0.45, 0.45, 150) * Lx,
                             cy + RNG.uniform(-0.45, 0.45, 150) * Ly], axis=-1))
    tup = np.stack(pts, axis=-2)
    exact = s4(tup)
    err = np.max(np.abs(exp.reconstruct(tup) - exact))
    assert err <= 1e-5 * np.max(np.abs(exact))
