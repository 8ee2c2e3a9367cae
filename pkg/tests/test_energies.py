"""Energies, Lambda functionals, correction tables, and the identity residual."""

import numpy as np
import pytest

from nlslab.classify import Thresholds, classify_batch_1d, is_nonresonant
from nlslab.dynamics import EvolutionConfig, evolve
from nlslab.energies import (ConsistencyError, correction_tables,
                             cumulative_simpson, e_i1, energy,
                             energy_identity_residual, lambda_eval, mass,
                             modified_energy)
from nlslab.geometry import build_geometry, field_from_modes, free_evolve, random_field, zero_field
from nlslab.multipliers import bare_m6, omega, sigma_product
from nlslab.smoothing import SmoothingSymbol, m_value

RNG = np.random.default_rng(17)


def plane_wave(g, K, mode=1, amp=None):
    amp = 2 * np.pi * g.lam if amp is None else amp
    return field_from_modes(g, K, {mode: amp})


class TestPointEnergies:
    def test_mass_examples(self):
        g = build_geometry(1)
        assert mass(zero_field(g, 4)) == 0.0
        u = plane_wave(g, 4)
        assert mass(u) == pytest.approx(2 * np.pi, rel=1e-14)
        assert mass(free_evolve(u, 0.7)) == pytest.approx(mass(u), rel=1e-12)

    def test_energy_single_mode_closed_form(self):
        g = build_geometry(1)
        u = plane_wave(g, 4)
        assert energy(u, "defocusing") == pytest.approx(np.pi + np.pi / 3, rel=1e-13)
        assert energy(u, "focusing") == pytest.approx(np.pi - np.pi / 3, rel=1e-13)

    def test_energy_2d_quartic(self):
        g = build_geometry(2, (1.0,), 1.0)
        u = field_from_modes(g, 3, {(1, 0): g.volume})
        # |u| = 1: E = vol*(1/2*|k|^2 + kappa/4)
        assert energy(u, "defocusing") == pytest.approx(g.volume * (0.5 + 0.25), rel=1e-13)


class TestLambdaEval:
    def test_lambda2_kinetic_pair(self):
        g = build_geometry(1)
        u = plane_wave(g, 4)
        sym = SmoothingSymbol(4.0, 0.5)

        def sigma2(k):
            return -0.5 * (m_value(np.abs(k[..., 0]), sym) * k[..., 0]
                           * m_value(np.abs(k[..., 1]), sym) * k[..., 1])

        val = lambda_eval(sigma2, [u, u], "direct")
        assert complex(val).real == pytest.approx(np.pi, rel=1e-13)
        assert abs(complex(val).imag) < 1e-13

    def test_lambda6_zero_field(self):
        g = build_geometry(1)
        z = zero_field(g, 3)
        sym = SmoothingSymbol(2.0, 0.5)
        val = lambda_eval(lambda k: sigma_product(k, sym), [z] * 6, "direct")
        assert val == 0.0

    def test_direct_equals_physical_on_factorizable(self):
        g = build_geometry(1, (), 2.0)
        u = random_field(g, 4, RNG)  # 9-mode field
        sym = SmoothingSymbol(2.0, 0.5)

        def factor(k):
            return m_value(np.abs(k), sym)

        direct = lambda_eval(lambda k: sigma_product(k, sym), [u] * 6, "direct")
        phys = lambda_eval(None, [u] * 6, "physical", slot_factors=[factor] * 6)
        assert abs(direct - phys) <= 1e-9 * max(abs(direct), 1e-30)

    def test_physical_needs_factors(self):
        g = build_geometry(1)
        u = random_field(g, 3, RNG)
        with pytest.raises(ValueError, match="factors"):
            lambda_eval(None, [u] * 6, "physical")


class TestTwoPathIdentity:
    def test_1d_random_fields(self):
        g = build_geometry(1, (), 1.5)
        for _ in range(20):
            u = random_field(g, 4, RNG)
            for sign in ("defocusing", "focusing"):
                e_i1(u, N=2.0, s=0.5, sign=sign, check="direct")  # raises on mismatch

    def test_2d_random_fields(self):
        g = build_geometry(2, (0.8,), 1.0)
        for _ in range(10):
            u = random_field(g, 2, RNG)
            e_i1(u, N=2.0, s=0.6, sign="defocusing", check="direct")

    def test_below_threshold_identity_with_plain_energy(self):
        g = build_geometry(1)
        u = random_field(g, 3, RNG)
        rep = modified_energy(u, level=2, N=8.0, s=0.5)
        assert rep.e_i1 == pytest.approx(energy(u, "defocusing"), rel=1e-12)
        assert rep.correction == 0.0
        assert rep.e_i2 == rep.e_i1


class TestCorrectionTables:
    def test_sigma_tilde_vanishes_below_threshold(self):
        g = build_geometry(1)
        u = zero_field(g, 3)
        tabs = correction_tables(u, N=16.0, s=0.5)
        assert np.all(tabs.sigma_tilde == 0.0)
        assert np.all(tabs.mbar_imag == 0.0)

    def test_two_path_sigma_tilde_identity(self):
        # sigma~ * alpha + (correctable part) = 0, recomputed independently
        g = build_geometry(1)
        K, N, s = 6, 4.0, 0.5
        u = zero_field(g, K)
        tabs = correction_tables(u, N, s)
        sym = SmoothingSymbol(N, 1 - s)
        th = Thresholds()
        rng = np.random.default_rng(2)
        free = rng.integers(-K, K + 1, size=(4000, 5)).astype(float)
        tups = np.concatenate([free, -free.sum(axis=1, keepdims=True)], axis=1)
        tups = tups[np.abs(tups[:, 5]) <= K]
        codes, _ = classify_batch_1d(tups, N, th)
        om = omega(tups)
        bare = bare_m6(tups, sym)
        sig = sigma_product(tups, sym) / 6.0
        alpha = -1j * om
        ups = codes != 0
        nr = is_nonresonant(codes)
        m_tilde = np.where(ups, sig * alpha, 0.0) + np.where(nr, 1j / 6.0 * bare, 0.0)
        # gather table values at the same tuples
        P = 2 * K + 1
        idx = tuple((tups[:, j] + K).astype(int) for j in range(5))
        st = tabs.sigma_tilde[idx]
        resid = st * alpha + m_tilde
        assert np.max(np.abs(resid)) < 1e-12

    def test_full_multiplier_vanishes_below_threshold(self):
        # (i/6) bare + sigma*alpha = 0 exactly when every slot is below N
        sym = SmoothingSymbol(8.0, 0.5)
        rng = np.random.default_rng(4)
        free = rng.integers(-2, 3, size=(500, 5)).astype(float)
        tups = np.concatenate([free, -free.sum(axis=1, keepdims=True)], axis=1)
        tups = tups[np.max(np.abs(tups), axis=1) <= 8.0]
        full = 1j / 6.0 * bare_m6(tups, sym) + (sigma_product(tups, sym) / 6.0) * (-1j * omega(tups))
        assert np.max(np.abs(full)) == 0.0


def test_cumulative_simpson_polynomials():
    x = np.linspace(0.0, 2.0, 21)
    y = 3 * x**2
    out = cumulative_simpson(y, x[1] - x[0])
    assert out[-1] == pytest.approx(8.0, rel=1e-12)
    assert out[10] == pytest.approx(1.0, rel=1e-12)


class TestResidual:
    def test_zero_field(self):
        g = build_geometry(1)
        z = zero_field(g, 4)
        out = energy_identity_residual([z] * 5, np.linspace(0, 0.1, 5), N=2.0, s=0.5)
        assert np.max(np.abs(out["residual"])) == 0.0

    def test_plane_wave_residual_negligible(self):
        g = build_geometry(1)
        K = 6
        u0 = plane_wave(g, K, mode=3, amp=1.0)
        cfg = EvolutionConfig(g, K, integrator="strang", dt=1e-3, t_end=0.05,
                              sample_stride=10)
        traj = evolve(cfg, u0)
        out = energy_identity_residual(traj.samples, traj.times, N=2.0, s=0.5)
        assert np.max(np.abs(out["residual"])) < 1e-10
        assert np.max(np.abs(np.diff(out["e_i1"]))) < 1e-12

    def test_refinement_small_lattice(self):
        g = build_geometry(1)
        K = 4
        rng = np.random.default_rng(9)
        modes = {int(n): 0.5 * (rng.standard_normal() + 1j * rng.standard_normal())
                 for n in (-4, -2, 0, 1, 3)}
        u0 = field_from_modes(g, K, modes)
        tabs = correction_tables(u0, N=2.0, s=0.5)
        prev = None
        for n_steps in (20, 40, 80):
            cfg = EvolutionConfig(g, K, integrator="rk4-galerkin",
                                  dt=0.08 / n_steps, t_end=0.08, sample_stride=4)
            traj = evolve(cfg, u0)
            out = energy_identity_residual(traj.samples, traj.times, 2.0, 0.5,
                                           tables=tabs)
            r = abs(out["residual"][-1])
            if prev is not None:
                assert prev / max(r, 1e-300) >= 3.5
            prev = r
