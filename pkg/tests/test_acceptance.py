"""The eight acceptance criteria at their stated sizes and tolerances.

Each test registers itself through the ``acceptance`` fixture, so the run ends
with one PASS/FAIL line per criterion.
"""

import time

import numpy as np
import pytest

from wnlift.experiments import (
    exp_an_expansion,
    exp_beta_identity,
    exp_ibp,
    exp_iwn_leading,
    exp_tv_convergence,
    exp_wn_pushforward,
)
from wnlift.simplex_core import L_value, brute_force_f, f_value, fd_directional_derivative, g_value, project_simplex, simplex_lattice
from wnlift.wn_lift import FsPoint, LiftConfig, branch_psh_check, fs_metric_log, lift_sup_oracle, lift_value

SAMPLES = 10_000


def _assert_report(rep):
    assert rep.verdict, rep.summary_line() + "".join(
        f"\n  {e.label}: measured {e.measured!r}, expected {e.expected!r} +- {e.tolerance!r} ({e.sense})" for e in rep.failures()
    )


def test_criterion_1_simplex_suite(acceptance):
    acceptance(1, "projection, envelope and directional-derivative suite")
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    ts = np.logspace(-4, -1, 13)
    for N in (1, 2, 3):
        x = rng.uniform(-3, 3, size=(SAMPLES, N))

        p = project_simplex(x)
        assert p.min() >= -1e-12 and p.sum(axis=1).max() <= 1 + 1e-12
        assert np.max(np.abs(project_simplex(p) - p)) <= 1e-12

        if N <= 2:
            gap = brute_force_f(x, 1e-3) - f_value(x)
            assert gap.min() >= -1e-12 and gap.max() <= 5e-3

        idx = rng.integers(0, N, size=SAMPLES)
        y = x.copy()
        y[np.arange(SAMPLES), idx] += rng.uniform(1e-6, 1.0, size=SAMPLES)
        assert np.count_nonzero(g_value(y) > g_value(x) + 1e-12) == 0

        L = L_value(x)
        g0 = g_value(x)
        remainder = np.stack([np.abs(g_value(x + t) - g0 - t * L) / t**2 for t in ts], axis=1)
        # fit C_N on half the sample, then require the other half to respect it;
        # 1e-12 absorbs rounding in the second difference at the smallest t
        c_fit = remainder[: SAMPLES // 2].max()
        assert np.all(remainder[SAMPLES // 2 :] * ts**2 <= c_fit * ts**2 + 1e-12)
        # gradient of g is 2-Lipschitz, so the remainder is at most |t e|^2 = N t^2
        assert c_fit <= N + 1e-6

        assert np.max(np.abs(L - fd_directional_derivative(x))) <= 1e-6
        assert np.max(np.abs(L)) <= 2.0
    assert time.perf_counter() - start < 30


def test_criterion_2_lift_consistency(acceptance):
    acceptance(2, "closed-form lift vs sup oracle, lower bound, monotonicity, branch psh-ness")
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    for N in (1, 2):
        cfg = LiftConfig(N=N)
        lattice_gap = 0.0
        for _ in range(1000):
            z = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
            p = FsPoint(tuple(z * np.exp(2.0 * rng.normal(size=N + 1))))
            phi, eta = rng.uniform(-2, 2), rng.uniform(-1, 0)
            closed = lift_value(phi, eta, p, cfg)
            oracle = lift_sup_oracle(phi, eta, p, cfg, 1e-3)
            assert oracle <= closed + 1e-12
            lattice_gap = max(lattice_gap, closed - oracle)
            assert closed >= eta + cfg.C0 * fs_metric_log(p, 0) - 1e-12
            assert lift_value(phi + rng.uniform(0, 1), eta, p, cfg) >= closed - 1e-12
        assert lattice_gap <= 5e-3

        phi_fn = lambda w: 0.1 * np.sin(2 * np.pi * w.real) + 0.05 * np.cos(2 * np.pi * w.imag)
        fibre = [[0.5 + 0.2j, -1.0][:N], [2j, 0.1][:N], [0.05, 3.0][:N]]
        for alpha in simplex_lattice(N, 0.25):
            branch_psh_check(alpha, phi_fn, cfg, [0.2 + 0.1j, 0.7 + 0.4j], fibre)
    assert time.perf_counter() - start < 60


def test_criterion_3_integration_by_parts(acceptance):
    acceptance(3, "integration by parts: n = 1 exact, n = 2 and polarized n = 2 at M = 24")
    start = time.perf_counter()
    rep1 = exp_ibp(n=1, M=64)
    _assert_report(rep1)
    assert rep1.measured["residual"] <= 1e-12
    for mode in ("thm", "cor"):
        rep = exp_ibp(n=2, M=24, mode=mode)
        _assert_report(rep)
        assert rep.measured["relative_residual"] <= 1e-2
        assert 3.0 <= rep.measured["halving_ratio"] <= 5.0
    assert time.perf_counter() - start < 120


def test_criterion_4_pushforward(acceptance):
    acceptance(4, "push-forward of the lifted Monge-Ampere measure at M = 64, K = 128")
    start = time.perf_counter()
    rep = exp_wn_pushforward(M=64, K=128, eps=0.1)
    _assert_report(rep)
    assert rep.measured["l1_density_error_fraction"] <= 0.05
    assert abs(rep.measured["total_mass"] - 2.0) <= 0.06
    assert rep.measured["clamped_fraction"] <= 0.01
    assert rep.measured["off_v_fraction"] <= 0.02
    assert time.perf_counter() - start < 600


def test_criterion_5_beta_identity(acceptance):
    acceptance(5, "beta-function identity for n <= 3, N <= 20")
    start = time.perf_counter()
    rep = exp_beta_identity(pairs=5, seed=11)
    _assert_report(rep)
    residuals = [v for k, v in rep.measured.items() if k.startswith("residual")]
    assert len(residuals) == 60 and max(residuals) <= 1e-10
    assert time.perf_counter() - start < 5


def test_criterion_6_tv_convergence(acceptance):
    acceptance(6, "total-variation ratio for N in {5, 10, 20, 50}")
    start = time.perf_counter()
    rep = exp_tv_convergence(N_list=(5, 10, 20, 50))
    _assert_report(rep)
    for N in (5, 10, 20, 50):
        assert rep.measured[f"ratio_N{N}"] == pytest.approx(1.0, abs=1e-6)
    assert time.perf_counter() - start < 5


def test_criterion_7_expansion(acceptance):
    acceptance(7, "quadratic remainder slope, a|v| bound, exceedance proxy")
    start = time.perf_counter()
    rep = exp_an_expansion(a_list=(0.1, 0.05, 0.025, 0.0125), proxy_a=1e-3)
    _assert_report(rep)
    assert rep.measured["residual_slope"] >= 1.9
    assert rep.measured["bound_violations"] == 0
    assert rep.measured["exceedance_area_proxy_a"] <= 1e-3
    assert time.perf_counter() - start < 120


def test_criterion_8_leading_coefficient(acceptance):
    acceptance(8, "leading coefficient and psi invariance at N = 1")
    start = time.perf_counter()
    rep = exp_iwn_leading(M=32, K=128, N=1)
    _assert_report(rep)
    expected = rep.measured["expected_coefficient"]
    assert abs(rep.measured["derivative_psi1"] - expected) <= 0.02 * abs(expected)
    assert rep.measured["psi_swap_relative_change"] <= 0.02
    assert time.perf_counter() - start < 600
