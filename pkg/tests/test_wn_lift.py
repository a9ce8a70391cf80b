import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wnlift.simplex_core import NEG_INF, simplex_lattice
from wnlift.wn_lift import (
    BoundedPair,
    FsPoint,
    LiftConfig,
    a_field,
    alpha_hat,
    branch_psh_check,
    branch_value,
    fs_metric_log,
    l_alpha_hat,
    lift_from_logs,
    lift_sup_oracle,
    lift_value,
)


def random_point(rng, N):
    z = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return FsPoint(tuple(z * np.exp(2.0 * rng.normal(size=N + 1))))


def test_fs_metric_log_examples():
    assert fs_metric_log(FsPoint((1, 0)), 0) == 0.0
    assert fs_metric_log(FsPoint((1, 1)), 0) == pytest.approx(math.log(0.5), abs=1e-15)
    assert fs_metric_log(FsPoint((0, 1)), 0) == NEG_INF


def test_fs_point_validation():
    with pytest.raises(ValueError):
        FsPoint((0, 0))
    with pytest.raises(ValueError):
        FsPoint((1,))
    with pytest.raises(IndexError):
        fs_metric_log(FsPoint((1, 2)), 2)
    with pytest.raises(ValueError):
        FsPoint((0, 1)).chart()


@given(st.complex_numbers(max_magnitude=1e3), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_fs_metric_log_scale_invariant(z, lam):
    p = FsPoint((1.0, z))
    q = FsPoint((lam, lam * z))
    for a in (0, 1):
        assert fs_metric_log(q, a) == pytest.approx(fs_metric_log(p, a), abs=1e-9)


def test_alpha_hat_examples():
    cfg = LiftConfig()
    assert alpha_hat(0.0, 0.0, [1.0], cfg)[0] == 0.0
    assert alpha_hat(0.2, 0.0, [math.e], cfg)[0] == pytest.approx(1.1, abs=1e-15)
    assert alpha_hat(0.0, 0.0, [0.0], cfg)[0] == NEG_INF


def test_lift_value_examples():
    cfg = LiftConfig()
    assert lift_value(0.0, 0.0, FsPoint((1, 1)), cfg) == pytest.approx(math.log(0.5), abs=1e-15)
    assert lift_value(0.0, 0.0, FsPoint((1, 0)), cfg) == 0.0


def test_lift_on_hyperplane_is_the_limit():
    cfg = LiftConfig(N=2)
    on = lift_value(0.3, 0.0, FsPoint((0, 1, 2j)), cfg)
    near = lift_value(0.3, 0.0, FsPoint((1e-7, 1, 2j)), cfg)
    assert math.isfinite(on)
    assert on == pytest.approx(near, abs=1e-9)


def test_config_validation():
    for bad in (dict(N=0), dict(C0=0.0), dict(C0=1.5), dict(eta=0.1), dict(theta_mass=0.0)):
        with pytest.raises(ValueError):
            LiftConfig(**bad)


def test_bounded_pair():
    a = np.array([0.0, 1.0])
    pair = BoundedPair(a, a - 0.5, 0.5)
    np.testing.assert_array_equal(pair.difference, [0.5, 0.5])
    with pytest.raises(ValueError):
        BoundedPair(a, a - 1.0, 0.5)


def test_sup_oracle_examples():
    cfg = LiftConfig()
    p = FsPoint((1, 1))
    assert lift_sup_oracle(0.0, 0.0, p, cfg, 1e-3) == pytest.approx(lift_value(0.0, 0.0, p, cfg), abs=1e-3)
    # a lattice coarser than the simplex contains only alpha = 0
    assert lift_sup_oracle(0.4, -0.2, p, cfg, 2.0) == -0.2 + math.log(0.5)
    coarse = lift_sup_oracle(0.4, 0.0, p, cfg, 0.1)
    fine = lift_sup_oracle(0.4, 0.0, p, cfg, 0.05)
    assert fine >= coarse


@pytest.mark.parametrize("N", [1, 2])
def test_closed_form_matches_sup_oracle(N):
    rng = np.random.default_rng(10 + N)
    cfg = LiftConfig(N=N)
    for _ in range(100):
        p = random_point(rng, N)
        phi, eta = rng.uniform(-2, 2), rng.uniform(-1, 0)
        closed = lift_value(phi, eta, p, cfg)
        oracle = lift_sup_oracle(phi, eta, p, cfg, 1e-3 if N == 1 else 5e-3)
        assert oracle <= closed + 1e-12
        assert closed - oracle <= 5e-3


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(0, 2), st.floats(-1, 0), st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_lower_bound_and_monotone_in_phi(phi, bump, eta, seed, N):
    cfg = LiftConfig(N=N, C0=0.7)
    p = random_point(np.random.default_rng(seed), N)
    low = lift_value(phi, eta, p, cfg)
    assert low >= eta + cfg.C0 * fs_metric_log(p, 0) - 1e-12
    assert lift_value(phi + bump, eta, p, cfg) >= low - 1e-12


def test_branch_value_at_zero_is_lower_bound():
    logs = FsPoint((1, 0.3 + 0.1j)).log_fs()
    assert branch_value([0.0], 0.5, -0.2, logs) == pytest.approx(-0.2 + logs[0], abs=1e-15)


@pytest.mark.parametrize("N", [1, 2])
def test_branches_are_psh_at_unit_coupling(N):
    cfg = LiftConfig(N=N)
    phi = lambda w: 0.1 * np.sin(2 * np.pi * w.real) + 0.05 * np.cos(2 * np.pi * w.imag)
    fibre = [[0.5 + 0.2j, -1.0][:N], [2j, 0.1][:N]]
    for alpha in simplex_lattice(N, 0.25):
        branch_psh_check(alpha, phi, cfg, [0.2 + 0.1j, 0.7 + 0.4j], fibre)


def test_branch_check_flags_non_psh_potential():
    cfg = LiftConfig()
    phi = lambda w: 2.0 * np.sin(2 * np.pi * w.real)
    with pytest.raises(AssertionError):
        branch_psh_check([1.0], phi, cfg, [0.25], [[0.5]])


def _grid_fields(rng, shape=(50,)):
    logs = np.stack([FsPoint.from_chart(z).log_fs() for z in rng.normal(size=shape) * np.exp(rng.normal(size=shape))])
    psi2 = rng.uniform(-0.3, 0.0, size=shape)
    psi1 = psi2 + rng.uniform(0.0, 0.2, size=shape)
    gamma = psi2 - rng.uniform(0.0, 0.2, size=shape)
    return logs, psi1, psi2, gamma


def test_a_field_trivial_cases():
    rng = np.random.default_rng(3)
    logs, psi1, psi2, gamma = _grid_fields(rng)
    cfg = LiftConfig()
    np.testing.assert_array_equal(a_field(0.0, psi1, psi2, gamma, logs, cfg), 0.0)
    np.testing.assert_array_equal(a_field(0.3, psi1, psi1, gamma, logs, cfg), 0.0)
    with pytest.raises(ValueError):
        a_field(1.5, psi1, psi2, gamma, logs, cfg)
    with pytest.raises(ValueError):
        a_field(-0.1, psi1, psi2, gamma, logs, cfg)


def test_a_field_is_difference_of_lifts():
    rng = np.random.default_rng(4)
    logs, psi1, psi2, gamma = _grid_fields(rng)
    cfg = LiftConfig()
    a = 0.3
    direct = lift_from_logs(a * psi1 + (1 - a) * gamma, 0.0, logs) - lift_from_logs(a * psi2 + (1 - a) * gamma, 0.0, logs)
    np.testing.assert_allclose(a_field(a, psi1, psi2, gamma, logs, cfg), direct, atol=1e-12)


@given(st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_a_field_bound_and_sign(a, seed):
    logs, psi1, psi2, gamma = _grid_fields(np.random.default_rng(seed))
    A = a_field(a, psi1, psi2, gamma, logs, LiftConfig())
    assert np.all(np.abs(A) <= a * np.abs(psi1 - psi2) + 1e-12)
    assert np.all(A >= -1e-12)


def test_a_field_first_order_expansion():
    rng = np.random.default_rng(5)
    logs, psi1, psi2, gamma = _grid_fields(rng, (400,))
    cfg = LiftConfig()
    v = psi1 - psi2
    L = l_alpha_hat(gamma, logs, cfg)
    res = [np.max(np.abs(a_field(a, psi1, psi2, gamma, logs, cfg) + 0.5 * a * v * L)) for a in (0.1, 0.05, 0.025)]
    slope = np.polyfit(np.log([0.1, 0.05, 0.025]), np.log(res), 1)[0]
    assert slope >= 1.9
