import numpy as np
import pytest

from wnlift import fixtures as fx
from wnlift.experiments import (
    REGISTRY,
    Expectation,
    ExperimentReport,
    beta_lhs,
    beta_rhs,
    exp_an_expansion,
    exp_beta_identity,
    exp_ibp,
    exp_intres,
    exp_iwn_leading,
    exp_truncation,
    exp_tv_convergence,
    ibp_check,
    quadrature_measure,
    write_summary,
)
from wnlift.kahler_grid import TorusGeometry, mixed_ma, theta_form, total_variation
from wnlift.wn_lift import BoundedPair


def test_expectation_senses():
    assert Expectation("a", 1.0, 1.05, 0.1, "DERIVED").passed
    assert not Expectation("a", 1.0, 1.2, 0.1, "DERIVED").passed
    assert Expectation("a", 0.5, 1.0, 0.0, "TRIVIAL", "le").passed
    assert not Expectation("a", 0.5, 1.0, 0.0, "TRIVIAL", "ge").passed
    assert not Expectation("a", float("nan"), 0.0, 1.0, "STATED").passed
    with pytest.raises(ValueError):
        Expectation("a", 0.0, 0.0, 0.0, "STATED", "lt")


def test_untagged_expectation_fails_report():
    rep = ExperimentReport("x")
    rep.expect("ok", 0.0, 0.0, 1.0, "TRIVIAL")
    assert rep.verdict
    rep.expect("untagged", 0.0, 0.0, 1.0, None)
    assert not rep.verdict
    assert [e.label for e in rep.failures()] == ["untagged"]
    assert not ExperimentReport("empty").verdict


def test_report_csv_layout(tmp_path):
    rep = ExperimentReport("demo")
    rep.expect("value", 0.1, 0.0, 0.5, "DERIVED", "le")
    rep.measure("extra", 3.0)
    rep.add_table("t", ["a", "b"], [[1, 2.5]])
    paths = rep.write_csv(tmp_path)
    lines = (tmp_path / "demo.csv").read_text().splitlines()
    assert lines[0] == "label,measured,expected,tolerance,provenance,pass"
    assert lines[1] == "value,0.1,0.0,0.5,DERIVED,true"
    assert lines[2] == "extra,3.0,,,,"
    assert (tmp_path / "demo_t.csv").read_text() == "a,b\n1,2.5\n"
    assert len(paths) == 2
    write_summary([rep], tmp_path)
    assert (tmp_path / "summary.csv").read_text().splitlines()[1] == "demo,1,0,true"


def test_registry_names():
    assert set(REGISTRY) == {"ibp", "wn-pushforward", "beta", "tv", "iwn-leading", "intres", "an-expansion", "truncation"}


def test_ibp_n1_is_exact():
    rep = exp_ibp(n=1, M=32)
    assert rep.verdict
    assert rep.measured["residual"] <= 1e-12


def test_ibp_rejects_non_psh_fixture():
    geom = TorusGeometry(1, 16)
    x = geom.coords()[0]
    bad = 0.6 * np.sin(2 * np.pi * x)
    pair = BoundedPair(bad, np.zeros_like(bad), 1.0)
    with pytest.raises(ValueError, match="cell"):
        ibp_check(pair, pair, [], geom)


def test_ibp_n2_small_grid_runs():
    rep = exp_ibp(n=2, M=12)
    header, rows = rep.tables["convergence"]
    assert [r[0] for r in rows] == [6, 12]
    assert rep.measured["stokes"] <= 1e-10
    with pytest.raises(ValueError):
        exp_ibp(n=2, M=13)
    with pytest.raises(ValueError):
        exp_ibp(n=1, mode="other")


def test_beta_examples():
    assert beta_lhs(1, 1, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert beta_rhs(1, 1, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert abs(beta_lhs(2, 3, 0.7, 1.3) - beta_rhs(2, 3, 0.7, 1.3)) <= 1e-10
    for n in (1, 2, 3):
        assert beta_rhs(n, 7, 0.4, 0.4) == pytest.approx(0.4**n, abs=1e-12)
    rep = exp_beta_identity(n=2, N=3)
    assert rep.verdict
    with pytest.raises(ValueError):
        exp_beta_identity(n=4)


def test_quadrature_measure_flat_and_mass():
    geom = TorusGeometry(1, 16)
    zero = np.zeros(geom.shape)
    flat = mixed_ma([theta_form(geom)], geom)
    assert total_variation(quadrature_measure(zero, geom, 10), flat) <= 1e-14
    phi = fx.sine_potential(geom, 0.1)
    assert quadrature_measure(phi, geom, 10).sum() == pytest.approx(1.0, abs=1e-12)


def test_tv_ratios_monotone_deviation():
    rep = exp_tv_convergence(M=16)
    assert rep.verdict
    _, rows = rep.tables["ratios"]
    tvs = [r[1] for r in rows]
    assert all(b < a for a, b in zip(tvs, tvs[1:]))


def test_truncation_table():
    rep = exp_truncation(M=32)
    assert rep.verdict
    _, rows = rep.tables["levels"]
    lhs = [r[1] for r in rows]
    # once the level passes the depth of the pole the truncation no longer changes anything
    assert lhs[-1] == lhs[-2]


def test_standard_triple_is_ordered_and_psh():
    geom = TorusGeometry(1, 16)
    tri = fx.standard_triple(geom)
    tri.check_order()
    broken = fx.OrderedTriple(tri.psi2, tri.psi1, tri.gamma)
    with pytest.raises(ValueError, match="psi1 >= psi2"):
        broken.check_order()


def test_an_expansion_small_grid():
    rep = exp_an_expansion(M=8, K=16)
    assert rep.measured["bound_violations"] == 0
    assert rep.measured["residual_slope"] >= 1.9
    with pytest.raises(ValueError):
        exp_an_expansion(M=8, K=16, a_list=[0.1])


def test_iwn_leading_coarse_grid():
    rep = exp_iwn_leading(M=8, K=32)
    assert rep.measured["derivative_v0"] == 0.0
    assert rep.measured["psi_swap_relative_change"] <= 0.02
    assert rep.measured["derivative_psi1"] == pytest.approx(rep.measured["expected_coefficient"], rel=0.1)
    with pytest.raises(ValueError):
        exp_iwn_leading(M=8, K=32, N=2)


def test_intres_coarse_grid():
    rep = exp_intres(M=8, K=32)
    assert rep.measured["rhs"] == pytest.approx(0.5 * rep.measured["lhs"], rel=0.1)
    assert rep.measured["lhs_u_constant"] <= 1e-12


def test_registry_defaults_are_overridable():
    rep = REGISTRY["beta"].run(n=1, N=2, M=999)
    assert rep.inputs["n"] == 1 and rep.inputs["N"] == 2
    assert rep.verdict
