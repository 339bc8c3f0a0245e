import math

import pytest

import causalci as cc


def test_special_functions():
    assert cc.ln_gamma(5.0) == pytest.approx(math.log(24.0), abs=1e-12)
    assert cc.digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
    assert cc.chi2_sf(0.0, 4) == 1.0


def test_polya_small_case():
    assert cc.log_polya([3, 1], 0.5) == pytest.approx(math.log(0.15625), abs=1e-9)


def test_alpha_estimate_reports_fields():
    est = cc.estimate_alpha([5, 3, 0, 1])
    assert est["alpha"] > 0
    assert set(est) == {"alpha", "converged", "iterations", "clamped"}


def test_mi_estimators():
    assert cc.mi_mle([[5, 5], [5, 5]]) == pytest.approx(0.0, abs=1e-15)
    assert cc.mi_mle([[5, 0], [0, 5]]) == pytest.approx(math.log(2.0))
    assert cc.mi_eb([[250, 250], [250, 250]], alpha=1.0) < 0.01
    with pytest.raises(TypeError):
        cc.mi_mle("not a table")


def test_theta_tilde_is_a_distribution():
    t = cc.theta_tilde([4, 2, 1, 0], 1.0)
    assert sum(t["values"]) == pytest.approx(1.0)
    assert all(v > 0 for v in t["values"])


def test_ci_test_decisions():
    dep = cc.ci_test([[40, 2], [3, 45]], method="g")
    assert dep["independent"] is False
    assert dep["df"] == 1
    flat = cc.ci_test([[10, 10], [10, 10]], method="bf_chi2")
    assert flat["statistic"] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        cc.ci_test([[1, 1], [1, 1]], method="nope")


def test_bundled_networks():
    names, edges = cc.network_shape(cc.load_network("child"))
    assert len(names) == 20 and edges == 25
    assert cc.oracle_shd(cc.load_network("alarm")) == 0


def test_sampling_and_discovery_are_deterministic():
    bif = cc.load_network("asia")
    csv = cc.sample_bif(bif, 300, 7)
    assert csv == cc.sample_bif(bif, 300, 7)
    assert len(csv.strip().splitlines()) == 301
    a = cc.discover(csv, method="mi_eb")
    b = cc.discover(csv, method="mi_eb")
    assert a == b
    assert a["ci_test_count"] == sum(a["tests_by_order"].values())


def test_parse_errors_raise_value_error():
    with pytest.raises(cc.BifParseError):
        cc.sample_bif("network x { ", 10, 1)
    with pytest.raises(ValueError):
        cc.discover("A,B\n0,x\n")
