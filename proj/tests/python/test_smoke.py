import math

import pytest

import varshap


def test_count_orderings_chain():
    dag = {"nodes": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]]}
    assert varshap.count_orderings_of(dag) == (1, 3)


def test_count_orderings_isolated():
    dag = {"nodes": ["a", "b", "c"], "edges": []}
    assert varshap.count_orderings_of(dag) == (6, 7)


def test_count_orderings_rejects_cycles():
    dag = {"nodes": ["a", "b"], "edges": [["a", "b"], ["b", "a"]]}
    with pytest.raises(Exception, match="cycle"):
        varshap.count_orderings_of(dag)


def test_analytic_oracle_values():
    assert varshap.analytic_oracle("nonlinearity", "sigma2_T") == 128.0
    assert varshap.analytic_oracle("nonlinearity", "phi_I") == -64.0
    assert varshap.analytic_oracle("pairwise_independence", "L_X1") == 0.0


def test_generate_synthetic_is_deterministic():
    a = varshap.generate_synthetic("non_additive", n=50, seed=7)
    b = varshap.generate_synthetic("non_additive", n=50, seed=7)
    assert a == b
    assert sorted(a["features"]) == ["X1", "X2"]
    assert len(a["target"]) == 50
    assert a["target_name"] == "T"
    for x1, x2, t in zip(a["features"]["X1"], a["features"]["X2"], a["target"]):
        assert math.isclose(t, x1 * x2, rel_tol=0, abs_tol=1e-12)


def test_attribute_reports_pass_identities():
    config = {
        "synthetic": {"example": "nonlinearity", "n": 600},
        "modes": "both",
        "seed": 3,
        "params": {"rounds": 40, "max_depth": 3, "early_stopping_rounds": 0},
    }
    reports = varshap.attribute(config)
    assert [r["mode"] for r in reports] == ["unrestricted", "gam"]
    for report in reports:
        assert set(report["contributions"]) == {"X1", "X2"}
        for verdict in report["verdicts"]:
            if verdict["kind"] == "identity":
                assert verdict["pass"], verdict
    assert reports[0]["phi_I"] == 0.0
    assert reports[1]["phi_I"] <= 0.0


def test_verify_reports_verdicts():
    config = {
        "synthetic": {"example": "non_additive", "n": 500},
        "modes": "gam",
        "seed": 5,
        "params": {"rounds": 30, "early_stopping_rounds": 0},
    }
    verdicts = varshap.verify(config)
    names = {v["name"] for v in verdicts}
    assert any(name.endswith("efficiency") for name in names)
    assert any("covariance_bound" in name for name in names)
    for v in verdicts:
        if v["kind"] == "identity":
            assert v["pass"], v
