import json
from fractions import Fraction
from pathlib import Path

import jsonschema
import pytest

import deltafree
from deltafree import _core

SCHEMA = Path(__file__).resolve().parents[2] / "schema"


def test_normalize_examples():
    assert deltafree.normalize("D[D[x1]]") == "D[x1]"
    assert deltafree.normalize("D[D[x1]*y1*D[x2]]") == "D[x1]*D[y1]*D[x2]"
    assert deltafree.normalize("D[1]") == "1"


def test_normalize_round_trips():
    for e in ["x1*D[x2*D[x1]]*x2", "D[x1^2*y1]*y1 + 3/4*x2", "x1 - x1"]:
        once = deltafree.normalize(e)
        assert deltafree.normalize(once) == once


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        deltafree.normalize("x1*")


@pytest.mark.parametrize("k,catalan", [(1, 1), (2, 2), (3, 5), (4, 14), (5, 42), (6, 132)])
def test_semicircle(k, catalan):
    assert deltafree.phi1(f"x1^{2 * k}") == catalan
    assert _core.count_noncrossing_pairings(k) == catalan
    assert deltafree.oracle_moment(f"x1^{2 * k}")["limit"] == catalan


def test_ground_change_example_with_scalar_y():
    state = {"deterministic": [{"family": 1, "scalar": "-1/2"}]}
    assert deltafree.phi1("x1^2*D[x1^2*y1]*y1*x1*y1*x1", state) == Fraction(-1, 4)


def test_phi2_law_dependence():
    gauss = deltafree.phi2("x1^2", "x1^2")
    quat = deltafree.phi2("x1^2", "x1^2", {"laws": {"default": "quaternary"}})
    assert (gauss, quat) == (2, 0)
    assert quat == deltafree.oracle_covariance("x1^2", "x1^2", laws={"default": "quaternary"})["limit"]


def test_oracle_at_finite_n():
    assert deltafree.oracle_moment("x1")["limit"] == 0
    out = deltafree.oracle_moment("x1^4", at=3)
    assert out["value"] == deltafree.oracle_moment("x1^4", at=3)["value"]
    assert deltafree.oracle_covariance("x1", "x1")["limit"] == 1


def test_monte_carlo_report_matches_schema():
    ens = {"wigner": {"1": {"preset": "complex-gaussian", "seed": 1}}, "sizes": [16], "samples": 40}
    rep = deltafree.monte_carlo(["x1^2", "x1^4"], ens, pairs=[(0, 0)])
    jsonschema.validate(rep, json.loads((SCHEMA / "mc_report.schema.json").read_text()))
    mean = rep["results"][0]["mean"]["re"]
    assert abs(mean - 1) < 5 * rep["results"][0]["se_mean"]["re"] + 1e-9
    again = deltafree.monte_carlo(["x1^2", "x1^4"], ens, pairs=[(0, 0)])
    assert again == rep


def test_verify_report_matches_schema():
    rep = json.loads(_core.run_suite("example-ground-change", 0, 100, 1))
    jsonschema.validate(rep, json.loads((SCHEMA / "verify_report.schema.json").read_text()))
    assert rep["results"][0]["pass"]


def test_unknown_suite():
    with pytest.raises(ValueError):
        deltafree.run_suite("nope")
