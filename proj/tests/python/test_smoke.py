import json
import math
import os
import pathlib

import pytest

import mlembed

MODELS = pathlib.Path(os.environ.get("MLEMBED_MODELS_DIR", pathlib.Path(__file__).resolve().parents[2] / "models"))


def model(name):
    return mlembed.load_model_file(str(MODELS / f"{name}.json"))


def test_gp_closed_form():
    mean, var = model("gp_n1").evaluate([1.0])
    assert mean == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert var == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)


def test_identity_network():
    assert model("identity_1d").evaluate([0.5]) == [0.5]


def test_gp_mean_minimum():
    r = mlembed.solve(model("gp_n1_neg"))
    assert r["status"] == "converged"
    assert r["optimum"] == pytest.approx(-1.0, abs=1e-6)
    assert r["x"][0] == pytest.approx(0.0, abs=1e-3)


def test_relu_milp():
    r = mlembed.solve(model("relu_shift"), formulation="fullspace")
    assert r["solver"] == "milp"
    assert r["optimum"] == pytest.approx(-0.5, abs=1e-9)


def test_compare_tanh():
    r = mlembed.compare(model("tanh_1_8_1"), grid=201)
    assert r["difference"] <= 1e-4
    assert abs(r["reduced"]["optimum"] - r["reduced"]["grid_optimum"]) <= 1e-3


def test_reduced_rejected_for_trees():
    with pytest.raises(mlembed.Error, match="config"):
        mlembed.solve(model("trees_2d"), formulation="reduced")


def test_formulate_lp_identity():
    text = mlembed.formulate_lp(model("identity_1d"))
    assert text.startswith("Minimize")
    assert text.endswith("End")


def test_round_trip_document():
    m = model("relu_2_4_4_1")
    again = mlembed.load_model(m.to_json())
    assert again.evaluate([0.3, -0.2]) == m.evaluate([0.3, -0.2])


def test_malformed_document():
    with pytest.raises(mlembed.Error, match="parse"):
        mlembed.load_model(json.dumps({"format_version": "1"}))


def test_bayesopt_quadratic():
    hist = mlembed.bayesopt(lambda x: (x[0] - 0.3) ** 2, [0.0], [1.0], budget=6, initial=3)
    assert len(hist) == 6
    best = [h["best"] for h in hist]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert all(0.0 <= h["x"][0] <= 1.0 for h in hist)
