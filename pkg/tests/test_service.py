"""HTTP service endpoints: happy paths, error mapping, chaining."""
import numpy as np
import pytest

import mapworks
from mapworks.cli import InProcessClient
from mapworks.errors import NumericalError
from mapworks.service import create_app

AS_ROWS = [
    {"study": s, "r": r, "n": n}
    for s, r, n in zip(
        [str(i) for i in range(1, 9)],
        [23, 12, 19, 9, 39, 6, 9, 10],
        [107, 44, 51, 39, 139, 20, 78, 35],
    )
]

BETA_11_32 = {"family": "beta", "components": [[1.0, 11.0, 32.0]]}


@pytest.fixture(scope="module")
def client():
    with InProcessClient(create_app()) as c:
        yield c


def post_ok(client, path, body):
    resp = client.post(path, json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": mapworks.__version__}


def test_map_endpoint(client):
    body = {
        "data": {"family": "binomial", "rows": AS_ROWS},
        "chains": 2, "warmup": 300, "samples": 200, "seed": 5,
    }
    out = post_ok(client, "/map", body)
    assert out["kind"] == "map_analysis"
    assert 0.2 <= out["summary"]["theta_star"]["mean"] <= 0.32
    assert len(out["shrinkage"]) == 8
    assert np.asarray(out["draws"]["theta_star"]).shape == (2, 200)
    body["include_draws"] = "none"
    assert "draws" not in post_ok(client, "/map", body)


def test_map_validation_errors(client):
    bad_rows = [{"study": "a", "r": 30, "n": 20}]
    resp = client.post("/map", json={"data": {"family": "binomial", "rows": bad_rows}})
    assert resp.status_code == 422
    assert resp.json()["error"]["kind"] == "validation"
    resp = client.post("/map", json={
        "data": {"family": "binomial", "rows": AS_ROWS}, "burnin": 10})
    assert resp.status_code == 422


def test_fit_requires_exactly_one_source(client):
    rng = np.random.default_rng(3)
    sample = rng.beta(4, 8, 500).tolist()
    resp = client.post("/fit", json={"family": "beta"})
    assert resp.status_code == 422
    assert "exactly one" in resp.json()["error"]["message"]
    resp = client.post("/fit", json={
        "family": "beta", "sample": sample, "analysis": {"draws": {}}})
    assert resp.status_code == 422


def test_fit_from_sample_and_from_analysis(client):
    rng = np.random.default_rng(3)
    sample = rng.beta(4, 8, 800).tolist()
    out = post_ok(client, "/fit", {
        "family": "beta", "sample": sample, "components": 2, "seed": 1})
    assert out["best"]["mixture"]["family"] == "beta"
    assert len(out["candidates"]) == 1

    analysis = post_ok(client, "/map", {
        "data": {"family": "binomial", "rows": AS_ROWS},
        "chains": 2, "warmup": 300, "samples": 200, "seed": 5,
    })
    out = post_ok(client, "/fit", {"family": "beta", "analysis": analysis,
                                   "k_max": 3, "seed": 2})
    ks = [c["k"] for c in out["candidates"]]
    assert ks == [1, 2, 3]
    assert out["best"]["aic"] == min(c["aic"] for c in out["candidates"])

    resp = client.post("/fit", json={"family": "beta",
                                     "analysis": {"summary": {}}, "seed": 2})
    assert resp.status_code == 422


def test_robustify_endpoint(client):
    out = post_ok(client, "/robustify", {
        "mixture": BETA_11_32, "weight": 0.2, "mean": 0.5})
    comps = out["mixture"]["components"]
    assert len(comps) == 2
    assert comps[0][0] == pytest.approx(0.8)
    assert comps[1] == [pytest.approx(0.2), 1.0, 1.0]
    resp = client.post("/robustify", json={
        "mixture": BETA_11_32, "weight": 1.5, "mean": 0.5})
    assert resp.status_code == 422


def test_ess_endpoint(client):
    out = post_ok(client, "/ess", {"mixture": BETA_11_32, "method": "all"})
    assert out["values"]["elir"] == pytest.approx(43.0, abs=0.05)
    assert out["values"]["moment"] == pytest.approx(43.0, abs=1e-6)
    assert 40.0 <= out["values"]["morita"] <= 46.0


def test_ess_divergence_over_http(client):
    spiky = {"family": "beta", "components": [[1.0, 0.5, 3.0]]}
    resp = client.post("/ess", json={"mixture": spiky, "method": "elir"})
    assert resp.status_code == 422
    assert "diverges" in resp.json()["error"]["message"]
    out = post_ok(client, "/ess", {"mixture": spiky, "method": "elir",
                                   "on_divergence": "inf"})
    assert out["values"]["elir"] == "-inf"


def test_update_endpoint(client):
    out = post_ok(client, "/update", {
        "mixture": BETA_11_32, "data": {"kind": "binomial", "r": 7, "n": 20}})
    assert out["mixture"]["components"] == [[1.0, 18.0, 45.0]]
    resp = client.post("/update", json={
        "mixture": BETA_11_32, "data": {"kind": "binomial", "r": 7}})
    assert resp.status_code == 422
    resp = client.post("/update", json={
        "mixture": BETA_11_32, "data": {"kind": "binomial", "r": 7, "n": 20, "x": 1}})
    assert resp.status_code == 422


def test_predict_endpoint(client):
    out = post_ok(client, "/predict", {"mixture": BETA_11_32, "n": 10})
    pred = out["predictive"]
    assert pred["kind"] == "beta-binomial"
    assert pred["n"] == 10
    assert pred["components"] == [[1.0, 11.0, 32.0]]
    resp = client.post("/predict", json={"mixture": BETA_11_32, "n": -3})
    assert resp.status_code == 422


def test_boundary_endpoint(client):
    design = {
        "decision": {"pc": [0.9], "qc": [0.5], "arity": 1, "lower_tail": False},
        "prior1": {"family": "beta", "components": [[1.0, 1.0, 1.0]]},
        "n1": 10,
    }
    out = post_ok(client, "/boundary", {"design": design})
    assert out["boundary"]["crit"] == 8
    assert out["boundary"]["direction"] == "ge"


def test_oc_endpoint(client):
    design = {
        "decision": {"pc": [0.9], "qc": [0.5], "arity": 1, "lower_tail": False},
        "prior1": {"family": "beta", "components": [[1.0, 1.0, 1.0]]},
        "n1": 10,
    }
    out = post_ok(client, "/oc", {"design": design, "theta1": [0.5]})
    assert out["rows"][0]["prob_success"] == pytest.approx(56 / 1024, abs=1e-12)
    resp = client.post("/oc", json={"design": design,
                                    "theta1": [0.5], "theta2": [0.5]})
    assert resp.status_code == 422


def test_pos_endpoint(client):
    design = {
        "decision": {"pc": [0.8], "qc": [0.0], "arity": 2, "lower_tail": False},
        "prior1": {"family": "beta", "components": [[1.0, 4.0, 10.0]]},
        "prior2": {"family": "beta", "components": [[1.0, 6.0, 8.0]]},
        "n1": 8, "n2": 6,
    }
    out = post_ok(client, "/pos", {"design": design})
    assert 0.0 < out["prob_success"] < 1.0
    lifted = post_ok(client, "/pos", {
        "design": design,
        "data_prior1": {"family": "beta", "components": [[1.0, 12.0, 4.0]]},
    })
    assert lifted["prob_success"] > out["prob_success"]


def test_forest_endpoint(client):
    analysis = post_ok(client, "/map", {
        "data": {"family": "binomial", "rows": AS_ROWS},
        "chains": 2, "warmup": 300, "samples": 200, "seed": 5,
        "include_draws": "none",
    })
    out = post_ok(client, "/forest", {"analysis": analysis})
    assert len(out["rows"]) == 10
    assert out["svg"] is None
    out = post_ok(client, "/forest", {"analysis": analysis, "include_svg": True})
    assert out["svg"].startswith("<svg")


def test_pipeline_endpoint(client):
    config = {
        "seed": 7,
        "data": {"family": "binomial", "rows": AS_ROWS},
        "map": {"chains": 2, "warmup": 300, "samples": 200},
        "fit": {"components": 2},
        "robustify": {"weight": 0.2, "mean": 0.5},
        "ess": {"methods": ["moment"]},
    }
    out = post_ok(client, "/pipeline", {"config": config})
    assert out["kind"] == "pipeline_report"
    assert out["robust_prior"]["components"][-1][1:] == [1.0, 1.0]
    resp = client.post("/pipeline", json={"config": {**config, "oops": 1}})
    assert resp.status_code == 422


def test_numerical_errors_map_to_500():
    app = create_app()

    @app.get("/boom")
    async def boom():
        raise NumericalError("stub blow-up")

    with InProcessClient(app) as client:
        resp = client.get("/boom")
    assert resp.status_code == 500
    assert resp.json()["error"] == {"kind": "numerical", "message": "stub blow-up"}
