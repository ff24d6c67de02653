import json

import pytest
from fastapi.testclient import TestClient

from chainbounds.service import app

client = TestClient(app)


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_enumerate_csv():
    response = client.post("/enumerate", json={"p": 4, "d": 1, "r": 2, "format": "csv"})
    assert response.status_code == 200
    body = response.json()
    assert body["cardinality"] == 32
    lines = body["content"].strip().split("\n")
    assert lines[0] == "idx,signs,perms"
    assert len(lines) == 33
    assert lines[1] == "0,++++,12"
    assert lines[3] == "2,+++-,12"


def test_enumerate_json():
    response = client.post("/enumerate", json={"p": 4, "d": 1, "r": 2, "format": "json"})
    assert response.status_code == 200
    members = json.loads(response.json()["content"])
    assert len(members) == 32
    assert members[0]["index"] == 0
    assert members[0]["signs"] == [1, 1, 1, 1]
    assert members[0]["perms"] == [[1, 2]]


def test_enumerate_budget_maps_to_409():
    response = client.post("/enumerate", json={"p": 22, "d": 3, "r": 8})
    assert response.status_code == 409
    assert response.json()["code"] == "budget-exceeded"


def test_extra_field_rejected():
    response = client.post("/enumerate", json={"p": 4, "d": 1, "r": 2, "bogus": 1})
    assert response.status_code == 422


def test_invalid_domain_value_maps_to_422():
    response = client.post(
        "/kl",
        json={"p": 4, "d": 1, "r": 2, "sigma2": -1.0, "index_a": 0, "index_b": 2},
    )
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "invalid-config"
    assert "sigma2" in body["detail"]


def test_sample_csv_deterministic():
    payload = {"p": 4, "d": 1, "r": 2, "sigma2": 1.0, "n": 6, "seed": 9, "format": "csv"}
    first = client.post("/sample", json=payload)
    second = client.post("/sample", json=payload)
    assert first.status_code == 200
    assert first.json()["content"] == second.json()["content"]
    lines = first.json()["content"].strip().split("\n")
    assert lines[0] == "y,x1,x2,x3,x4"
    assert len(lines) == 7
    sidecar = first.json()["sidecar"]
    assert sidecar["seed"] == 9
    assert sidecar["n"] == 6
    assert sidecar["hypothesis"]["p"] == 4


def test_sample_json_format():
    payload = {"p": 4, "d": 1, "r": 2, "sigma2": 1.0, "n": 3, "seed": 9, "format": "json"}
    body = client.post("/sample", json=payload).json()
    parsed = json.loads(body["content"])
    assert len(parsed["y"]) == 3
    assert len(parsed["x"]) == 3
    assert len(parsed["x"][0]) == 4


def test_kl_endpoint_exact():
    response = client.post(
        "/kl",
        json={"p": 4, "d": 1, "r": 2, "sigma2": 1.0, "index_a": 0, "index_b": 2},
    )
    assert response.status_code == 200
    report = response.json()["report"]
    assert report["exact"] == pytest.approx(0.025, abs=1e-14)
    assert report["bound"] == 2.0
    assert report["mc_estimate"] is None


def test_kl_endpoint_with_mc():
    response = client.post(
        "/kl",
        json={
            "p": 4, "d": 1, "r": 2, "sigma2": 1.0,
            "index_a": 0, "index_b": 2, "mc_samples": 20000, "seed": 5,
        },
    )
    report = response.json()["report"]
    assert report["n_samples"] == 20000
    assert abs(report["mc_estimate"] - report["exact"]) < 3 * report["mc_stderr"]


def test_kl_csv_content():
    response = client.post(
        "/kl",
        json={"p": 4, "d": 1, "r": 2, "sigma2": 1.0, "index_a": 0, "index_b": 2, "format": "csv"},
    )
    lines = response.json()["content"].strip().split("\n")
    assert lines[0] == "exact,bound,mc_estimate,mc_stderr,n_samples,seed"
    assert lines[1].startswith("0.024999999999999998,2,")


def test_fano_endpoint_kinds():
    base = {"p": 6, "d": 2, "r": 3, "sigma2": 25.0, "n": 20}
    exact = client.post("/fano", json={**base, "kind": "exact-recovery"}).json()["report"]
    excess = client.post("/fano", json={**base, "kind": "excess-risk"}).json()["report"]
    assert exact["failure_lower_bound"] == pytest.approx(0.7038196706786163, abs=1e-12)
    assert excess["failure_lower_bound"] == pytest.approx(0.6146387284575283, abs=1e-12)
    assert exact["threshold_n"] == pytest.approx(39.72567287934932, abs=1e-9)
    assert excess["threshold_n"] == pytest.approx(28.527176196673976, abs=1e-9)


def test_fano_rejects_unknown_kind():
    response = client.post(
        "/fano", json={"p": 6, "d": 2, "r": 3, "sigma2": 25.0, "n": 20, "kind": "weird"}
    )
    assert response.status_code == 422


def test_risk_endpoint():
    response = client.post(
        "/risk", json={"p": 4, "d": 1, "r": 2, "sigma2": 1.0, "format": "csv"}
    )
    body = response.json()
    assert body["constants"]["gap"] == pytest.approx(0.007402230754803861, abs=1e-15)
    lines = body["content"].strip().split("\n")
    assert lines[0] == "idx,case,excess_risk,at_or_above_gap"
    assert len(lines) == 33
    assert lines[1] == "0,0,0,0"
    assert lines[3].startswith("2,")


def test_simulate_endpoint():
    payload = {
        "p": 4, "d": 1, "r": 2, "sigma2": 1.0,
        "n_grid": [5, 10], "trials": 6, "seed": 2, "format": "csv",
    }
    first = client.post("/simulate", json=payload)
    second = client.post("/simulate", json=payload)
    assert first.status_code == 200
    assert first.json()["content"] == second.json()["content"]
    lines = first.json()["content"].strip().split("\n")
    assert lines[0] == "n,xi1,xi1_stderr,xi2,xi2_stderr,fano_bound"
    assert len(lines) == 3


def test_simulate_invalid_grid():
    payload = {
        "p": 4, "d": 1, "r": 2, "sigma2": 1.0,
        "n_grid": [10, 5], "trials": 6, "seed": 2,
    }
    response = client.post("/simulate", json=payload)
    assert response.status_code == 422
    assert response.json()["code"] == "invalid-config"
