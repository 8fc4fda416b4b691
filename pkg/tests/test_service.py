"""HTTP service endpoints over the same core as the CLI."""

import pytest
from fastapi.testclient import TestClient

from sidelink_ledger.service.app import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


class TestHealth:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["version"]


class TestCapacityEndpoint:
    def test_reference_package(self, client):
        resp = client.post(
            "/capacity",
            json={"mu": 0, "payload_bytes": 350, "mcs_index": 1, "rri_ms": 100},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["re_per_prb"] == 132
        assert body["res_per_package"] == 5973
        assert body["prbs_per_package"] == 46
        assert body["prbs_per_slot"] == 277
        assert body["subchannels_per_slot"] == 6
        assert body["max_vehicles"] == 600
        assert body["baseline_max_vehicles"] == 700
        assert abs(body["overhead_fraction"] - 1 / 7) < 1e-12

    def test_empty_payload(self, client):
        resp = client.post("/capacity", json={"payload_bytes": 0})
        assert resp.status_code == 200
        body = resp.json()
        assert body["prbs_per_package"] == 0
        assert body["subchannels_per_slot"] is None

    def test_unknown_mcs_is_400(self, client):
        resp = client.post("/capacity", json={"mcs_index": 9})
        assert resp.status_code == 400
        assert "not in table" in resp.json()["detail"]

    def test_validation_is_422(self, client):
        assert client.post("/capacity", json={"mu": 9}).status_code == 422
        assert client.post("/capacity", json={"payload_bytes": -1}).status_code == 422


class TestSimulateEndpoint:
    def test_small_paired_run(self, client):
        resp = client.post(
            "/simulate",
            json={
                "num_vehicles": 12,
                "rri_ms": 10,
                "num_rris": 20,
                "seeds": [1, 2],
                "mode": "both",
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["traces"]) == 2 * 20
        modes = {row["mode"] for row in body["traces"]}
        assert modes == {"baseline", "ledger"}
        ledger_summary = next(s for s in body["summaries"] if s["mode"] == "ledger")
        assert ledger_summary["converged_seeds"] == 2

    def test_deterministic_responses(self, client):
        req = {
            "num_vehicles": 8,
            "rri_ms": 10,
            "num_rris": 15,
            "seeds": [5],
            "mode": "ledger",
        }
        assert client.post("/simulate", json=req).json() == client.post("/simulate", json=req).json()

    def test_capacity_violation_is_400(self, client):
        resp = client.post(
            "/simulate",
            json={"num_vehicles": 601, "num_rris": 15, "seeds": [1], "mode": "ledger"},
        )
        assert resp.status_code == 400
        assert "capacity" in resp.json()["detail"]

    def test_validation_is_422(self, client):
        resp = client.post(
            "/simulate",
            json={"num_vehicles": 10, "num_rris": 5, "seeds": [1], "mode": "ledger"},
        )
        assert resp.status_code == 422
        resp = client.post("/simulate", json={"mode": "hybrid"})
        assert resp.status_code == 422
        resp = client.post("/simulate", json={"seeds": []})
        assert resp.status_code == 422
