"""
Tests for the HTTP API.
"""
import pytest
from fastapi.testclient import TestClient

from app.config import settings
from app.main import app


@pytest.fixture
def client(monkeypatch, db_url):
    monkeypatch.setattr(settings, "DATABASE_URL", db_url)
    monkeypatch.setattr(settings, "FBM_THREADS", 1)
    with TestClient(app) as client:
        yield client


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "message" in response.json()


class TestErrors:
    def test_direct_then_cached(self, client):
        body = {"hurst": "0.5", "order": 4, "precision_bits": 128}
        first = client.post("/api/kernel/errors", json=body)
        assert first.status_code == 200
        data = first.json()
        assert not data["cached"]
        assert data["H"] == "0.5" and data["L"] == 4 and data["method"] == "direct"
        assert data["epsilon"].startswith("0.0357142857")
        assert data["epsilon_star"] is None

        second = client.post("/api/kernel/errors", json=body).json()
        assert second["cached"]
        assert second["epsilon"] == data["epsilon"]
        assert second["truncated_norm_sq"] == data["truncated_norm_sq"]

    def test_product(self, client):
        body = {"hurst": "0.7", "order": 8, "method": "product_A", "precision_bits": 128}
        data = client.post("/api/kernel/errors", json=body).json()
        assert data["epsilon_star"].startswith("0.00496")
        assert float(data["defect_norm_sq"]) > 0

    @pytest.mark.parametrize("body", [
        {"hurst": "1.5", "order": 4},
        {"hurst": "0.3", "order": 0},
        {"hurst": "abc", "order": 4},
        {"hurst": "0.3", "order": 4, "method": "spectral"},
        {"hurst": "0.3", "order": 4, "precision_bits": 16},
        {"hurst": "0.3", "order": 4, "horizon": "-1"},
    ])
    def test_invalid(self, client, body):
        assert client.post("/api/kernel/errors", json=body).status_code == 422


class TestTables:
    def test_rounded_cells(self, client):
        body = {"hurst_list": ["0.5"], "order_list": [4, 8], "precision_bits": 128, "round": 6}
        response = client.post("/api/tables", json=body)
        assert response.status_code == 200
        data = response.json()
        assert data["horizon"] == "1"
        assert [(c["L"], c["epsilon"]) for c in data["cells"]] == [(4, "0.035714"), (8, "0.016667")]

    def test_paired_product(self, client):
        body = {"hurst_list": ["0.3", "0.7"], "order_list": [8], "method": "product",
                "variant": "paired", "precision_bits": 128, "round": 6}
        cells = client.post("/api/tables", json=body).json()["cells"]
        assert [c["variant"] for c in cells] == ["B", "A"]
        assert cells[1]["epsilon_star"] == "0.004961"

    @pytest.mark.parametrize("body", [
        {"hurst_list": [], "order_list": [4]},
        {"hurst_list": ["0.3"], "order_list": []},
        {"hurst_list": ["0.3"], "order_list": [4], "variant": "C", "method": "product"},
    ])
    def test_invalid(self, client, body):
        assert client.post("/api/tables", json=body).status_code == 422


class TestSimulate:
    def test_paths(self, client):
        body = {"hurst": "0.3", "order": 8, "grid": 5, "paths": 2, "seed": 3, "precision_bits": 128}
        first = client.post("/api/simulate", json=body)
        assert first.status_code == 200
        data = first.json()
        assert data["metadata"]["seed"] == 3
        assert [p["path"] for p in data["paths"]] == [0, 1]
        assert data["paths"][0]["t"] == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert client.post("/api/simulate", json=body).json() == data

    def test_invalid(self, client):
        body = {"hurst": "0.3", "order": 8, "paths": 0}
        assert client.post("/api/simulate", json=body).status_code == 422
