import pytest
from fastapi.testclient import TestClient

from src.api import app
from src.config_service import config_service

client = TestClient(app)


@pytest.fixture(autouse=True)
def open_api(monkeypatch):
    monkeypatch.setattr(config_service, "token", "")


def test_root_and_health():
    root = client.get("/")
    assert root.status_code == 200
    assert root.json()["success"] is True
    assert "levels" in root.json()["data"]["figures"]
    health = client.get("/health")
    assert health.json()["data"] == {"status": "healthy", "auth_enabled": False}


def test_list_figures():
    response = client.get("/figures")
    assert response.status_code == 200
    assert len(response.json()["data"]["figures"]) == 8


def test_compute_levels_figure():
    response = client.post("/figures/levels", params={"points": 3}, json={})
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["name"] == "levels"
    assert len(data["rows"]) == 3
    assert data["columns"][0] == "x"
    assert len(data["config_sha256"]) == 64


def test_unknown_figure_is_404():
    assert client.post("/figures/nope", json={}).status_code == 404


def test_library_errors_are_reported():
    response = client.post("/figures/levels", params={"points": 1}, json={})
    assert response.status_code == 422
    body = response.json()
    assert body["success"] is False
    assert body["data"]["diagnostics"] == ["points: 1 < 2"]


def test_invalid_config_body():
    response = client.post("/figures/levels", json={"cavity": {"a_m": -1.0}})
    assert response.status_code == 422


@pytest.mark.parametrize("headers,status", [
    ({}, 401),
    ({"Authorization": "Bearer otro"}, 401),
    ({"Authorization": "Bearer secreto"}, 200),
])
def test_token_required_when_configured(monkeypatch, headers, status):
    monkeypatch.setattr(config_service, "token", "secreto")
    assert client.get("/figures", headers=headers).status_code == status
    assert client.get("/health").status_code == 200
