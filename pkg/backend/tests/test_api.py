import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from main import app


@pytest.fixture
def client() -> TestClient:
    return TestClient(app)


SMALL = {"N": 4, "alpha": 0.1, "t_max": 2.0, "dt": 0.5}


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"
    assert client.get("/").json()["status"] == "running"


def test_trace_endpoint(client):
    response = client.post("/api/v1/dynamics/trace", json=SMALL)
    assert response.status_code == 200
    rows = response.json()["data"]["rows"]
    assert [row["t"] for row in rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert rows[0]["A"] == pytest.approx(1.0)
    assert all(abs(row["A"] + row["B"] - 1.0) < 1e-12 for row in rows)


def test_rates_endpoint(client):
    rows = client.post("/api/v1/dynamics/rates", json=SMALL).json()["data"]["rows"]
    assert set(rows[0]) == {"t", "gamma_dis", "gamma_abs", "gamma_deph", "U", "flags"}
    assert all(row["gamma_dis"] == row["gamma_abs"] for row in rows)


def test_channel_endpoint(client):
    response = client.post("/api/v1/dynamics/channel", json={"N": 4, "alpha": 0.1, "t": 3.0})
    assert response.status_code == 200
    data = response.json()["data"]
    coeffs = data["coefficients"]
    assert coeffs["A"] + coeffs["B"] == pytest.approx(1.0)
    assert len(data["kraus"]) == 4
    assert data["state"]["rho11"] == pytest.approx(0.5)
    assert data["state"]["rho12_re"] == pytest.approx(0.5 * coeffs["C_re"])


def test_measure_endpoints(client):
    nonmarkov = client.post("/api/v1/measures/nonmarkov", json={**SMALL, "pair": "zo"}).json()["data"]
    assert nonmarkov["summary"]["blp_pair"] == "zo"
    assert min(row["q"] for row in nonmarkov["rows"]) >= 0.0
    thermo = client.post("/api/v1/measures/thermo", json={**SMALL, "initial_state": "1"}).json()["data"]
    assert thermo["rows"][0]["flags"] == "pure_state"
    assert thermo["summary"]["pure_samples"] == 1


def test_sweep_endpoint(client):
    body = {**SMALL, "sweep_alpha": [0.2, 0.1], "sweep_n": [3]}
    rows = client.post("/api/v1/runs/sweep", json=body).json()["data"]["rows"]
    assert [(row["N"], row["alpha"]) for row in rows] == [(3, 0.1), (3, 0.2)]


def test_verify_endpoint(client):
    body = {"N": 3, "alpha": 0.1, "t_max": 5.0, "dt": 0.05, "seed": 1}
    payload = client.post("/api/v1/runs/verify", json=body).json()
    assert payload["success"] is payload["data"]["passed"]
    assert "oracle" in payload["data"]["suites"]


def test_invalid_requests_are_unprocessable(client):
    assert client.post("/api/v1/dynamics/trace", json={**SMALL, "dt": 0.0}).status_code == 422
    assert client.post("/api/v1/dynamics/trace", json={**SMALL, "t_max": 1e6, "dt": 1e-3}).status_code == 422
    response = client.post("/api/v1/measures/thermo", json={**SMALL, "initial_state": "3,0,0"})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "InvalidParameters"
    assert client.post("/api/v1/runs/sweep", json=SMALL).status_code == 422
    assert client.post("/api/v1/dynamics/channel", json={"N": 0, "alpha": 0.1, "t": 1.0}).status_code == 422


def test_oversized_requests_are_unprocessable(client):
    too_many = settings.MAX_N_BATH + 1
    assert client.post("/api/v1/dynamics/trace", json={**SMALL, "N": too_many}).status_code == 422
    assert client.post("/api/v1/dynamics/channel", json={"N": too_many, "alpha": 0.1, "t": 1.0}).status_code == 422
    assert client.post("/api/v1/runs/sweep", json={**SMALL, "sweep_n": [2, too_many]}).status_code == 422
    cells = {"sweep_alpha": [0.01 * (k + 1) for k in range(9)], "sweep_n": list(range(1, 9))}
    assert client.post("/api/v1/runs/sweep", json={**SMALL, **cells}).status_code == 422


def test_overflowing_grid_is_unprocessable(client):
    response = client.post("/api/v1/dynamics/trace", json={**SMALL, "t_max": 1e308, "dt": 1e-308})
    assert response.status_code == 422
