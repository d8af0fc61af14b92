from __future__ import annotations

import pytest

from app import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.get_json()["message"].startswith("grouplaw")


def test_describe_law(client):
    response = client.post("/api/law", json={"law": "[x,y,z]"})
    assert response.status_code == 200
    body = response.get_json()
    assert body["canonical"] == "[[x1,x2],x3]"
    assert body["variables"] == 3
    assert body["balanced"] is True


def test_bad_law_is_a_client_error(client):
    response = client.post("/api/law", json={"law": "[x,y"})
    assert response.status_code == 400
    assert "position 4" in response.get_json()["message"]


def test_missing_field_is_a_client_error(client):
    assert client.post("/api/law", json={}).status_code == 400


def test_small_experiment(client):
    response = client.post(
        "/api/experiment",
        json={
            "kind": "exact",
            "group": "sym(3)",
            "law": "[x,y]",
        },
    )
    assert response.status_code == 200
    body = response.get_json()
    assert body["kind"] == "exact"
    assert body["records"][0]["probability"] == 0.5
    assert body["checks"] == []


def test_experiment_with_an_unknown_group(client):
    response = client.post(
        "/api/experiment", json={"kind": "ball", "group": "hyperbolic(2)"}
    )
    assert response.status_code == 400


def test_unknown_reproduce_section(client):
    response = client.get("/api/reproduce/4?scale=0.1")
    assert response.status_code == 400
    assert "unknown section" in response.get_json()["message"]


def test_unknown_route(client):
    assert client.get("/api/nothing").status_code == 404
