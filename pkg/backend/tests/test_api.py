"""Tests for the HTTP endpoints."""

from __future__ import annotations

import os
import sys

import pytest
from fastapi.testclient import TestClient

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from app.config import settings  # noqa: E402
from app.main import app  # noqa: E402

client = TestClient(app)
PREFIX = settings.api_prefix


class TestHealth:
    def test_health(self):
        response = client.get(f"{PREFIX}/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "healthy"
        assert "asc-cond1" in body["presets"]
        assert set(body["versions"]) == {"numpy", "scipy", "matplotlib"}


class TestSpr:
    def test_benchmark_plant(self):
        response = client.post(f"{PREFIX}/spr", json={"num": [75, 4900], "den": [1, 98, 4900]})
        assert response.status_code == 200
        body = response.json()
        assert body["is_spr"]
        assert body["realpart_poly_text"] == "24010000 + 2450x"
        assert body["certificate"]["hurwitz"]

    def test_not_positive_real(self):
        response = client.post(f"{PREFIX}/spr", json={"num": [1, -1], "den": [1, 1]})
        assert response.status_code == 200
        assert response.json()["certificate"]["verdict"] == "NotPositiveReal"

    def test_improper(self):
        response = client.post(f"{PREFIX}/spr", json={"num": [1, 2, 3], "den": [1, 1]})
        assert response.status_code == 400
        assert "improper" in response.json()["detail"]

    def test_empty_coefficients(self):
        response = client.post(f"{PREFIX}/spr", json={"num": [], "den": [1]})
        assert response.status_code == 422


class TestPresets:
    def test_list(self):
        response = client.get(f"{PREFIX}/presets")
        assert response.status_code == 200
        names = [p["name"] for p in response.json()]
        assert names == ["asc-cond1", "asc-cond2", "assc-cond1", "integral-cond1"]

    def test_unknown(self):
        response = client.post(f"{PREFIX}/presets/asc-cond9/report")
        assert response.status_code == 404

    @pytest.mark.parametrize("dt", [0, -1e-4])
    def test_nonpositive_dt(self, dt):
        response = client.post(f"{PREFIX}/presets/asc-cond1/report", params={"dt": dt})
        assert response.status_code == 422

    def test_report(self):
        response = client.post(f"{PREFIX}/presets/asc-cond2/report", params={"dt": 1e-4})
        assert response.status_code == 200
        body = response.json()
        assert body["preset"] == "asc-cond2"
        assert body["rows"] == 4001
        assert body["files"] == {}
        assert body["faults"][0]["zero_after"]
        assert body["passivity"]["C_u"] == 0.0
        assert [w["t_a"] for w in body["windows"]] == [0.15, 0.35]
