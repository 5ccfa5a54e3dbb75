"""HTTP API contract: endpoints, payloads, and the error-code mapping."""
import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from flexsat.schemas import ScenarioModel, scenario_to_model
from flexsat.scenarios import get_builtin
from flexsat.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["version"]


def test_list_scenarios(client):
    r = client.get("/scenarios")
    assert r.status_code == 200
    rows = {row["name"]: row for row in r.json()}
    assert set(rows) == {"C1", "C2", "C3", "INT", "PI", "OPENLOOP"}
    assert rows["C1"]["controller_type"] == "saturated"
    assert rows["INT"]["controller_type"] == "saturated_integral"
    assert rows["PI"]["controller_type"] == "pi"
    assert rows["OPENLOOP"]["controller_type"] == "open_loop"
    assert rows["INT"]["state_dim"] == 14


def test_get_scenario(client):
    r = client.get("/scenarios/c3")
    assert r.status_code == 200
    body = r.json()
    assert body["name"] == "C3"
    assert body["controller"]["type"] == "saturated"
    assert body["controller"]["alpha_l"] == [0.0, 0.0]
    assert body["sim"]["t_final"] == 90.0


def test_get_scenario_unknown_404(client):
    r = client.get("/scenarios/NOPE")
    assert r.status_code == 404
    assert r.json()["detail"]["code"] == "config_error"


def test_run_builtin(client):
    r = client.post("/run", json={"scenario": "C1", "t_final": 2.0})
    assert r.status_code == 200
    body = r.json()
    assert body["final_time"] == pytest.approx(2.0)
    assert len(body["final_state"]) == 12
    m = body["metrics"]
    assert len(m["steady_state_error"]) == 2
    assert max(m["max_abs_u"]) <= 1.2
    assert m["energy_violations"] == 0
    certs = {c["name"]: c for c in body["certificates"]}
    assert certs["gain conditions"]["passed"]
    assert certs["shaped-energy Hessian positive definite"]["passed"]
    assert body["csv"].splitlines()[0].startswith("t,ql1")
    assert len(body["csv"].splitlines()) == 2002


def test_run_without_csv(client):
    r = client.post("/run", json={"scenario": "C1", "t_final": 0.1,
                                  "include_csv": False})
    assert r.status_code == 200
    assert r.json()["csv"] is None


def test_run_inline_scenario(client):
    model = scenario_to_model(get_builtin("C2").with_overrides(t_final=0.5))
    r = client.post("/run", json={"scenario": model.model_dump()})
    assert r.status_code == 200
    assert r.json()["scenario"]["name"] == "C2"
    assert r.json()["final_time"] == pytest.approx(0.5)


def test_run_actuator_override(client):
    r = client.post("/run", json={
        "scenario": "C3", "t_final": 1.0,
        "actuator": {"kind": "deadzone", "threshold": 0.12},
    })
    assert r.status_code == 200
    assert r.json()["scenario"]["actuator"]["kind"] == "deadzone"


def test_run_unknown_scenario_404(client):
    r = client.post("/run", json={"scenario": "C9"})
    assert r.status_code == 404
    assert r.json()["detail"]["code"] == "config_error"


def test_run_invalid_body_422(client):
    r = client.post("/run", json={"scenario": "C1", "dt": "fast"})
    assert r.status_code == 422
    r2 = client.post("/run", json={})
    assert r2.status_code == 422


def test_run_bad_override_400(client):
    r = client.post("/run", json={"scenario": "C1", "dt": -0.5})
    assert r.status_code == 400
    assert r.json()["detail"]["code"] == "config_error"


def test_run_failing_gains_409_and_override(client):
    model = scenario_to_model(get_builtin("C1")).model_dump()
    model["controller"]["r_cl"] = [[1.0, 0.0], [0.0, 1.0]]  # damping condition fails
    r = client.post("/run", json={"scenario": model, "t_final": 0.1})
    assert r.status_code == 409
    d = r.json()["detail"]
    assert d["code"] == "certificate_failure"
    assert "link damping condition" in d["message"]
    r2 = client.post("/run", json={"scenario": model, "t_final": 0.1,
                                   "override_certificates": True})
    assert r2.status_code == 200
    certs = {c["name"]: c for c in r2.json()["certificates"]}
    assert not certs["gain conditions"]["passed"]


def test_run_divergence_500(client):
    r = client.post("/run", json={"scenario": "C1", "integrator": "euler",
                                  "dt": 0.5, "t_final": 400.0})
    assert r.status_code == 500
    d = r.json()["detail"]
    assert d["code"] == "divergence"
    assert d["time"] > 0.0


def test_run_openloop(client):
    r = client.post("/run", json={"scenario": "OPENLOOP"})
    assert r.status_code == 200
    body = r.json()
    assert body["certificates"] == []
    assert body["metrics"]["max_abs_u"] == [0.0, 0.0]


def test_analyze_c1_report(client):
    r = client.post("/analyze", json={"scenario": "C1"})
    assert r.status_code == 200
    body = r.json()
    assert body["name"] == "C1"
    assert body["matrices"] is None
    report = body["report"]
    assert "[PASS] gain conditions" in report
    assert "condition_block = [[3.39141" in report
    assert "saturation_bound = [1.2" in report
    assert "overall: PASS" in report
    certs = {c["name"]: c for c in body["certificates"]}
    block = np.array(certs["gain conditions"]["data"]["condition_block"])
    assert np.allclose(np.diag(block), [3.39141422, 29.82843137])


def test_analyze_c3_reports_hessian_failure(client):
    r = client.post("/analyze", json={"scenario": "C3"})
    assert r.status_code == 200
    certs = {c["name"]: c for c in r.json()["certificates"]}
    hess = certs["shaped-energy Hessian positive definite"]
    assert not hess["passed"]
    assert abs(hess["data"]["lambda_min"]) < 1e-10
    assert "overall: FAIL" in r.json()["report"]


def test_analyze_with_matrices(client):
    r = client.post("/analyze", json={"scenario": "C1", "include_matrices": True})
    mats = r.json()["matrices"]
    assert set(mats) == {"F", "sym_F", "hessian"}
    F = np.array(mats["F"])
    assert F.shape == (12, 12)
    assert np.allclose(F + F.T, np.array(mats["sym_F"]) * 2.0, atol=1e-12)
    H = np.array(mats["hessian"])
    assert np.linalg.eigvalsh(H).min() == pytest.approx(0.1119723, abs=1e-6)


def test_analyze_int_matrices_include_linearization(client):
    r = client.post("/analyze", json={"scenario": "INT", "include_matrices": True})
    mats = r.json()["matrices"]
    assert set(mats) == {"F", "sym_F", "hessian", "linearization", "A_sigma"}
    A = np.array(mats["linearization"])
    assert A.shape == (14, 14)
    assert np.max(np.linalg.eigvals(A).real) == pytest.approx(-0.05955, abs=1e-4)
    assert np.allclose(np.diag(np.array(mats["A_sigma"])), [0.875, 0.9])


def test_analyze_pi_report(client):
    r = client.post("/analyze", json={"scenario": "PI"})
    report = r.json()["report"]
    assert "motor damping dominates link velocity feedback" in report
    assert "overall: PASS" in report


def test_analyze_openloop(client):
    r = client.post("/analyze", json={"scenario": "OPENLOOP"})
    assert r.status_code == 200
    assert "nothing to certify" in r.json()["report"]


def test_analyze_inline_failing_gains_still_200(client):
    # analysis reports failures instead of refusing to answer
    model = scenario_to_model(get_builtin("C1")).model_dump()
    model["controller"]["r_cl"] = [[1.0, 0.0], [0.0, 1.0]]
    r = client.post("/analyze", json={"scenario": model})
    assert r.status_code == 200
    assert "overall: FAIL" in r.json()["report"]
