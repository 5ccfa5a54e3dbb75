"""HTTP service exposing the toolkit: scenario listing, runs, and analysis.

Error contract (mirrored by the CLI's exit codes):

* 400/404/422 with code ``config_error``        -- bad reference or config
* 409 with code ``certificate_failure``         -- gain conditions failed and
  no override was requested
* 500 with code ``divergence``                  -- the state left the finite
  range during integration
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from . import analysis
from .controllers import (
    IntGains,
    PiGains,
    SatGains,
    sat_condition_block,
    saturation_bound,
    validate_gains,
)
from .errors import CertificateError, ConfigError, DivergenceError
from .scenarios import Scenario, builtin_scenarios, get_builtin
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    CertificateModel,
    CheckModel,
    RunRequest,
    RunResponse,
    ScenarioModel,
    ScenarioSummary,
    metrics_to_model,
    scenario_from_model,
    scenario_to_model,
)
from .simulation import ActuatorModel, compute_metrics, csv_string, simulate

__all__ = ["create_app", "build_certificates", "format_report"]


def _controller_type(s: Scenario) -> str:
    if s.controller is None:
        return "open_loop"
    return {PiGains: "pi", SatGains: "saturated", IntGains: "saturated_integral"}[type(s.controller)]


def _gain_certificate_model(s: Scenario) -> CertificateModel:
    cert = validate_gains(s.plant, s.controller)
    data = {}
    sat = s.controller.sat if isinstance(s.controller, IntGains) else s.controller
    if isinstance(sat, SatGains):
        block = sat_condition_block(s.plant, sat)
        data["condition_block"] = block.tolist()
        data["saturation_bound"] = saturation_bound(s.controller).tolist()
    return CertificateModel(
        name="gain conditions", kind="gain", passed=cert.passed, margin=cert.margin,
        checks=[CheckModel(name=n, passed=ok, margin=m) for n, ok, m in cert.checks],
        warnings=list(cert.warnings), data=data,
    )


def build_certificates(s: Scenario) -> tuple[list[CertificateModel], bool]:
    """All certificates applicable to the scenario's controller variant.

    Returns (certificates, gain_conditions_passed)."""
    if s.controller is None:
        return [], True
    out = [_gain_certificate_model(s)]
    gain_ok = out[0].passed

    if isinstance(s.controller, PiGains):
        sm = analysis.pi_structure_matrices(s.plant, s.controller)
    else:
        sat = s.controller.sat if isinstance(s.controller, IntGains) else s.controller
        sm = analysis.zeta_structure_matrices(s.plant, sat)
    sym_max = sm.sym_max_eigenvalue
    out.append(CertificateModel(
        name="structure matrix dissipativity", kind="structure",
        passed=sym_max <= 1e-10, margin=-sym_max + 0.0,
        data={"sym_max_eigenvalue": sym_max},
    ))

    if isinstance(s.controller, PiGains):
        _, cert = analysis.hessian_pi_at_equilibrium(s.plant, s.controller)
        out.append(CertificateModel(
            name="shaped-energy Hessian positive definite", kind="hessian_pd",
            passed=cert.passed, margin=cert.lambda_min,
            data={"lambda_min": cert.lambda_min, "residual": cert.residual},
        ))
    elif isinstance(s.controller, SatGains):
        _, cert = analysis.hessian_zeta_at_equilibrium(s.plant, s.controller)
        out.append(CertificateModel(
            name="shaped-energy Hessian positive definite", kind="hessian_pd",
            passed=cert.passed, margin=cert.lambda_min,
            data={"lambda_min": cert.lambda_min, "residual": cert.residual},
        ))
    else:
        if gain_ok:
            lin = analysis.linearization_matrix(s.plant, s.controller)
            cert = analysis.is_hurwitz(lin.A)
            out.append(CertificateModel(
                name="linearization Hurwitz", kind="hurwitz",
                passed=cert.passed, margin=cert.margin,
                data={"spectral_abscissa": cert.spectral_abscissa,
                      "residual": cert.residual},
            ))
        else:
            out.append(CertificateModel(
                name="linearization Hurwitz", kind="hurwitz",
                passed=False, margin=0.0,
                data={"skipped": "gain conditions failed, linearization not assembled"},
            ))
    return out, gain_ok


def _fmt_nested(value) -> str:
    if isinstance(value, list):
        return "[" + ", ".join(_fmt_nested(v) for v in value) + "]"
    return f"{value:.6g}" if isinstance(value, float) else str(value)


def format_report(name: str, certs: list[CertificateModel]) -> str:
    lines = [f"certificate report for {name}"]
    if not certs:
        lines.append("  no controller: nothing to certify for an open-loop run")
    for c in certs:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"  [{status}] {c.name} (margin {c.margin:.6g})")
        for chk in c.checks:
            s = "PASS" if chk.passed else "FAIL"
            lines.append(f"      - {chk.name}: {s} (min eigenvalue {chk.margin:.6g})")
        for key, value in c.data.items():
            if isinstance(value, float):
                lines.append(f"      {key} = {value:.6g}")
            elif isinstance(value, list):
                lines.append(f"      {key} = {_fmt_nested(value)}")
        for w in c.warnings:
            lines.append(f"      warning: {w}")
    overall = "PASS" if all(c.passed for c in certs) else "FAIL"
    lines.append(f"overall: {overall}")
    return "\n".join(lines)


def _matrices_for(s: Scenario) -> dict[str, list[list[float]]]:
    if s.controller is None:
        return {}
    out: dict[str, list[list[float]]] = {}
    if isinstance(s.controller, PiGains):
        sm = analysis.pi_structure_matrices(s.plant, s.controller)
        H, _ = analysis.hessian_pi_at_equilibrium(s.plant, s.controller)
        out["F"] = sm.F.tolist()
        out["sym_F"] = sm.sym_F.tolist()
        out["hessian"] = H.tolist()
        return out
    sat = s.controller.sat if isinstance(s.controller, IntGains) else s.controller
    sm = analysis.zeta_structure_matrices(s.plant, sat)
    H, _ = analysis.hessian_zeta_at_equilibrium(s.plant, sat)
    out["F"] = sm.F.tolist()
    out["sym_F"] = sm.sym_F.tolist()
    out["hessian"] = H.tolist()
    if isinstance(s.controller, IntGains) and validate_gains(s.plant, s.controller).passed:
        lin = analysis.linearization_matrix(s.plant, s.controller)
        out["linearization"] = lin.A.tolist()
        out["A_sigma"] = lin.A_sigma.tolist()
    return out


def _resolve_request_scenario(ref: str | ScenarioModel) -> Scenario:
    if isinstance(ref, str):
        try:
            return get_builtin(ref)
        except ConfigError as exc:
            raise HTTPException(status_code=404,
                                detail={"code": "config_error", "message": str(exc)}) from None
    return scenario_from_model(ref)


def create_app() -> FastAPI:
    from . import __version__

    app = FastAPI(title="flexsat", version=__version__,
                  description="Simulation and stability analysis for a two-joint "
                              "flexible-joint planar robot under saturated "
                              "energy-shaping control.")

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc: ConfigError):
        return JSONResponse(status_code=400,
                            content={"detail": {"code": "config_error", "message": str(exc)}})

    @app.exception_handler(CertificateError)
    async def _certificate_error(request, exc: CertificateError):
        return JSONResponse(status_code=409,
                            content={"detail": {"code": "certificate_failure", "message": str(exc)}})

    @app.exception_handler(DivergenceError)
    async def _divergence_error(request, exc: DivergenceError):
        return JSONResponse(status_code=500,
                            content={"detail": {"code": "divergence", "message": str(exc),
                                                "time": exc.time}})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/scenarios", response_model=list[ScenarioSummary])
    def list_scenarios():
        return [
            ScenarioSummary(name=s.name, description=s.description,
                            controller_type=_controller_type(s),
                            state_dim=len(s.x0))
            for s in builtin_scenarios().values()
        ]

    @app.get("/scenarios/{name}", response_model=ScenarioModel)
    def get_scenario(name: str):
        try:
            return scenario_to_model(get_builtin(name))
        except ConfigError as exc:
            raise HTTPException(status_code=404,
                                detail={"code": "config_error", "message": str(exc)}) from None

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        scn = _resolve_request_scenario(req.scenario)
        actuator = None
        if req.actuator is not None:
            actuator = ActuatorModel(kind=req.actuator.kind, threshold=req.actuator.threshold,
                                     u_max=req.actuator.u_max)
        scn = scn.with_overrides(actuator=actuator, dt=req.dt, t_final=req.t_final,
                                 integrator=req.integrator, record_stride=req.record_stride)
        certs, gain_ok = build_certificates(scn)
        warnings = [w for c in certs for w in c.warnings]
        if scn.controller is not None and not gain_ok and not req.override_certificates:
            raise CertificateError(validate_gains(scn.plant, scn.controller))
        traj = simulate(scn.plant, scn.controller, scn.actuator, scn.x0, scn.sim,
                        override_certificates=req.override_certificates)
        metrics = compute_metrics(traj, scn.q_star, settle_tol=req.settle_tolerance)
        return RunResponse(
            scenario=scenario_to_model(scn),
            metrics=metrics_to_model(metrics),
            certificates=certs,
            final_time=traj.final_time,
            final_state=[float(v) for v in traj.final_state],
            warnings=warnings,
            csv=csv_string(traj) if req.include_csv else None,
        )

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze_endpoint(req: AnalyzeRequest):
        scn = _resolve_request_scenario(req.scenario)
        certs, _ = build_certificates(scn)
        return AnalyzeResponse(
            name=scn.name,
            certificates=certs,
            report=format_report(scn.name, certs),
            matrices=_matrices_for(scn) if req.include_matrices else None,
        )

    return app
