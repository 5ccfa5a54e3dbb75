"""Command-line client for the simulation and analysis service.

The CLI talks to the HTTP service for everything.  By default it starts the
service in-process and connects through an ASGI transport, so no server
needs to be running; pass ``--server URL`` to use a remote instance.

Exit codes:
    0  success
    2  configuration error (unknown scenario, malformed config file)
    3  certificate failure without --override-certificates
    4  divergence during integration

The default output directory is taken from $FLEXSAT_OUT_DIR when set.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3
EXIT_DIVERGENCE = 4

_CODE_TO_EXIT = {
    "config_error": EXIT_CONFIG,
    "certificate_failure": EXIT_CERTIFICATE,
    "divergence": EXIT_DIVERGENCE,
}


def _make_client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import create_app
    return TestClient(create_app())


def _error_exit(resp) -> int:
    """Print the service error and translate its code to an exit code."""
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict):
        code = detail.get("code", "")
        message = detail.get("message", str(detail))
    else:
        # pydantic validation errors arrive as a list
        code = "config_error"
        message = str(detail) if detail is not None else resp.text
    print(f"error: {message}", file=sys.stderr)
    return _CODE_TO_EXIT.get(code, EXIT_CONFIG)


def _scenario_payload(ref: str, scenario_dir: str | None):
    """A built-in name passes through as a string; a config file is parsed
    locally and sent inline."""
    from .scenarios import builtin_scenarios
    if ref.upper() in builtin_scenarios():
        return ref.upper()
    from .schemas import scenario_to_model
    from .scenarios import resolve_scenario
    scenario = resolve_scenario(ref, scenario_dir)
    return scenario_to_model(scenario).model_dump(mode="json")


def _fmt_pair(values) -> str:
    return ", ".join(f"{v:.6g}" for v in values)


def _summary_text(resp_model, csv_path: str | None) -> str:
    scn = resp_model.scenario
    m = resp_model.metrics
    settle = math.inf if m.settle_time is None else m.settle_time
    lines = [
        f"scenario: {scn.name}" + (f" ({scn.description})" if scn.description else ""),
        f"controller: {scn.controller.type if scn.controller else 'open loop'}"
        f"   actuator: {scn.actuator.kind}",
        f"integrator: {scn.sim.integrator}   dt: {scn.sim.dt:g}   t_final: {scn.sim.t_final:g}",
        "certificates:",
    ]
    if not resp_model.certificates:
        lines.append("  (none: open-loop run)")
    for c in resp_model.certificates:
        lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name} (margin {c.margin:.6g})")
    for w in resp_model.warnings:
        lines.append(f"warning: {w}")
    lines += [
        "metrics:",
        f"  steady_state_error: {_fmt_pair(m.steady_state_error)} rad "
        "(mean |q_l - q_star| over final 10%)",
        f"  max_abs_u: {_fmt_pair(m.max_abs_u)}",
        f"  settle_time: {settle:g} s",
        f"  energy_violations: {m.energy_violations}",
    ]
    if csv_path:
        lines.append(f"csv: {csv_path}")
    lines += [
        "",
        "[metrics]",
        f"scenario={scn.name}",
        f"steady_state_error_1={m.steady_state_error[0]:.17g}",
        f"steady_state_error_2={m.steady_state_error[1]:.17g}",
        f"max_abs_u_1={m.max_abs_u[0]:.17g}",
        f"max_abs_u_2={m.max_abs_u[1]:.17g}",
        f"settle_time={settle:.17g}",
        f"energy_violations={m.energy_violations}",
        f"final_time={resp_model.final_time:.17g}",
    ]
    return "\n".join(lines)


def _cmd_run(args) -> int:
    from .schemas import RunRequest, RunResponse, ActuatorConfig
    from .simulation import ActuatorModel

    out_dir = args.out or os.environ.get("FLEXSAT_OUT_DIR", ".")
    actuator_cfg = None
    if args.actuator:
        a = ActuatorModel.parse(args.actuator)
        actuator_cfg = ActuatorConfig(kind=a.kind, threshold=a.threshold, u_max=a.u_max)

    if args.all:
        refs = None  # resolved below from the service listing
    elif args.ref:
        refs = [args.ref]
    else:
        print("error: provide a scenario name/path or --all", file=sys.stderr)
        return EXIT_CONFIG

    with _make_client(args.server) as client:
        if refs is None:
            resp = client.get("/scenarios")
            if resp.status_code != 200:
                return _error_exit(resp)
            refs = [row["name"] for row in resp.json()]
        worst = EXIT_OK
        for ref in refs:
            payload = _scenario_payload(ref, args.scenario_dir)
            req = RunRequest(
                scenario=payload if isinstance(payload, str) else payload,
                actuator=actuator_cfg,
                dt=args.dt, t_final=args.t_final, integrator=args.integrator,
                record_stride=args.record_stride, settle_tolerance=args.settle_tol,
                override_certificates=args.override_certificates,
                include_csv=not args.no_csv,
            )
            resp = client.post("/run", json=req.model_dump(mode="json"))
            if resp.status_code != 200:
                code = _error_exit(resp)
                worst = max(worst, code)
                continue
            model = RunResponse.model_validate(resp.json())
            csv_path = None
            os.makedirs(out_dir, exist_ok=True)
            if model.csv is not None:
                csv_path = os.path.join(out_dir, f"{model.scenario.name}.csv")
                with open(csv_path, "w") as fh:
                    fh.write(model.csv)
            summary = _summary_text(model, csv_path)
            summary_path = os.path.join(out_dir, f"{model.scenario.name}_summary.txt")
            with open(summary_path, "w") as fh:
                fh.write(summary + "\n")
            print(summary)
            print(f"summary: {summary_path}")
        return worst


def _cmd_analyze(args) -> int:
    from .schemas import AnalyzeRequest, AnalyzeResponse

    payload = _scenario_payload(args.ref, args.scenario_dir)
    req = AnalyzeRequest(scenario=payload, include_matrices=args.show_matrices)
    with _make_client(args.server) as client:
        resp = client.post("/analyze", json=req.model_dump(mode="json"))
        if resp.status_code != 200:
            return _error_exit(resp)
        model = AnalyzeResponse.model_validate(resp.json())
    print(model.report)
    if model.matrices:
        import numpy as np
        for key, rows in model.matrices.items():
            print(f"\n{key} =")
            print(np.array2string(np.asarray(rows), precision=6, suppress_small=True))
    return EXIT_OK


def _cmd_list(args) -> int:
    with _make_client(args.server) as client:
        resp = client.get("/scenarios")
        if resp.status_code != 200:
            return _error_exit(resp)
        rows = resp.json()
    for row in rows:
        print(f"{row['name']:<10} {row['controller_type']:<20} {row['description']}")
    if args.scenario_dir:
        from .schemas import load_scenario_file
        for fname in sorted(os.listdir(args.scenario_dir)):
            if not fname.endswith((".yaml", ".yml")):
                continue
            path = os.path.join(args.scenario_dir, fname)
            try:
                s = load_scenario_file(path)
                print(f"{s.name:<10} {'(file)':<20} {s.description or path}")
            except ConfigError as exc:
                print(f"{fname:<10} {'(invalid)':<20} {exc}", file=sys.stderr)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flexsat",
        description="Simulate and analyze saturated energy-shaping control "
                    "of a two-joint flexible-joint planar robot.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None,
                        help="URL of a running service; default runs it in-process")
    common.add_argument("--scenario-dir", default=None,
                        help="directory searched for scenario config files")

    run_p = sub.add_parser("run", parents=[common], help="simulate a scenario and export CSV")
    run_p.add_argument("ref", nargs="?", help="built-in name or config file path")
    run_p.add_argument("--all", action="store_true", help="run every built-in scenario")
    run_p.add_argument("--actuator", default=None,
                       help="override: ideal | deadzone[:thr] | clamp[:limit]")
    run_p.add_argument("--dt", type=float, default=None, help="override step size [s]")
    run_p.add_argument("--t-final", type=float, default=None, help="override horizon [s]")
    run_p.add_argument("--integrator", choices=["rk4", "euler"], default=None)
    run_p.add_argument("--record-stride", type=int, default=None,
                       help="record every Nth step")
    run_p.add_argument("--settle-tol", type=float, default=0.01,
                       help="settle-time tolerance [rad]")
    run_p.add_argument("--out", default=None,
                       help="output directory (default $FLEXSAT_OUT_DIR or .)")
    run_p.add_argument("--override-certificates", action="store_true",
                       help="run even when gain certificates fail")
    run_p.add_argument("--no-csv", action="store_true", help="skip trajectory CSV export")
    run_p.set_defaults(func=_cmd_run)

    an_p = sub.add_parser("analyze", parents=[common],
                          help="print the certificate report for a scenario")
    an_p.add_argument("ref", help="built-in name or config file path")
    an_p.add_argument("--show-matrices", action="store_true",
                      help="also print the assembled matrices")
    an_p.set_defaults(func=_cmd_analyze)

    ls_p = sub.add_parser("list", parents=[common], help="list available scenarios")
    ls_p.set_defaults(func=_cmd_list)

    sv_p = sub.add_parser("serve", help="run the HTTP service")
    sv_p.add_argument("--host", default="127.0.0.1")
    sv_p.add_argument("--port", type=int, default=8000)
    sv_p.set_defaults(func=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
