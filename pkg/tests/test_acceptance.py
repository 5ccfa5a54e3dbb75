"""Acceptance gate: one test per release criterion.

Each test computes its verdict first, registers a one-line PASS/FAIL entry
for the terminal summary, and only then asserts, so the summary always shows
all nine lines.  Two criteria fail by design of the model, not by a bug:

* criterion 3: the C3 scenario switches the link shaping weights off, which
  leaves two identically-zero rows in the shaped-energy Hessian.  Its smallest
  eigenvalue is exactly 0 (computed as ~1e-14), so a strict "> 0" check on
  C3 cannot pass.  The stability argument for C3 needs the weaker
  positive-semidefinite reading; the suite keeps the strict check and reports
  the miss.
* criterion 5: with the catalogued plant damping (motor joint 1 damping 8.435)
  the slowest closed-loop mode settles on a ~100 s scale.  Measured values at
  t = 30 s are ~0.30 rad (C1) and ~0.15 rad (INT); both runs do converge, with
  settle times near 162 s and 109 s (see the regression suite).  The 1e-3 rad
  bar at 30 s is not reachable with the published gains.
"""
import time

import numpy as np
import pytest

from conftest import record_criterion, run_builtin
from flexsat import analysis
from flexsat.controllers import (
    IntGains,
    sat_condition_block,
    saturation_bound,
    validate_gains,
)
from flexsat.plant import PlantParams, PlantState, grad_hamiltonian, hamiltonian
from flexsat.scenarios import builtin_names, get_builtin
from flexsat.schemas import (
    ScenarioModel,
    scenario_from_model,
    scenario_to_model,
    scenario_to_yaml,
)
from flexsat.simulation import SimConfig, compute_metrics, simulate

P = PlantParams()
QS = np.array([-1.0, 1.0])


def test_criterion_1_gradient_oracle(rng):
    t0 = time.perf_counter()
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        v = rng.uniform(-2.0, 2.0, size=8)
        dq, dp = grad_hamiltonian(P, PlantState.from_vector(v))
        g = np.concatenate([dq, dp])
        fd = np.empty(8)
        for i in range(8):
            up = v.copy(); up[i] += h
            dn = v.copy(); dn[i] -= h
            fd[i] = (hamiltonian(P, PlantState.from_vector(up))
                     - hamiltonian(P, PlantState.from_vector(dn))) / (2 * h)
        denom = max(1.0, float(np.max(np.abs(g))))
        worst = max(worst, float(np.max(np.abs(g - fd))) / denom)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 1.0
    record_criterion(1, ok,
                     f"energy gradient vs central differences at 100 random states: "
                     f"worst rel err {worst:.2e} (< 1e-6), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_2_dual_path_fields(rng):
    t0 = time.perf_counter()
    g_pi = get_builtin("PI").controller
    g_sat = get_builtin("C1").controller
    worst_pi = worst_zeta = 0.0
    for _ in range(100):
        v = rng.uniform(-2.0, 2.0, size=8)
        x = PlantState.from_vector(v)
        direct = analysis.pi_closed_loop_field(P, g_pi, x)
        structured = analysis.structured_pi_field(P, g_pi, x)
        denom = max(1.0, float(np.max(np.abs(direct))))
        worst_pi = max(worst_pi, float(np.max(np.abs(direct - structured))) / denom)

        z = rng.uniform(-2.0, 2.0, size=12)
        direct = analysis.zeta_closed_loop_field(P, g_sat, z)
        structured = analysis.f_zeta_times_grad(P, g_sat, z)
        denom = max(1.0, float(np.max(np.abs(direct))))
        worst_zeta = max(worst_zeta, float(np.max(np.abs(direct - structured))) / denom)
    elapsed = time.perf_counter() - t0
    ok = worst_pi < 1e-12 and worst_zeta < 1e-12 and elapsed < 1.0
    record_criterion(2, ok,
                     f"direct vs structure-matrix closed-loop fields at 100 states: "
                     f"rel err {worst_pi:.1e} (velocity-feedback) / {worst_zeta:.1e} "
                     f"(saturated), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_3_certificate_suite():
    t0 = time.perf_counter()
    parts = []

    pi_cert = validate_gains(P, get_builtin("PI").controller)
    parts.append(("velocity-feedback demo gain condition", pi_cert.passed))

    block = sat_condition_block(P, get_builtin("C1").controller)
    block_ok = (abs(block[0, 0] - 3.39) < 0.05 and abs(block[1, 1] - 29.83) < 0.05
                and np.linalg.eigvalsh(block).min() > 0)
    parts.append((f"damping condition block diag({block[0, 0]:.4f}, {block[1, 1]:.4f})",
                  block_ok))

    lam = {}
    for name in ("C1", "C2", "C3"):
        _, cert = analysis.hessian_zeta_at_equilibrium(P, get_builtin(name).controller)
        lam[name] = cert.lambda_min
        parts.append((f"{name} shaped Hessian lambda_min {cert.lambda_min:.3g} > 0",
                      cert.lambda_min > 0))

    lin = analysis.linearization_matrix(P, get_builtin("INT").controller)
    hz = analysis.is_hurwitz(lin.A)
    hurwitz_ok = hz.passed and hz.spectral_abscissa < -1e-4
    parts.append((f"integral-law linearization abscissa {hz.spectral_abscissa:.4g}",
                  hurwitz_ok))

    elapsed = time.perf_counter() - t0
    ok = all(p for _, p in parts) and elapsed < 1.0
    failed = [n for n, p in parts if not p]
    detail = (f"gain/Hessian/Hurwitz certificates in {elapsed:.2f}s (< 1s); "
              + ("all sub-checks pass" if not failed
                 else "failing: " + "; ".join(failed)))
    record_criterion(3, ok, detail)
    assert ok, f"failing sub-checks: {failed}"


def test_criterion_4_energy_monotonicity():
    t0 = time.perf_counter()
    traj = run_builtin("C1")
    m = compute_metrics(traj, QS)
    elapsed = time.perf_counter() - t0
    ok = m.energy_violations == 0 and elapsed < 5.0
    record_criterion(4, ok,
                     f"ideal-actuator C1 shaped energy: {m.energy_violations} "
                     f"upticks > 1e-9 over 30s at dt=1e-3, {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_5_convergence_at_30s():
    t0 = time.perf_counter()
    errs = {}
    for name in ("C1", "INT"):
        traj = run_builtin(name)
        errs[name] = float(np.max(np.abs(traj.final_state[0:2] - QS)))
    elapsed = time.perf_counter() - t0
    ok = all(e < 1e-3 for e in errs.values()) and elapsed < 10.0
    record_criterion(5, ok,
                     f"|q_l - q_star|_inf at t=30s: C1 {errs['C1']:.4g}, "
                     f"INT {errs['INT']:.4g} (bar 1e-3); the slow motor-damping mode "
                     f"settles near 162s / 109s, so the 30s bar is unattainable "
                     f"with these gains; {elapsed:.2f}s (< 10s)")
    assert ok, f"errors at 30s: {errs}"


def test_criterion_6_saturation_bounds(c1_traj, c2_traj, c3_ideal_traj,
                                       c3_deadzone_traj, int_traj, pi_traj,
                                       openloop_traj):
    worst = {}
    for name, traj in (("C1", c1_traj), ("C2", c2_traj), ("C3", c3_ideal_traj),
                       ("C3+deadzone", c3_deadzone_traj), ("INT", int_traj),
                       ("PI", pi_traj), ("OPENLOOP", openloop_traj)):
        worst[name] = float(np.max(np.abs(traj.commands))) if traj.commands.size else 0.0
    within = all(v <= 1.2 for v in worst.values())

    # deep-saturation stress: start the saturated laws six orders of
    # magnitude out and check the commands still honour the analytic budget
    stress_ok = True
    for name in ("C1", "INT"):
        s = get_builtin(name)
        x0 = np.zeros(len(s.x0))
        x0[0:4] = 1e6
        traj = simulate(s.plant, s.controller, s.actuator, x0, SimConfig(t_final=1.0))
        bound = saturation_bound(s.controller)
        stress_ok &= bool(np.all(np.isfinite(traj.states))
                          and np.all(np.abs(traj.commands) <= bound))
    ok = within and stress_ok
    peak = max(worst.values())
    record_criterion(6, ok,
                     f"every pre-actuator sample across all built-ins within 1.2 "
                     f"(peak {peak:.6g}); x1e6 stress runs stay bounded: {stress_ok}")
    assert ok, (worst, stress_ok)


def test_criterion_7_deadzone_phenomenon(c3_ideal_traj, c3_deadzone_traj):
    ideal = compute_metrics(c3_ideal_traj, QS)
    dz = compute_metrics(c3_deadzone_traj, QS)
    err_ideal = float(np.max(ideal.steady_state_error))
    err_dz = float(np.max(dz.steady_state_error))
    ok = err_dz > 0.01 and err_ideal < 1e-3
    record_criterion(7, ok,
                     f"pure motor shaping under deadzone(0.12) stalls at "
                     f"{err_dz:.4g} rad (> 0.01) vs {err_ideal:.3g} rad ideal (< 1e-3)")
    assert ok


def test_criterion_8_linearization_cross_check():
    g = get_builtin("INT").controller
    assert isinstance(g, IntGains)
    lin = analysis.linearization_matrix(P, g)
    xi_star = analysis.int_equilibrium(g)
    from flexsat.simulation import closed_loop_field
    h = 1e-6
    n = 14
    J = np.empty((n, n))
    for j in range(n):
        up = xi_star.copy(); up[j] += h
        dn = xi_star.copy(); dn[j] -= h
        J[:, j] = (closed_loop_field(P, g, up) - closed_loop_field(P, g, dn)) / (2 * h)
    worst = float(np.max(np.abs(J - lin.A)))
    ok = worst < 1e-5
    record_criterion(8, ok,
                     f"assembled linearization vs finite-difference Jacobian at the "
                     f"equilibrium: worst entry diff {worst:.2e} (< 1e-5)")
    assert ok


def test_criterion_9_determinism_and_round_trip():
    a = run_builtin("C1")
    b = run_builtin("C1")
    identical = (np.array_equal(a.states, b.states)
                 and np.array_equal(a.inputs, b.inputs)
                 and np.array_equal(a.energy, b.energy)
                 and np.array_equal(a.shaped_energy, b.shaped_energy))

    lossless = True
    for name in builtin_names():
        s = get_builtin(name)
        m = scenario_to_model(s)
        import yaml
        reparsed = ScenarioModel.model_validate(yaml.safe_load(scenario_to_yaml(s)))
        lossless &= reparsed == m
        back = scenario_from_model(reparsed)
        lossless &= bool(np.array_equal(back.x0, s.x0)) and back.sim == s.sim
    ok = identical and lossless
    record_criterion(9, ok,
                     f"repeated C1 runs bit-identical: {identical}; scenario "
                     f"configs round-trip losslessly through YAML: {lossless}")
    assert ok
