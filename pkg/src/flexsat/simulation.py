"""Deterministic fixed-step simulation of the open and closed loops.

The integrators are classic fourth-order Runge-Kutta and explicit Euler with
a fixed step; identical inputs always produce bit-identical trajectories.
The inner loop runs on plain Python floats (the state has at most 14
entries, where small-array numpy overhead dominates); the public
``closed_loop_field`` is the plain numpy reference implementation and the
test suite pins the two paths against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .controllers import (
    ControllerSpec,
    IntGains,
    IntState,
    PiGains,
    SatGains,
    SatState,
    controller_state_dim,
    int_control,
    int_controller_dynamics,
    pi_control,
    sat_control,
    sat_controller_dynamics,
    validate_gains,
)
from .errors import CertificateError, ConfigError, DivergenceError
from .plant import PlantParams, PlantState, open_loop_dynamics

__all__ = [
    "SimConfig",
    "ActuatorModel",
    "Trajectory",
    "Metrics",
    "rk4_step",
    "euler_step",
    "step",
    "closed_loop_field",
    "simulate",
    "compute_metrics",
    "csv_string",
    "write_csv",
]

_LOG2 = math.log(2.0)
ENERGY_UPTICK_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 30.0
    integrator: str = "rk4"
    record_stride: int = 1

    def __post_init__(self):
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise ValueError("t_final must be finite and at least one step long")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"integrator must be 'rk4' or 'euler', got {self.integrator!r}")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ValueError("record_stride must be an integer >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass(frozen=True)
class ActuatorModel:
    """Imperfection applied to the commanded input before it reaches the plant.

    ``ideal`` passes the command through, ``deadzone`` zeroes any channel
    whose magnitude is at most ``threshold``, ``clamp`` saturates channels
    at +-``u_max``.
    """

    kind: str = "ideal"
    threshold: float = 0.12
    u_max: float = 1.2

    def __post_init__(self):
        if self.kind not in ("ideal", "deadzone", "clamp"):
            raise ValueError(f"actuator kind must be ideal, deadzone, or clamp, got {self.kind!r}")
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise ValueError("deadzone threshold must be >= 0")
        if not (math.isfinite(self.u_max) and self.u_max > 0):
            raise ValueError("clamp u_max must be > 0")

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "deadzone":
            return np.where(np.abs(u) <= self.threshold, 0.0, u)
        if self.kind == "clamp":
            return np.clip(u, -self.u_max, self.u_max)
        return u.copy()

    @classmethod
    def parse(cls, text: str) -> "ActuatorModel":
        """Parse CLI syntax: ``ideal``, ``deadzone[:thr]``, or ``clamp[:limit]``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip()
        try:
            if kind == "ideal":
                if arg:
                    raise ValueError("ideal takes no argument")
                return cls("ideal")
            if kind == "deadzone":
                return cls("deadzone", threshold=float(arg)) if arg else cls("deadzone")
            if kind == "clamp":
                return cls("clamp", u_max=float(arg)) if arg else cls("clamp")
        except ValueError as exc:
            raise ConfigError(f"bad actuator spec {text!r}: {exc}") from None
        raise ConfigError(f"unknown actuator {text!r} (expected ideal, deadzone[:thr], clamp[:limit])")


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled record of a run.

    ``states`` rows are (q_l, q_m, p_l, p_m, controller state...).
    ``inputs`` is the input applied to the plant (after the actuator model);
    ``commands`` is the controller output before it.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    commands: np.ndarray
    energy: np.ndarray
    shaped_energy: np.ndarray
    controller_dim: int

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def q_l(self) -> np.ndarray:
        return self.states[:, 0:2]


@dataclass(frozen=True)
class Metrics:
    """steady_state_error averages |q_l - q_star| over the final 10% of the
    horizon; settle_time is the first time after which the error norm stays
    below the tolerance (inf when it never does); energy_violations counts
    recorded steps where the shaped energy rose by more than 1e-9."""

    steady_state_error: np.ndarray
    max_abs_u: np.ndarray
    settle_time: float
    energy_violations: int


# ---------------------------------------------------------------------------
# integrator steps (generic, numpy-based)
# ---------------------------------------------------------------------------

def rk4_step(field, x, dt: float) -> np.ndarray:
    """One classic Runge-Kutta step of an autonomous field."""
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(field(x), dtype=float)
    k2 = np.asarray(field(x + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(field(x + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(field(x + dt * k3), dtype=float)
    out = x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(None)
    return out


def euler_step(field, x, dt: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = x + dt * np.asarray(field(x), dtype=float)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(None)
    return out


def step(field, x, dt: float, method: str = "rk4") -> np.ndarray:
    if method == "rk4":
        return rk4_step(field, x, dt)
    if method == "euler":
        return euler_step(field, x, dt)
    raise ValueError(f"unknown integrator {method!r}")


# ---------------------------------------------------------------------------
# reference closed-loop field (numpy path)
# ---------------------------------------------------------------------------

def _split_state(spec: ControllerSpec | None, x: np.ndarray):
    dim = controller_state_dim(spec)
    if x.shape != (8 + dim,):
        raise ValueError(f"closed-loop state must have shape ({8 + dim},), got {x.shape}")
    ps = PlantState.from_vector(x[:8])
    if isinstance(spec, SatGains):
        return ps, SatState(x[8:10], x[10:12])
    if isinstance(spec, IntGains):
        return ps, IntState(SatState(x[8:10], x[10:12]), x[12:14])
    return ps, None


def closed_loop_field(params: PlantParams, spec: ControllerSpec | None, x,
                      actuator: ActuatorModel | None = None) -> np.ndarray:
    """Reference state derivative of plant plus controller (direct substitution).

    ``spec`` may be None for the unforced open loop.  The actuator model, if
    given, is applied to the command before it reaches the plant.
    """
    x = np.asarray(x, dtype=float)
    ps, cs = _split_state(spec, x)
    if spec is None:
        u = np.zeros(2)
        tail = ()
    elif isinstance(spec, PiGains):
        u = pi_control(params, spec, ps)
        tail = ()
    elif isinstance(spec, SatGains):
        u = sat_control(spec, ps.q, cs)
        tail = sat_controller_dynamics(spec, ps.q, cs)
    elif isinstance(spec, IntGains):
        u = int_control(spec, ps.q, cs)
        tail = int_controller_dynamics(spec, ps.q, cs)
    else:
        raise TypeError(f"unknown controller spec {type(spec).__name__}")
    if actuator is not None:
        u = actuator.apply(u)
    return np.concatenate([open_loop_dynamics(params, ps, u), *tail])


# ---------------------------------------------------------------------------
# scalar kernels (hot path)
# ---------------------------------------------------------------------------

def _lncosh(x: float) -> float:
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - _LOG2


def _m2(entry) -> tuple[float, float, float, float]:
    A = np.asarray(entry, dtype=float)
    return float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1])


def _build_kernel(params: PlantParams, spec: ControllerSpec | None, actuator: ActuatorModel):
    """Return (field, probe) closures over flat float sequences.

    ``field(x) -> list`` is the closed-loop derivative; ``probe(x) ->
    (cmd1, cmd2, u1, u2, H, H_shaped)`` evaluates the recorded quantities.
    """
    a1 = params.a1; a2 = params.a2; b = params.b
    im1 = params.Im1; im2 = params.Im2
    dl1 = params.Dl1; dl2 = params.Dl2; dm1 = params.Dm1; dm2 = params.Dm2
    ks1 = params.ks1; ks2 = params.ks2
    a1a2 = a1 * a2; b2 = b * b
    cos = math.cos; sin = math.sin; tanh = math.tanh

    akind = ("ideal", "deadzone", "clamp").index(actuator.kind)
    thr = actuator.threshold; umax = actuator.u_max

    def plant_core(ql2, pl1, pl2, pm1, pm2):
        c = cos(ql2)
        det = a1a2 - b2 * c * c
        m12 = a2 + b * c
        i11 = a2 / det; i12 = -m12 / det; i22 = (a1 + a2 + 2.0 * b * c) / det
        vl1 = i11 * pl1 + i12 * pl2
        vl2 = i12 * pl1 + i22 * pl2
        return vl1, vl2, pm1 / im1, pm2 / im2, sin(ql2)

    def act(u1, u2):
        if akind == 1:
            if -thr <= u1 <= thr:
                u1 = 0.0
            if -thr <= u2 <= thr:
                u2 = 0.0
        elif akind == 2:
            u1 = umax if u1 > umax else (-umax if u1 < -umax else u1)
            u2 = umax if u2 > umax else (-umax if u2 < -umax else u2)
        return u1, u2

    if spec is None or isinstance(spec, PiGains):
        if spec is None:
            def command(ql1, ql2, qm1, qm2, vl1, vl2, vm1, vm2):
                return 0.0, 0.0

            def extra_energy(x):
                return 0.0
        else:
            kpm11, kpm12, kpm21, kpm22 = _m2(spec.K_Pm)
            kpl11, kpl12, kpl21, kpl22 = _m2(spec.K_Pl)
            ki11, ki12, ki21, ki22 = _m2(spec.K_I)
            qs1, qs2 = float(spec.q_star[0]), float(spec.q_star[1])

            def command(ql1, ql2, qm1, qm2, vl1, vl2, vm1, vm2):
                em1 = qm1 - qs1; em2 = qm2 - qs2
                u1 = -(kpm11 * vm1 + kpm12 * vm2) - (ki11 * em1 + ki12 * em2) - (kpl11 * vl1 + kpl12 * vl2)
                u2 = -(kpm21 * vm1 + kpm22 * vm2) - (ki21 * em1 + ki22 * em2) - (kpl21 * vl1 + kpl22 * vl2)
                return u1, u2

            def extra_energy(x):
                em1 = x[2] - qs1; em2 = x[3] - qs2
                return 0.5 * (ki11 * em1 * em1 + (ki12 + ki21) * em1 * em2 + ki22 * em2 * em2)

        def field(x):
            ql1, ql2, qm1, qm2, pl1, pl2, pm1, pm2 = x
            vl1, vl2, vm1, vm2, s = plant_core(ql2, pl1, pl2, pm1, pm2)
            f1 = ks1 * (ql1 - qm1); f2 = ks2 * (ql2 - qm2)
            u1, u2 = act(*command(ql1, ql2, qm1, qm2, vl1, vl2, vm1, vm2))
            return [
                vl1, vl2, vm1, vm2,
                -f1 - dl1 * vl1,
                -f2 - b * s * vl1 * (vl1 + vl2) - dl2 * vl2,
                f1 - dm1 * vm1 + u1,
                f2 - dm2 * vm2 + u2,
            ]

        def probe(x):
            ql1, ql2, qm1, qm2, pl1, pl2, pm1, pm2 = x
            vl1, vl2, vm1, vm2, _ = plant_core(ql2, pl1, pl2, pm1, pm2)
            e1 = ql1 - qm1; e2 = ql2 - qm2
            H = 0.5 * (pl1 * vl1 + pl2 * vl2 + pm1 * vm1 + pm2 * vm2) \
                + 0.5 * (ks1 * e1 * e1 + ks2 * e2 * e2)
            c1, c2 = command(ql1, ql2, qm1, qm2, vl1, vl2, vm1, vm2)
            u1, u2 = act(c1, c2)
            return c1, c2, u1, u2, H, H + extra_energy(x)

        return field, probe

    if isinstance(spec, (SatGains, IntGains)):
        sg = spec.sat if isinstance(spec, IntGains) else spec
        al1, al2 = map(float, sg.alpha_l); bl1, bl2 = map(float, sg.beta_l)
        am1, am2 = map(float, sg.alpha_m); bm1, bm2 = map(float, sg.beta_m)
        rcl11, rcl12, rcl21, rcl22 = _m2(sg.R_cl)
        rcm11, rcm12, rcm21, rcm22 = _m2(sg.R_cm)
        kc11, kc12, kc21, kc22 = _m2(sg.K_c)
        qs1, qs2 = float(sg.q_star[0]), float(sg.q_star[1])
        with_sigma = isinstance(spec, IntGains)
        if with_sigma:
            as1, as2 = map(float, spec.alpha_sigma)
            bs1, bs2 = map(float, spec.beta_sigma)
            ksg1 = float(spec.K_sigma[0, 0]); ksg2 = float(spec.K_sigma[1, 1])

        def shaping(x):
            ql1, ql2, qm1, qm2 = x[0], x[1], x[2], x[3]
            xl1, xl2, xm1, xm2 = x[8], x[9], x[10], x[11]
            gl1 = al1 * tanh(bl1 * (ql1 - qs1 + xl1))
            gl2 = al2 * tanh(bl2 * (ql2 - qs2 + xl2))
            gm1 = am1 * tanh(bm1 * (qm1 - qs1 + xm1))
            gm2 = am2 * tanh(bm2 * (qm2 - qs2 + xm2))
            return gl1, gl2, gm1, gm2

        def field(x):
            ql1, ql2, qm1, qm2, pl1, pl2, pm1, pm2 = x[0:8]
            xl1, xl2, xm1, xm2 = x[8], x[9], x[10], x[11]
            vl1, vl2, vm1, vm2, s = plant_core(ql2, pl1, pl2, pm1, pm2)
            f1 = ks1 * (ql1 - qm1); f2 = ks2 * (ql2 - qm2)
            gl1, gl2, gm1, gm2 = shaping(x)
            u1 = -(gl1 + gm1); u2 = -(gl2 + gm2)
            if with_sigma:
                sg1, sg2 = x[12], x[13]
                u1 -= as1 * tanh(bs1 * sg1)
                u2 -= as2 * tanh(bs2 * sg2)
            u1, u2 = act(u1, u2)
            w1 = gm1 + kc11 * xm1 + kc12 * xm2
            w2 = gm2 + kc21 * xm1 + kc22 * xm2
            out = [
                vl1, vl2, vm1, vm2,
                -f1 - dl1 * vl1,
                -f2 - b * s * vl1 * (vl1 + vl2) - dl2 * vl2,
                f1 - dm1 * vm1 + u1,
                f2 - dm2 * vm2 + u2,
                -(rcl11 * gl1 + rcl12 * gl2),
                -(rcl21 * gl1 + rcl22 * gl2),
                -(rcm11 * w1 + rcm12 * w2),
                -(rcm21 * w1 + rcm22 * w2),
            ]
            if with_sigma:
                # d sigma = hess Phi_sigma(sigma) (q_m - q_star) - K_sigma sigma
                e1s = math.exp(-2.0 * abs(bs1 * sg1)); h1 = as1 * bs1 * 4.0 * e1s / ((1.0 + e1s) ** 2)
                e2s = math.exp(-2.0 * abs(bs2 * sg2)); h2 = as2 * bs2 * 4.0 * e2s / ((1.0 + e2s) ** 2)
                out.append(h1 * (qm1 - qs1) - ksg1 * sg1)
                out.append(h2 * (qm2 - qs2) - ksg2 * sg2)
            return out

        def probe(x):
            ql1, ql2, qm1, qm2, pl1, pl2, pm1, pm2 = x[0:8]
            xl1, xl2, xm1, xm2 = x[8], x[9], x[10], x[11]
            vl1, vl2, vm1, vm2, _ = plant_core(ql2, pl1, pl2, pm1, pm2)
            e1 = ql1 - qm1; e2 = ql2 - qm2
            H = 0.5 * (pl1 * vl1 + pl2 * vl2 + pm1 * vm1 + pm2 * vm2) \
                + 0.5 * (ks1 * e1 * e1 + ks2 * e2 * e2)
            gl1, gl2, gm1, gm2 = shaping(x)
            c1 = -(gl1 + gm1); c2 = -(gl2 + gm2)
            Hs = H \
                + (al1 / bl1) * _lncosh(bl1 * (ql1 - qs1 + xl1)) \
                + (al2 / bl2) * _lncosh(bl2 * (ql2 - qs2 + xl2)) \
                + (am1 / bm1) * _lncosh(bm1 * (qm1 - qs1 + xm1)) \
                + (am2 / bm2) * _lncosh(bm2 * (qm2 - qs2 + xm2)) \
                + 0.5 * (kc11 * xm1 * xm1 + (kc12 + kc21) * xm1 * xm2 + kc22 * xm2 * xm2)
            if with_sigma:
                sg1, sg2 = x[12], x[13]
                c1 -= as1 * tanh(bs1 * sg1)
                c2 -= as2 * tanh(bs2 * sg2)
                Hs += (as1 / bs1) * _lncosh(bs1 * sg1) + (as2 / bs2) * _lncosh(bs2 * sg2)
            u1, u2 = act(c1, c2)
            return c1, c2, u1, u2, H, Hs

        return field, probe

    raise TypeError(f"unknown controller spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# simulation driver
# ---------------------------------------------------------------------------

def simulate(params: PlantParams, spec: ControllerSpec | None, actuator: ActuatorModel,
             x0, cfg: SimConfig, override_certificates: bool = False) -> Trajectory:
    """Integrate the closed (or open) loop and record a Trajectory.

    Refuses to run when the controller's gain certificate fails, unless
    ``override_certificates`` is set.  Raises DivergenceError (carrying the
    partial trajectory) if the state stops being finite.
    """
    dim = controller_state_dim(spec)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (8 + dim,):
        raise ValueError(f"x0 must have shape ({8 + dim},) for this controller, got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    if spec is not None:
        cert = validate_gains(params, spec)
        if not cert.passed and not override_certificates:
            raise CertificateError(cert)

    field, probe = _build_kernel(params, spec, actuator)
    n = 8 + dim
    dt = cfg.dt
    stride = cfg.record_stride
    n_steps = cfg.n_steps
    n_rec = n_steps // stride + 1

    times = np.arange(n_rec) * (dt * stride)
    states = np.empty((n_rec, n))
    inputs = np.empty((n_rec, 2))
    commands = np.empty((n_rec, 2))
    energy = np.empty(n_rec)
    shaped = np.empty(n_rec)

    isfinite = math.isfinite
    x = [float(v) for v in x0]

    def partial(count: int) -> Trajectory:
        return Trajectory(times[:count].copy(), states[:count].copy(),
                          inputs[:count].copy(), commands[:count].copy(),
                          energy[:count].copy(), shaped[:count].copy(), dim)

    def record(row: int, t: float):
        if not all(isfinite(v) for v in x):
            raise DivergenceError(t, partial(row))
        c1, c2, u1, u2, H, Hs = probe(x)
        states[row] = x
        commands[row, 0] = c1; commands[row, 1] = c2
        inputs[row, 0] = u1; inputs[row, 1] = u2
        energy[row] = H
        shaped[row] = Hs

    record(0, 0.0)
    row = 1
    half = dt * 0.5
    sixth = dt / 6.0
    rk4 = cfg.integrator == "rk4"
    try:
        for k in range(1, n_steps + 1):
            if rk4:
                k1 = field(x)
                k2 = field([xi + half * ki for xi, ki in zip(x, k1)])
                k3 = field([xi + half * ki for xi, ki in zip(x, k2)])
                k4 = field([xi + dt * ki for xi, ki in zip(x, k3)])
                x = [xi + sixth * (a + 2.0 * (b_ + c) + d)
                     for xi, a, b_, c, d in zip(x, k1, k2, k3, k4)]
            else:
                k1 = field(x)
                x = [xi + dt * ki for xi, ki in zip(x, k1)]
            if k % stride == 0:
                record(row, k * dt)
                row += 1
    except (ValueError, OverflowError):
        # math domain/overflow on a non-finite state counts as divergence
        raise DivergenceError(k * dt, partial(row)) from None

    return partial(row)


# ---------------------------------------------------------------------------
# metrics and export
# ---------------------------------------------------------------------------

def compute_metrics(traj: Trajectory, q_star, settle_tol: float = 0.01) -> Metrics:
    if len(traj.times) == 0:
        raise ValueError("trajectory is empty")
    q_star = np.asarray(q_star, dtype=float)
    err = np.abs(traj.states[:, 0:2] - q_star)
    tail = max(1, math.ceil(0.1 * len(traj.times)))
    sse = err[-tail:].mean(axis=0)
    max_u = np.max(np.abs(traj.inputs), axis=0) if len(traj.inputs) else np.zeros(2)

    within = np.max(err, axis=1) < settle_tol
    if not within[-1]:
        settle = math.inf
    else:
        bad = np.flatnonzero(~within)
        settle = float(traj.times[0]) if bad.size == 0 else float(traj.times[bad[-1] + 1])

    violations = int(np.sum(np.diff(traj.shaped_energy) > ENERGY_UPTICK_TOLERANCE))
    return Metrics(sse, max_u, settle, violations)


_CTRL_COLUMNS = {0: [], 4: ["xcl1", "xcl2", "xcm1", "xcm2"],
                 6: ["xcl1", "xcl2", "xcm1", "xcm2", "sig1", "sig2"]}


def csv_header(controller_dim: int) -> str:
    cols = ["t", "ql1", "ql2", "qm1", "qm2", "pl1", "pl2", "pm1", "pm2"]
    cols += _CTRL_COLUMNS[controller_dim]
    cols += ["u1", "u2", "H", "H_shaped"]
    return ",".join(cols)


def csv_string(traj: Trajectory) -> str:
    data = np.column_stack([
        traj.times, traj.states, traj.inputs, traj.energy, traj.shaped_energy,
    ])
    buf = StringIO()
    np.savetxt(buf, data, fmt="%.17g", delimiter=",",
               header=csv_header(traj.controller_dim), comments="")
    return buf.getvalue()


def write_csv(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write(csv_string(traj))
