"""The three control laws and their gain-condition validators.

Variants:

* ``PiGains``   -- velocity feedback with an integral term on the motor
  position error.  Needs momenta, so it is the non-implementable baseline
  when only positions are measured.
* ``SatGains``  -- saturated output feedback built from tanh potentials and
  two virtual controller states (x_cl, x_cm) that inject damping without
  velocity measurements.  Every output channel is bounded a priori.
* ``IntGains``  -- the saturated law plus an integral-like channel sigma
  driven by the motor position error.

All gain matrices are required symmetric; asymmetric input is rejected
rather than silently symmetrized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams, PlantState, mass_matrix_inverse

__all__ = [
    "PD_THRESHOLD",
    "GainCertificate",
    "PiGains",
    "SatGains",
    "SatState",
    "IntGains",
    "IntState",
    "ControllerSpec",
    "controller_state_dim",
    "validate_pi_gains",
    "validate_sat_gains",
    "validate_int_gains",
    "validate_gains",
    "sat_condition_block",
    "sat_potential",
    "sat_potential_grad",
    "sat_potential_hess",
    "pi_control",
    "sat_control",
    "sat_controller_dynamics",
    "int_control",
    "int_controller_dynamics",
    "saturation_bound",
]

# positive-definiteness certificates pass when lambda_min exceeds this
PD_THRESHOLD = 1e-10


def _as_matrix2(x, name: str) -> np.ndarray:
    """Normalize a scalar, a diagonal pair, or a full 2x2 into a 2x2 array."""
    a = np.asarray(x, dtype=float)
    if a.shape == ():
        a = float(a) * np.eye(2)
    elif a.shape == (2,):
        a = np.diag(a)
    elif a.shape != (2, 2):
        raise ValueError(f"{name} must be a scalar, a length-2 diagonal, or a 2x2 matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def _as_vec2(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"{name} must have shape (2,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


def _require_symmetric(A: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(A))))
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError(f"{name} must be symmetric (asymmetric gains are rejected, not symmetrized)")


def _lambda_min(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[0])


@dataclass(frozen=True)
class GainCertificate:
    """Outcome of a gain-condition check.

    ``margin`` is the smallest eigenvalue over all sub-checks; ``checks``
    holds (name, passed, smallest eigenvalue) per condition.  ``warnings``
    carries non-fatal advisories such as the actuator budget check.
    """

    passed: bool
    margin: float
    checks: tuple[tuple[str, bool, float], ...]
    warnings: tuple[str, ...] = ()

    def failing(self) -> tuple[str, ...]:
        return tuple(name for name, ok, _ in self.checks if not ok)


def _certificate(named_matrices, warnings=()) -> GainCertificate:
    checks = []
    for name, matrix in named_matrices:
        lam = _lambda_min(matrix)
        checks.append((name, lam > PD_THRESHOLD, lam))
    margin = min(lam for _, _, lam in checks)
    return GainCertificate(
        passed=all(ok for _, ok, _ in checks),
        margin=margin,
        checks=tuple(checks),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# saturation potentials
# ---------------------------------------------------------------------------

def _log_cosh(x: np.ndarray) -> np.ndarray:
    # overflow-safe: log cosh x = |x| + log1p(exp(-2|x|)) - log 2
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def _sech2(x: np.ndarray) -> np.ndarray:
    # overflow-safe: sech^2 x = 4 e^{-2|x|} / (1 + e^{-2|x|})^2
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def sat_potential(alpha, beta, z) -> np.ndarray:
    """Bounded-slope potential sum_i (alpha_i/beta_i) log cosh(beta_i z_i)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    z = np.asarray(z, dtype=float)
    return np.sum((alpha / beta) * _log_cosh(beta * z), axis=-1)


def sat_potential_grad(alpha, beta, z) -> np.ndarray:
    """Gradient alpha_i tanh(beta_i z_i); each component lies in (-alpha_i, alpha_i)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return alpha * np.tanh(beta * np.asarray(z, dtype=float))


def sat_potential_hess(alpha, beta, z) -> np.ndarray:
    """Diagonal entries alpha_i beta_i sech^2(beta_i z_i) of the potential Hessian."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return alpha * beta * _sech2(beta * np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# gain containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PiGains:
    """Velocity-feedback law u = -K_Pm qdot_m - K_I (q_m - q_star) - K_Pl qdot_l."""

    K_Pm: np.ndarray
    K_Pl: np.ndarray
    K_I: np.ndarray
    q_star: np.ndarray

    state_dim = 0

    def __post_init__(self):
        for name in ("K_Pm", "K_Pl", "K_I"):
            object.__setattr__(self, name, _as_matrix2(getattr(self, name), name))
        object.__setattr__(self, "q_star", _as_vec2(self.q_star, "q_star"))


@dataclass(frozen=True, eq=False)
class SatGains:
    """Saturated output-feedback law with virtual damping states.

    alpha weights may be zero (a channel's shaping term can be switched
    off); beta slopes must be strictly positive.
    """

    alpha_l: np.ndarray
    beta_l: np.ndarray
    alpha_m: np.ndarray
    beta_m: np.ndarray
    R_cl: np.ndarray
    R_cm: np.ndarray
    K_c: np.ndarray
    q_star: np.ndarray

    state_dim = 4

    def __post_init__(self):
        for name in ("alpha_l", "alpha_m"):
            v = _as_vec2(getattr(self, name), name)
            if np.any(v < 0):
                raise ValueError(f"{name} entries must be >= 0")
            object.__setattr__(self, name, v)
        for name in ("beta_l", "beta_m"):
            v = _as_vec2(getattr(self, name), name)
            if np.any(v <= 0):
                raise ValueError(f"{name} entries must be > 0")
            object.__setattr__(self, name, v)
        for name in ("R_cl", "R_cm", "K_c"):
            object.__setattr__(self, name, _as_matrix2(getattr(self, name), name))
        object.__setattr__(self, "q_star", _as_vec2(self.q_star, "q_star"))


@dataclass(frozen=True, eq=False)
class SatState:
    """Virtual controller states; broadcasting over leading axes is allowed."""

    x_cl: np.ndarray
    x_cm: np.ndarray

    def __post_init__(self):
        for name in ("x_cl", "x_cm"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape[-1:] != (2,):
                raise ValueError(f"{name} must have trailing dimension 2")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls) -> "SatState":
        return cls(np.zeros(2), np.zeros(2))


@dataclass(frozen=True, eq=False)
class IntGains:
    """Saturated law plus a bounded integral-like channel sigma."""

    sat: SatGains
    alpha_sigma: np.ndarray
    beta_sigma: np.ndarray
    K_sigma: np.ndarray

    state_dim = 6

    def __post_init__(self):
        if not isinstance(self.sat, SatGains):
            raise ValueError("IntGains.sat must be a SatGains instance")
        v = _as_vec2(self.alpha_sigma, "alpha_sigma")
        if np.any(v < 0):
            raise ValueError("alpha_sigma entries must be >= 0")
        object.__setattr__(self, "alpha_sigma", v)
        v = _as_vec2(self.beta_sigma, "beta_sigma")
        if np.any(v <= 0):
            raise ValueError("beta_sigma entries must be > 0")
        object.__setattr__(self, "beta_sigma", v)
        K = _as_matrix2(self.K_sigma, "K_sigma")
        if K[0, 1] != 0.0 or K[1, 0] != 0.0:
            raise ValueError("K_sigma must be diagonal")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise ValueError("K_sigma diagonal entries must be > 0")
        object.__setattr__(self, "K_sigma", K)

    @property
    def q_star(self) -> np.ndarray:
        return self.sat.q_star


@dataclass(frozen=True, eq=False)
class IntState:
    sat: SatState
    sigma: np.ndarray

    def __post_init__(self):
        if not isinstance(self.sat, SatState):
            raise ValueError("IntState.sat must be a SatState instance")
        v = np.asarray(self.sigma, dtype=float)
        if v.shape[-1:] != (2,):
            raise ValueError("sigma must have trailing dimension 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("sigma must be finite")
        object.__setattr__(self, "sigma", v)

    @classmethod
    def zeros(cls) -> "IntState":
        return cls(SatState.zeros(), np.zeros(2))


ControllerSpec = PiGains | SatGains | IntGains


def controller_state_dim(spec: ControllerSpec | None) -> int:
    """Dimension of the internal controller state (0, 4, or 6; 0 for open loop)."""
    if spec is None:
        return 0
    if isinstance(spec, (PiGains, SatGains, IntGains)):
        return spec.state_dim
    raise TypeError(f"unknown controller spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# gain-condition validators
# ---------------------------------------------------------------------------

def validate_pi_gains(params: PlantParams, g: PiGains) -> GainCertificate:
    """Check K_Pm > 0, K_I > 0, and the damping condition
    D_m + K_Pm - 1/4 K_Pl^T D_l^-1 K_Pl > 0."""
    for name in ("K_Pm", "K_Pl", "K_I"):
        _require_symmetric(getattr(g, name), name)
    Dl_inv = np.diag([1.0 / params.Dl1, 1.0 / params.Dl2])
    damping = params.D_m + g.K_Pm - 0.25 * g.K_Pl.T @ Dl_inv @ g.K_Pl
    return _certificate([
        ("K_Pm positive definite", g.K_Pm),
        ("K_I positive definite", g.K_I),
        ("motor damping dominates link velocity feedback", damping),
    ])


def sat_condition_block(params: PlantParams, g: SatGains) -> np.ndarray:
    """Margin block R_cl - 1/4 (D_l^-1 + D_m^-1) of the damping condition."""
    Dl_inv = np.diag([1.0 / params.Dl1, 1.0 / params.Dl2])
    Dm_inv = np.diag([1.0 / params.Dm1, 1.0 / params.Dm2])
    return g.R_cl - 0.25 * (Dl_inv + Dm_inv)


def _budget_warnings(params: PlantParams, bound: np.ndarray, strict: bool) -> list[str]:
    msgs = []
    for i in range(2):
        if bound[i] > params.u_max + 1e-12:
            msg = (f"channel {i + 1} saturation bound {bound[i]:.6g} exceeds the "
                   f"actuator limit u_max = {params.u_max:.6g}")
            if strict:
                raise ValueError(msg)
            msgs.append(msg)
    return msgs


def validate_sat_gains(params: PlantParams, g: SatGains, strict_bound: bool = False) -> GainCertificate:
    """Check R_cl, R_cm, K_c > 0 and the damping condition
    R_cl - 1/4 (D_l^-1 + D_m^-1) > 0.

    The per-channel saturation budget against u_max is a warning by default
    and an error when ``strict_bound`` is set.
    """
    for name in ("R_cl", "R_cm", "K_c"):
        _require_symmetric(getattr(g, name), name)
    warnings = _budget_warnings(params, g.alpha_l + g.alpha_m, strict_bound)
    return _certificate([
        ("R_cl positive definite", g.R_cl),
        ("R_cm positive definite", g.R_cm),
        ("K_c positive definite", g.K_c),
        ("link damping condition", sat_condition_block(params, g)),
    ], warnings)


def validate_int_gains(params: PlantParams, g: IntGains, strict_bound: bool = False) -> GainCertificate:
    """The saturated-law conditions on g.sat, with the budget including alpha_sigma."""
    for name in ("R_cl", "R_cm", "K_c"):
        _require_symmetric(getattr(g.sat, name), name)
    warnings = _budget_warnings(params, g.sat.alpha_l + g.sat.alpha_m + g.alpha_sigma, strict_bound)
    return _certificate([
        ("R_cl positive definite", g.sat.R_cl),
        ("R_cm positive definite", g.sat.R_cm),
        ("K_c positive definite", g.sat.K_c),
        ("link damping condition", sat_condition_block(params, g.sat)),
    ], warnings)


def validate_gains(params: PlantParams, spec: ControllerSpec, strict_bound: bool = False) -> GainCertificate:
    if isinstance(spec, PiGains):
        return validate_pi_gains(params, spec)
    if isinstance(spec, SatGains):
        return validate_sat_gains(params, spec, strict_bound)
    if isinstance(spec, IntGains):
        return validate_int_gains(params, spec, strict_bound)
    raise TypeError(f"unknown controller spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# control laws and controller-state dynamics
# ---------------------------------------------------------------------------

def pi_control(params: PlantParams, g: PiGains, x: PlantState) -> np.ndarray:
    """u = -K_Pm qdot_m - K_I (q_m - q_star) - K_Pl qdot_l with qdot = M^-1 p."""
    qdot = mass_matrix_inverse(params, x.q_l[1]) @ x.p
    return -(g.K_Pm @ qdot[2:4]) - (g.K_I @ (x.q_m - g.q_star)) - (g.K_Pl @ qdot[0:2])


def _sat_errors(g: SatGains, q: np.ndarray, cs: SatState) -> tuple[np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    z_l = q[..., 0:2] - g.q_star + cs.x_cl
    z_m = q[..., 2:4] - g.q_star + cs.x_cm
    return z_l, z_m


def sat_control(g: SatGains, q, cs: SatState) -> np.ndarray:
    """Position-only law u = -grad Phi_l(z_l) - grad Phi_m(z_m).

    Accepts batched q of shape (..., 4) with matching controller states.
    """
    z_l, z_m = _sat_errors(g, q, cs)
    return -(sat_potential_grad(g.alpha_l, g.beta_l, z_l)
             + sat_potential_grad(g.alpha_m, g.beta_m, z_m))


def sat_controller_dynamics(g: SatGains, q, cs: SatState) -> tuple[np.ndarray, np.ndarray]:
    """Rates of the virtual states:
    xdot_cl = -R_cl grad Phi_l(z_l), xdot_cm = -R_cm (grad Phi_m(z_m) + K_c x_cm)."""
    z_l, z_m = _sat_errors(g, q, cs)
    g_l = sat_potential_grad(g.alpha_l, g.beta_l, z_l)
    g_m = sat_potential_grad(g.alpha_m, g.beta_m, z_m)
    xdot_cl = -np.einsum("ij,...j->...i", g.R_cl, g_l)
    xdot_cm = -np.einsum("ij,...j->...i", g.R_cm,
                         g_m + np.einsum("ij,...j->...i", g.K_c, cs.x_cm))
    return xdot_cl, xdot_cm


def int_control(g: IntGains, q, cs: IntState) -> np.ndarray:
    """Saturated law plus the bounded integral-like term -grad Phi_sigma(sigma)."""
    return sat_control(g.sat, q, cs.sat) - sat_potential_grad(g.alpha_sigma, g.beta_sigma, cs.sigma)


def int_controller_dynamics(g: IntGains, q, cs: IntState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Virtual-state rates plus
    sigmadot = hess Phi_sigma(sigma) (q_m - q_star) - K_sigma sigma."""
    xdot_cl, xdot_cm = sat_controller_dynamics(g.sat, q, cs.sat)
    q = np.asarray(q, dtype=float)
    hess = sat_potential_hess(g.alpha_sigma, g.beta_sigma, cs.sigma)
    sigmadot = hess * (q[..., 2:4] - g.q_star) - np.einsum("ij,...j->...i", g.K_sigma, cs.sigma)
    return xdot_cl, xdot_cm, sigmadot


def saturation_bound(spec: ControllerSpec) -> np.ndarray:
    """Per-channel analytic bound on |u_i| for the saturated variants."""
    if isinstance(spec, SatGains):
        return spec.alpha_l + spec.alpha_m
    if isinstance(spec, IntGains):
        return spec.sat.alpha_l + spec.sat.alpha_m + spec.alpha_sigma
    if isinstance(spec, PiGains):
        raise ValueError("unbounded control law: the velocity-feedback variant has no a priori bound")
    raise TypeError(f"unknown controller spec {type(spec).__name__}")
