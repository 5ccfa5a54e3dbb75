"""Port-Hamiltonian model of a two-joint planar robot with flexible joints.

Each joint couples a motor to its link through a torsional spring, so the
configuration is q = (q_l, q_m) in R^4 with conjugate momenta p = (p_l, p_m).
The total energy is

    H(q, p) = 1/2 p^T M(q_l2)^-1 p + 1/2 (q_l - q_m)^T K_s (q_l - q_m)

and the open loop reads qdot = grad_p H, pdot = -grad_q H - R2 grad_p H + B u,
with B routing the two motor torques into the p_m rows only.

All angles are plain unwrapped reals; no mod-2pi normalization is applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PlantParams",
    "PlantState",
    "link_mass_matrix",
    "link_mass_matrix_inverse",
    "mass_matrix",
    "mass_matrix_inverse",
    "mass_matrix_derivative",
    "hamiltonian",
    "grad_hamiltonian",
    "open_loop_dynamics",
    "equilibrium_state",
]

_PARAM_FIELDS = (
    "a1", "a2", "b", "Im1", "Im2",
    "Dl1", "Dl2", "Dm1", "Dm2", "ks1", "ks2", "u_max",
)


@dataclass(frozen=True)
class PlantParams:
    """Physical constants (SI units).

    a1, a2, b parameterize the configuration-dependent link inertia matrix,
    Im* are the motor inertias, D* viscous damping, ks* the joint spring
    stiffnesses, and u_max the per-channel actuator limit.  Defaults are the
    identified values used by every built-in scenario.
    """

    a1: float = 0.148
    a2: float = 0.073
    b: float = 0.086
    Im1: float = 0.217
    Im2: float = 0.007
    Dl1: float = 0.038
    Dl2: float = 0.03
    Dm1: float = 8.435
    Dm2: float = 0.136
    ks1: float = 9.0
    ks2: float = 4.0
    u_max: float = 1.2

    def __post_init__(self):
        for name in _PARAM_FIELDS:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"plant parameter {name} must be positive and finite, got {v!r}")
        # keeps M_l(q_l2) positive definite for every angle
        if self.a1 * self.a2 - self.b**2 <= 0:
            raise ValueError("plant parameters must satisfy a1*a2 - b^2 > 0")

    @property
    def D_l(self) -> np.ndarray:
        return np.diag([self.Dl1, self.Dl2])

    @property
    def D_m(self) -> np.ndarray:
        return np.diag([self.Dm1, self.Dm2])

    @property
    def M_m(self) -> np.ndarray:
        return np.diag([self.Im1, self.Im2])

    @property
    def K_s(self) -> np.ndarray:
        return np.diag([self.ks1, self.ks2])

    @property
    def R2(self) -> np.ndarray:
        """Damping matrix acting on all four momenta."""
        return np.diag([self.Dl1, self.Dl2, self.Dm1, self.Dm2])


def _vec2(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"{name} must have shape (2,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite, got {v}")
    return v


@dataclass(frozen=True, eq=False)
class PlantState:
    """Link/motor angles and momenta; entries must be finite."""

    q_l: np.ndarray
    q_m: np.ndarray
    p_l: np.ndarray
    p_m: np.ndarray

    def __post_init__(self):
        for name in ("q_l", "q_m", "p_l", "p_m"):
            object.__setattr__(self, name, _vec2(getattr(self, name), name))

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([self.q_l, self.q_m])

    @property
    def p(self) -> np.ndarray:
        return np.concatenate([self.p_l, self.p_m])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q_l, self.q_m, self.p_l, self.p_m])

    @classmethod
    def from_vector(cls, x) -> "PlantState":
        x = np.asarray(x, dtype=float)
        if x.shape != (8,):
            raise ValueError(f"plant state vector must have shape (8,), got {x.shape}")
        return cls(x[0:2], x[2:4], x[4:6], x[6:8])

    @classmethod
    def zeros(cls) -> "PlantState":
        z = np.zeros(2)
        return cls(z, z, z, z)


def equilibrium_state(q: np.ndarray) -> PlantState:
    """Open-loop equilibrium: both angle pairs equal (relaxed springs), zero momenta."""
    q = _vec2(q, "q")
    return PlantState(q.copy(), q.copy(), np.zeros(2), np.zeros(2))


def link_mass_matrix(params: PlantParams, q_l2: float) -> np.ndarray:
    c = math.cos(q_l2)
    m12 = params.a2 + params.b * c
    return np.array([
        [params.a1 + params.a2 + 2.0 * params.b * c, m12],
        [m12, params.a2],
    ])


def link_mass_matrix_inverse(params: PlantParams, q_l2: float) -> np.ndarray:
    # closed-form 2x2 inverse; det = a1*a2 - b^2 cos^2 is bounded away from 0
    c = math.cos(q_l2)
    det = params.a1 * params.a2 - (params.b * c) ** 2
    m12 = params.a2 + params.b * c
    return np.array([
        [params.a2 / det, -m12 / det],
        [-m12 / det, (params.a1 + params.a2 + 2.0 * params.b * c) / det],
    ])


def mass_matrix(params: PlantParams, q_l2: float) -> np.ndarray:
    M = np.zeros((4, 4))
    M[0:2, 0:2] = link_mass_matrix(params, q_l2)
    M[2, 2] = params.Im1
    M[3, 3] = params.Im2
    return M


def mass_matrix_inverse(params: PlantParams, q_l2: float) -> np.ndarray:
    Minv = np.zeros((4, 4))
    Minv[0:2, 0:2] = link_mass_matrix_inverse(params, q_l2)
    Minv[2, 2] = 1.0 / params.Im1
    Minv[3, 3] = 1.0 / params.Im2
    return Minv


def mass_matrix_derivative(params: PlantParams, q_l2: float) -> np.ndarray:
    """d M / d q_l2; only the link block depends on the elbow angle."""
    s = math.sin(q_l2)
    dM = np.zeros((4, 4))
    dM[0, 0] = -2.0 * params.b * s
    dM[0, 1] = dM[1, 0] = -params.b * s
    return dM


def hamiltonian(params: PlantParams, x: PlantState) -> float:
    p = x.p
    e = x.q_l - x.q_m
    Minv = mass_matrix_inverse(params, x.q_l[1])
    spring = params.ks1 * e[0] ** 2 + params.ks2 * e[1] ** 2
    return float(0.5 * p @ Minv @ p + 0.5 * spring)


def grad_hamiltonian(params: PlantParams, x: PlantState) -> tuple[np.ndarray, np.ndarray]:
    """Return (grad_q H, grad_p H), each of shape (4,)."""
    Minv = mass_matrix_inverse(params, x.q_l[1])
    dHdp = Minv @ x.p
    e = x.q_l - x.q_m
    f = np.array([params.ks1 * e[0], params.ks2 * e[1]])
    dHdq = np.concatenate([f, -f])
    # kinetic energy depends on q only through M_l(q_l2):
    # dH/dq_l2 += -1/2 p^T M^-1 (dM/dq_l2) M^-1 p
    v_l = dHdp[0:2]
    dMl = mass_matrix_derivative(params, x.q_l[1])[0:2, 0:2]
    dHdq[1] += -0.5 * v_l @ dMl @ v_l
    return dHdq, dHdp


def open_loop_dynamics(params: PlantParams, x: PlantState, u) -> np.ndarray:
    """State derivative (qdot, pdot) of the open loop under motor torque u."""
    u = _vec2(u, "u")
    dHdq, dHdp = grad_hamiltonian(params, x)
    qdot = dHdp
    pdot = -dHdq - params.R2 @ dHdp
    pdot[2:4] += u
    return np.concatenate([qdot, pdot])
