"""Closed-loop structure, shaped energies, and stability certificates.

Everything here works in the fixed state ordering

    (q_l, q_m, p_l, p_m, x_cl, x_cm, sigma)

truncated to the dimensions the loop at hand actually has.  The certified
objects are:

* shaped Hamiltonians of the two energy-based loops and their equilibrium
  Hessians (positive-definiteness certificates);
* the constant structure matrices F multiplying the shaped gradient, whose
  symmetric parts are negative semidefinite exactly when the gain
  conditions hold;
* the 14x14 linearization of the integral-action loop at its equilibrium
  (Hurwitz certificate).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import (
    IntGains,
    IntState,
    PiGains,
    SatGains,
    SatState,
    sat_potential,
    sat_potential_grad,
    validate_sat_gains,
)
from .errors import CertificateError
from .plant import (
    PlantParams,
    PlantState,
    grad_hamiltonian,
    hamiltonian,
    mass_matrix_derivative,
    mass_matrix_inverse,
)
from .simulation import closed_loop_field

__all__ = [
    "PD_CERT_THRESHOLD",
    "HURWITZ_THRESHOLD",
    "PDCertificate",
    "HurwitzCertificate",
    "StructureMatrices",
    "LinearizationMatrix",
    "pd_certificate",
    "is_hurwitz",
    "shaped_hamiltonian_pi",
    "shaped_hamiltonian_zeta",
    "shaped_hamiltonian_int",
    "pi_closed_loop_field",
    "grad_shaped_pi",
    "structured_pi_field",
    "pi_structure_matrices",
    "zeta_closed_loop_field",
    "grad_shaped_zeta",
    "f_zeta",
    "f_zeta_times_grad",
    "zeta_structure_matrices",
    "hessian_pi_at_equilibrium",
    "hessian_zeta_at_equilibrium",
    "int_equilibrium",
    "linearization_matrix",
]

PD_CERT_THRESHOLD = 1e-10
HURWITZ_THRESHOLD = -1e-9
# every reported eigenpair must satisfy |A v - lambda v| <= RESIDUAL_TOL * |A|
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class PDCertificate:
    """Positive-definiteness certificate from a symmetric eigendecomposition."""

    passed: bool
    lambda_min: float
    eigenvalues: np.ndarray
    threshold: float
    residual: float

    @property
    def margin(self) -> float:
        return self.lambda_min


@dataclass(frozen=True)
class HurwitzCertificate:
    passed: bool
    spectral_abscissa: float
    eigenvalues: np.ndarray
    threshold: float
    residual: float

    @property
    def margin(self) -> float:
        return -self.spectral_abscissa


def _eig_residual(A: np.ndarray, eigvals: np.ndarray, eigvecs: np.ndarray) -> float:
    R = A @ eigvecs - eigvecs * eigvals
    scale = max(float(np.linalg.norm(A, 2)), np.finfo(float).tiny)
    return float(np.max(np.linalg.norm(R, axis=0)) / scale)


def pd_certificate(A, threshold: float = PD_CERT_THRESHOLD) -> PDCertificate:
    """Certify A symmetric positive definite (lambda_min > threshold)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("matrix must be symmetric")
    w, V = np.linalg.eigh(A)
    residual = _eig_residual(A, w, V)
    lam = float(w[0])
    return PDCertificate(
        passed=lam > threshold and residual < RESIDUAL_TOL,
        lambda_min=lam,
        eigenvalues=w,
        threshold=threshold,
        residual=residual,
    )


def is_hurwitz(A, threshold: float = HURWITZ_THRESHOLD) -> HurwitzCertificate:
    """Certify that every eigenvalue has real part below ``threshold``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    w, V = np.linalg.eig(A)
    residual = _eig_residual(A.astype(complex), w, V)
    abscissa = float(np.max(w.real))
    return HurwitzCertificate(
        passed=abscissa < threshold and residual < RESIDUAL_TOL,
        spectral_abscissa=abscissa,
        eigenvalues=w,
        threshold=threshold,
        residual=residual,
    )


@dataclass(frozen=True, eq=False)
class StructureMatrices:
    """Constant matrix F of a closed loop written as xdot = F grad H_shaped."""

    F: np.ndarray

    @property
    def sym_F(self) -> np.ndarray:
        return 0.5 * (self.F + self.F.T)

    @property
    def sym_max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.sym_F)[-1])


@dataclass(frozen=True, eq=False)
class LinearizationMatrix:
    """Jacobian of the integral-action loop at its equilibrium, with blocks."""

    A: np.ndarray
    A_sigma: np.ndarray
    A_xi1: np.ndarray
    A_xi2: np.ndarray
    F_zeta: np.ndarray
    hessian_zeta: np.ndarray


# ---------------------------------------------------------------------------
# shaped Hamiltonians
# ---------------------------------------------------------------------------

def shaped_hamiltonian_pi(params: PlantParams, g: PiGains, x: PlantState) -> float:
    e = x.q_m - g.q_star
    return hamiltonian(params, x) + 0.5 * float(e @ g.K_I @ e)


def shaped_hamiltonian_zeta(params: PlantParams, g: SatGains, x: PlantState, cs: SatState) -> float:
    z_l = x.q_l - g.q_star + cs.x_cl
    z_m = x.q_m - g.q_star + cs.x_cm
    return (hamiltonian(params, x)
            + float(sat_potential(g.alpha_l, g.beta_l, z_l))
            + float(sat_potential(g.alpha_m, g.beta_m, z_m))
            + 0.5 * float(cs.x_cm @ g.K_c @ cs.x_cm))


def shaped_hamiltonian_int(params: PlantParams, g: IntGains, x: PlantState, cs: IntState) -> float:
    """Energy monitor of the integral-action loop: the shaped energy of the
    saturated loop plus the sigma potential.  Not certified monotone."""
    return (shaped_hamiltonian_zeta(params, g.sat, x, cs.sat)
            + float(sat_potential(g.alpha_sigma, g.beta_sigma, cs.sigma)))


# ---------------------------------------------------------------------------
# velocity-feedback loop: dual-path field and structure
# ---------------------------------------------------------------------------

def pi_closed_loop_field(params: PlantParams, g: PiGains, x: PlantState) -> np.ndarray:
    """Direct substitution of the control law into the plant."""
    return closed_loop_field(params, g, x.as_vector())


def grad_shaped_pi(params: PlantParams, g: PiGains, x: PlantState) -> np.ndarray:
    Minv = mass_matrix_inverse(params, x.q_l[1])
    e = x.q_l - x.q_m
    f = params.K_s @ e
    grad_q = np.concatenate([f, -f + g.K_I @ (x.q_m - g.q_star)])
    v_l = (Minv @ x.p)[0:2]
    dMl = mass_matrix_derivative(params, x.q_l[1])[0:2, 0:2]
    grad_q[1] += -0.5 * v_l @ dMl @ v_l
    return np.concatenate([grad_q, Minv @ x.p])


def pi_structure_matrices(params: PlantParams, g: PiGains) -> StructureMatrices:
    """F = [[0, I], [-I, J2 - R2]] with J2 - R2 = [[-D_l, 0], [-K_Pl, -D_m - K_Pm]]."""
    F = np.zeros((8, 8))
    F[0:4, 4:8] = np.eye(4)
    F[4:8, 0:4] = -np.eye(4)
    F[4:6, 4:6] = -params.D_l
    F[6:8, 4:6] = -g.K_Pl
    F[6:8, 6:8] = -params.D_m - g.K_Pm
    return StructureMatrices(F)


def structured_pi_field(params: PlantParams, g: PiGains, x: PlantState) -> np.ndarray:
    """The same field computed as F grad H_shaped."""
    return pi_structure_matrices(params, g).F @ grad_shaped_pi(params, g, x)


# ---------------------------------------------------------------------------
# saturated loop: dual-path field and structure
# ---------------------------------------------------------------------------

def _split_zeta(x) -> tuple[PlantState, SatState]:
    x = np.asarray(x, dtype=float)
    if x.shape != (12,):
        raise ValueError(f"augmented state must have shape (12,), got {x.shape}")
    return PlantState.from_vector(x[:8]), SatState(x[8:10], x[10:12])


def zeta_closed_loop_field(params: PlantParams, g: SatGains, zeta) -> np.ndarray:
    """Direct substitution of the saturated law into the plant."""
    return closed_loop_field(params, g, np.asarray(zeta, dtype=float))


def grad_shaped_zeta(params: PlantParams, g: SatGains, zeta) -> np.ndarray:
    """Gradient of the shaped energy in the (q, p, x_cl, x_cm) ordering."""
    ps, cs = _split_zeta(zeta)
    z_l = ps.q_l - g.q_star + cs.x_cl
    z_m = ps.q_m - g.q_star + cs.x_cm
    g_l = sat_potential_grad(g.alpha_l, g.beta_l, z_l)
    g_m = sat_potential_grad(g.alpha_m, g.beta_m, z_m)
    dHdq, dHdp = grad_hamiltonian(params, ps)
    grad = np.empty(12)
    grad[0:2] = dHdq[0:2] + g_l
    grad[2:4] = dHdq[2:4] + g_m
    grad[4:8] = dHdp
    grad[8:10] = g_l
    grad[10:12] = g_m + g.K_c @ cs.x_cm
    return grad


def f_zeta(params: PlantParams, g: SatGains) -> np.ndarray:
    """Constant structure matrix of the saturated loop (12x12).

    The x_cl gradient enters pdot_l with + and pdot_m with -, which is what
    lets the controller inject damping without velocity measurements.
    """
    F = np.zeros((12, 12))
    F[0:4, 4:8] = np.eye(4)
    F[4:8, 0:4] = -np.eye(4)
    F[4:6, 4:6] = -params.D_l
    F[6:8, 6:8] = -params.D_m
    F[4:6, 8:10] = np.eye(2)
    F[6:8, 8:10] = -np.eye(2)
    F[8:10, 8:10] = -g.R_cl
    F[10:12, 10:12] = -g.R_cm
    return F


def f_zeta_times_grad(params: PlantParams, g: SatGains, zeta) -> np.ndarray:
    """The same field computed as F_zeta grad H_shaped."""
    return f_zeta(params, g) @ grad_shaped_zeta(params, g, zeta)


def zeta_structure_matrices(params: PlantParams, g: SatGains) -> StructureMatrices:
    return StructureMatrices(f_zeta(params, g))


# ---------------------------------------------------------------------------
# equilibrium Hessians
# ---------------------------------------------------------------------------

def _spring_block(params: PlantParams) -> np.ndarray:
    Ks = params.K_s
    return np.block([[Ks, -Ks], [-Ks, Ks]])


def hessian_pi_at_equilibrium(params: PlantParams, g: PiGains) -> tuple[np.ndarray, PDCertificate]:
    """8x8 Hessian of the shaped energy at (q_star, q_star, 0).

    The momentum block is M(q_star_2)^-1, the true second derivative of the
    kinetic term (cross terms vanish at p = 0).
    """
    H = np.zeros((8, 8))
    H[0:4, 0:4] = _spring_block(params)
    H[2:4, 2:4] += g.K_I
    H[4:8, 4:8] = mass_matrix_inverse(params, g.q_star[1])
    return H, pd_certificate(H)


def hessian_zeta_at_equilibrium(params: PlantParams, g: SatGains) -> tuple[np.ndarray, PDCertificate]:
    """12x12 Hessian of the shaped energy at the closed-loop equilibrium.

    A_l = diag(alpha_l * beta_l) and A_m = diag(alpha_m * beta_m) are the
    tanh-potential Hessians at zero error.
    """
    A_l = np.diag(g.alpha_l * g.beta_l)
    A_m = np.diag(g.alpha_m * g.beta_m)
    H = np.zeros((12, 12))
    H[0:4, 0:4] = _spring_block(params)
    H[0:2, 0:2] += A_l
    H[2:4, 2:4] += A_m
    H[4:8, 4:8] = mass_matrix_inverse(params, g.q_star[1])
    H[0:2, 8:10] = A_l
    H[8:10, 0:2] = A_l
    H[2:4, 10:12] = A_m
    H[10:12, 2:4] = A_m
    H[8:10, 8:10] = A_l
    H[10:12, 10:12] = A_m + g.K_c
    return H, pd_certificate(H)


# ---------------------------------------------------------------------------
# integral-action loop linearization
# ---------------------------------------------------------------------------

def int_equilibrium(g: IntGains) -> np.ndarray:
    """Equilibrium (q_star, q_star, 0, 0, 0, 0, 0) of the 14-state loop."""
    xi = np.zeros(14)
    xi[0:2] = g.q_star
    xi[2:4] = g.q_star
    return xi


def linearization_matrix(params: PlantParams, g: IntGains) -> LinearizationMatrix:
    """Assemble the 14x14 Jacobian at the equilibrium from its blocks.

    Top-left is F_zeta times the shaped-energy Hessian; sigma couples in
    through -A_sigma in the pdot_m rows and A_sigma against the q_m columns
    of the sigma rows, with A_sigma = diag(alpha_sigma * beta_sigma).
    """
    cert = validate_sat_gains(params, g.sat)
    if not cert.passed:
        raise CertificateError(cert)
    Hz, _ = hessian_zeta_at_equilibrium(params, g.sat)
    Fz = f_zeta(params, g.sat)
    A_sigma = np.diag(g.alpha_sigma * g.beta_sigma)
    A_xi1 = np.zeros((12, 2))
    A_xi1[6:8, :] = -A_sigma
    A_xi2 = np.zeros((12, 2))
    A_xi2[2:4, :] = A_sigma
    A = np.zeros((14, 14))
    A[0:12, 0:12] = Fz @ Hz
    A[0:12, 12:14] = A_xi1
    A[12:14, 0:12] = A_xi2.T
    A[12:14, 12:14] = -g.K_sigma
    return LinearizationMatrix(A=A, A_sigma=A_sigma, A_xi1=A_xi1, A_xi2=A_xi2,
                               F_zeta=Fz, hessian_zeta=Hz)
