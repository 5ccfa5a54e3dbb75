"""flexsat: simulation and stability analysis for a two-joint flexible-joint
planar robot under saturated energy-shaping control."""

__version__ = "0.1.0"

from .analysis import (
    HurwitzCertificate,
    LinearizationMatrix,
    PDCertificate,
    StructureMatrices,
    hessian_pi_at_equilibrium,
    hessian_zeta_at_equilibrium,
    is_hurwitz,
    linearization_matrix,
    pd_certificate,
    shaped_hamiltonian_int,
    shaped_hamiltonian_pi,
    shaped_hamiltonian_zeta,
)
from .controllers import (
    ControllerSpec,
    GainCertificate,
    IntGains,
    IntState,
    PiGains,
    SatGains,
    SatState,
    int_control,
    pi_control,
    sat_control,
    saturation_bound,
    validate_gains,
    validate_int_gains,
    validate_pi_gains,
    validate_sat_gains,
)
from .errors import CertificateError, ConfigError, DivergenceError
from .plant import (
    PlantParams,
    PlantState,
    grad_hamiltonian,
    hamiltonian,
    mass_matrix,
    mass_matrix_derivative,
    open_loop_dynamics,
)
from .scenarios import Scenario, builtin_scenarios, get_builtin, resolve_scenario
from .simulation import (
    ActuatorModel,
    Metrics,
    SimConfig,
    Trajectory,
    compute_metrics,
    simulate,
    write_csv,
)

__all__ = [
    "__version__",
    "ActuatorModel", "CertificateError", "ConfigError", "ControllerSpec",
    "DivergenceError", "GainCertificate", "HurwitzCertificate", "IntGains",
    "IntState", "LinearizationMatrix", "Metrics", "PDCertificate", "PiGains",
    "PlantParams", "PlantState", "SatGains", "SatState", "Scenario",
    "SimConfig", "StructureMatrices", "Trajectory", "builtin_scenarios",
    "compute_metrics", "get_builtin", "grad_hamiltonian", "hamiltonian",
    "hessian_pi_at_equilibrium", "hessian_zeta_at_equilibrium", "int_control",
    "is_hurwitz", "linearization_matrix", "mass_matrix",
    "mass_matrix_derivative", "open_loop_dynamics", "pd_certificate",
    "pi_control", "resolve_scenario", "sat_control", "saturation_bound",
    "shaped_hamiltonian_int", "shaped_hamiltonian_pi", "shaped_hamiltonian_zeta",
    "simulate", "validate_gains", "validate_int_gains", "validate_pi_gains",
    "validate_sat_gains", "write_csv",
]
