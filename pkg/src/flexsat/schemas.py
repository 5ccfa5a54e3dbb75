"""Pydantic models: scenario configuration files and the service wire format.

The same ScenarioModel validates YAML config files and inline scenarios in
service requests, so a scenario serializes and re-parses losslessly.
2x2 gain matrices accept three spellings: a scalar c (meaning c times the
identity), a length-2 list (a diagonal), or a full 2x2 nested list;
validation canonicalizes all of them to the nested-list form.
"""
from __future__ import annotations

from typing import Annotated, Any, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError

from .controllers import ControllerSpec, IntGains, PiGains, SatGains, controller_state_dim
from .errors import ConfigError
from .plant import PlantParams
from .scenarios import Scenario
from .simulation import ActuatorModel, Metrics, SimConfig

__all__ = [
    "PlantModel",
    "PiControllerModel",
    "SatControllerModel",
    "IntControllerModel",
    "ActuatorConfig",
    "SimConfigModel",
    "ScenarioModel",
    "ScenarioSummary",
    "CheckModel",
    "CertificateModel",
    "MetricsModel",
    "RunRequest",
    "RunResponse",
    "AnalyzeRequest",
    "AnalyzeResponse",
    "scenario_from_model",
    "scenario_to_model",
    "load_scenario_file",
    "scenario_to_yaml",
    "metrics_to_model",
]


def _norm_matrix2(v: Any) -> list[list[float]]:
    if isinstance(v, (int, float)):
        return [[float(v), 0.0], [0.0, float(v)]]
    a = np.asarray(v, dtype=float)
    if a.shape == (2,):
        return [[float(a[0]), 0.0], [0.0, float(a[1])]]
    if a.shape == (2, 2):
        return a.tolist()
    raise ValueError("expected a scalar, a length-2 diagonal, or a 2x2 matrix")


def _norm_vec2(v: Any) -> list[float]:
    if isinstance(v, (int, float)):
        return [float(v), float(v)]
    a = np.asarray(v, dtype=float)
    if a.shape != (2,):
        raise ValueError("expected a length-2 list")
    return a.tolist()


Matrix2 = Annotated[list[list[float]], BeforeValidator(_norm_matrix2)]
Vec2 = Annotated[list[float], BeforeValidator(_norm_vec2)]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PlantModel(StrictModel):
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


class PiControllerModel(StrictModel):
    type: Literal["pi"] = "pi"
    k_pm: Matrix2
    k_pl: Matrix2
    k_i: Matrix2


class SatControllerModel(StrictModel):
    type: Literal["saturated"] = "saturated"
    alpha_l: Vec2
    beta_l: Vec2
    alpha_m: Vec2
    beta_m: Vec2
    r_cl: Matrix2
    r_cm: Matrix2
    k_c: Matrix2


class IntControllerModel(StrictModel):
    type: Literal["saturated_integral"] = "saturated_integral"
    alpha_l: Vec2
    beta_l: Vec2
    alpha_m: Vec2
    beta_m: Vec2
    r_cl: Matrix2
    r_cm: Matrix2
    k_c: Matrix2
    alpha_sigma: Vec2
    beta_sigma: Vec2
    k_sigma: Matrix2


ControllerModel = Annotated[
    Union[PiControllerModel, SatControllerModel, IntControllerModel],
    Field(discriminator="type"),
]


class ActuatorConfig(StrictModel):
    kind: Literal["ideal", "deadzone", "clamp"] = "ideal"
    threshold: float = 0.12
    u_max: float = 1.2


class SimConfigModel(StrictModel):
    dt: float = 1e-3
    t_final: float = 30.0
    integrator: Literal["rk4", "euler"] = "rk4"
    record_stride: int = 1


class ScenarioModel(StrictModel):
    name: str
    description: str = ""
    q_star: Vec2 = Field(default_factory=lambda: [-1.0, 1.0])
    plant: PlantModel = Field(default_factory=PlantModel)
    controller: ControllerModel | None = None
    actuator: ActuatorConfig = Field(default_factory=ActuatorConfig)
    sim: SimConfigModel = Field(default_factory=SimConfigModel)
    x0: list[float] | None = None


class ScenarioSummary(StrictModel):
    name: str
    description: str = ""
    controller_type: str
    state_dim: int


class CheckModel(StrictModel):
    name: str
    passed: bool
    margin: float


class CertificateModel(StrictModel):
    name: str
    kind: str
    passed: bool
    margin: float
    checks: list[CheckModel] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    data: dict[str, Any] = Field(default_factory=dict)


class MetricsModel(StrictModel):
    steady_state_error: list[float]
    max_abs_u: list[float]
    settle_time: float | None
    energy_violations: int


class RunRequest(StrictModel):
    scenario: Union[str, ScenarioModel]
    actuator: ActuatorConfig | None = None
    dt: float | None = None
    t_final: float | None = None
    integrator: Literal["rk4", "euler"] | None = None
    record_stride: int | None = None
    settle_tolerance: float = 0.01
    override_certificates: bool = False
    include_csv: bool = True


class RunResponse(StrictModel):
    scenario: ScenarioModel
    metrics: MetricsModel
    certificates: list[CertificateModel]
    final_time: float
    final_state: list[float]
    warnings: list[str] = Field(default_factory=list)
    csv: str | None = None


class AnalyzeRequest(StrictModel):
    scenario: Union[str, ScenarioModel]
    include_matrices: bool = False


class AnalyzeResponse(StrictModel):
    name: str
    certificates: list[CertificateModel]
    report: str
    matrices: dict[str, list[list[float]]] | None = None


# ---------------------------------------------------------------------------
# converters between models and core objects
# ---------------------------------------------------------------------------

def _controller_from_model(m, q_star) -> ControllerSpec:
    if isinstance(m, PiControllerModel):
        return PiGains(K_Pm=m.k_pm, K_Pl=m.k_pl, K_I=m.k_i, q_star=q_star)
    if isinstance(m, SatControllerModel):
        return SatGains(
            alpha_l=m.alpha_l, beta_l=m.beta_l, alpha_m=m.alpha_m, beta_m=m.beta_m,
            R_cl=m.r_cl, R_cm=m.r_cm, K_c=m.k_c, q_star=q_star,
        )
    if isinstance(m, IntControllerModel):
        return IntGains(
            sat=SatGains(
                alpha_l=m.alpha_l, beta_l=m.beta_l, alpha_m=m.alpha_m, beta_m=m.beta_m,
                R_cl=m.r_cl, R_cm=m.r_cm, K_c=m.k_c, q_star=q_star,
            ),
            alpha_sigma=m.alpha_sigma, beta_sigma=m.beta_sigma, K_sigma=m.k_sigma,
        )
    raise ConfigError(f"unknown controller model {type(m).__name__}")


def scenario_from_model(m: ScenarioModel) -> Scenario:
    try:
        plant = PlantParams(**m.plant.model_dump())
        controller = None if m.controller is None else _controller_from_model(m.controller, m.q_star)
        actuator = ActuatorModel(kind=m.actuator.kind, threshold=m.actuator.threshold,
                                 u_max=m.actuator.u_max)
        sim = SimConfig(**m.sim.model_dump())
        dim = controller_state_dim(controller)
        x0 = np.zeros(8 + dim) if m.x0 is None else np.asarray(m.x0, dtype=float)
        return Scenario(name=m.name, plant=plant, controller=controller,
                        actuator=actuator, sim=sim, x0=x0, description=m.description)
    except ValueError as exc:
        raise ConfigError(f"invalid scenario {m.name!r}: {exc}") from None


def _controller_to_model(spec: ControllerSpec):
    if isinstance(spec, PiGains):
        return PiControllerModel(k_pm=spec.K_Pm, k_pl=spec.K_Pl, k_i=spec.K_I)
    if isinstance(spec, SatGains):
        return SatControllerModel(
            alpha_l=spec.alpha_l, beta_l=spec.beta_l,
            alpha_m=spec.alpha_m, beta_m=spec.beta_m,
            r_cl=spec.R_cl, r_cm=spec.R_cm, k_c=spec.K_c,
        )
    if isinstance(spec, IntGains):
        return IntControllerModel(
            alpha_l=spec.sat.alpha_l, beta_l=spec.sat.beta_l,
            alpha_m=spec.sat.alpha_m, beta_m=spec.sat.beta_m,
            r_cl=spec.sat.R_cl, r_cm=spec.sat.R_cm, k_c=spec.sat.K_c,
            alpha_sigma=spec.alpha_sigma, beta_sigma=spec.beta_sigma,
            k_sigma=spec.K_sigma,
        )
    raise ConfigError(f"unknown controller spec {type(spec).__name__}")


def scenario_to_model(s: Scenario) -> ScenarioModel:
    plant = PlantModel(**{k: getattr(s.plant, k) for k in PlantModel.model_fields})
    return ScenarioModel(
        name=s.name,
        description=s.description,
        q_star=s.q_star,
        plant=plant,
        controller=None if s.controller is None else _controller_to_model(s.controller),
        actuator=ActuatorConfig(kind=s.actuator.kind, threshold=s.actuator.threshold,
                                u_max=s.actuator.u_max),
        sim=SimConfigModel(dt=s.sim.dt, t_final=s.sim.t_final,
                           integrator=s.sim.integrator, record_stride=s.sim.record_stride),
        x0=[float(v) for v in s.x0],
    )


def load_scenario_file(path) -> Scenario:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario file {path} is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario file {path} must hold a mapping at the top level")
    try:
        model = ScenarioModel.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"scenario file {path} failed validation:\n{exc}") from None
    return scenario_from_model(model)


def scenario_to_yaml(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_model(s).model_dump(), sort_keys=False)


def metrics_to_model(m: Metrics) -> MetricsModel:
    settle = None if not np.isfinite(m.settle_time) else float(m.settle_time)
    return MetricsModel(
        steady_state_error=[float(v) for v in m.steady_state_error],
        max_abs_u=[float(v) for v in m.max_abs_u],
        settle_time=settle,
        energy_violations=m.energy_violations,
    )
