"""Named simulation scenarios, including the compiled-in reproductions.

The built-ins share the same target q_star = (-1, 1), zero initial
conditions, and the default plant parameters; they differ in the controller
variant and its shaping weights:

* C1, C2, C3 -- saturated output feedback with fixed damping matrices and
  three different (alpha_l, alpha_m) weightings; C3 switches the link
  shaping term off entirely.
* INT        -- the saturated law with the integral-like sigma channel.
* PI         -- the velocity-feedback demo law (needs momenta).
* OPENLOOP   -- unforced decay from stretched joint springs.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .controllers import (
    ControllerSpec,
    IntGains,
    PiGains,
    SatGains,
    controller_state_dim,
)
from .errors import ConfigError
from .plant import PlantParams
from .simulation import ActuatorModel, SimConfig

__all__ = [
    "Scenario",
    "QSTAR_DEFAULT",
    "builtin_scenarios",
    "builtin_names",
    "get_builtin",
    "resolve_scenario",
]

QSTAR_DEFAULT = (-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully specified run: plant, controller, actuator, integration setup.

    ``controller`` may be None for an open-loop (u = 0) run.  ``x0`` is the
    full closed-loop initial state, length 8 plus the controller dimension.
    """

    name: str
    plant: PlantParams
    controller: ControllerSpec | None
    actuator: ActuatorModel
    sim: SimConfig
    x0: np.ndarray
    description: str = ""

    def __post_init__(self):
        dim = controller_state_dim(self.controller)
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (8 + dim,):
            raise ConfigError(
                f"scenario {self.name!r}: x0 must have length {8 + dim} "
                f"for this controller, got {x0.shape}")
        if not np.all(np.isfinite(x0)):
            raise ConfigError(f"scenario {self.name!r}: x0 must be finite")
        object.__setattr__(self, "x0", x0)

    @property
    def q_star(self) -> np.ndarray:
        if self.controller is None:
            return np.zeros(2)
        return self.controller.q_star

    def with_overrides(self, actuator: ActuatorModel | None = None,
                       dt: float | None = None, t_final: float | None = None,
                       integrator: str | None = None,
                       record_stride: int | None = None) -> "Scenario":
        sim = self.sim
        kwargs = {}
        if dt is not None:
            kwargs["dt"] = dt
        if t_final is not None:
            kwargs["t_final"] = t_final
        if integrator is not None:
            kwargs["integrator"] = integrator
        if record_stride is not None:
            kwargs["record_stride"] = record_stride
        if kwargs:
            try:
                sim = replace(sim, **kwargs)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return replace(self, sim=sim, actuator=actuator or self.actuator)


def _fixed_weight_sat(alpha_l, alpha_m) -> SatGains:
    """The shared damping/stiffness matrices of the C-series scenarios."""
    return SatGains(
        alpha_l=alpha_l, beta_l=(2.0, 1.0),
        alpha_m=alpha_m, beta_m=(1.0, 1.0),
        R_cl=np.diag([10.0, 40.0]), R_cm=np.diag([25.0, 25.0]),
        K_c=np.diag([5.0, 5.0]), q_star=QSTAR_DEFAULT,
    )


def _int_gains() -> IntGains:
    return IntGains(
        sat=SatGains(
            alpha_l=(0.6, 0.3), beta_l=(3.0, 1.0),
            alpha_m=(0.25, 0.6), beta_m=(1.0, 1.0),
            R_cl=np.diag([25.0, 40.0]), R_cm=0.25 * np.eye(2),
            K_c=0.1 * np.eye(2), q_star=QSTAR_DEFAULT,
        ),
        alpha_sigma=(0.35, 0.3), beta_sigma=(2.5, 3.0),
        K_sigma=np.eye(2),
    )


def _pi_demo_gains() -> PiGains:
    return PiGains(
        K_Pm=np.diag([2.0, 2.0]),
        K_Pl=np.diag([0.5, 0.15]),
        K_I=np.diag([1.0, 1.0]),
        q_star=QSTAR_DEFAULT,
    )


def builtin_scenarios() -> dict[str, Scenario]:
    """Fresh copies of the compiled-in scenarios, keyed by canonical name."""
    plant = PlantParams()
    ideal = ActuatorModel()

    def sat_scn(name, alpha_l, alpha_m, t_final, description):
        return Scenario(
            name=name, plant=plant,
            controller=_fixed_weight_sat(alpha_l, alpha_m),
            actuator=ideal, sim=SimConfig(t_final=t_final),
            x0=np.zeros(12), description=description,
        )

    scns = [
        sat_scn("C1", (0.8, 0.8), (0.4, 0.4), 30.0,
                "saturated output feedback, link weight 0.8 / motor weight 0.4"),
        sat_scn("C2", (0.2, 0.2), (1.0, 1.0), 30.0,
                "saturated output feedback, link weight 0.2 / motor weight 1.0"),
        sat_scn("C3", (0.0, 0.0), (1.2, 1.2), 90.0,
                "saturated output feedback with the link shaping term off (motor weight 1.2)"),
        Scenario(
            name="INT", plant=plant, controller=_int_gains(),
            actuator=ideal, sim=SimConfig(t_final=30.0), x0=np.zeros(14),
            description="saturated output feedback with integral-like action",
        ),
        Scenario(
            name="PI", plant=plant, controller=_pi_demo_gains(),
            actuator=ideal, sim=SimConfig(t_final=60.0), x0=np.zeros(8),
            description="velocity-feedback demo law (requires momentum measurements)",
        ),
        Scenario(
            name="OPENLOOP", plant=plant, controller=None,
            actuator=ideal, sim=SimConfig(t_final=10.0),
            x0=np.array([0.4, -0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            description="unforced open-loop decay from stretched joint springs",
        ),
    ]
    return {s.name: s for s in scns}


def builtin_names() -> tuple[str, ...]:
    return tuple(builtin_scenarios().keys())


def get_builtin(name: str) -> Scenario:
    scns = builtin_scenarios()
    key = name.upper()
    if key not in scns:
        known = ", ".join(scns)
        raise ConfigError(f"unknown scenario {name!r} (built-ins: {known})")
    return scns[key]


def resolve_scenario(ref: str, scenario_dir: str | None = None) -> Scenario:
    """Resolve a scenario reference: built-in name, config file path, or a
    file name found under ``scenario_dir``."""
    import os

    if ref.upper() in builtin_scenarios():
        return get_builtin(ref)
    candidates = [ref]
    if scenario_dir:
        candidates.append(os.path.join(scenario_dir, ref))
        candidates.append(os.path.join(scenario_dir, ref + ".yaml"))
    for path in candidates:
        if os.path.isfile(path):
            from .schemas import load_scenario_file
            return load_scenario_file(path)
    raise ConfigError(f"unknown scenario {ref!r}: not a built-in name and no such file")
