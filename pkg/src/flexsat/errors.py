"""Exception types shared across the toolkit."""
from __future__ import annotations

__all__ = ["ConfigError", "CertificateError", "DivergenceError"]


class ConfigError(ValueError):
    """A scenario reference or configuration file could not be resolved."""


class CertificateError(RuntimeError):
    """A gain certificate failed and no override was requested."""

    def __init__(self, certificate, message: str | None = None):
        self.certificate = certificate
        if message is None:
            failing = ", ".join(certificate.failing()) or "unknown condition"
            message = (f"gain certificate failed ({failing}); margin "
                       f"{certificate.margin:.6g}. Pass override_certificates to run anyway.")
        super().__init__(message)


class DivergenceError(RuntimeError):
    """The simulated state stopped being finite.

    Carries the offending time and the trajectory recorded up to that point
    (``None`` when divergence happened inside a bare integrator step).
    """

    def __init__(self, time: float | None, trajectory=None, message: str | None = None):
        self.time = time
        self.trajectory = trajectory
        if message is None:
            at = "during a step" if time is None else f"at t = {time:.6g} s"
            message = f"simulation diverged (non-finite state) {at}"
        super().__init__(message)
