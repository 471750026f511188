"""Outcome probabilities of the time-resolved two-photon interference measurement.

Units: time in ns, angular frequency in rad/ns.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import ConfigurationError

SQRT2 = math.sqrt(2.0)
DEFAULT_MARGIN = 10.0


class Envelope(enum.Enum):
    GAUSSIAN = "gaussian"


class EventClass(enum.IntEnum):
    """Two-photon event class. Values double as array codes in sample batches."""

    BUNCH = 0  # same output port
    COINCIDENCE = 1  # different output ports

    @property
    def alpha(self) -> int:
        return 1 if self is EventClass.BUNCH else -1


@dataclass(frozen=True)
class ModelParams:
    """Physical configuration shared by every density in the package.

    Attributes
    ----------
    tau : float
        Standard deviation (ns) of each photon's temporal intensity |psi(t)|^2.
    nu : float
        Indistinguishability in all degrees of freedom except time, in [0, 1].
    gamma : float
        Per-detector efficiency, in [0, 1].
    delta_omega : float
        Frequency shift omega_2 - omega_1 in rad/ns.
    """

    tau: float = 1.0
    nu: float = 1.0
    gamma: float = 1.0
    delta_omega: float = 0.0
    envelope: Envelope = Envelope.GAUSSIAN

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigurationError(f"tau must be positive and finite, got {self.tau}")
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigurationError(f"nu must lie in [0, 1], got {self.nu}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not math.isfinite(self.delta_omega):
            raise ConfigurationError(f"delta_omega must be finite, got {self.delta_omega}")
        if not isinstance(self.envelope, Envelope):
            raise ConfigurationError(f"unsupported envelope {self.envelope!r}")

    @property
    def tau_domega(self) -> float:
        return self.tau * self.delta_omega

    def with_shift(self, delta_omega: float) -> "ModelParams":
        return replace(self, delta_omega=float(delta_omega))


@dataclass(frozen=True)
class ZeroPhoton:
    pass


@dataclass(frozen=True)
class OnePhoton:
    pass


@dataclass(frozen=True)
class TwoPhoton:
    event_class: EventClass
    delta_t: float

    def __post_init__(self):
        if not math.isfinite(self.delta_t):
            raise ValueError("two-photon delay must be finite")


DetectionOutcome = Union[ZeroPhoton, OnePhoton, TwoPhoton]


def envelope_c(delta_t, params: ModelParams):
    """Beats envelope C(dt): Gaussian of variance 2 tau^2, normalized over the real line."""
    tau = params.tau
    dt = np.asarray(delta_t, dtype=float)
    out = np.exp(-dt * dt / (4.0 * tau * tau)) / math.sqrt(4.0 * math.pi * tau * tau)
    return out if out.ndim else float(out)


def photon_intensity(t, params: ModelParams):
    """Single-photon temporal intensity |psi(t)|^2 (Gaussian, variance tau^2)."""
    tau = params.tau
    t = np.asarray(t, dtype=float)
    return np.exp(-t * t / (2.0 * tau * tau)) / math.sqrt(2.0 * math.pi * tau * tau)


def _alpha(event_class) -> int:
    return EventClass(event_class).alpha


def joint_density_t1t2(t1, t2, event_class, params: ModelParams):
    """Density of detecting class ``event_class`` at times (t1, t2).

    The factor 1/2 accounts for the t1 <-> t2 symmetry, so the sum over both
    classes integrates to one over the plane.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    a = _alpha(event_class)
    fringe = 1.0 + params.nu * a * np.cos(params.delta_omega * (t2 - t1))
    out = 0.5 * photon_intensity(t1, params) * photon_intensity(t2, params) * fringe
    return out if out.ndim else float(out)


def density_dt(event_class, delta_t, params: ModelParams):
    """P_nu(X, dt | delta_omega) = C(dt)/2 * (1 + nu * alpha(X) * cos(delta_omega * dt))."""
    dt = np.asarray(delta_t, dtype=float)
    a = _alpha(event_class)
    fringe = 1.0 + params.nu * a * np.cos(params.delta_omega * dt)
    out = 0.5 * envelope_c(dt, params) * fringe
    # 1 + nu*alpha*cos can round to a tiny negative value at nu == 1
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def detection_probabilities(params: ModelParams) -> tuple[float, float, float]:
    """(P0, P1, P2) of detecting zero, one, or two photons."""
    g = params.gamma
    return (1.0 - g) ** 2, 2.0 * g * (1.0 - g), g * g


def outcome_probability(outcome: DetectionOutcome, params: ModelParams) -> float:
    """Probability of a zero/one-photon outcome, or density (1/ns) of a two-photon outcome."""
    p0, p1, p2 = detection_probabilities(params)
    if isinstance(outcome, ZeroPhoton):
        return p0
    if isinstance(outcome, OnePhoton):
        return p1
    if isinstance(outcome, TwoPhoton):
        return p2 * density_dt(outcome.event_class, outcome.delta_t, params)
    raise TypeError(f"unknown outcome {outcome!r}")


@dataclass(frozen=True)
class ResolutionCheck:
    ok: bool
    shift_condition: bool
    width_condition: bool

    @property
    def violated(self) -> tuple[str, ...]:
        failed = []
        if not self.shift_condition:
            failed.append("shift")
        if not self.width_condition:
            failed.append("width")
        return tuple(failed)


def resolution_check(params: ModelParams, delta_t_resolution: float,
                     margin: float = DEFAULT_MARGIN) -> ResolutionCheck:
    """Advisory check that the detector resolution is much finer than 1/|dw| and tau.

    "Much finer" means smaller by at least ``margin``. ``shift`` names the
    1/|delta_omega| condition and ``width`` the tau condition.
    """
    if not margin > 1.0:
        raise ConfigurationError(f"margin must exceed 1, got {margin}")
    if not delta_t_resolution > 0.0:
        raise ConfigurationError(f"time resolution must be positive, got {delta_t_resolution}")
    scaled = delta_t_resolution * margin
    dw = abs(params.delta_omega)
    # tolerate rounding at the boundary (0.01 * 10 vs 1/10)
    shift_ok = dw == 0.0 or scaled * dw <= 1.0 + 1e-12
    width_ok = scaled <= params.tau * (1.0 + 1e-12)
    return ResolutionCheck(shift_ok and width_ok, shift_ok, width_ok)
