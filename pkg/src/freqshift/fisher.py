"""Classical and quantum Fisher information for the frequency shift.

All values are per repetition, in ns^2.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NotIdentifiableError
from .model import SQRT2, ModelParams, envelope_c
from .quadrature import refine_simpson

NONRESOLVING_LIMIT_THRESHOLD = 1e-6


class Method(enum.Enum):
    CLOSED_FORM_NU_ONE = "closed_form_nu_one"
    QUADRATURE_GAUSSIAN = "quadrature_gaussian"
    ASYMPTOTIC_LARGE_SHIFT = "asymptotic_large_shift"
    NONRESOLVING_GAUSSIAN = "nonresolving_gaussian"
    QUANTUM_BOUND = "quantum_bound"


@dataclass(frozen=True)
class FisherReport:
    value: float
    method: Method
    quadrature_nodes: int = 0
    est_abs_error: float = 0.0
    flags: tuple = ()
    details: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class QuadratureSpec:
    """Step and stopping rules for :func:`fi_resolving`.

    The support is [-L, L] with L = ``support_sigmas`` standard deviations of
    the envelope (sqrt(2) tau). The initial step resolves both the fringe
    period (``steps_per_half_period`` steps per pi/|dw|) and the envelope
    (``steps_per_tau`` steps per tau).
    """

    support_sigmas: float = 12.0
    steps_per_half_period: int = 16
    steps_per_tau: int = 32
    rel_tol: float = 1e-8
    max_nodes: int = 1 << 22


def beta_nu(xi, nu: float):
    """Fringe weight nu^2 sin^2(xi) / (1 - nu^2 cos^2(xi)); equals 1 at nu == 1 everywhere."""
    xi = np.asarray(xi, dtype=float)
    s2 = np.sin(xi) ** 2
    c2 = np.cos(xi) ** 2
    nu2 = nu * nu
    # 1 - nu^2 c^2 written so that it stays exact at nu == 1
    den = s2 + (1.0 - nu2) * c2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0.0, nu2 * s2 / den, 1.0)
    if nu == 0.0:
        out = np.zeros_like(out)
    return out if out.ndim else float(out)


def beta_mean(nu: float) -> float:
    """Period average of :func:`beta_nu`: 1 - sqrt(1 - nu^2)."""
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"nu must lie in [0, 1], got {nu}")
    return nu * nu / (1.0 + math.sqrt(1.0 - nu * nu))


def qfi_matrices(tau: float):
    """(H over (omega_1, omega_2), Jacobian J, H over (omega_M, delta_omega))."""
    h12 = 4.0 * tau * tau * np.eye(2)
    jac = 0.5 * np.array([[1.0, 1.0], [1.0, -1.0]])
    return h12, jac, jac @ h12 @ jac.T


def qfi(tau: float) -> FisherReport:
    """Quantum Fisher information 2 tau^2 for the shift."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    h12, jac, hmd = qfi_matrices(tau)
    return FisherReport(float(hmd[1, 1]), Method.QUANTUM_BOUND,
                        details={"H_omega1_omega2": h12, "jacobian": jac, "H_omegaM_domega": hmd})


def fi_contribution(delta_t, params: ModelParams):
    """Per-delay contribution C(dt) dt^2 beta_nu(dw dt) to the Fisher information."""
    dt = np.asarray(delta_t, dtype=float)
    out = envelope_c(dt, params) * dt * dt * beta_nu(params.delta_omega * dt, params.nu)
    return out if np.ndim(out) else float(out)


def fi_contribution_bound(delta_t, params: ModelParams):
    dt = np.asarray(delta_t, dtype=float)
    out = params.nu ** 2 * envelope_c(dt, params) * dt * dt
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=512)
def _resolving_integral(tau: float, nu: float, dw: float, spec: QuadratureSpec):
    p = ModelParams(tau=tau, nu=nu, delta_omega=dw)
    half_width = spec.support_sigmas * SQRT2 * tau
    h0 = tau / spec.steps_per_tau
    if dw != 0.0:
        h0 = min(h0, math.pi / (spec.steps_per_half_period * abs(dw)))
    # the integrand is even: integrate [0, L] and double
    res = refine_simpson(lambda t: fi_contribution(t, p), 0.0, half_width, h0,
                         tol=0.5 * spec.rel_tol * 2.0 * tau * tau, max_nodes=spec.max_nodes)
    return 2.0 * res.value, res.nodes, 2.0 * res.est_abs_error


def fi_resolving(params: ModelParams, quadrature: QuadratureSpec = QuadratureSpec()) -> FisherReport:
    """Fisher information of the time-resolved measurement, including efficiency gamma^2.

    nu == 1 uses the closed form 2 gamma^2 tau^2; otherwise the integral over
    the delay is computed by :func:`refine_simpson`. Raises
    :class:`~freqshift.errors.QuadratureError` if it does not converge.
    """
    g2 = params.gamma ** 2
    if params.nu == 1.0:
        return FisherReport(g2 * 2.0 * params.tau ** 2, Method.CLOSED_FORM_NU_ONE)
    if params.nu == 0.0:
        return FisherReport(0.0, Method.QUADRATURE_GAUSSIAN)
    value, nodes, err = _resolving_integral(params.tau, params.nu, abs(params.delta_omega), quadrature)
    return FisherReport(g2 * value, Method.QUADRATURE_GAUSSIAN, nodes, g2 * err)


def fi_asymptotic(params: ModelParams) -> FisherReport:
    """Large-shift limit gamma^2 * 2 tau^2 * (1 - sqrt(1 - nu^2))."""
    value = params.gamma ** 2 * 2.0 * params.tau ** 2 * beta_mean(params.nu)
    return FisherReport(value, Method.ASYMPTOTIC_LARGE_SHIFT)


def fi_nonresolving(params: ModelParams) -> FisherReport:
    """Fisher information when only bunching vs coincidence is recorded.

    Unit detection efficiency is assumed; gamma < 1 is ignored and reported in
    ``flags``.
    """
    flags = ()
    if params.gamma < 1.0:
        warnings.warn("non-resolving Fisher information assumes unit efficiency; gamma ignored",
                      stacklevel=2)
        flags = ("gamma_ignored",)
    tau, nu = params.tau, params.nu
    x = (tau * params.delta_omega) ** 2
    if nu == 1.0 and math.sqrt(x) < NONRESOLVING_LIMIT_THRESHOLD:
        value = 2.0 * tau * tau * (1.0 - x)
    else:
        den = math.expm1(2.0 * x) + (1.0 - nu * nu) if 2.0 * x < 700 else math.inf
        value = 4.0 * nu * nu * tau * tau * x / den
    return FisherReport(value, Method.NONRESOLVING_GAUSSIAN, flags=flags)


def crlb_sigma(fisher, n: int) -> float:
    """Cramer-Rao standard deviation 1 / sqrt(n F)."""
    f = float(fisher)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not f > 0.0:
        raise NotIdentifiableError("parameter not identifiable under this configuration (F = 0)")
    return 1.0 / math.sqrt(n * f)
