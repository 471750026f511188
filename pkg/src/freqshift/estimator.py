"""Maximum-likelihood estimation of |delta_omega| and the Monte Carlo variance harness."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import ConfigurationError, NotIdentifiableError
from .fisher import fi_resolving
from .model import ModelParams, detection_probabilities, envelope_c
from .sampler import SampleBatch, SamplerConfig, draw_batch

IMPOSSIBLE_EVENT = -math.inf
"""Log-likelihood of a batch containing an event of zero density under the candidate."""

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
MAX_FAILED_FRACTION = 0.01
SUMMARY_COLUMNS = ("nu", "tau_domega", "n_events", "repetitions", "mean", "variance",
                   "var_crb_ratio", "bias_fraction", "failed", "seed")


def is_impossible(loglik: float) -> bool:
    return loglik == IMPOSSIBLE_EVENT


@dataclass(frozen=True)
class EstimatorConfig:
    """Search settings. ``omega_max=None`` picks pi / (4 dt_eff) from the batch,
    with dt_eff the quantization step or tau/100 when unquantized."""

    assumed_params: Optional[ModelParams] = None
    omega_max: Optional[float] = None
    coarse_grid_points: int = 2048
    refine_tol: Optional[float] = None
    n_candidates: int = 3

    def __post_init__(self):
        if self.omega_max is not None and not self.omega_max > 0:
            raise ConfigurationError(f"omega_max must be positive, got {self.omega_max}")
        if self.coarse_grid_points < 3:
            raise ConfigurationError("coarse_grid_points must be at least 3")
        if self.refine_tol is not None and not self.refine_tol > 0:
            raise ConfigurationError(f"refine_tol must be positive, got {self.refine_tol}")
        if self.n_candidates < 1:
            raise ConfigurationError("n_candidates must be at least 1")


@dataclass(frozen=True)
class EstimationResult:
    omega_hat: float
    log_likelihood: float
    n_informative: int
    boundary_flag: bool
    omega_max: float
    grid_step: float


@dataclass(frozen=True)
class MonteCarloSummary:
    params: ModelParams
    n_events: int
    repetitions: int
    mean_estimate: float
    variance: float
    variance_crb_ratio: float
    bias_fraction: float
    seed: int
    failed: int = 0
    fisher: float = math.nan

    def row(self) -> dict:
        return {
            "nu": self.params.nu,
            "tau_domega": self.params.tau_domega,
            "n_events": self.n_events,
            "repetitions": self.repetitions,
            "mean": self.mean_estimate,
            "variance": self.variance,
            "var_crb_ratio": self.variance_crb_ratio,
            "bias_fraction": self.bias_fraction,
            "failed": self.failed,
            "seed": self.seed,
        }


def default_omega_max(params: ModelParams, quantization: Optional[float] = None) -> float:
    dt_eff = quantization if quantization else params.tau / 100.0
    return math.pi / (4.0 * dt_eff)


def _informative(batch: SampleBatch):
    dt, alpha = batch.two_photon()
    if dt.size == 0:
        raise NotIdentifiableError("parameter not identifiable from this batch: no two-photon events")
    return dt, alpha


def _constant_part(batch: SampleBatch, dt: np.ndarray, assumed: ModelParams) -> float:
    """Shift-independent log-likelihood terms: detection ladder and envelope."""
    p0, p1, p2 = detection_probabilities(assumed)
    total = 0.0
    for count, p in ((batch.counts.get("zero", 0), p0), (batch.counts.get("one", 0), p1)):
        if count:
            total += count * math.log(p) if p > 0 else -math.inf
    total += dt.size * math.log(0.5 * p2) + float(np.log(envelope_c(dt, assumed)).sum())
    return total


def log_likelihood(batch: SampleBatch, candidate_omega: float, assumed: ModelParams) -> float:
    """Full log-likelihood of ``batch`` at shift ``candidate_omega``.

    Returns :data:`IMPOSSIBLE_EVENT` when some event has zero density.
    """
    dt, alpha = _informative(batch)
    shift = kernels.loglik_point(dt, alpha, assumed.nu, float(candidate_omega))
    if shift == -math.inf:
        return IMPOSSIBLE_EVENT
    return _constant_part(batch, dt, assumed) + shift


def golden_section_max(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Maximize ``f`` on [lo, hi]; the endpoints are kept as candidates."""
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        it += 1
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    x_in = best_x
    for x in (lo, hi):
        fx = f(x)
        # an endpoint within tol that ties to rounding wins (flat even likelihood at 0)
        tie = abs(x - x_in) <= tol and fx >= best_f - 1e-12 * max(1.0, abs(best_f))
        if fx > best_f or tie:
            best_x, best_f = x, fx
    return best_x, best_f


def _coarse_candidates(scan: np.ndarray, n: int) -> list[int]:
    padded = np.concatenate(([-np.inf], scan, [-np.inf]))
    peaks = np.flatnonzero((scan >= padded[:-2]) & (scan >= padded[2:]) & np.isfinite(scan))
    if peaks.size == 0:
        peaks = np.arange(scan.size)
    order = np.argsort(-scan[peaks], kind="stable")
    return [int(k) for k in peaks[order[:n]]]


def mle(batch: SampleBatch, config: EstimatorConfig) -> EstimationResult:
    """Maximum-likelihood |delta_omega| over [0, omega_max].

    Coarse scan on ``coarse_grid_points`` uniform points, then golden-section
    refinement in the brackets around the best ``n_candidates`` local maxima.
    """
    assumed = config.assumed_params or batch.config.params
    dt, alpha = _informative(batch)
    omega_max = config.omega_max or default_omega_max(assumed, batch.config.quantization)
    k_pts = config.coarse_grid_points
    step = omega_max / (k_pts - 1)
    max_dt = float(np.abs(dt).max())
    if max_dt > 0 and not step < math.pi / (2.0 * max_dt):
        need = math.floor(2.0 * max_dt * omega_max / math.pi) + 2
        raise ConfigurationError(
            f"coarse grid too sparse for max |dt| = {max_dt:.4g} ns: "
            f"need more than {need} points over [0, {omega_max:.4g}] (have {k_pts})")
    tol = config.refine_tol or 1e-9 * omega_max

    scan = np.zeros(k_pts)
    kernels.loglik_scan(dt, alpha, assumed.nu, 0.0, step, scan)

    def f(w):
        return kernels.loglik_point(dt, alpha, assumed.nu, w)

    best_w, best_f = 0.0, -math.inf
    for k in _coarse_candidates(scan, config.n_candidates):
        lo = max(k - 1, 0) * step
        hi = min(k + 1, k_pts - 1) * step
        w, fw = golden_section_max(f, lo, hi, tol)
        if fw > best_f or (fw == best_f and w < best_w):
            best_w, best_f = w, fw
    best_w = min(max(best_w, 0.0), omega_max)
    full = IMPOSSIBLE_EVENT if best_f == -math.inf else best_f + _constant_part(batch, dt, assumed)
    boundary = best_w <= step or best_w >= omega_max - step
    return EstimationResult(best_w, full, int(dt.size), bool(boundary), omega_max, step)


def repetition_seed(seed: int, index: int) -> int:
    """Seed of Monte Carlo repetition ``index``; independent of execution order."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def _one_repetition(params, n_events, config, seed, index, quantization):
    cfg = SamplerConfig(params, n_events, repetition_seed(seed, index), quantization)
    try:
        return mle(draw_batch(cfg), config).omega_hat
    except NotIdentifiableError:
        return math.nan


def monte_carlo(params: ModelParams, n_events: int, repetitions: int,
                config: Optional[EstimatorConfig] = None, seed: int = 0, *,
                quantization: Optional[float] = None, workers: int = 1) -> MonteCarloSummary:
    """Repeat sample-then-estimate ``repetitions`` times and summarize the estimates.

    ``variance_crb_ratio`` is variance * n_events * F, with F the resolving
    Fisher information at ``params``. The result is identical for any
    ``workers`` count.
    """
    if repetitions < 2:
        raise ConfigurationError("repetitions must be at least 2")
    config = config or EstimatorConfig()
    if config.assumed_params is None:
        config = replace(config, assumed_params=params)

    def run(idx):
        return [_one_repetition(params, n_events, config, seed, i, quantization) for i in idx]

    chunks = [range(s, min(s + 64, repetitions)) for s in range(0, repetitions, 64)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    est = np.array([x for part in parts for x in part])

    ok = est[np.isfinite(est)]
    failed = int(est.size - ok.size)
    if failed > MAX_FAILED_FRACTION * repetitions:
        raise NotIdentifiableError(
            f"{failed} of {repetitions} repetitions had no informative events")
    if ok.size < 2:
        raise NotIdentifiableError("fewer than two successful repetitions")
    fisher = fi_resolving(params).value
    mean = float(ok.mean())
    var = float(ok.var(ddof=1))
    truth = abs(params.delta_omega)
    bias = (mean - truth) / truth if truth > 0 else math.nan
    return MonteCarloSummary(params, n_events, repetitions, mean, var,
                             var * n_events * fisher, bias, seed, failed, fisher)
