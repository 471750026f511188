"""Reproducible synthetic measurement records.

Each trial ``i`` reads the four 64-bit words of Philox counter block ``i``
under the key ``(seed, 0)``. A trial's randomness therefore depends only on
``(seed, i)``, and any split of the trials into chunks, run in any order,
produces the same batch.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.special import ndtri

from .errors import BatchFormatError, ConfigurationError, NotIdentifiableError
from .model import (
    SQRT2,
    DetectionOutcome,
    EventClass,
    ModelParams,
    OnePhoton,
    TwoPhoton,
    ZeroPhoton,
    detection_probabilities,
)
from .output import atomic_write_text

ZERO, ONE, TWO = 0, 1, 2
NO_CLASS = -1
VARIANT_NAMES = {ZERO: "zero", ONE: "one", TWO: "two"}
CLASS_NAMES = {EventClass.BUNCH: "bunch", EventClass.COINCIDENCE: "coincidence"}
CSV_COLUMNS = ("trial_index", "variant", "class", "delta_t_ns")

_CHUNK = 1 << 16
_U53 = 2.0 ** -53
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class SamplerConfig:
    params: ModelParams
    n_events: int
    seed: int = 0
    quantization: Optional[float] = None
    keep_uninformative: bool = True

    def __post_init__(self):
        if int(self.n_events) != self.n_events or self.n_events < 1:
            raise ConfigurationError(f"n_events must be a positive integer, got {self.n_events}")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.quantization is not None and not self.quantization > 0:
            raise ConfigurationError(f"quantization must be positive, got {self.quantization}")


@dataclass(frozen=True)
class SampleBatch:
    """Columnar record of a batch; rows are in increasing trial order.

    ``event_class`` is -1 and ``delta_t`` NaN for zero/one-photon rows.
    """

    config: SamplerConfig
    trial_index: np.ndarray
    variant: np.ndarray
    event_class: np.ndarray
    delta_t: np.ndarray
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.trial_index, self.variant, self.event_class, self.delta_t):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.variant)

    @property
    def n_two_photon(self) -> int:
        return self.counts.get("two", 0)

    def two_photon(self) -> tuple[np.ndarray, np.ndarray]:
        """(delta_t, alpha) arrays of the two-photon rows; alpha is +1 bunch, -1 coincidence."""
        mask = self.variant == TWO
        alpha = np.where(self.event_class[mask] == EventClass.BUNCH, 1.0, -1.0)
        return np.ascontiguousarray(self.delta_t[mask]), alpha

    @property
    def outcomes(self) -> Iterator[DetectionOutcome]:
        for v, c, dt in zip(self.variant, self.event_class, self.delta_t):
            if v == ZERO:
                yield ZeroPhoton()
            elif v == ONE:
                yield OnePhoton()
            else:
                yield TwoPhoton(EventClass(int(c)), float(dt))

    def equals(self, other: "SampleBatch") -> bool:
        return (
            self.counts == other.counts
            and np.array_equal(self.trial_index, other.trial_index)
            and np.array_equal(self.variant, other.variant)
            and np.array_equal(self.event_class, other.event_class)
            and np.array_equal(self.delta_t, other.delta_t, equal_nan=True)
        )


def _uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms in (0, 1), shape (stop - start, 4); row i comes from counter block start + i."""
    key = np.array([seed, 0], dtype=np.uint64)
    counter = np.array([start, 0, 0, 0], dtype=np.uint64)
    raw = np.random.Philox(key=key, counter=counter).random_raw(4 * (stop - start))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5).reshape(-1, 4) * _U53


def _draw_chunk(config: SamplerConfig, start: int, stop: int):
    p = config.params
    p0, p1, _ = detection_probabilities(p)
    u = _uniforms(int(config.seed), start, stop)

    variant = np.full(stop - start, TWO, dtype=np.int8)
    variant[u[:, 0] < p0 + p1] = ONE
    variant[u[:, 0] < p0] = ZERO
    two = variant == TWO

    # class marginal of the two-photon law is exactly C(dt): N(0, 2 tau^2)
    dt = SQRT2 * p.tau * ndtri(u[:, 1])
    p_bunch = 0.5 * (1.0 + p.nu * np.cos(p.delta_omega * dt))
    cls = np.where(u[:, 2] < p_bunch, EventClass.BUNCH, EventClass.COINCIDENCE).astype(np.int8)
    if config.quantization is not None:
        q = config.quantization
        dt = np.round(dt / q) * q

    cls[~two] = NO_CLASS
    dt[~two] = np.nan
    return variant, cls, dt


def draw_batch(config: SamplerConfig, workers: int = 1) -> SampleBatch:
    """Draw ``config.n_events`` independent repetitions of the experiment.

    The result does not depend on ``workers``.
    """
    n = int(config.n_events)
    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _draw_chunk(config, *b), bounds))
    else:
        parts = [_draw_chunk(config, *b) for b in bounds]
    variant = np.concatenate([x[0] for x in parts])
    cls = np.concatenate([x[1] for x in parts])
    dt = np.concatenate([x[2] for x in parts])
    trial = np.arange(n, dtype=np.int64)

    counts = _tally(variant)
    if not config.keep_uninformative:
        keep = variant == TWO
        trial, variant, cls, dt = trial[keep], variant[keep], cls[keep], dt[keep]
    return SampleBatch(config, trial, variant, cls, dt, counts)


def _tally(variant: np.ndarray) -> dict:
    c = np.bincount(variant.astype(np.intp), minlength=3)
    return {"zero": int(c[ZERO]), "one": int(c[ONE]), "two": int(c[TWO])}


def empirical_histogram(batch: SampleBatch, bins: int, range: tuple[float, float]):
    """Per-class binned frequencies of the two-photon delays.

    Frequencies are normalized by the total number of two-photon events, so
    they sum to the fraction of those events that fall inside ``range``.

    Returns ``(edges, {EventClass: frequencies})``.
    """
    if bins < 2:
        raise ConfigurationError("need at least 2 bins")
    lo, hi = range
    if not hi > lo:
        raise ConfigurationError(f"degenerate histogram range {range}")
    dt, alpha = batch.two_photon()
    if dt.size == 0:
        raise NotIdentifiableError("no two-photon events")
    edges = np.linspace(lo, hi, bins + 1)
    out = {}
    for cls, a in ((EventClass.BUNCH, 1.0), (EventClass.COINCIDENCE, -1.0)):
        h, _ = np.histogram(dt[alpha == a], bins=edges)
        out[cls] = h / dt.size
    return edges, out


# ---------------------------------------------------------------- CSV I/O


def batch_to_csv(batch: SampleBatch) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for i, v, c, dt in zip(batch.trial_index, batch.variant, batch.event_class, batch.delta_t):
        if v == TWO:
            w.writerow((int(i), "two", CLASS_NAMES[EventClass(int(c))], repr(float(dt))))
        else:
            w.writerow((int(i), VARIANT_NAMES[int(v)], "", ""))
    return buf.getvalue()


def write_batch_csv(batch: SampleBatch, path) -> None:
    atomic_write_text(path, batch_to_csv(batch))


def read_batch_csv(path_or_text, params: ModelParams, *, seed: int = 0,
                   quantization: Optional[float] = None,
                   n_events: Optional[int] = None) -> SampleBatch:
    """Parse a batch CSV; raises :class:`BatchFormatError` with the offending line."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise BatchFormatError(f"expected header {','.join(CSV_COLUMNS)}, got {header}", line=1)

    names = {v: k for k, v in VARIANT_NAMES.items()}
    classes = {v: k for k, v in CLASS_NAMES.items()}
    trial, variant, cls, dts = [], [], [], []
    last = -1
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise BatchFormatError(f"expected 4 fields, got {len(row)}", line=lineno)
        idx_s, var_s, cls_s, dt_s = (x.strip() for x in row)
        try:
            idx = int(idx_s)
        except ValueError:
            raise BatchFormatError(f"non-integer trial_index {idx_s!r}", line=lineno) from None
        if idx <= last:
            raise BatchFormatError("trial_index must be strictly increasing", line=lineno)
        last = idx
        if var_s not in names:
            raise BatchFormatError(f"unknown variant {var_s!r}", line=lineno)
        v = names[var_s]
        if v == TWO:
            if cls_s not in classes:
                raise BatchFormatError(f"unknown class {cls_s!r}", line=lineno)
            try:
                dt = float(dt_s)
            except ValueError:
                raise BatchFormatError(f"non-numeric delta_t_ns {dt_s!r}", line=lineno) from None
            if not math.isfinite(dt):
                raise BatchFormatError(f"non-finite delta_t_ns {dt_s!r}", line=lineno)
            c = int(classes[cls_s])
        else:
            if cls_s or dt_s:
                raise BatchFormatError(f"{var_s}-photon row must not carry class or delay", line=lineno)
            c, dt = NO_CLASS, math.nan
        trial.append(idx)
        variant.append(v)
        cls.append(c)
        dts.append(dt)

    variant_arr = np.array(variant, dtype=np.int8)
    if n_events is None:
        n_events = max(last + 1, 1)
    config = SamplerConfig(params, int(n_events), seed, quantization,
                           keep_uninformative=len(variant) == n_events)
    return SampleBatch(
        config,
        np.array(trial, dtype=np.int64),
        variant_arr,
        np.array(cls, dtype=np.int8),
        np.array(dts, dtype=np.float64),
        _tally(variant_arr),
    )
