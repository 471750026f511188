"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides, and writes its outputs plus a ``manifest.json`` into ``--out``.
Wall-clock timings go to ``timings.json`` so that every other file is
byte-identical across reruns with the same config and seed.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import kernels
from .errors import BatchFormatError, ConfigurationError, NotIdentifiableError, QuadratureError
from .estimator import SUMMARY_COLUMNS, EstimatorConfig, mle, monte_carlo
from .fisher import (
    beta_mean,
    fi_contribution,
    fi_contribution_bound,
    fi_nonresolving,
    fi_resolving,
    qfi,
)
from .model import EventClass, ModelParams, density_dt, envelope_c
from .output import atomic_write_json, atomic_write_text
from .sampler import SamplerConfig, draw_batch, read_batch_csv, write_batch_csv
from .svg import line_plot

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
FAST_REPETITIONS = 1000

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}
_num_list = {"type": "array", "items": _num, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "nu": {"type": "number", "minimum": 0, "maximum": 1},
                "gamma": {"type": "number", "minimum": 0, "maximum": 1},
                "delta_omega": _num,
                "envelope": {"enum": ["gaussian"]},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nu": _num_list,
                "tau_domega": _num_list,
                "n_events": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_events": {"type": "integer", "minimum": 1},
                "quantization": _num_or_null,
                "keep_uninformative": {"type": "boolean"},
            },
        },
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "omega_max": _num_or_null,
                "coarse_grid_points": {"type": "integer", "minimum": 3},
                "refine_tol": _num_or_null,
                "n_candidates": {"type": "integer", "minimum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 2},
                "span_tau": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "repetitions": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output_dir": {"type": "string"},
        "format": {"enum": ["csv", "json", "svg"]},
    },
}

BASE_DEFAULTS = {
    "model": {"tau": 1.0, "nu": 1.0, "gamma": 1.0, "delta_omega": 4.0, "envelope": "gaussian"},
    "sweep": {},
    "sampler": {"n_events": 1000, "quantization": None, "keep_uninformative": True},
    "estimator": {"omega_max": None, "coarse_grid_points": 2048, "refine_tol": None, "n_candidates": 3},
    "grid": {"points": 1201, "span_tau": 6.0},
    "repetitions": 10000,
    "seed": 0,
    "output_dir": "out",
    "format": "csv",
}

COMMAND_DEFAULTS = {
    "density": {},
    "contribution": {"sweep": {"nu": [1.0, 0.9, 0.8, 0.7]}},
    "fisher-compare": {
        "model": {"gamma": 1.0},
        "sweep": {
            "nu": [1.0, 0.9, 0.8],
            "tau_domega": [float(1.0 / x) for x in np.geomspace(0.02, 5.0, 121)],
        },
    },
    "montecarlo": {
        "sweep": {"nu": [1.0, 0.7], "tau_domega": [0.5, 1.0, 3.0], "n_events": [10, 30, 100, 300, 1000]},
    },
    "sample": {"model": {"nu": 1.0, "delta_omega": 1.0}},
    "estimate": {"model": {"nu": 1.0, "delta_omega": 1.0}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = _merge(BASE_DEFAULTS, COMMAND_DEFAULTS.get(command, {}))
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        try:
            jsonschema.validate(user, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigurationError(f"config {args.config}: {path}: {exc.message}") from None
        cfg = _merge(cfg, user)

    for flag, section, key in (("tau", "model", "tau"), ("nu", "model", "nu"),
                               ("gamma", "model", "gamma"), ("delta_omega", "model", "delta_omega"),
                               ("n_events", "sampler", "n_events"),
                               ("quantization", "sampler", "quantization"),
                               ("omega_max", "estimator", "omega_max"),
                               ("grid_points", "grid", "points")):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[section][key] = val
    for flag, key in (("nu_list", "nu"), ("tau_domega_list", "tau_domega"), ("n_list", "n_events")):
        val = getattr(args, flag, None)
        if val:
            cfg["sweep"][key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.format is not None:
        cfg["format"] = args.format
    if getattr(args, "repetitions", None) is not None:
        cfg["repetitions"] = args.repetitions
    elif args.fast:
        cfg["repetitions"] = FAST_REPETITIONS
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"{path}: {exc.message}") from None
    return cfg


def model_from(cfg: dict, **override) -> ModelParams:
    m = {k: v for k, v in cfg["model"].items() if k != "envelope"}
    m.update(override)
    return ModelParams(**m)


def estimator_from(cfg: dict, assumed: ModelParams | None = None) -> EstimatorConfig:
    return EstimatorConfig(assumed_params=assumed, **cfg["estimator"])


# ------------------------------------------------------------------ output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


class Outputs:
    """Collects the files a command writes and emits the manifest."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.dir = Path(cfg["output_dir"])
        self.files: list[str] = []
        self.errors: list[dict] = []
        self.t0 = time.perf_counter()
        self.timings: dict = {}
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"output directory {self.dir} is not writable: {exc}") from None

    def text(self, name: str, text: str):
        atomic_write_text(self.dir / name, text)
        self.files.append(name)

    def json(self, name: str, obj):
        atomic_write_json(self.dir / name, _jsonable(obj))
        self.files.append(name)

    def table(self, stem: str, columns, rows, *, plot=None):
        """Write a table as CSV (or JSON for ``format=json``); ``svg`` adds a plot."""
        fmt = self.cfg["format"]
        rows = [list(r) for r in rows]
        if fmt == "json":
            self.json(f"{stem}.json", {"columns": list(columns), "rows": rows})
        else:
            self.text(f"{stem}.csv", csv_text(columns, rows))
        if fmt == "svg" and plot is not None:
            self.text(f"{stem}.svg", plot())

    def finish(self, extra: dict | None = None):
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "seed": self.cfg["seed"],
            "kernel_backend": kernels.BACKEND,
            "versions": _versions(),
            "outputs": sorted(self.files),
            "errors": self.errors,
        }
        if extra:
            manifest.update(extra)
        atomic_write_json(self.dir / "manifest.json", _jsonable(manifest))
        self.timings["total_seconds"] = time.perf_counter() - self.t0
        atomic_write_json(self.dir / "timings.json", self.timings)


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"freqshift": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _grid(cfg: dict, tau: float) -> np.ndarray:
    span = cfg["grid"]["span_tau"] * tau
    return np.linspace(-span, span, cfg["grid"]["points"])


# ---------------------------------------------------------------- commands


def cmd_density(cfg: dict) -> int:
    out = Outputs("density", cfg)
    p = model_from(cfg)
    t = _grid(cfg, p.tau)
    pb = density_dt(EventClass.BUNCH, t, p)
    pc = density_dt(EventClass.COINCIDENCE, t, p)
    env = envelope_c(t, p)
    out.table("density", ("delta_t", "p_bunch", "p_coinc", "envelope"), zip(t, pb, pc, env),
              plot=lambda: line_plot([("bunch", t, pb), ("coincidence", t, pc), ("C(dt)", t, env)],
                                     xlabel="delta_t [ns]", ylabel="density [1/ns]",
                                     title=f"nu={p.nu}, tau*dw={p.tau_domega:g}"))
    out.finish()
    return EXIT_OK


def cmd_contribution(cfg: dict) -> int:
    out = Outputs("contribution", cfg)
    base = model_from(cfg)
    t = _grid(cfg, base.tau)
    series = []
    for nu in cfg["sweep"]["nu"]:
        p = model_from(cfg, nu=nu)
        f = fi_contribution(t, p)
        bound = fi_contribution_bound(t, p)
        series += [(f"f nu={nu:g}", t, f), (f"bound nu={nu:g}", t, bound)]
        out.table(f"contribution_nu{nu:g}", ("delta_t", "f_nu", "envelope_bound"), zip(t, f, bound),
                  plot=lambda s=series[-2:]: line_plot(s, xlabel="delta_t [ns]", ylabel="f_nu [ns]"))
    out.finish()
    return EXIT_OK


def cmd_fisher_compare(cfg: dict) -> int:
    out = Outputs("fisher-compare", cfg)
    tau = cfg["model"]["tau"]
    h = qfi(tau).value
    rows = []
    for nu in cfg["sweep"]["nu"]:
        asym = 2.0 * tau * tau * beta_mean(nu)
        for tdw in sorted(cfg["sweep"]["tau_domega"], reverse=True):
            p = model_from(cfg, nu=nu, delta_omega=tdw / tau)
            try:
                fr = fi_resolving(p).value
            except QuadratureError as exc:
                raise QuadratureError(f"fisher-compare at nu={nu}, tau_domega={tdw}: {exc}",
                                      nodes=exc.nodes, est_abs_error=exc.est_abs_error,
                                      tolerance=exc.tolerance) from exc
            fnr = fi_nonresolving(p).value
            rows.append((1.0 / tdw, nu, fr, fnr, h, asym))

    def plot():
        series = []
        for nu in cfg["sweep"]["nu"]:
            sel = [r for r in rows if r[1] == nu]
            x = [r[0] for r in sel]
            series.append((f"resolving nu={nu:g}", x, [r[2] for r in sel]))
            series.append((f"non-resolving nu={nu:g}", x, [r[3] for r in sel]))
        x = [r[0] for r in rows]
        series.append(("QFI", [min(x), max(x)], [h, h]))
        return line_plot(series, xlabel="1/(tau*dw)", ylabel="Fisher information [ns^2]")

    out.table("fisher_compare",
              ("inv_tau_domega", "nu", "fi_resolving", "fi_nonresolving", "qfi", "asymptote"),
              rows, plot=plot)
    out.finish()
    return EXIT_OK


def _mc_point(cfg, nu, tdw, n):
    tau = cfg["model"]["tau"]
    p = model_from(cfg, nu=nu, delta_omega=tdw / tau)
    t0 = time.perf_counter()
    try:
        s = monte_carlo(p, n, cfg["repetitions"], estimator_from(cfg), seed=cfg["seed"],
                        quantization=cfg["sampler"]["quantization"])
        row = [s.row()[c] for c in SUMMARY_COLUMNS]
        err = None
    except (NotIdentifiableError, QuadratureError, ConfigurationError) as exc:
        row = [nu, tdw, n, cfg["repetitions"], math.nan, math.nan, math.nan, math.nan,
               cfg["repetitions"], cfg["seed"]]
        err = {"nu": nu, "tau_domega": tdw, "n_events": n, "error": str(exc)}
    return row, err, time.perf_counter() - t0


def cmd_montecarlo(cfg: dict, workers: int = 1) -> int:
    out = Outputs("montecarlo", cfg)
    sw = cfg["sweep"]
    points = [(nu, tdw, n) for nu in sw["nu"] for tdw in sw["tau_domega"] for n in sw["n_events"]]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda pt: _mc_point(cfg, *pt), points))
    else:
        results = [_mc_point(cfg, *pt) for pt in points]

    rows = []
    for (nu, tdw, n), (row, err, secs) in zip(points, results):
        rows.append(row)
        out.timings[f"nu={nu},tau_domega={tdw},n={n}"] = secs
        if err:
            out.errors.append(err)
        out.json(f"points/nu{nu:g}_tdw{tdw:g}_n{n}.json", dict(zip(SUMMARY_COLUMNS, row)))

    def plot():
        series = []
        for nu in sw["nu"]:
            for tdw in sw["tau_domega"]:
                sel = [r for r in rows if r[0] == nu and r[1] == tdw]
                series.append((f"nu={nu:g} tdw={tdw:g}", [math.log10(r[2]) for r in sel],
                               [r[6] for r in sel]))
        return line_plot(series, xlabel="log10 N", ylabel="Var * N * F")

    out.table("montecarlo", SUMMARY_COLUMNS, rows, plot=plot)
    out.finish({"points": len(points)})
    return EXIT_NUMERIC if out.errors else EXIT_OK


def cmd_sample(cfg: dict) -> int:
    out = Outputs("sample", cfg)
    p = model_from(cfg)
    sc = SamplerConfig(p, cfg["sampler"]["n_events"], cfg["seed"], cfg["sampler"]["quantization"],
                       cfg["sampler"]["keep_uninformative"])
    batch = draw_batch(sc)
    write_batch_csv(batch, out.dir / "batch.csv")
    out.files.append("batch.csv")
    out.finish({"counts": batch.counts})
    return EXIT_OK


def cmd_estimate(cfg: dict, input_path: str) -> int:
    out = Outputs("estimate", cfg)
    p = model_from(cfg)
    batch = read_batch_csv(input_path, p, seed=cfg["seed"],
                           quantization=cfg["sampler"]["quantization"])
    res = mle(batch, estimator_from(cfg, p))
    out.json("estimate.json", {
        "omega_hat": res.omega_hat,
        "log_likelihood": res.log_likelihood,
        "n_informative": res.n_informative,
        "boundary_flag": res.boundary_flag,
        "omega_max": res.omega_max,
        "grid_step": res.grid_step,
        "counts": batch.counts,
    })
    out.finish({"input": str(input_path)})
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json", "svg"))
    common.add_argument("--fast", action="store_true",
                        help=f"desk-scale preset ({FAST_REPETITIONS} Monte Carlo repetitions)")
    common.add_argument("--tau", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--delta-omega", dest="delta_omega", type=float)
    common.add_argument("--grid-points", dest="grid_points", type=int)

    parser = argparse.ArgumentParser(prog="freqshift", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("density", parents=[common], help="bunch/coincidence delay densities")
    c = sub.add_parser("contribution", parents=[common], help="per-delay Fisher contributions")
    c.add_argument("--nu-list", dest="nu_list", type=float, nargs="+")
    f = sub.add_parser("fisher-compare", parents=[common], help="resolving vs non-resolving FI")
    f.add_argument("--nu-list", dest="nu_list", type=float, nargs="+")
    f.add_argument("--tau-domega", dest="tau_domega_list", type=float, nargs="+")
    m = sub.add_parser("montecarlo", parents=[common], help="MLE variance vs Cramer-Rao sweep")
    m.add_argument("--nu-list", dest="nu_list", type=float, nargs="+")
    m.add_argument("--tau-domega", dest="tau_domega_list", type=float, nargs="+")
    m.add_argument("--n-list", dest="n_list", type=int, nargs="+")
    m.add_argument("--repetitions", type=int)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--quantization", type=float)
    m.add_argument("--omega-max", dest="omega_max", type=float)
    s = sub.add_parser("sample", parents=[common], help="write a synthetic batch CSV")
    s.add_argument("--n-events", dest="n_events", type=int)
    s.add_argument("--quantization", type=float)
    e = sub.add_parser("estimate", parents=[common], help="MLE from a batch CSV")
    e.add_argument("--input", required=True, help="batch CSV written by 'sample'")
    e.add_argument("--quantization", type=float)
    e.add_argument("--omega-max", dest="omega_max", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        if args.command == "density":
            return cmd_density(cfg)
        if args.command == "contribution":
            return cmd_contribution(cfg)
        if args.command == "fisher-compare":
            return cmd_fisher_compare(cfg)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg, workers=max(1, args.workers))
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.input)
    except (ConfigurationError, BatchFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, NotIdentifiableError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
