"""Compare the compiled and numpy log-likelihood kernels.

    python3 benchmarks/bench_kernels.py --events 1000 --grid 2048
"""
import argparse
import json
import sys
import timeit

import numpy as np

from freqshift import ModelParams, SamplerConfig, draw_batch
from freqshift import _pykernels

try:
    from freqshift import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=1000)
    ap.add_argument("--grid", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    p = ModelParams(tau=1.0, nu=0.7, delta_omega=1.0)
    dt, alpha = draw_batch(SamplerConfig(p, args.events, seed=args.seed)).two_photon()
    step = (np.pi / (4 * p.tau / 100)) / (args.grid - 1)

    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the numpy kernels only", file=sys.stderr)

    results = {}
    ref = None
    for name, mod in backends.items():
        out = np.zeros(args.grid)

        def scan(mod=mod, out=out):
            out[:] = 0.0
            mod.loglik_scan(dt, alpha, p.nu, 0.0, step, out)

        scan()
        if ref is None:
            ref = out.copy()
        results[name] = {
            "scan_s": best_of(scan, args.repeat, 1),
            "point_s": best_of(lambda mod=mod: mod.loglik_point(dt, alpha, p.nu, 1.0), args.repeat, 200),
            "max_abs_diff": float(np.max(np.abs(out - ref))),
        }

    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    print(f"{dt.size} events, {args.grid} grid points")
    print(f"{'backend':<8} {'scan [ms]':>10} {'point [us]':>11} {'max |diff|':>11}")
    for name, r in results.items():
        print(f"{name:<8} {r['scan_s'] * 1e3:>10.2f} {r['point_s'] * 1e6:>11.1f} {r['max_abs_diff']:>11.2e}")
    if "cython" in results:
        print(f"scan speedup: {results['python']['scan_s'] / results['cython']['scan_s']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
