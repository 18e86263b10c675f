"""Time the compiled and pure-Python multiplier solvers on the same inputs.

Usage: ``python benchmarks/bench_el_core.py [--support 7 50 200] [--calls 2000]``.
Prints calls per second for each backend and the speedup, after checking that
both return the same log ratio.
"""

import argparse
import timeit

import numpy as np

from fel._backend import IMPLEMENTATIONS
from fel.empirical_likelihood import LAMBDA_DELTA, LAMBDA_TOL


def make_case(rng, n):
    k = rng.uniform(0.05, 1.0, n)
    v = rng.normal(size=n)
    mu = float(np.average(v, weights=k) + 0.3 * v.std() / np.sqrt(n))
    return k, v, mu


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--support", type=int, nargs="+", default=[7, 50, 200])
    ap.add_argument("--calls", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if "compiled" not in IMPLEMENTATIONS:
        print("compiled extension not built; timing the Python solver only")
    rng = np.random.default_rng(args.seed)
    print(f"{'support':>8} {'backend':>9} {'calls/s':>12} {'speedup':>8}")
    for n in args.support:
        k, v, mu = make_case(rng, n)
        results, rates = {}, {}
        for name, mod in IMPLEMENTATIONS.items():
            results[name] = mod.profile_log_ratio(k, v, mu, LAMBDA_TOL, LAMBDA_DELTA)[0]
            secs = min(timeit.repeat(
                lambda: mod.profile_log_ratio(k, v, mu, LAMBDA_TOL, LAMBDA_DELTA),
                number=args.calls, repeat=3))
            rates[name] = args.calls / secs
        vals = list(results.values())
        if max(vals) - min(vals) > 1e-10 * max(1.0, abs(vals[0])):
            raise SystemExit(f"backends disagree at support {n}: {results}")
        for name, rate in rates.items():
            speed = rate / rates["python"]
            print(f"{n:>8} {name:>9} {rate:>12.0f} {speed:>7.1f}x")


if __name__ == "__main__":
    main()
