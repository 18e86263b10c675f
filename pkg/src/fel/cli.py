"""Command-line front end: ``fel fit | interval | simulate | coverage``.

Every run writes ``<out>.json``, a report holding the fully resolved
configuration, and ``<out>.csv``, a plot-ready table. ``simulate`` writes the
generated curves to ``<out>.csv`` and their true regression values to
``<out>.truth.csv``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _backend
from . import errors as _errors
from .curves import FunctionalDataset, Grid, SemiMetricSpec
from .datafiles import load_curves, read_series, series_to_curves, write_curves
from .errors import FELError, InvalidArgument, InvalidConfig, MissingColumn
from .intervals import METHODS, STUDY_METHODS, IntervalBuilder, parse_methods
from .kernel_smoothing import Kernel, KernelSmoother, SmootherConfig, estimate_from_profile
from .plm import profile_beta
from .simulation import (SimConfig, generate_curves, replication_rng, run_coverage_study,
                         simulate_dataset)

__all__ = ["main", "build_parser", "parse_bandwidth"]

DEFAULT_TRAIN_SIZE = 165


def parse_bandwidth(text: str) -> Optional[float]:
    """``cv`` -> None, ``fixed:h`` -> h."""
    text = text.strip()
    if text == "cv":
        return None
    if text.startswith("fixed:"):
        try:
            h = float(text[len("fixed:"):])
        except ValueError:
            raise InvalidArgument(f"bad bandwidth {text!r}") from None
        if not (math.isfinite(h) and h > 0):
            raise InvalidArgument(f"bandwidth must be positive, got {text!r}")
        return h
    raise InvalidArgument(f"bandwidth must be 'cv' or 'fixed:h', got {text!r}")


def _clean(obj):
    """Make ``obj`` strict JSON: non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), indent=1, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _write_table(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow(["" if isinstance(v, float) and not math.isfinite(v) else
                          repr(v) if isinstance(v, float) else v for v in row])


def _outputs(args) -> tuple[Path, Path]:
    prefix = Path(args.out or f"fel-{args.command}")
    if prefix.suffix in (".json", ".csv"):
        prefix = prefix.with_suffix("")
    if prefix.parent and not prefix.parent.exists():
        raise InvalidArgument(f"output directory {prefix.parent} does not exist")
    return prefix.with_name(prefix.name + ".json"), prefix.with_name(prefix.name + ".csv")


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InvalidArgument(f"no such file: {path}")
    return p


# ---------------------------------------------------------------- data loading

def _load_split(args) -> tuple[FunctionalDataset, FunctionalDataset, dict]:
    if bool(args.data) == bool(args.series):
        raise InvalidArgument("give exactly one of --data and --series")
    if args.data:
        full = load_curves(_existing(args.data), require_response=True)
        source = {"data": args.data}
    else:
        series = read_series(_existing(args.series))
        full = series_to_curves(series, args.window, args.horizon, args.stride)
        source = {"series": args.series, "window": args.window,
                  "horizon": args.horizon, "stride": args.stride}
    if args.query:
        query = load_curves(_existing(args.query))
        source["query"] = args.query
        return full, query, source
    n = len(full)
    if args.test_size is not None:
        n_train = n - args.test_size
    elif args.train_size is not None:
        n_train = args.train_size
    else:
        n_train = DEFAULT_TRAIN_SIZE if args.data else n - 1
    if not 2 <= n_train < n:
        raise InvalidArgument(
            f"split leaves {n_train} training and {n - n_train} query samples out of {n}; "
            "adjust --train-size/--test-size or pass --query"
        )
    source.update(train_size=n_train, test_size=n - n_train)
    return full.subset(np.arange(n_train)), full.subset(np.arange(n_train, n)), source


def _smoother_config(args) -> SmootherConfig:
    return SmootherConfig(kernel=Kernel(args.kernel),
                          semimetric=SemiMetricSpec.parse(args.semimetric),
                          bandwidth=parse_bandwidth(args.bandwidth),
                          grid_size=args.grid_size,
                          loo_fitted=args.loo_fitted)


class _Fit:
    """Training fit; with linear covariates the smoother runs on partial residuals."""

    def __init__(self, train: FunctionalDataset, cfg: SmootherConfig):
        self.beta = None
        if train.n_linear:
            plm = profile_beta(train, cfg)
            self.beta = plm.beta_hat
            train, cfg = plm.partial_dataset(train), plm.smoother_cfg
        self.smoother = KernelSmoother(train, cfg)

    def offsets(self, query: FunctionalDataset) -> np.ndarray:
        if self.beta is None:
            return np.zeros(len(query))
        if query.n_linear != self.beta.size:
            raise MissingColumn(
                f"query curves carry {query.n_linear} linear covariates, the model has {self.beta.size}"
            )
        return query.linear_covariates @ self.beta

    def config(self) -> dict:
        cfg = self.smoother.cfg
        out = {"kernel": cfg.kernel.value, "semimetric": cfg.semimetric.describe(),
               "bandwidth": self.smoother.h, "loo_fitted": cfg.loo_fitted}
        if self.beta is not None:
            out["beta_hat"] = [float(b) for b in self.beta]
        return out


def _query_ids(query: FunctionalDataset) -> tuple:
    return query.ids or tuple(f"q{i + 1}" for i in range(len(query)))


def _base_config(args, source: dict) -> dict:
    return {"command": args.command, **source, "bandwidth_rule": args.bandwidth,
            "grid_size": args.grid_size, "backend": _backend.BACKEND}


def _observed(query: FunctionalDataset, i: int) -> float:
    return float(query.responses[i]) if query.responses is not None else float("nan")


# ---------------------------------------------------------------- commands

def _cmd_fit(args) -> tuple[int, list]:
    train, query, source = _load_split(args)
    fit = _Fit(train, _smoother_config(args))
    offsets = fit.offsets(query)
    ids = _query_ids(query)
    records, skips = [], []
    for i, prof in enumerate(fit.smoother.profiles(query)):
        rec = {"id": ids[i], "observed": _observed(query, i)}
        if prof.effective_count == 0:
            rec.update(estimate=float("nan"), skipped="EmptyNeighborhood",
                       min_distance=prof.min_distance)
            skips.append(("EmptyNeighborhood", 5))
        else:
            rec["estimate"] = estimate_from_profile(prof, fit.smoother.y) + float(offsets[i])
        records.append(rec)
    json_path, csv_path = _outputs(args)
    config = {**_base_config(args, source), **fit.config()}
    _write_json(json_path, {"config": config, "records": records,
                            "skipped": [r["id"] for r in records if "skipped" in r]})
    order = sorted(records, key=lambda r: (math.isnan(r["estimate"]), r["estimate"]))
    _write_table(csv_path, ["id", "estimate", "observed"],
                 ([r["id"], r["estimate"], r["observed"]] for r in order))
    print(f"# h = {fit.smoother.h:.6g}, {len(records)} queries")
    for r in records:
        est = "skipped" if "skipped" in r else f"{r['estimate']:.6g}"
        print(f"{r['id']}\t{est}")
    return len(records), skips


def _cmd_interval(args) -> tuple[int, list]:
    methods = parse_methods(args.methods)
    if not 0.0 < args.alpha < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1), got {args.alpha}")
    train, query, source = _load_split(args)
    fit = _Fit(train, _smoother_config(args))
    offsets = fit.offsets(query)
    ids = _query_ids(query)
    builder = IntervalBuilder(fit.smoother, args.alpha)
    rows = builder.build_all(query, methods)
    records, skips = [], []
    for i, row in enumerate(rows):
        rec = {"id": ids[i], "observed": _observed(query, i), "methods": {}}
        for m in methods:
            res = row[m]
            if isinstance(res, FELError):
                rec["methods"][m] = {"skipped": type(res).__name__, "message": str(res)}
                skips.append((type(res).__name__, res.exit_code))
            else:
                res = res.shifted(float(offsets[i]))
                rec["methods"][m] = {"estimate": res.estimate, "lo": res.lo, "hi": res.hi,
                                     "length": res.length}
        ests = [v["estimate"] for v in rec["methods"].values() if "estimate" in v]
        plain = rec["methods"].get("el") or rec["methods"].get("normal") or {}
        rec["estimate"] = plain.get("estimate", ests[0] if ests else float("nan"))
        records.append(rec)
    json_path, csv_path = _outputs(args)
    try:
        sigma2 = builder.sigma2.value
    except FELError:
        sigma2 = None
    config = {**_base_config(args, source), **fit.config(), "alpha": args.alpha,
              "methods": list(methods), "sigma2_hat": sigma2}
    _write_json(json_path, {
        "config": config, "records": records,
        "skipped": [r["id"] for r in records
                    if any("skipped" in v for v in r["methods"].values())],
    })
    header = ["id", "estimate", "observed"]
    for m in methods:
        header += [f"{m}_estimate", f"{m}_lo", f"{m}_hi"]
    order = sorted(records, key=lambda r: (math.isnan(r["estimate"]), r["estimate"]))
    nan = float("nan")
    _write_table(csv_path, header, (
        [r["id"], r["estimate"], r["observed"]]
        + [r["methods"][m].get(key, nan) for m in methods for key in ("estimate", "lo", "hi")]
        for r in order
    ))
    print(f"# h = {fit.smoother.h:.6g}, level {1 - args.alpha:g}")
    for r in records:
        for m in methods:
            v = r["methods"][m]
            if "skipped" in v:
                print(f"{r['id']}\t{m}\tskipped ({v['skipped']})")
            else:
                print(f"{r['id']}\t{m}\t{v['estimate']:.6g}\t[{v['lo']:.6g}, {v['hi']:.6g}]")
    return len(records) * len(methods), skips


def _cmd_simulate(args) -> tuple[int, list]:
    if args.n < 1:
        raise InvalidArgument("--n must be >= 1")
    if not args.sigma2 >= 0:
        raise InvalidArgument("--sigma2 must be >= 0")
    if args.grid_points < 3:
        raise InvalidArgument("--grid-points must be >= 3")
    grid = Grid.uniform(-1.0, 1.0, args.grid_points)
    beta = None
    if args.beta:
        beta = np.array([float(b) for b in args.beta.split(",")])
    n_linear = 0 if beta is None else beta.size
    rng = replication_rng(args.seed, 0)
    # Draw the curve parameters up front so the truth file can carry them.
    state = rng.bit_generator.state
    _, omega, a, b = generate_curves(rng, grid, args.n)
    rng.bit_generator.state = state
    ds, r = simulate_dataset(rng, grid, args.n, args.sigma2, n_linear, beta)
    ds = FunctionalDataset(ds.grid, ds.values, ds.responses, ds.linear_covariates,
                           tuple(f"s{i + 1}" for i in range(args.n)))
    json_path, csv_path = _outputs(args)
    truth_path = csv_path.with_name(csv_path.stem + ".truth.csv")
    write_curves(ds, csv_path)
    _write_table(truth_path, ["id", "r", "omega", "a", "b"],
                 ([ds.ids[i], float(r[i]), float(omega[i]), float(a[i]), float(b[i])]
                  for i in range(args.n)))
    _write_json(json_path, {"config": {
        "command": "simulate", "n": args.n, "sigma2": args.sigma2, "seed": args.seed,
        "grid_points": args.grid_points,
        "beta": None if beta is None else [float(x) for x in beta],
        "curves": str(csv_path), "truth": str(truth_path)}})
    print(f"wrote {args.n} curves to {csv_path} and the truth to {truth_path}")
    return args.n, []


_SIM_FIELDS = {f.name for f in fields(SimConfig)}


def _scenarios(args) -> list[SimConfig]:
    if args.config:
        try:
            raw = json.loads(_existing(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{args.config}: {exc}") from None
        items = raw.get("scenarios", [raw]) if isinstance(raw, dict) else raw
        out = []
        for item in items:
            unknown = set(item) - _SIM_FIELDS
            if unknown:
                raise InvalidConfig(f"unknown scenario keys {sorted(unknown)}")
            item = dict(item)
            if "methods" in item:
                item["methods"] = tuple(parse_methods(item["methods"]))
            out.append(SimConfig(**item))
        if not out:
            raise InvalidConfig(f"{args.config} defines no scenarios")
        return out
    return [SimConfig(n=args.n, sigma2=args.sigma2, n_test=args.n_test, n_reps=args.reps,
                      grid_points=args.grid_points, seed=args.seed,
                      methods=parse_methods(args.methods), alpha=args.alpha,
                      kernel=args.kernel, semimetric=args.semimetric,
                      h_grid_size=args.grid_size)]


def _cmd_coverage(args) -> tuple[int, list]:
    reports = [run_coverage_study(cfg, args.threads) for cfg in _scenarios(args)]
    json_path, csv_path = _outputs(args)
    _write_json(json_path, {"command": "coverage", "backend": _backend.BACKEND,
                            "scenarios": [r.to_dict() for r in reports]})
    rows, skips, total = [], [], 0
    for k, rep in enumerate(reports):
        sc = rep.scenario
        for m, s in rep.methods.items():
            rows.append([k, sc["n"], sc["sigma2"], sc["n_reps"], m, s.coverage,
                         s.avg_length, s.n_used, s.n_skipped])
            total += s.n_used + s.n_skipped
        for rec in rep.records:
            for m in rep.methods:
                name = rec[m].get("skipped")
                if name:
                    skips.append((name, getattr(_errors, name, FELError).exit_code))
    _write_table(csv_path, ["scenario", "n", "sigma2", "n_reps", "method", "coverage",
                            "avg_length", "n_used", "n_skipped"], rows)
    print(f"{'n':>5} {'sigma2':>7} {'method':<17} {'coverage':>8} {'length':>8} {'skipped':>7}")
    for row in rows:
        print(f"{row[1]:>5} {row[2]:>7g} {row[4]:<17} {row[5]:>8.3f} {row[6]:>8.3f} {row[8]:>7}")
    return total, skips


# ---------------------------------------------------------------- parser

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--semimetric", default="deriv:1", help="deriv:k or pca:q (default deriv:1)")
    p.add_argument("--kernel", default="quadratic", choices=[k.value for k in Kernel])
    p.add_argument("--bandwidth", default="cv", help="cv or fixed:h (default cv)")
    p.add_argument("--grid-size", type=int, default=15,
                   help="number of cross-validation candidates (default 15)")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="curve file with a y column")
    p.add_argument("--series", help="scalar time series turned into lagged curves")
    p.add_argument("--window", type=int, default=12, help="curve length for --series")
    p.add_argument("--horizon", type=int, default=1, help="steps ahead for --series")
    p.add_argument("--stride", type=int, default=1, help="start spacing for --series")
    p.add_argument("--query", help="curve file of query curves (default: split --data)")
    p.add_argument("--train-size", type=int,
                   help=f"leading samples used for training (default {DEFAULT_TRAIN_SIZE}; "
                        "all but the last for --series)")
    p.add_argument("--test-size", type=int, help="trailing samples used as queries")
    p.add_argument("--loo-fitted", action="store_true",
                   help="leave-one-out fitted values in the bias correction and residual variance")
    _add_model_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fel", description="Kernel regression on curves with empirical likelihood intervals.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output prefix (default fel-<command>)")
        p.add_argument("--allow-skips", action="store_true",
                       help="exit 0 even when some queries were skipped")

    p = sub.add_parser("fit", help="kernel estimates at query curves")
    _add_data_flags(p)
    common(p)

    p = sub.add_parser("interval", help="confidence intervals at query curves")
    _add_data_flags(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--methods", default=",".join(METHODS))
    common(p)

    p = sub.add_parser("simulate", help="write a simulated dataset")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--sigma2", type=float, default=0.5)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--beta", help="comma-separated linear coefficients; adds z columns")
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    p.add_argument("--config", help="JSON file with a list of scenarios")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--sigma2", type=float, default=0.5)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--methods", default=",".join(STUDY_METHODS))
    p.add_argument("--threads", type=int, help="worker threads (default $FEL_THREADS or 1)")
    _add_model_flags(p)
    common(p)
    return parser


_COMMANDS = {"fit": _cmd_fit, "interval": _cmd_interval,
             "simulate": _cmd_simulate, "coverage": _cmd_coverage}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        total, skips = _COMMANDS[args.command](args)
    except FELError as exc:
        print(f"fel: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if skips:
        print(f"fel: {len(skips)} of {total} results skipped ({skips[0][0]} first)",
              file=sys.stderr)
        if not args.allow_skips:
            return skips[0][1]
    return 0


if __name__ == "__main__":
    sys.exit(main())
