"""Command-line interface.

Subcommands:

* ``generate``    simulate a series and write it as CSV
* ``bootstrap``   block-bootstrap distribution function / quantile estimates
* ``jab``         jackknife-after-bootstrap variance of a bootstrap functional
* ``experiment``  full simulation protocol, CSV output
* ``oracle``      exact enumeration of bootstrap functionals on tiny instances
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .blocks import make_block_scheme, read_series_csv, write_series_csv
from .boot import Target, ecdf_at, quantile, run_bootstrap
from .harness import (
    ExperimentConfig,
    enumerate_exact,
    estimate_target_variance,
    jab_rule_m,
    run_experiment,
    validate_config,
    write_results,
)
from .jab import deletion_plan, jab_estimate
from .rng import Stream
from .smoothfn import builtin_model, series_for_model
from .tsgen import ModelSpec, generate

# Stream id layout shared by the single-shot subcommands (mirrors the
# per-run layout of the harness): 1 = main ensemble, 2 = deletion draws.
_ENSEMBLE_CHANNEL = 1
_JAB_CHANNEL = 2


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip() != ""]


def _targets(text: str) -> list[Target]:
    return [Target.parse(p) for p in text.split(",") if p.strip() != ""]


def _load_series(args, model):
    series = read_series_csv(args.input, header=args.header)
    return series_for_model(series, model)


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _scheme_info(scheme) -> dict:
    return {
        "n": scheme.n,
        "ell": scheme.ell,
        "style": scheme.style,
        "N": scheme.N,
        "b": scheme.b,
        "n1": scheme.n1,
    }


def _cmd_generate(args) -> int:
    spec = ModelSpec(args.model, burn_in=args.burn_in, seed=args.seed)
    series = generate(spec, args.n)
    write_series_csv(series, args.out)
    return 0


def _cmd_bootstrap(args) -> int:
    model = builtin_model(args.functional)
    series = _load_series(args, model)
    scheme = make_block_scheme(series.n, args.ell, args.style)
    ens = run_bootstrap(
        series, scheme, model, None, args.K, Stream(args.seed).child(_ENSEMBLE_CHANNEL)
    )
    ell1 = scheme.ell if args.ell1 == "auto" else int(args.ell1)
    _emit(
        {
            "phi1n": [{"x0": x, "value": ecdf_at(ens, x)} for x in _floats(args.x0)],
            "phi2n": [
                {"alpha": a, "value": quantile(ens, a)} for a in _floats(args.alpha)
            ],
            "K": args.K,
            "scheme": _scheme_info(scheme),
            "functional": args.functional,
            "ell1": ell1,
            "seed": args.seed,
        }
    )
    return 0


def _cmd_jab(args) -> int:
    model = builtin_model(args.functional)
    series = _load_series(args, model)
    scheme = make_block_scheme(series.n, args.ell, args.style)
    if args.m == "auto":
        m = jab_rule_m(series.n, args.ell, args.C, args.style)
    else:
        m = int(args.m)
    plan = deletion_plan(scheme.N, m)
    target = Target.parse(args.target)
    stream = Stream(args.seed)
    ens = run_bootstrap(series, scheme, model, None, args.K, stream.child(_ENSEMBLE_CHANNEL))
    est = jab_estimate(
        series,
        scheme,
        model,
        [target],
        plan,
        ens,
        stream.child(_JAB_CHANNEL),
        mode=args.mode,
        kmin=args.kmin,
        K=args.K,
    )[0]
    retained = est.retained
    _emit(
        {
            "phi_hat": est.phi_hat,
            "var_jab": est.variance,
            "target": target.label,
            "m": m,
            "M": plan.M,
            "mode": est.mode,
            "retained_min": None if retained is None else int(retained.min()),
            "retained_median": None if retained is None else float(np.median(retained)),
            "K": args.K,
            "scheme": _scheme_info(scheme),
            "seed": args.seed,
        }
    )
    return 0


def _config_from_args(args) -> ExperimentConfig:
    merged = {}
    if args.config:
        with open(args.config) as fh:
            merged.update(json.load(fh))
    for key in (
        "model",
        "n",
        "ell",
        "style",
        "functional",
        "targets",
        "K",
        "runs",
        "target_runs",
        "C",
        "mode",
        "kmin",
        "burn_in",
        "seed",
        "workers",
    ):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    for key in ("model", "n", "ell", "targets"):
        if key not in merged:
            raise SystemExit(f"experiment: missing required option --{key.replace('_', '-')}")
    targets = merged["targets"]
    if isinstance(targets, str):
        targets = _targets(targets)
    else:
        targets = [Target.parse(t) if isinstance(t, str) else t for t in targets]
    c_list = merged.get("C", [0.1, 0.5, 1.0])
    if isinstance(c_list, str):
        c_list = _floats(c_list)
    return ExperimentConfig(
        model=merged["model"],
        n=int(merged["n"]),
        ell=int(merged["ell"]),
        targets=tuple(targets),
        K=int(merged.get("K", 1000)),
        runs=int(merged.get("runs", 500)),
        target_runs=int(merged.get("target_runs", 2000)),
        C_list=tuple(float(c) for c in c_list),
        style=merged.get("style", "mbb"),
        functional=merged.get("functional", "mean"),
        mode=merged.get("mode", "reuse"),
        kmin=int(merged.get("kmin", 100)),
        burn_in=int(merged.get("burn_in", 500)),
        seed=int(merged.get("seed", 0)),
        workers=int(merged.get("workers", 1)),
    )


def _cmd_experiment(args) -> int:
    config = _config_from_args(args)
    validate_config(config)
    target_vars = None
    if args.target_var:
        target_vars = {}
        for item in args.target_var.split(";"):
            label, value = item.rsplit("=", 1)
            target_vars[label.strip()] = float(value)
    rows = run_experiment(config, target_vars=target_vars, out_path=args.out)
    sys.stderr.write(f"wrote {len(rows)} rows to {args.out}\n")
    return 0


def _cmd_target_variance(args) -> int:
    config = _config_from_args(args)
    out = estimate_target_variance(config)
    _emit(
        {
            "target_vars": {k: {"var": v, "se": se} for k, (v, se) in out.items()},
            "R": config.target_runs,
            "K": config.K,
            "seed": config.seed,
        }
    )
    return 0


def _cmd_oracle(args) -> int:
    model = builtin_model(args.functional)
    series = _load_series(args, model)
    scheme = make_block_scheme(series.n, args.ell, args.style)
    values = {}
    for target in _targets(args.targets):
        values[target.label] = enumerate_exact(series, scheme, model, None, target)
    _emit(
        {
            "exact": values,
            "draws": scheme.N**scheme.b,
            "scheme": _scheme_info(scheme),
            "functional": args.functional,
        }
    )
    return 0


def _add_series_options(p) -> None:
    p.add_argument("--input", required=True, help="series CSV, one row per time point")
    p.add_argument("--header", action="store_true", help="skip one header line")
    p.add_argument("--ell", type=int, required=True, help="block length")
    p.add_argument("--style", default="mbb", choices=("mbb", "nbb", "cbb"))
    p.add_argument("--functional", default="mean", choices=("mean", "variance", "ratio"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jabboot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a series to CSV")
    p.add_argument("--model", required=True, choices=("I", "II", "III", "IV", "iid"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("bootstrap", help="bootstrap distribution function and quantiles")
    _add_series_options(p)
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--x0", default="0.0", help="comma-separated evaluation points")
    p.add_argument("--alpha", default="0.35,0.8", help="comma-separated quantile levels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ell1", default="auto", help="lag truncation: 'auto' (= ell) or an integer")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("jab", help="jackknife-after-bootstrap variance estimate")
    _add_series_options(p)
    p.add_argument("--m", default="auto", help="deletion width, or 'auto' for the C-rule")
    p.add_argument("--C", type=float, default=0.1, help="constant in the auto rule for m")
    p.add_argument("--target", required=True, help="ecdf:x0 or quantile:alpha")
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--mode", default="reuse", choices=("reuse", "fresh"))
    p.add_argument("--kmin", type=int, default=100, help="retention floor before top-up")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_jab)

    for name, fn in (("experiment", _cmd_experiment), ("target-variance", _cmd_target_variance)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} pass of the simulation protocol")
        p.add_argument("--config", help="JSON file with the same field names as the flags")
        p.add_argument("--model", choices=("I", "II", "III", "IV", "iid"))
        p.add_argument("--n", type=int)
        p.add_argument("--ell", type=int)
        p.add_argument("--style", choices=("mbb", "nbb", "cbb"))
        p.add_argument("--functional", choices=("mean", "variance", "ratio"))
        p.add_argument("--targets", help="e.g. ecdf:0,quantile:0.35,quantile:0.80")
        p.add_argument("--C", help="comma-separated constants for the m-rule")
        p.add_argument("--K", type=int)
        p.add_argument("--runs", type=int)
        p.add_argument("--target-runs", dest="target_runs", type=int)
        p.add_argument("--mode", choices=("reuse", "fresh"))
        p.add_argument("--kmin", type=int)
        p.add_argument("--burn-in", dest="burn_in", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        if name == "experiment":
            p.add_argument("--out", required=True)
            p.add_argument(
                "--target-var",
                dest="target_var",
                help="skip the target pass: 'ecdf:0=1.8e-4;quantile:0.35=1.3e-3'",
            )
        p.set_defaults(func=fn)

    p = sub.add_parser("oracle", help="exact enumeration of bootstrap functionals")
    _add_series_options(p)
    p.add_argument("--targets", required=True, help="e.g. ecdf:0,quantile:0.35")
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
