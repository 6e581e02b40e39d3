"""Simulation harness: target variances, JAB metrics, and an exact oracle.

The experiment estimates, by Monte Carlo over independent simulated
series, (a) the sampling variance of the bootstrap functionals (the
quantity the JAB estimates) and (b) bias / sd / mse of the JAB variance
estimator across deletion-width constants C, with the width chosen by

    m = round(C * n^(1/3) * ell^(2/3)),   clamped to [1, N-1].

Runs are embarrassingly parallel; every random draw is keyed by
(seed, pass, run, ...) so the output is byte-identical for any worker
count.  ``enumerate_exact`` computes bootstrap functionals exactly by
iterating all |allowed|^b equally likely draws on tiny instances.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .blocks import BlockScheme, TimeSeries, block_sums, make_block_scheme
from .boot import Target, bootstrap_center, batch_statistics, run_bootstrap
from .jab import deletion_plan, jab_estimate
from .rng import Stream
from .smoothfn import SmoothModel, builtin_model, series_for_model
from .tsgen import ModelSpec, generate

PASS_TARGET = 0
PASS_JAB = 1

ENUMERATION_CAP = 10**6

RESULT_COLUMNS = (
    "model,n,ell,style,functional,target,C,m,K,R,mode,target_var,jab_mean,bias,sd,mse,seed"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulation experiment."""

    model: str
    n: int
    ell: int
    targets: tuple[Target, ...]
    K: int = 1000
    runs: int = 500
    target_runs: int = 2000
    C_list: tuple[float, ...] = (0.1, 0.5, 1.0)
    style: str = "mbb"
    functional: str = "mean"
    mode: str = "reuse"
    kmin: int = 100
    ell1: Optional[int] = None  # None: follow the block length
    burn_in: int = 500
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.runs < 2 or self.K < 2:
            raise ValueError("runs and K must both be >= 2")
        if self.target_runs < 2:
            raise ValueError("target_runs must be >= 2")
        if not 1 <= self.ell <= self.n:
            raise ValueError("ell must lie in [1, n]")
        if not self.targets:
            raise ValueError("at least one target is required")
        if self.mode not in ("reuse", "fresh"):
            raise ValueError("mode must be 'reuse' or 'fresh'")
        for c in self.C_list:
            if c <= 0:
                raise ValueError("deletion-width constants must be positive")

    def scheme(self) -> BlockScheme:
        return make_block_scheme(self.n, self.ell, self.style)

    def smooth_model(self) -> SmoothModel:
        return builtin_model(self.functional)


@dataclass(frozen=True)
class MetricsRow:
    """One output row: JAB accuracy metrics for a (target, C) pair."""

    model: str
    n: int
    ell: int
    style: str
    functional: str
    target: str
    C: float
    m: int
    K: int
    R: int
    mode: str
    target_var: float
    jab_mean: float
    bias: float
    sd: float
    mse: float
    seed: int


def jab_rule_m(n: int, ell: int, C: float, style: str = "mbb") -> int:
    """Deletion width m = round(C * n^(1/3) * ell^(2/3)), clamped to [1, N-1]."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    raw = round(C * n ** (1.0 / 3.0) * ell ** (2.0 / 3.0))
    N = make_block_scheme(n, ell, style).N
    if raw > N - 1:
        warnings.warn(
            f"deletion width {raw} exceeds N-1={N - 1}; clamping", stacklevel=2
        )
    return int(min(max(raw, 1), N - 1))


def validate_config(config: ExperimentConfig) -> None:
    """Warn (never fail) when (ell, m) sit outside the theory-friendly ranges."""
    n, ell = config.n, config.ell
    lo, hi = n**0.15, 2.0 * n ** (1.0 / 3.0)
    if not lo <= ell <= hi:
        warnings.warn(
            f"block length ell={ell} outside [{lo:.2f}, {hi:.2f}] for n={n}; "
            "variance estimates may be unreliable",
            stacklevel=2,
        )
    for C in config.C_list:
        m = jab_rule_m(n, ell, C, config.style)
        if m < ell:
            warnings.warn(
                f"deletion width m={m} (C={C:g}) below block length ell={ell}",
                stacklevel=2,
            )


def _run_stream(config: ExperimentConfig, pass_id: int, run_id: int) -> Stream:
    return Stream(config.seed).child(pass_id, run_id)


def _simulate_series(config: ExperimentConfig, stream: Stream) -> TimeSeries:
    spec = ModelSpec(config.model, burn_in=config.burn_in)
    series = generate(spec, config.n, rng=stream.generator())
    return series_for_model(series, config.smooth_model())


def _target_run(args: tuple[ExperimentConfig, int]) -> list[float]:
    """One target-variance run: fresh series -> ensemble -> target values."""
    config, run_id = args
    stream = _run_stream(config, PASS_TARGET, run_id)
    series = _simulate_series(config, stream.child(0))
    ens = run_bootstrap(
        series, config.scheme(), config.smooth_model(), None, config.K, stream.child(1)
    )
    return [t.apply(ens.t_star) for t in config.targets]


def _jab_run(args: tuple[ExperimentConfig, int]) -> np.ndarray:
    """One JAB run: shared ensemble, JAB for every (C, target) pair.

    Returns an (len(C_list), len(targets)) matrix of JAB variances.
    """
    config, run_id = args
    stream = _run_stream(config, PASS_JAB, run_id)
    series = _simulate_series(config, stream.child(0))
    scheme = config.scheme()
    model = config.smooth_model()
    ens = run_bootstrap(series, scheme, model, None, config.K, stream.child(1))
    out = np.empty((len(config.C_list), len(config.targets)))
    for ci, C in enumerate(config.C_list):
        m = jab_rule_m(config.n, config.ell, C, config.style)
        plan = deletion_plan(scheme.N, m)
        estimates = jab_estimate(
            series,
            scheme,
            model,
            config.targets,
            plan,
            ens,
            stream.child(2, ci),
            mode=config.mode,
            kmin=config.kmin,
            K=config.K,
        )
        out[ci] = [e.variance for e in estimates]
    return out


def _map_runs(fn, arglist, workers: int):
    if workers <= 1:
        return [fn(a) for a in arglist]
    chunk = max(1, len(arglist) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, arglist, chunksize=chunk))


def estimate_target_variance(config: ExperimentConfig) -> dict[str, tuple[float, float]]:
    """Sampling variance of each bootstrap target over fresh simulated series.

    Returns {target label: (variance over ``target_runs`` runs with divisor
    R-1, Monte Carlo standard error of that variance)}.
    """
    validate_config(config)
    R = config.target_runs
    values = np.asarray(
        _map_runs(_target_run, [(config, r) for r in range(R)], config.workers)
    )
    out = {}
    for j, target in enumerate(config.targets):
        v = values[:, j]
        var = float(v.var(ddof=1))
        dev = v - v.mean()
        m4 = float(np.mean(dev**4))
        se = float(np.sqrt(max(m4 - (R - 3) / (R - 1) * var**2, 0.0) / R))
        out[target.label] = (var, se)
    return out


def run_experiment(
    config: ExperimentConfig,
    target_vars: Optional[dict[str, float]] = None,
    out_path=None,
) -> list[MetricsRow]:
    """Bias, sd and mse of the JAB variance estimator per (target, C).

    ``target_vars`` maps target labels to externally supplied variances;
    when absent the target-variance pass runs first with independent
    seeds.  On interrupt, completed rows are flushed to ``out_path``.
    """
    validate_config(config)
    if target_vars is None:
        target_vars = {
            label: var for label, (var, _) in estimate_target_variance(config).items()
        }
    for target in config.targets:
        if target.label not in target_vars:
            raise ValueError(f"no target variance supplied for {target.label!r}")
    rows: list[MetricsRow] = []
    R = config.runs
    try:
        results = np.asarray(
            _map_runs(_jab_run, [(config, r) for r in range(R)], config.workers)
        )  # (R, n_C, n_targets)
        for ci, C in enumerate(config.C_list):
            m = jab_rule_m(config.n, config.ell, C, config.style)
            for j, target in enumerate(config.targets):
                jabs = results[:, ci, j]
                jab_mean = float(jabs.mean())
                bias = jab_mean - target_vars[target.label]
                sd = float(jabs.std(ddof=1))
                mse = bias**2 + (R - 1) / R * sd**2
                rows.append(
                    MetricsRow(
                        model=config.model,
                        n=config.n,
                        ell=config.ell,
                        style=config.style,
                        functional=config.functional,
                        target=target.label,
                        C=float(C),
                        m=m,
                        K=config.K,
                        R=R,
                        mode=config.mode,
                        target_var=float(target_vars[target.label]),
                        jab_mean=jab_mean,
                        bias=float(bias),
                        sd=sd,
                        mse=float(mse),
                        seed=config.seed,
                    )
                )
    except KeyboardInterrupt:
        if out_path is not None and rows:
            write_results(sort_rows(rows), out_path)
        raise
    rows = sort_rows(rows)
    if out_path is not None:
        write_results(rows, out_path)
    return rows


def sort_rows(rows: Sequence[MetricsRow]) -> list[MetricsRow]:
    return sorted(rows, key=lambda r: (r.model, r.target, r.C))


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_results(rows: Sequence[MetricsRow], path) -> None:
    """CSV with a fixed header; floats carry 17 significant digits."""
    if not rows:
        raise ValueError("result table is empty")
    cols = RESULT_COLUMNS.split(",")
    lines = [RESULT_COLUMNS]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_results(path) -> list[dict]:
    """Parse a results CSV back into typed dicts (inverse of write_results)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        out = []
        for line in fh:
            parts = line.strip().split(",")
            rec = {}
            for key, text in zip(header, parts):
                if key in ("n", "ell", "m", "K", "R", "seed"):
                    rec[key] = int(text)
                elif key in ("C", "target_var", "jab_mean", "bias", "sd", "mse"):
                    rec[key] = float(text)
                else:
                    rec[key] = text
            out.append(rec)
    return out


def enumerate_exact(
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    allowed: Optional[np.ndarray],
    target: Target,
) -> float:
    """Exact bootstrap functional by enumerating every draw in allowed^b.

    All |allowed|^b draws are equally likely, so the functional of the
    enumerated T* values under the uniform law is exact.  Instances are
    capped at 10^6 draws.
    """
    if allowed is None:
        allowed = np.arange(scheme.N)
    allowed = np.asarray(allowed, dtype=np.int64)
    A = allowed.size
    if A == 0:
        raise ValueError("allowed index set is empty")
    L = A**scheme.b
    if L > ENUMERATION_CAP:
        raise ValueError(
            f"enumeration would need {L} draws (> {ENUMERATION_CAP}); instance too large"
        )
    combos = np.indices((A,) * scheme.b).reshape(scheme.b, L).T
    draws = allowed[combos]
    sums = block_sums(series, scheme)
    center = bootstrap_center(series, scheme, allowed, model, sums=sums)
    t, _, _ = batch_statistics(sums, scheme, center, model, draws)
    return target.apply(t)
