"""Block jackknife and jackknife-after-bootstrap variance estimation.

The block jackknife deletes one length-ell block of observations at a
time.  The jackknife-after-bootstrap (JAB) instead deletes m consecutive
blocks from the pool of N resampling blocks, recomputes the bootstrap
functional on the reduced pool, and combines the M = N - m + 1 deletion
point values through the pseudo-value formula

    pseudo_i = (N * phi_hat - (N - m) * point_i) / m,
    Var_JAB  = (m / (N - m)) * mean_i (pseudo_i - phi_hat)^2.

Deletion point values can be evaluated two ways:

* ``fresh``  draw K new replicates uniformly on the reduced pool,
* ``reuse``  keep the main-ensemble replicates whose blocks all avoid
  the deleted window (their conditional law is exactly uniform on the
  reduced pool), recompute their T* under the recentered theta_tilde,
  and top up with fresh draws when fewer than ``kmin`` survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .blocks import BlockScheme, TimeSeries, block_sums
from .boot import (
    BootstrapEnsemble,
    Target,
    bootstrap_center,
    run_bootstrap,
)
from .rng import Stream
from .smoothfn import SmoothModel


@dataclass(frozen=True)
class DeletionPlan:
    """Deletion windows of m consecutive blocks out of N (no wraparound).

    Deletion point i in 0..M-1 removes block indices [i, i + m); the
    remaining index set plays the role of the reduced resampling pool.
    """

    N: int
    m: int
    M: int

    def window(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.M:
            raise ValueError(f"deletion point must lie in [0, {self.M}), got {i}")
        return i, i + self.m

    def allowed(self, i: int) -> np.ndarray:
        lo, hi = self.window(i)
        return np.concatenate([np.arange(0, lo), np.arange(hi, self.N)])


def deletion_plan(N: int, m: int) -> DeletionPlan:
    """Plan of all M = N - m + 1 deletion windows; requires 1 <= m <= N-1."""
    N = int(N)
    m = int(m)
    if not 1 <= m <= N - 1:
        raise ValueError(f"deletion width must satisfy 1 <= m <= N-1, got m={m}, N={N}")
    return DeletionPlan(N=N, m=m, M=N - m + 1)


def pseudo_values(
    plan: DeletionPlan, phi_hat: float, point_values: np.ndarray
) -> np.ndarray:
    """Jackknife pseudo-values (N*phi_hat - (N-m)*point_i) / m."""
    point_values = np.asarray(point_values, dtype=np.float64)
    if point_values.shape != (plan.M,):
        raise ValueError(
            f"expected {plan.M} point values, got shape {point_values.shape}"
        )
    return (plan.N * phi_hat - (plan.N - plan.m) * point_values) / plan.m


@dataclass(frozen=True)
class JabEstimate:
    """Deletion point values, pseudo-values and the JAB variance."""

    phi_hat: float
    point_values: np.ndarray
    pseudo_values: np.ndarray
    variance: float
    mode: str
    plan: DeletionPlan
    retained: Optional[np.ndarray] = None  # per-point retained counts (reuse mode)


def jab_variance(
    plan: DeletionPlan,
    phi_hat: float,
    point_values: np.ndarray,
    mode: str = "direct",
    retained: Optional[np.ndarray] = None,
) -> JabEstimate:
    """Combine deletion point values into the JAB variance estimate."""
    pseudo = pseudo_values(plan, phi_hat, point_values)
    dev = pseudo - phi_hat
    variance = float(plan.m / (plan.N - plan.m) * np.mean(dev**2))
    return JabEstimate(
        phi_hat=float(phi_hat),
        point_values=np.asarray(point_values, dtype=np.float64),
        pseudo_values=pseudo,
        variance=variance,
        mode=mode,
        plan=plan,
        retained=retained,
    )


def _point_t_values_fresh(
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    allowed: np.ndarray,
    K: int,
    stream: Stream,
    sums: np.ndarray,
) -> np.ndarray:
    ens = run_bootstrap(series, scheme, model, allowed, K, stream, sums=sums)
    return ens.t_star


def _point_t_values_reuse(
    ensemble: BootstrapEnsemble,
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    plan: DeletionPlan,
    i: int,
    kmin: int,
    stream: Stream,
    sums: np.ndarray,
) -> tuple[np.ndarray, int]:
    lo, hi = plan.window(i)
    keep = ~((ensemble.draws >= lo) & (ensemble.draws < hi)).any(axis=1)
    count = int(keep.sum())
    allowed = plan.allowed(i)
    center_i = bootstrap_center(series, scheme, allowed, model, sums=sums)
    # T* of a retained draw only depends on the deleted window through the
    # recentered theta_tilde; theta* and tau* are functions of the sample.
    tvals = (
        np.sqrt(scheme.n1)
        * (ensemble.theta_star[keep] - center_i.theta_tilde)
        / (ensemble.tau_star[keep] + 1.0 / scheme.n)
    )
    if count < kmin:
        top = run_bootstrap(
            series, scheme, model, allowed, kmin - count, stream, sums=sums, center=center_i
        )
        tvals = np.concatenate([tvals, top.t_star])
    if tvals.size == 0:
        raise ValueError(
            f"no replicates retained at deletion point {i} and kmin=0; raise kmin"
        )
    return tvals, count


def jab_point_value_fresh(
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    plan: DeletionPlan,
    i: int,
    target: Target,
    K: int,
    stream: Stream,
    sums: Optional[np.ndarray] = None,
) -> float:
    """Deletion point value from K fresh replicates drawn on the reduced pool."""
    if sums is None:
        sums = block_sums(series, scheme)
    tvals = _point_t_values_fresh(
        series, scheme, model, plan.allowed(i), K, stream, sums
    )
    return target.apply(tvals)


def jab_point_value_reuse(
    ensemble: BootstrapEnsemble,
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    plan: DeletionPlan,
    i: int,
    target: Target,
    kmin: int,
    stream: Stream,
    sums: Optional[np.ndarray] = None,
) -> tuple[float, int]:
    """Deletion point value by replicate reuse; returns (value, retained count)."""
    if sums is None:
        sums = block_sums(series, scheme)
    tvals, count = _point_t_values_reuse(
        ensemble, series, scheme, model, plan, i, kmin, stream, sums
    )
    return target.apply(tvals), count


def jab_estimate(
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    targets: Sequence[Target],
    plan: DeletionPlan,
    ensemble: BootstrapEnsemble,
    stream: Stream,
    mode: str = "reuse",
    kmin: int = 100,
    K: Optional[int] = None,
) -> list[JabEstimate]:
    """JAB variance estimates for several functionals of one ensemble.

    Deletion point i consumes ``stream.child(i)``; the retained t values
    are shared across targets since retention and recentering do not
    depend on the functional.  ``K`` (fresh mode replicates per point)
    defaults to the ensemble size.
    """
    if mode not in ("reuse", "fresh"):
        raise ValueError(f"mode must be 'reuse' or 'fresh', got {mode!r}")
    if plan.N != scheme.N:
        raise ValueError("deletion plan was built for a different block count")
    if K is None:
        K = ensemble.K
    sums = block_sums(series, scheme)
    phi_hats = [t.apply(ensemble.t_star) for t in targets]
    points = np.empty((plan.M, len(targets)))
    retained = np.zeros(plan.M, dtype=np.int64) if mode == "reuse" else None
    for i in range(plan.M):
        if mode == "reuse":
            tvals, count = _point_t_values_reuse(
                ensemble, series, scheme, model, plan, i, kmin, stream.child(i), sums
            )
            retained[i] = count
        else:
            tvals = _point_t_values_fresh(
                series, scheme, model, plan.allowed(i), K, stream.child(i), sums
            )
        for j, target in enumerate(targets):
            points[i, j] = target.apply(tvals)
    return [
        jab_variance(plan, phi_hats[j], points[:, j], mode=mode, retained=retained)
        for j in range(len(targets))
    ]


def block_jackknife_variance(
    series: TimeSeries,
    statistic: Callable[[np.ndarray], float],
    ell: int,
) -> float:
    """Block jackknife variance of a statistic of the raw observations.

    Deletes each of the N = n - ell + 1 overlapping length-ell blocks in
    turn, forms pseudo-values ell^{-1} (n*g - (n-ell)*g_i), and returns

        (ell / (n - ell)) * N^{-1} * sum_i (pseudo_i - g)^2,

    which for ell = 1 is the classical delete-1 jackknife variance.
    ``statistic`` receives the (length, d) value array.
    """
    ell = int(ell)
    n = series.n
    if not 1 <= ell < n:
        raise ValueError(f"block length must satisfy 1 <= ell < n, got ell={ell}, n={n}")
    N = n - ell + 1
    g = float(statistic(series.values))
    pseudo = np.empty(N)
    for i in range(N):
        g_i = float(statistic(np.delete(series.values, slice(i, i + ell), axis=0)))
        pseudo[i] = (n * g - (n - ell) * g_i) / ell
    ssq = float(np.sum((pseudo - g) ** 2))
    return ell * ssq / ((n - ell) * N)
