"""Bootstrap replicates of the studentized statistic and their functionals.

A bootstrap sample of b blocks yields

    T* = sqrt(n1) * (theta* - theta_tilde) / (tau* + 1/n),

where theta* = H(Xbar*), theta_tilde = H(mu_hat) recenters at the
conditional expectation mu_hat of Xbar* given the data, and tau*^2 is
the scaled sample variance of the resampled block sums

    tau*^2 = (1/(ell*b)) * sum_i { h(Xbar*)' (S_i* - ell*Xbar*) }^2.

The +1/n guard (n the ORIGINAL series length) keeps T* defined when all
resampled blocks coincide.  The distribution-function and quantile
functionals are evaluated on the empirical law of K replicate T* values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blocks import BlockScheme, TimeSeries, block_sums, draw_block_indices
from .rng import Stream
from .smoothfn import SmoothModel


@dataclass(frozen=True)
class BootstrapCenter:
    """Conditional mean of the bootstrap sample mean and its image under H."""

    mu_hat: np.ndarray  # (d,)
    theta_tilde: float


def bootstrap_center(
    series: TimeSeries,
    scheme: BlockScheme,
    allowed: np.ndarray,
    model: SmoothModel,
    sums: Optional[np.ndarray] = None,
) -> BootstrapCenter:
    """Center of the bootstrap distribution when blocks are drawn from ``allowed``.

    mu_hat is the mean of the block means over ``allowed``, which equals
    the conditional expectation of the bootstrap sample mean because
    blocks are drawn uniformly.  ``sums`` may carry precomputed block
    sums to avoid recomputation in tight loops.
    """
    allowed = np.asarray(allowed, dtype=np.int64)
    if allowed.size == 0:
        raise ValueError("allowed index set is empty")
    if sums is None:
        sums = block_sums(series, scheme)
    mu_hat = sums[allowed].mean(axis=0) / scheme.ell
    return BootstrapCenter(mu_hat=mu_hat, theta_tilde=float(model.evaluate(mu_hat)))


@dataclass(frozen=True)
class BootstrapReplicate:
    """One bootstrap draw together with its statistic decomposition."""

    draw: np.ndarray  # (b,) block indices
    t_star: float
    theta_star: float
    tau_star: float


@dataclass(frozen=True)
class BootstrapEnsemble:
    """K replicates sharing one center and scheme; raw material for the JAB.

    Draws are recorded so deletion-window estimators can be evaluated by
    replicate reuse.
    """

    scheme: BlockScheme
    center: BootstrapCenter
    draws: np.ndarray  # (K, b)
    t_star: np.ndarray  # (K,)
    theta_star: np.ndarray  # (K,)
    tau_star: np.ndarray  # (K,)

    @property
    def K(self) -> int:
        return self.draws.shape[0]


def batch_statistics(
    sums: np.ndarray,
    scheme: BlockScheme,
    center: BootstrapCenter,
    model: SmoothModel,
    draws: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t*, theta*, tau*) for a (K, b) matrix of block-index draws.

    ``sums`` is the (N, d) block-sum table of the original series; the
    concatenated sample statistics only depend on the draws through it.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=np.int64))
    if draws.shape[1] != scheme.b:
        raise ValueError(f"draws must have {scheme.b} columns, got {draws.shape[1]}")
    if draws.min() < 0 or draws.max() >= scheme.N:
        raise ValueError("draw contains invalid block indices")
    S = sums[draws]  # (K, b, d)
    xbar = S.sum(axis=1) / scheme.n1  # (K, d)
    grad = model.gradient(xbar)  # (K, d)
    proj = ((S - scheme.ell * xbar[:, None, :]) * grad[:, None, :]).sum(axis=2)
    tau = np.sqrt((proj**2).mean(axis=1) / scheme.ell)
    theta = np.asarray(model.evaluate(xbar), dtype=np.float64)
    t = np.sqrt(scheme.n1) * (theta - center.theta_tilde) / (tau + 1.0 / scheme.n)
    return t, theta, tau


def replicate_statistic(
    series: TimeSeries,
    scheme: BlockScheme,
    center: BootstrapCenter,
    model: SmoothModel,
    draw: np.ndarray,
) -> BootstrapReplicate:
    """Statistic of the bootstrap sample assembled from one draw."""
    draw = np.asarray(draw, dtype=np.int64)
    t, theta, tau = batch_statistics(
        block_sums(series, scheme), scheme, center, model, draw[None, :]
    )
    return BootstrapReplicate(
        draw=draw, t_star=float(t[0]), theta_star=float(theta[0]), tau_star=float(tau[0])
    )


def run_bootstrap(
    series: TimeSeries,
    scheme: BlockScheme,
    model: SmoothModel,
    allowed: Optional[np.ndarray],
    K: int,
    stream: Stream,
    sums: Optional[np.ndarray] = None,
    center: Optional[BootstrapCenter] = None,
) -> BootstrapEnsemble:
    """Draw K independent replicates uniform over ``allowed`` and map to T*.

    Replicate k draws from ``stream.child(k)``, so the ensemble is a pure
    function of (series, scheme, stream key) regardless of evaluation
    order.  ``allowed=None`` means the full index set.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    if allowed is None:
        allowed = np.arange(scheme.N)
    if sums is None:
        sums = block_sums(series, scheme)
    if center is None:
        center = bootstrap_center(series, scheme, allowed, model, sums=sums)
    draws = np.empty((K, scheme.b), dtype=np.int64)
    for k in range(K):
        draws[k] = draw_block_indices(scheme, allowed, scheme.b, stream.child(k).generator())
    t, theta, tau = batch_statistics(sums, scheme, center, model, draws)
    return BootstrapEnsemble(
        scheme=scheme, center=center, draws=draws, t_star=t, theta_star=theta, tau_star=tau
    )


def ecdf_value(values: np.ndarray, x0: float) -> float:
    """Fraction of values <= x0."""
    return float(np.mean(np.asarray(values) <= x0))


def quantile_value(values: np.ndarray, alpha: float) -> float:
    """Generalized inverse of the empirical distribution of ``values``.

    Returns the smallest order statistic v_(j) with j/K >= alpha, i.e.
    inf{x : F_K(x) >= alpha}.  The ceil index is corrected against float
    rounding so the inf definition holds exactly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    v = np.sort(np.asarray(values, dtype=np.float64))
    K = v.size
    j = min(max(math.ceil(K * alpha), 1), K)
    while j > 1 and (j - 1) / K >= alpha:
        j -= 1
    while j < K and j / K < alpha:
        j += 1
    return float(v[j - 1])


def ecdf_at(ensemble: BootstrapEnsemble, x0: float) -> float:
    """Monte Carlo estimate of P*(T* <= x0)."""
    return ecdf_value(ensemble.t_star, x0)


def quantile(ensemble: BootstrapEnsemble, alpha: float) -> float:
    """Monte Carlo estimate of the alpha-quantile of T*."""
    return quantile_value(ensemble.t_star, alpha)


@dataclass(frozen=True)
class Target:
    """A functional of the bootstrap law of T*: ecdf at a point, a quantile,
    or (for parity with simpler bootstrap functionals) its mean or variance."""

    kind: str
    arg: Optional[float] = None

    def apply(self, values: np.ndarray) -> float:
        if self.kind == "ecdf":
            return ecdf_value(values, self.arg)
        if self.kind == "quantile":
            return quantile_value(values, self.arg)
        if self.kind == "bias":
            return float(np.mean(values))
        if self.kind == "variance":
            v = np.asarray(values, dtype=np.float64)
            return float(np.mean((v - v.mean()) ** 2))
        raise ValueError(f"unknown target kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.arg is None:
            return self.kind
        return f"{self.kind}:{self.arg:g}"

    @staticmethod
    def parse(text: str) -> "Target":
        """Parse ``ecdf:x0``, ``quantile:alpha``, ``bias`` or ``variance``."""
        parts = text.strip().split(":")
        kind = parts[0].lower()
        if kind in ("bias", "variance"):
            if len(parts) != 1:
                raise ValueError(f"target {kind!r} takes no argument")
            return Target(kind)
        if kind in ("ecdf", "quantile"):
            if len(parts) != 2:
                raise ValueError(f"target {kind!r} needs an argument, e.g. {kind}:0.35")
            arg = float(parts[1])
            if kind == "quantile" and not 0.0 < arg < 1.0:
                raise ValueError("quantile level must lie in (0, 1)")
            return Target(kind, arg)
        raise ValueError(f"cannot parse target {text!r}")
