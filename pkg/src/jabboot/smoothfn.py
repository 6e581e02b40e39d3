"""Smooth-function-model statistics and the lag-window studentizer.

The statistic of interest is theta_hat = H(mean of the series) for a
smooth real function H on R^d with gradient h.  The studentized version
divides by the lag-window long-run standard deviation estimate, with a
+1/n guard so the statistic stays finite when the estimate is zero:

    T_n = sqrt(n) * (theta_hat - theta) / (tau_hat + 1/n).

Built-in functionals: ``mean`` (d=1), ``variance`` (d=2 over the
augmented series (X, X^2), H(u, v) = v - u^2) and ``ratio`` (d=2,
ratio of component means).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .blocks import TimeSeries

BUILTIN_FUNCTIONALS = ("mean", "variance", "ratio")


@dataclass(frozen=True)
class SmoothModel:
    """A smooth functional H with gradient h and optional true parameter.

    ``func`` and ``grad`` act on arrays of shape (..., d); ``grad`` may be
    None for user-supplied functionals, in which case central finite
    differences are used.  ``vectorized=False`` marks callables that only
    accept a single d-vector.
    """

    kind: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    theta: Optional[float] = None
    vectorized: bool = True

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """H at one point (d,) or a batch (..., d)."""
        x = np.asarray(x, dtype=np.float64)
        if self.vectorized or x.ndim == 1:
            return np.asarray(self.func(x), dtype=np.float64)
        flat = x.reshape(-1, self.dim)
        out = np.array([self.func(row) for row in flat], dtype=np.float64)
        return out.reshape(x.shape[:-1])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """h at one point (d,) or a batch (..., d); falls back to finite differences."""
        x = np.asarray(x, dtype=np.float64)
        if self.grad is not None:
            if self.vectorized or x.ndim == 1:
                return np.asarray(self.grad(x), dtype=np.float64)
            flat = x.reshape(-1, self.dim)
            out = np.array([self.grad(row) for row in flat], dtype=np.float64)
            return out.reshape(x.shape)
        if x.ndim == 1:
            return numerical_gradient(self.evaluate, x)
        flat = x.reshape(-1, self.dim)
        out = np.array([numerical_gradient(self.evaluate, row) for row in flat])
        return out.reshape(x.shape)


def numerical_gradient(func, x: np.ndarray) -> np.ndarray:
    """Central finite-difference gradient with step 1e-5 * (1 + ||x||)."""
    x = np.asarray(x, dtype=np.float64)
    step = 1e-5 * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x)
    for j in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[j] += step
        lo[j] -= step
        g[j] = (float(func(hi)) - float(func(lo))) / (2.0 * step)
    return g


def builtin_model(name: str, theta: Optional[float] = None) -> SmoothModel:
    """Construct one of the built-in smooth models by name."""
    name = name.lower()
    if name == "mean":
        return SmoothModel(
            kind="mean",
            dim=1,
            func=lambda u: u[..., 0],
            grad=lambda u: np.ones_like(u),
            theta=theta,
        )
    if name == "variance":
        # Series must be augmented to (X, X^2); see augment_squares.
        def _h(u):
            g = np.empty_like(u)
            g[..., 0] = -2.0 * u[..., 0]
            g[..., 1] = 1.0
            return g

        return SmoothModel(
            kind="variance",
            dim=2,
            func=lambda u: u[..., 1] - u[..., 0] ** 2,
            grad=_h,
            theta=theta,
        )
    if name == "ratio":
        def _h(u):
            g = np.empty_like(u)
            g[..., 0] = 1.0 / u[..., 1]
            g[..., 1] = -u[..., 0] / u[..., 1] ** 2
            return g

        return SmoothModel(
            kind="ratio",
            dim=2,
            func=lambda u: u[..., 0] / u[..., 1],
            grad=_h,
            theta=theta,
        )
    raise ValueError(f"unknown builtin functional {name!r}; expected one of {BUILTIN_FUNCTIONALS}")


def user_model(func, dim: int, grad=None, theta=None, vectorized: bool = False) -> SmoothModel:
    """Wrap a user-supplied smooth functional (side-effect free, reentrant)."""
    return SmoothModel(
        kind="user", dim=int(dim), func=func, grad=grad, theta=theta, vectorized=vectorized
    )


def augment_squares(series: TimeSeries) -> TimeSeries:
    """Augment a d=1 series to (X, X^2) for the variance functional."""
    if series.d != 1:
        raise ValueError("augment_squares expects a 1-dimensional series")
    x = series.values[:, 0]
    return TimeSeries(np.column_stack([x, x * x]))


def series_for_model(series: TimeSeries, model: SmoothModel) -> TimeSeries:
    """Apply the model's canonical input transform and check dimensions."""
    if model.kind == "variance" and series.d == 1:
        series = augment_squares(series)
    if series.d != model.dim:
        raise ValueError(
            f"model {model.kind!r} expects d={model.dim} but series has d={series.d}"
        )
    return series


def check_gradient(model: SmoothModel, points: np.ndarray, rtol: float = 1e-6) -> bool:
    """True when the analytic gradient matches finite differences at every point."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    for p in points:
        ana = model.gradient(p)
        num = numerical_gradient(model.evaluate, p)
        scale = np.maximum(np.abs(ana), np.abs(num))
        if not np.all(np.abs(ana - num) <= rtol * np.maximum(scale, 1.0)):
            return False
    return True


def autocovariance(series: TimeSeries, k: int) -> np.ndarray:
    """Lag-k autocovariance matrix with divisor n (not n - k).

    Gamma_hat(k) = n^{-1} sum_{i=1}^{n-k} (X_i - Xbar)(X_{i+k} - Xbar)'.
    """
    k = int(k)
    n = series.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"lag must satisfy 0 <= k <= n-1, got k={k}, n={n}")
    dev = series.values - series.values.mean(axis=0)
    head = dev[: n - k]
    tail = dev[k:]
    return head.T @ tail / n


@dataclass(frozen=True)
class LagWindowEstimate:
    """Truncated autocovariance sum and the induced variance estimate.

    ``sigma`` is Gamma(0) + sum_{k=1..ell1} (Gamma(k) + Gamma(k)'), and
    ``tau2`` the absolute value of the quadratic form of ``sigma`` in the
    gradient at the sample mean.
    """

    gammas: np.ndarray  # (ell1 + 1, d, d)
    sigma: np.ndarray  # (d, d)
    ell1: int
    tau2: float


def lag_window_tau2(series: TimeSeries, model: SmoothModel, ell1: int) -> LagWindowEstimate:
    """Long-run variance estimate of the smooth statistic, truncated at lag ell1."""
    ell1 = int(ell1)
    if not 0 <= ell1 <= series.n - 1:
        raise ValueError(f"lag truncation must satisfy 0 <= ell1 <= n-1, got {ell1}")
    gammas = np.stack([autocovariance(series, k) for k in range(ell1 + 1)])
    sigma = gammas[0].copy()
    for k in range(1, ell1 + 1):
        sigma += gammas[k] + gammas[k].T
    grad = model.gradient(series.values.mean(axis=0))
    if not np.all(np.isfinite(grad)):
        raise ValueError("model gradient is non-finite at the sample mean")
    tau2 = float(abs(grad @ sigma @ grad))
    return LagWindowEstimate(gammas=gammas, sigma=sigma, ell1=ell1, tau2=tau2)


def studentized_statistic(
    series: TimeSeries,
    model: SmoothModel,
    theta: Optional[float] = None,
    ell1: int = 0,
) -> float:
    """T_n = sqrt(n) (H(Xbar) - theta) / (tau_hat + 1/n).

    ``theta`` defaults to the model's true parameter; ``ell1 = 0`` is the
    independent-data setting, dependent data should pass a growing lag.
    """
    if theta is None:
        theta = model.theta
    if theta is None:
        raise ValueError("true parameter theta is required")
    theta_hat = float(model.evaluate(series.values.mean(axis=0)))
    tau = np.sqrt(lag_window_tau2(series, model, ell1).tau2)
    n = series.n
    return np.sqrt(n) * (theta_hat - float(theta)) / (tau + 1.0 / n)
