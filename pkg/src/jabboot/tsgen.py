"""Synthetic series generators for the simulation study.

Model kinds (all driven by i.i.d. standard normal innovations eps_t):

* ``I``     X_t = (eps_t + eps_{t+1}) / sqrt(2)           (MA(1))
* ``II``    X_t = 0.3 X_{t-1} + eps_t                     (AR(1), positive)
* ``III``   X_t = -0.1 X_{t-1} + eps_t                    (AR(1), negative)
* ``IV``    X_t = W_t^2 + W_t 1(W_t < 0), with
            W_t = 0.6 W_{t-1} - 0.3 W_{t-2} + 0.1 W_{t-3}
                  + eps_t + 0.2 eps_{t-1} + 0.3 eps_{t-2} + 0.1 eps_{t-3}
* ``iid``   X_t = eps_t
* ``const`` X_t = 1 (degenerate, for tests)

Recursions start from zero state; ``burn_in`` warm-up values are
discarded (default 500, model IV requires at least 100).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .blocks import TimeSeries
from .rng import Stream
from .smoothfn import SmoothModel

MODEL_KINDS = ("I", "II", "III", "IV", "iid", "const")

# ARMA(3,3) driving model IV, in lfilter (ma, ar) convention.
_IV_MA = np.array([1.0, 0.2, 0.3, 0.1])
_IV_AR = np.array([1.0, -0.6, 0.3, -0.1])


@dataclass(frozen=True)
class ModelSpec:
    """Which series model to simulate, with warm-up length and seed."""

    kind: str
    burn_in: int = 500
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.kind == "IV" and self.burn_in < 100:
            raise ValueError("model IV requires burn_in >= 100 (ARMA(3,3) memory)")


def generate(spec: ModelSpec, n: int, rng: Optional[np.random.Generator] = None) -> TimeSeries:
    """Simulate n observations (d=1) after discarding the warm-up."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if rng is None:
        if spec.seed is None:
            raise ValueError("either spec.seed or an explicit rng is required")
        rng = Stream(spec.seed).generator()
    burn = spec.burn_in
    if spec.kind == "const":
        return TimeSeries(np.ones(n))
    if spec.kind == "iid":
        return TimeSeries(rng.standard_normal(burn + n)[burn:])
    if spec.kind == "I":
        eps = rng.standard_normal(burn + n + 1)
        x = (eps[:-1] + eps[1:]) / np.sqrt(2.0)
        return TimeSeries(x[burn:])
    if spec.kind in ("II", "III"):
        phi = 0.3 if spec.kind == "II" else -0.1
        eps = rng.standard_normal(burn + n)
        x = lfilter([1.0], [1.0, -phi], eps)
        return TimeSeries(x[burn:])
    # model IV
    eps = rng.standard_normal(burn + n)
    w = lfilter(_IV_MA, _IV_AR, eps)
    x = w * w + w * (w < 0)
    return TimeSeries(x[burn:])


@functools.lru_cache(maxsize=1)
def model_iv_theta(samples: int = 10_000_000) -> tuple[float, float]:
    """Mean of model IV, estimated once by long-run Monte Carlo.

    Returns (estimate, standard error); the standard error comes from
    batch means so it is valid under the serial dependence of the path.
    """
    rng = Stream(40412).generator()
    burn = 1000
    eps = rng.standard_normal(samples + burn)
    w = lfilter(_IV_MA, _IV_AR, eps)[burn:]
    x = w * w + w * (w < 0)
    batch = 1000
    nb = x.size // batch
    means = x[: nb * batch].reshape(nb, batch).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / np.sqrt(nb))


def true_theta(spec: ModelSpec, model: SmoothModel) -> float:
    """True parameter for (model kind, functional) pairs the harness supports."""
    if model.kind != "mean":
        raise ValueError(
            f"true parameter is only tabulated for the mean functional, not {model.kind!r}"
        )
    if spec.kind in ("I", "II", "III", "iid"):
        return 0.0
    if spec.kind == "const":
        return 1.0
    return model_iv_theta()[0]
