"""Pointwise error kinds and the mean-plus-standard-deviation composite loss.

The core form, applied independently to every loss term:

    alpha * mean(e) + (1 - alpha) * sqrt(eps + population_variance(e))

where e is the vector of pointwise errors of that term.  alpha = 1 recovers
the classical mean loss and is implemented as a separate branch so the two
code paths are bit-identical in that case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

__all__ = [
    "ErrorKind",
    "LossConfig",
    "TermStats",
    "LossBreakdown",
    "pointwise_error",
    "mean_std_loss",
    "composite_loss",
    "gpinn_term",
]

DEFAULT_VARIANCE_EPS = 1e-12


@dataclass(frozen=True)
class ErrorKind:
    """squared, absolute, or huber with steepness delta."""

    variant: str = "squared"
    delta: float = 1.0

    def __post_init__(self):
        if self.variant not in ("squared", "absolute", "huber"):
            raise ValueError(f"unknown error kind {self.variant!r}")
        if self.variant == "huber" and not (
            np.isfinite(self.delta) and self.delta > 0
        ):
            raise ValueError("huber delta must be finite and positive")


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.8
    lambda_init: float = 1.0
    lambda_dirichlet: float = 1.0
    lambda_neumann: float = 1.0
    lambda_residual: float = 1.0
    error_kind: ErrorKind = field(default_factory=ErrorKind)
    variance_eps: float = DEFAULT_VARIANCE_EPS
    gpinn_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        for name in ("lambda_init", "lambda_dirichlet", "lambda_neumann",
                     "lambda_residual", "variance_eps", "gpinn_weight"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0")


@dataclass
class TermStats:
    name: str
    mean: float
    std: float
    combined: float
    weight: float


@dataclass
class LossBreakdown:
    per_term: list[TermStats]
    total: object  # float, or an autodiff Var during training

    @property
    def total_value(self):
        return ad.value_of(self.total)

    def csv_rows(self, run_id, iteration):
        return [
            (run_id, iteration, t.name, t.mean, t.std, t.combined, t.weight)
            for t in self.per_term
        ]


def pointwise_error(pred, target, kind):
    """Pointwise error; elementwise over arrays, differentiable over Vars."""
    e = ad.sub(pred, target)
    if kind.variant == "squared":
        return ad.mul(e, e)
    if kind.variant == "absolute":
        return ad.absval(e)
    # huber: quadratic inside |e| <= delta, linear outside
    d = kind.delta
    a = ad.absval(e)
    av = np.asarray(ad.value_of(a))
    small = av <= d
    quad = ad.mul(0.5, ad.mul(e, e))
    lin = ad.mul(d, ad.sub(a, 0.5 * d))
    if np.ndim(av) == 0:
        return quad if small else lin
    return ad.where(small, quad, lin)


def mean_std_loss(e, alpha, eps=DEFAULT_VARIANCE_EPS):
    """alpha * mean + (1 - alpha) * smoothed population std of an error vector."""
    n = np.shape(ad.value_of(e))
    if len(n) != 1 or n[0] < 1:
        raise ValueError("error vector must be 1-D and nonempty")
    ebar = ad.reduce_mean(e)
    if alpha == 1.0:
        return ebar
    dev = ad.sub(e, ebar)
    var = ad.reduce_mean(ad.mul(dev, dev))
    std = ad.sqrt(ad.add(eps, var))
    return ad.add(ad.mul(alpha, ebar), ad.mul(1.0 - alpha, std))


def _term_stats(e):
    ev = np.asarray(ad.value_of(e))
    m = float(ev.mean())
    return m, float(np.sqrt(((ev - m) ** 2).mean()))


def composite_loss(terms, cfg):
    """Weighted sum of mean_std_loss over named error-vector terms.

    terms: iterable of (name, error_vector, weight); error vectors may be
    plain arrays or Vars.  Returns a LossBreakdown whose total carries the
    graph when the inputs do.
    """
    per_term = []
    total = None
    for name, e, weight in terms:
        combined = mean_std_loss(e, cfg.alpha, cfg.variance_eps)
        m, s = _term_stats(e)
        per_term.append(
            TermStats(name, m, s, float(ad.value_of(combined)), float(weight))
        )
        contrib = ad.mul(float(weight), combined)
        total = contrib if total is None else ad.add(total, contrib)
    if total is None:
        raise ValueError("composite_loss needs at least one term")
    return LossBreakdown(per_term, total)


def gpinn_term(residual_fn, points, cfg=None):
    """Mean over points of the squared residual gradient w.r.t. coordinates.

    residual_fn maps coordinate scalars to a differentiable residual; one
    reverse pass per point.
    """
    acc = None
    count = 0
    for pt in points:
        coords = pt if isinstance(pt, (tuple, list, np.ndarray)) else (pt,)
        grads = ad.gradient(lambda *xs: residual_fn(*xs), list(coords))
        sq = None
        for g in grads:
            gg = ad.mul(g, g)
            sq = gg if sq is None else ad.add(sq, gg)
        acc = sq if acc is None else ad.add(acc, sq)
        count += 1
    if count == 0:
        raise ValueError("gpinn_term needs at least one point")
    return ad.div(acc, float(count))
