"""Defeaturing error estimators driven by boundary traces.

Every estimator consumes only the boundary error d = g_gamma - u0|gamma
on the defeatured boundary.  The ``*_value`` kernels take precomputed
norms, the plain functions take a :class:`BoundaryTrace`; both are
one-homogeneous in the data.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .boundary import (
    BoundaryTrace,
    average,
    l2_norm,
    tangential_gradient_l2,
    trace_length,
)


def dd_value(l2: float, grad_l2: float) -> float:
    """Estimator kernel for Dirichlet data on a replaced boundary piece."""
    return float(np.sqrt(2.0 * l2 * grad_l2))


def dn_value(gamma_len: float, avg: float, dev_l2: float, grad_l2: float,
             n: int = 2) -> float:
    """Kernel when the defeatured problem carries Neumann data instead."""
    if n not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    prefactor = gamma_len ** ((n - 2) / (2.0 * (n - 1)))
    return float(prefactor * abs(avg) + np.sqrt(2.0 * dev_l2 * grad_l2))


def internal_value(c_gamma: float, avg: float, dev_l2: float,
                   grad_l2: float) -> float:
    """Kernel for an internal feature with capacity factor c_gamma."""
    return float(c_gamma * abs(avg) + 2.0 * np.sqrt(dev_l2 * grad_l2))


def _components(d: BoundaryTrace) -> tuple[float, float, float]:
    avg = average(d)
    dev = BoundaryTrace(d.points, d.values - avg, d.closed)
    return avg, l2_norm(dev), tangential_gradient_l2(d)


def estimator_dd(d: BoundaryTrace) -> float:
    """Energy-error bound for a Dirichlet-to-Dirichlet defeatured boundary."""
    l2 = l2_norm(d)
    grad = tangential_gradient_l2(d)
    if grad == 0.0 and l2 > 0.0:
        warnings.warn(
            "constant nonzero boundary error: the Dirichlet estimator "
            "vanishes; check the boundary data"
        )
    return dd_value(l2, grad)


def estimator_dn(d: BoundaryTrace, n: int = 2) -> float:
    """Energy-error bound when gamma0 carries Neumann data."""
    avg, dev_l2, grad = _components(d)
    return dn_value(trace_length(d), avg, dev_l2, grad, n=n)


def estimator_internal(d: BoundaryTrace, c_gamma: float) -> float:
    """Energy-error bound for an internal feature; gamma must be closed."""
    if not d.closed:
        raise ValueError("internal features need a closed gamma chain")
    avg, dev_l2, grad = _components(d)
    return internal_value(c_gamma, avg, dev_l2, grad)


def c_bar(diam_gamma: float, dist_to_boundary: float, n: int = 2) -> float:
    """Capacity-style factor weighting the mean of the boundary error.

    ``dist_to_boundary`` is the distance from the feature barycenter to
    the nearest other boundary (the outer boundary, or another feature).
    The separation ratio s = diam / (2 dist) must lie in (0, 1).
    """
    s = diam_gamma / (2.0 * dist_to_boundary)
    if not (0.0 < s < 1.0):
        raise ValueError(
            f"separation ratio {s:g} outside (0, 1); feature too large "
            "or too close to another boundary"
        )
    if n == 2:
        return float(np.sqrt(2.0 * np.pi / abs(np.log(s))))
    if n == 3:
        return float(np.sqrt(2.0 * np.pi * diam_gamma / (1.0 - s)))
    raise ValueError("dimension must be 2 or 3")


def aggregate(estimates) -> float:
    """Combine independent single-feature estimates in quadrature."""
    e = np.asarray(list(estimates), dtype=float)
    if e.size == 0:
        raise ValueError("nothing to aggregate")
    if np.any(e < 0.0):
        raise ValueError("estimates must be nonnegative")
    return float(np.sqrt(np.sum(e * e)))


def effectivity(estimate: float, error: float) -> float:
    if not (error > 0.0):
        raise ValueError("effectivity needs a positive reference error")
    return float(estimate / error)


@dataclass
class EstimatorReport:
    """One estimator evaluation, with enough context to reproduce it."""

    case: str                 # dd | dn | internal
    size: float               # measured gamma length
    diam_gamma: float
    component_avg: float      # contribution of the mean part
    component_dev: float      # contribution of the oscillation part
    estimate: float
    c_gamma: float | None = None
    error: float | None = None

    @property
    def effectivity(self) -> float | None:
        if self.error is None:
            return None
        return effectivity(self.estimate, self.error)


def _trace_diameter(pts: np.ndarray) -> float:
    """Max pairwise distance; hull-reduced so dense traces stay cheap."""
    if pts.shape[0] > 64:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear trace: the extremes along the principal direction
            c = pts - pts.mean(axis=0)
            w = c @ c[int(np.argmax(np.einsum("ij,ij->i", c, c)))]
            pts = pts[[int(np.argmin(w)), int(np.argmax(w))]]
    d2 = np.max(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2))
    return float(np.sqrt(d2))


def report(d: BoundaryTrace, case: str, c_gamma: float | None = None,
           error: float | None = None, n: int = 2) -> EstimatorReport:
    """Evaluate the estimator for ``case`` and split it into components."""
    avg, dev_l2, grad = _components(d)
    glen = trace_length(d)
    if case == "dd":
        comp_avg = 0.0
        comp_dev = dd_value(l2_norm(d), grad)
    elif case == "dn":
        comp_avg = glen ** ((n - 2) / (2.0 * (n - 1))) * abs(avg)
        comp_dev = float(np.sqrt(2.0 * dev_l2 * grad))
    elif case == "internal":
        if c_gamma is None:
            raise ValueError("internal case needs c_gamma")
        comp_avg = c_gamma * abs(avg)
        comp_dev = 2.0 * float(np.sqrt(dev_l2 * grad))
    else:
        raise ValueError(f"unknown estimator case {case!r}")
    return EstimatorReport(
        case=case,
        size=glen,
        diam_gamma=_trace_diameter(d.points),
        component_avg=comp_avg,
        component_dev=comp_dev,
        estimate=comp_avg + comp_dev,
        c_gamma=c_gamma,
        error=error,
    )
