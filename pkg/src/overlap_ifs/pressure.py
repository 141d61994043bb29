"""Bowen-type pressure equation and Hausdorff-dimension upper bounds.

For similarity systems with Bernoulli-type weights the pressure collapses to
P(t) = log(sum_i |r_i|^t) - alpha, which is strictly decreasing in t, so its
zero is unique and bisection is unconditionally safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .ifs import IfsSystem

DEFAULT_P_TOL = 1e-13


@dataclass(frozen=True)
class PressureParams:
    """log|r_i| per map plus the subtracted constant (log of an overlap number)."""

    log_ratios: tuple[float, ...]
    alpha: float

    def __post_init__(self):
        if not self.log_ratios:
            raise ValueError("need at least one ratio")
        if any(lr >= 0 for lr in self.log_ratios):
            raise ValueError("all log ratios must be negative (contractions)")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative (overlap numbers are >= 1)")

    @classmethod
    def from_system(cls, sys: IfsSystem, o_value: float) -> "PressureParams":
        return cls(tuple(math.log(abs(m.ratio)) for m in sys.maps), math.log(o_value))


@dataclass(frozen=True)
class DimensionBound:
    """Zero of the pressure function, clamped to a usable dimension bound."""

    t_zero: float
    effective_bound: float
    residual: float


def pressure(params: PressureParams, t: float) -> float:
    """log(sum_i |r_i|^t) - alpha via log-sum-exp."""
    lr = np.array(params.log_ratios)
    return float(logsumexp(t * lr)) - params.alpha


def pressure_zero(params: PressureParams, tol: float = DEFAULT_P_TOL) -> DimensionBound:
    """Unique root of the pressure function, by bisection to |P| <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    # bracket the root with a geometrically grown interval (P is decreasing)
    p0 = pressure(params, 0.0)
    if abs(p0) <= tol:
        return DimensionBound(t_zero=0.0, effective_bound=0.0, residual=abs(p0))
    if p0 > 0.0:
        lo, hi = 0.0, 1.0
        while pressure(params, hi) > 0.0:
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = -1.0, 0.0
        while pressure(params, lo) <= 0.0:
            lo, hi = 2.0 * lo, lo
    t = 0.5 * (lo + hi)
    for _ in range(200):
        t = 0.5 * (lo + hi)
        v = pressure(params, t)
        if abs(v) <= tol:
            break
        if v > 0.0:
            lo = t
        else:
            hi = t
    return DimensionBound(t_zero=t,
                          effective_bound=min(max(t, 0.0), 1.0),
                          residual=abs(pressure(params, t)))


def _check_domain(lam: float, o_value: float) -> None:
    if not 0.5 < lam < 1.0:
        raise ValueError(f"lambda must be in (1/2, 1), got {lam}")
    if not 1.0 <= o_value <= 2.0:
        raise ValueError(f"overlap number must be in [1, 2], got {o_value}")


def hd_bound_bernoulli_convolution(lam: float, o_value: float) -> DimensionBound:
    """Closed-form dimension bound log(2/o) / |log lambda| for the two-map
    symmetric system, clamped to [0, 1]."""
    _check_domain(lam, o_value)
    t = math.log(2.0 / o_value) / abs(math.log(lam))
    params = PressureParams((math.log(lam), math.log(lam)), math.log(o_value))
    return DimensionBound(t_zero=t,
                          effective_bound=min(max(t, 0.0), 1.0),
                          residual=abs(pressure(params, t)))


def overlap_upper_from_hd(lam: float, hd_value: float) -> float:
    """Bound on the overlap number from a known dimension: 2 * lambda^hd."""
    if not 0.5 < lam < 1.0:
        raise ValueError(f"lambda must be in (1/2, 1), got {lam}")
    if not 0.0 <= hd_value <= 1.0:
        raise ValueError(f"hd_value must be in [0, 1], got {hd_value}")
    return 2.0 * lam ** hd_value


def hd_bound_biased(lam: float, o_biased: float) -> DimensionBound:
    """Same closed form, fed with the overlap number of a biased measure."""
    return hd_bound_bernoulli_convolution(lam, o_biased)
