"""Monte Carlo and exact-quadrature estimation of the overlap number.

The overlap number is exp of the limiting per-symbol average of log beta_n
against the projected Bernoulli measure.  At finite n we report
a_n = mean(log beta_n)/n with a normal-approximation confidence interval;
the headline number is always a finite-n estimate, never a certified limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import (coding_depth_for_fuzz, count_chains_many, default_fuzz,
                     PROFILE_LIMIT)
from .errors import BudgetError, FlaggedSampleError
from .ifs import IfsSystem, ProbabilityVector
from .sampling import code_points, sample_word_matrix

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
FLAG_LIMIT = 1e-3


def default_tau(n: int) -> float:
    """CLT-scale log-probability window for biased measures."""
    return 4.0 / math.sqrt(n)


@dataclass(frozen=True)
class OverlapEstimate:
    """Finite-n estimate of the overlap number and its certified variants."""

    n: int
    samples: int
    mean_log_beta: float
    a_n: float
    o_hat: float
    std_err: float
    ci_lo: float
    ci_hi: float
    lower_variant: float
    upper_variant: float
    flagged: int

    def to_dict(self) -> dict:
        return {
            "n": self.n, "samples": self.samples,
            "mean_log_beta": self.mean_log_beta, "a_n": self.a_n,
            "o_hat": self.o_hat, "std_err": self.std_err,
            "ci_lo": self.ci_lo, "ci_hi": self.ci_hi,
            "lower_variant": self.lower_variant, "upper_variant": self.upper_variant,
            "flagged": self.flagged,
        }


def _aggregate(n, log_lower, log_upper, weights, flagged) -> OverlapEstimate:
    if weights is None:
        cnt = len(log_lower)
        mean_log = math.fsum(log_lower) / cnt
        mean_log_up = math.fsum(log_upper) / cnt
        if cnt > 1:
            var = math.fsum((v / n - mean_log / n) ** 2 for v in log_lower) / (cnt - 1)
            se = math.sqrt(var / cnt)
        else:
            se = 0.0
    else:
        total = math.fsum(weights)
        mean_log = math.fsum(w * v for w, v in zip(weights, log_lower)) / total
        mean_log_up = math.fsum(w * v for w, v in zip(weights, log_upper)) / total
        cnt = len(log_lower)
        se = 0.0
    a_n = mean_log / n
    return OverlapEstimate(
        n=n, samples=cnt,
        mean_log_beta=mean_log, a_n=a_n, o_hat=math.exp(a_n),
        std_err=se,
        ci_lo=math.exp(a_n - Z99 * se), ci_hi=math.exp(a_n + Z99 * se),
        lower_variant=math.exp(a_n),
        upper_variant=math.exp(mean_log_up / n),
        flagged=flagged,
    )


def estimate_overlap_mc(sys: IfsSystem, p: ProbabilityVector, n: int, N: int,
                        tau: float | None = None, seed: int = 0,
                        fuzz: float | None = None,
                        budget_per_point: int | None = None) -> OverlapEstimate:
    """Monte Carlo estimate of the overlap number at chain depth n.

    Draws N words (streams seed/0..N-1), codes each to a point whose
    truncation error is below a tenth of the counting fuzz, and averages
    log beta_n over the samples.  With ``tau`` set, only chains inside the
    log-probability window count (needed for biased measures; for the uniform
    measure the filter is vacuous and ``tau=None`` is correct).

    Samples whose certified lower count is 0 (query uncertainty straddling a
    gap) are excluded; more than 0.1% of them is an error.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    fuzz = default_fuzz(sys) if fuzz is None else fuzz
    depth = coding_depth_for_fuzz(sys, fuzz)
    words = sample_word_matrix(p, depth, seed, N)
    xs = code_points(sys, words)
    lower, upper = count_chains_many(sys, n, xs, fuzz, p=p if tau is not None else None,
                                     tau=tau, budget_per_point=budget_per_point)
    ok = lower > 0
    flagged = int(N - np.count_nonzero(ok))
    if flagged > FLAG_LIMIT * N:
        raise FlaggedSampleError(
            f"{flagged}/{N} samples had zero certified lower count; "
            "reduce the fuzz or deepen the coding")
    log_lower = np.log(lower[ok])
    log_upper = np.log(upper[ok])
    return _aggregate(n, log_lower, log_upper, None, flagged)


def quadrature_atoms(sys: IfsSystem, p: ProbabilityVector, depth: int):
    """Atomic depth-``depth`` approximation of the projected measure.

    Returns (points, weights): one atom per word of length ``depth``, placed
    at the image of the hull midpoint, weighted by the word's probability.
    """
    m = sys.alphabet_size
    if m ** depth > PROFILE_LIMIT:
        raise BudgetError(f"{m}^{depth} quadrature atoms exceed the limit {PROFILE_LIMIT}")
    xs = np.array([sys.hull.midpoint])
    ws = np.array([1.0])
    for _ in range(depth):
        parts_x, parts_w = [], []
        for i in range(m):
            parts_x.append(sys.ratios[i] * xs + sys.offsets[i])
            parts_w.append(p.probs[i] * ws)
        xs = np.concatenate(parts_x)
        ws = np.concatenate(parts_w)
    return xs, ws


def estimate_overlap_exact(sys: IfsSystem, p: ProbabilityVector, n: int,
                           quad_depth: int,
                           tau: float | None = None) -> OverlapEstimate:
    """Deterministic quadrature oracle for the overlap integral.

    Computes the exact expectation of log beta_n over the depth-quad_depth
    atomic approximation of the projected measure (no sampling, std_err 0).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if quad_depth < n:
        raise ValueError("quad_depth must be at least n")
    xs, ws = quadrature_atoms(sys, p, quad_depth)
    lower, upper = count_chains_many(sys, n, xs, fuzz=0.0,
                                     p=p if tau is not None else None, tau=tau)
    ok = lower > 0
    flagged = int(len(xs) - np.count_nonzero(ok))
    log_lower = np.log(lower[ok])
    log_upper = np.log(upper[ok])
    return _aggregate(n, log_lower, log_upper, ws[ok], flagged)


@dataclass(frozen=True)
class ConvergenceReport:
    """Estimates at increasing n plus a 1/n extrapolation diagnostic."""

    estimates: tuple[OverlapEstimate, ...]
    trend_slope: float

    @property
    def headline(self) -> OverlapEstimate:
        return self.estimates[-1]


def convergence_scan(sys: IfsSystem, p: ProbabilityVector, n_values,
                     N: int, seed: int = 0,
                     tau: float | None = None) -> ConvergenceReport:
    """Run the Monte Carlo estimator over a grid of chain depths.

    ``tau`` may be None (unfiltered; correct for uniform p), a number, or
    "auto" to use the CLT-scale default window per depth for biased p.
    """
    n_values = list(n_values)
    if not n_values or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be nonempty and strictly increasing")
    estimates = []
    for n in n_values:
        t = default_tau(n) if tau == "auto" else tau
        estimates.append(estimate_overlap_mc(sys, p, n, N, tau=t, seed=seed))
    a = np.array([e.a_n for e in estimates])
    inv = 1.0 / np.array(n_values, dtype=float)
    slope = float(np.polyfit(inv, a, 1)[0]) if len(n_values) > 1 else 0.0
    return ConvergenceReport(estimates=tuple(estimates), trend_slope=slope)
