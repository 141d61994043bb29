"""Counting length-n chains that reach a point.

beta_n(x) is the number of words w of length n whose image interval f_w(hull)
contains x.  The fast path is a pullback branch-and-prune: x is in f_w(hull)
iff f_{w_1}^{-1}(x) is in f_{w_2...w_n}(hull), so we pull the (fuzz-inflated)
query interval back one symbol at a time and drop branches that leave the
hull.  A word is counted in ``lower`` when the query interval is contained in
the image, in ``upper`` when it merely intersects it; with fuzz 0 the two
conditions coincide (closed intervals on both sides).

A brute-force enumerator over all |I|^n words serves as the independent
oracle, and a sweep over all image-interval endpoints gives the exact step
function x -> beta_n(x).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, UnsupportedSystemError
from .ifs import IfsSystem, ProbabilityVector

DEFAULT_BUDGET = 1 << 26
BRUTE_LIMIT = 1 << 24
PROFILE_LIMIT = 1 << 22
_CHUNK = 512


def default_budget() -> int:
    """Node-visit budget per counting call; OVERLAP_IFS_BUDGET overrides."""
    env = os.environ.get("OVERLAP_IFS_BUDGET")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_BUDGET


@dataclass(frozen=True)
class ChainCount:
    """Certified lower/upper count of n-chains reaching a query point."""

    n: int
    lower: int
    upper: int
    fuzz: float

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError(f"bad counts lower={self.lower} upper={self.upper}")


def _descend(sys, n, q_lo, q_hi, budget, log_probs=None, tau=None, entropy=None,
             track_first=False):
    """Shared branch-and-prune kernel, vectorized over a batch of queries.

    Returns (idx, lo, hi, lower_mask, first_counts) for the surviving leaves:
    idx maps each leaf back to its query, lower_mask marks leaves whose
    pulled-back query interval sits inside the hull, first_counts (optional)
    is the number of occurrences of symbol 0 along each leaf's word.
    """
    H = sys.hull
    m = sys.alphabet_size
    idx = np.arange(len(q_lo), dtype=np.int64)
    lo = np.asarray(q_lo, dtype=float)
    hi = np.asarray(q_hi, dtype=float)
    filt = log_probs is not None
    if filt:
        s = np.zeros(len(idx))
        lp_min, lp_max = float(np.min(log_probs)), float(np.max(log_probs))
    first = np.zeros(len(idx), dtype=np.int64) if track_first else None
    visits = 0
    for depth in range(n):
        rem = n - depth - 1
        parts = []
        for i in range(m):
            r = sys.ratios[i]
            c = sys.offsets[i]
            a = (lo - c) / r
            b = (hi - c) / r
            if r < 0:
                a, b = b, a
            keep = (b >= H.lo) & (a <= H.hi)
            if filt:
                si = s + log_probs[i]
                # a branch stays only if some completion can land in the window
                keep &= (si + rem * lp_max > n * (entropy - tau)) & \
                        (si + rem * lp_min < n * (entropy + tau))
                parts.append((idx[keep], a[keep], b[keep], si[keep],
                              first[keep] + (1 if i == 0 else 0) if track_first else None))
            else:
                parts.append((idx[keep], a[keep], b[keep], None,
                              first[keep] + (1 if i == 0 else 0) if track_first else None))
        visits += m * len(idx)
        if visits > budget:
            raise BudgetError(
                f"branch-and-prune would exceed the work budget ({budget} node visits); "
                "reduce n or raise OVERLAP_IFS_BUDGET")
        idx = np.concatenate([p[0] for p in parts])
        lo = np.concatenate([p[1] for p in parts])
        hi = np.concatenate([p[2] for p in parts])
        if filt:
            s = np.concatenate([p[3] for p in parts])
        if track_first:
            first = np.concatenate([p[4] for p in parts])
        if len(idx) == 0:
            break
    if filt and n > 0 and len(idx):
        ok = np.abs(s / n - entropy) < tau
        idx, lo, hi = idx[ok], lo[ok], hi[ok]
        if track_first:
            first = first[ok]
    lower_mask = (lo >= H.lo) & (hi <= H.hi)
    return idx, lower_mask, first


def _batch_counts(sys, n, xs, fuzz, budget, p=None, tau=None, track_first=False):
    """Lower/upper chain counts for an array of query points."""
    xs = np.asarray(xs, dtype=float)
    log_probs = entropy = None
    if tau is not None:
        if p is None:
            raise ValueError("tau filtering needs a probability vector")
        log_probs = p.log_probs
        entropy = p.entropy_sum
    npts = len(xs)
    lower = np.zeros(npts, dtype=np.int64)
    upper = np.zeros(npts, dtype=np.int64)
    first = np.zeros((npts, n + 1), dtype=np.int64) if track_first else None
    for start in range(0, npts, _CHUNK):
        sl = slice(start, min(start + _CHUNK, npts))
        q = xs[sl]
        idx, lower_mask, fc = _descend(
            sys, n, q - fuzz, q + fuzz, budget,
            log_probs=log_probs, tau=tau, entropy=entropy, track_first=track_first)
        k = len(q)
        upper[sl] = np.bincount(idx, minlength=k)
        lower[sl] = np.bincount(idx[lower_mask], minlength=k)
        if track_first:
            block = np.zeros((k, n + 1), dtype=np.int64)
            np.add.at(block, (idx[lower_mask], fc[lower_mask]), 1)
            first[sl] = block
    return (lower, upper, first) if track_first else (lower, upper)


def count_chains(sys: IfsSystem, n: int, x: float, fuzz: float = 0.0,
                 budget: int | None = None) -> ChainCount:
    """beta_n at x via pullback branch-and-prune, with certified fuzz."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if fuzz < 0:
        raise ValueError("fuzz must be nonnegative")
    budget = default_budget() if budget is None else budget
    lower, upper = _batch_counts(sys, n, [x], fuzz, budget)
    return ChainCount(n=n, lower=int(lower[0]), upper=int(upper[0]), fuzz=fuzz)


def _sorted_endpoint_counts(sys, n, xs, fuzz):
    """Exact counts from the sorted endpoints of all depth-n images.

    Only valid when no image interval can fit strictly inside the query
    interval (every image at least 2*fuzz wide); the caller checks that.
    """
    los, his = all_image_intervals(sys, n, limit=PROFILE_LIMIT)
    los.sort()
    his.sort()
    xs = np.asarray(xs, dtype=float)
    lower = (np.searchsorted(los, xs - fuzz, side="right")
             - np.searchsorted(his, xs + fuzz, side="left"))
    upper = (np.searchsorted(los, xs + fuzz, side="right")
             - np.searchsorted(his, xs - fuzz, side="left"))
    return lower.astype(np.int64), upper.astype(np.int64)


def count_chains_many(sys: IfsSystem, n: int, xs, fuzz: float = 0.0,
                      p: ProbabilityVector | None = None, tau: float | None = None,
                      budget_per_point: int | None = None):
    """Vectorized beta_n over an array of query points.

    The work budget scales with the number of points.  Returns (lower, upper)
    integer arrays.

    When the full word list is small relative to the batch, the counts come
    from a sort of all image endpoints instead of per-point branch-and-prune;
    the two paths agree exactly, this is purely a cost crossover (pruning
    helps when chains are few, enumeration when words are few).
    """
    m = sys.alphabet_size
    total_words = m ** n if n * math.log(m) < 40 else None
    if (tau is None and total_words is not None
            and total_words <= PROFILE_LIMIT
            and total_words <= 64 * max(1, len(xs))
            and min(abs(r) for r in sys.ratios) ** n * sys.hull.diam >= 2.0 * fuzz):
        return _sorted_endpoint_counts(sys, n, xs, fuzz)
    per = default_budget() if budget_per_point is None else budget_per_point
    return _batch_counts(sys, n, xs, fuzz, per * max(1, len(xs)), p=p, tau=tau)


def count_chains_generic(sys: IfsSystem, n: int, x: float, fuzz: float,
                         p: ProbabilityVector, tau: float,
                         budget: int | None = None) -> ChainCount:
    """beta_n restricted to words whose per-symbol log-probability average
    lies within tau of the entropy sum of p."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    budget = default_budget() if budget is None else budget
    lower, upper = _batch_counts(sys, n, [x], fuzz, budget, p=p, tau=tau)
    return ChainCount(n=n, lower=int(lower[0]), upper=int(upper[0]), fuzz=fuzz)


def all_image_intervals(sys: IfsSystem, n: int, limit: int = BRUTE_LIMIT):
    """Endpoint arrays (los, his) of f_w(hull) for every word of length n.

    Built by forward composition level by level (prepending each symbol as
    the new outermost map), so it shares no code path with the pullback
    counter.
    """
    m = sys.alphabet_size
    if m ** n > limit:
        raise BudgetError(f"{m}^{n} image intervals exceed the enumeration limit {limit}")
    los = np.array([sys.hull.lo])
    his = np.array([sys.hull.hi])
    for _ in range(n):
        parts_lo, parts_hi = [], []
        for i in range(m):
            r, c = sys.ratios[i], sys.offsets[i]
            a = r * los + c
            b = r * his + c
            if r < 0:
                a, b = b, a
            parts_lo.append(a)
            parts_hi.append(b)
        los = np.concatenate(parts_lo)
        his = np.concatenate(parts_hi)
    return los, his


def count_chains_brute(sys: IfsSystem, n: int, x: float, fuzz: float = 0.0) -> ChainCount:
    """Oracle: enumerate all |I|^n words explicitly and count containments."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    los, his = all_image_intervals(sys, n)
    lower = int(np.count_nonzero((los <= x - fuzz) & (his >= x + fuzz)))
    upper = int(np.count_nonzero((los <= x + fuzz) & (his >= x - fuzz)))
    return ChainCount(n=n, lower=lower, upper=upper, fuzz=fuzz)


def count_by_ones(sys: IfsSystem, n: int, x: float, fuzz: float = 0.0,
                  budget: int | None = None) -> list[int]:
    """Chain counts split by how many symbols equal the first map.

    Entry k is the number of length-n chains reaching x that use the first
    map exactly k times (certified lower semantics).  Two-map systems only;
    the entries sum to count_chains(...).lower.
    """
    if sys.alphabet_size != 2:
        raise UnsupportedSystemError("count_by_ones needs an alphabet of exactly 2 maps")
    if n < 1:
        raise ValueError("n must be at least 1")
    budget = default_budget() if budget is None else budget
    _, _, first = _batch_counts(sys, n, [x], fuzz, budget, track_first=True)
    return [int(v) for v in first[0]]


@dataclass(frozen=True)
class MultiplicityProfile:
    """The exact step function x -> beta_n(x) as breakpoints plus gap counts."""

    breakpoints: np.ndarray
    counts: np.ndarray
    n: int

    def count_at(self, x: float) -> int:
        """Coverage multiplicity at x (gap value; breakpoints resolve right)."""
        if len(self.counts) == 0:
            return 0
        if x == self.breakpoints[-1]:
            return int(self.counts[-1])
        i = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        if i < 0 or i >= len(self.counts):
            return 0
        return int(self.counts[i])

    @property
    def max_count(self) -> int:
        return int(self.counts.max()) if len(self.counts) else 0

    def rows(self):
        for i, c in enumerate(self.counts):
            yield float(self.breakpoints[i]), float(self.breakpoints[i + 1]), int(c)


def multiplicity_profile(sys: IfsSystem, n: int) -> MultiplicityProfile:
    """Sweep all depth-n image intervals into a coverage step function."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    los, his = all_image_intervals(sys, n, limit=PROFILE_LIMIT)
    points = np.unique(np.concatenate([los, his]))
    if len(points) == 1:
        # all images degenerate to a single point atom
        return MultiplicityProfile(
            breakpoints=np.array([points[0], points[0]]),
            counts=np.array([len(los)], dtype=np.int64), n=n)
    los_sorted = np.sort(los)
    his_sorted = np.sort(his)
    left = points[:-1]
    # an interval covers the open gap (a, b) iff lo <= a and hi >= b,
    # i.e. it started by a and has not ended at or before a
    counts = (np.searchsorted(los_sorted, left, side="right")
              - np.searchsorted(his_sorted, left, side="right"))
    return MultiplicityProfile(breakpoints=points, counts=counts.astype(np.int64), n=n)


def default_fuzz(sys: IfsSystem) -> float:
    """Counting fuzz used by the estimators: 1e-9 of the hull diameter."""
    return 1e-9 * sys.hull.diam


def coding_depth_for_fuzz(sys: IfsSystem, fuzz: float, minimum: int = 1) -> int:
    """Truncation depth making the coding error at most fuzz/10."""
    diam = sys.hull.diam
    if diam == 0.0 or fuzz <= 0.0:
        return max(minimum, 1)
    rmax = sys.max_ratio
    depth = math.ceil(math.log(fuzz / (10.0 * diam)) / math.log(rmax))
    return max(minimum, depth, 1)
