"""Sampling the shift space under Bernoulli measures, truncated coding, and
the overlap lift.

Randomness is counter-based: stream ``index`` under ``seed`` is a Philox
generator whose 256-bit counter starts at index * 2**64, so every sampled
word is a pure function of (seed, index) and results do not depend on
evaluation order or the number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .ifs import IfsSystem, ProbabilityVector


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=index << 64))


@dataclass(frozen=True)
class SampledWord:
    """A depth-m prefix of a sampled infinite symbol sequence."""

    symbols: tuple[int, ...]
    rng_stream_id: int

    @property
    def depth(self) -> int:
        return len(self.symbols)


def _draw_symbols(rng: np.random.Generator, p: ProbabilityVector, depth: int) -> np.ndarray:
    cum = np.cumsum(p.probs)
    cum[-1] = 1.0
    u = rng.random(depth)
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def sample_word(p: ProbabilityVector, depth: int, seed: int, index: int) -> SampledWord:
    """Draw the first ``depth`` symbols of stream ``index`` under ``seed``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    symbols = _draw_symbols(stream(seed, index), p, depth)
    return SampledWord(symbols=tuple(int(s) for s in symbols), rng_stream_id=index)


def sample_word_matrix(p: ProbabilityVector, depth: int, seed: int, count: int,
                       first_index: int = 0) -> np.ndarray:
    """(count, depth) symbol matrix; row i is stream first_index + i."""
    out = np.empty((count, depth), dtype=np.int64)
    cum = np.cumsum(p.probs)
    cum[-1] = 1.0
    for i in range(count):
        u = stream(seed, first_index + i).random(depth)
        out[i] = np.searchsorted(cum, u, side="right")
    return out


@dataclass(frozen=True)
class CodedPoint:
    """Truncated coding of a word with a certified truncation error."""

    value: float
    error_bound: float


def code_point(sys: IfsSystem, w) -> CodedPoint:
    """Evaluate f_{w_1...w_m} at the hull midpoint.

    The true coded point of any extension of w lies in f_{w_1...w_m}(hull),
    so it is within (prod |r_{w_j}|) * diam/2 of the returned value.
    """
    symbols = tuple(w.symbols if isinstance(w, SampledWord) else w)
    if not symbols:
        raise ValueError("word must be nonempty")
    sys.check_symbols(symbols)
    x = sys.hull.midpoint
    shrink = 1.0
    for s in reversed(symbols):
        m = sys.maps[s]
        x = m.ratio * x + m.offset
    for s in symbols:
        shrink *= abs(sys.maps[s].ratio)
    return CodedPoint(value=x, error_bound=shrink * sys.hull.diam / 2.0)


def code_points(sys: IfsSystem, words: np.ndarray, reverse: bool = False) -> np.ndarray:
    """Vectorized truncated coding of a (count, depth) symbol matrix.

    With reverse=True the composition order is flipped (innermost symbol
    first), which is the depth-fold overlap-lift orbit of the same word.
    """
    ratios = sys.ratios
    offsets = sys.offsets
    x = np.full(words.shape[0], sys.hull.midpoint)
    cols = range(words.shape[1]) if reverse else range(words.shape[1] - 1, -1, -1)
    for j in cols:
        col = words[:, j]
        x = ratios[col] * x + offsets[col]
    return x


@dataclass(frozen=True)
class LiftState:
    """State of the overlap lift: remaining word window and spatial point."""

    word_window: tuple[int, ...]
    x: float


def lift_step(sys: IfsSystem, state: LiftState) -> LiftState:
    """One lift step: shift the word, apply the consumed symbol's map to x."""
    if not state.word_window:
        raise ValueError("lift word window exhausted")
    head = state.word_window[0]
    sys.check_symbols((head,))
    m = sys.maps[head]
    return LiftState(word_window=state.word_window[1:], x=m.ratio * state.x + m.offset)


def lift_orbit_point(sys: IfsSystem, symbols, x0: float) -> float:
    """Second coordinate after len(symbols) lift steps from (symbols, x0)."""
    state = LiftState(word_window=tuple(symbols), x=x0)
    while state.word_window:
        state = lift_step(sys, state)
    return state.x


@dataclass(frozen=True)
class KsReport:
    """Two-sample Kolmogorov-Smirnov comparison at the 0.999 level."""

    statistic: float
    threshold: float
    passed: bool
    samples: int


def ks_compare(a: np.ndarray, b: np.ndarray, level: float = 0.999) -> KsReport:
    stat = float(stats.ks_2samp(a, b, method="asymp").statistic)
    alpha = 1.0 - level
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    thr = c * math.sqrt((len(a) + len(b)) / (len(a) * len(b)))
    return KsReport(statistic=stat, threshold=thr, passed=stat < thr, samples=len(a))


def projection_equality_test(sys: IfsSystem, p: ProbabilityVector, N: int,
                             depth: int, seed: int,
                             p_lift: ProbabilityVector | None = None) -> KsReport:
    """Compare two samplers of the projected measure.

    Scheme (a) codes sampled words directly; scheme (b) runs the depth-fold
    lift orbit from the hull midpoint, which composes the same word in
    reversed order.  For a Bernoulli measure the two samples share one
    distribution, so the KS statistic should sit below the 0.999 threshold.
    Passing ``p_lift`` different from ``p`` is the negative control.
    """
    if N < 1000:
        raise ValueError("need at least 1000 samples")
    words_a = sample_word_matrix(p, depth, seed, N, first_index=0)
    words_b = sample_word_matrix(p_lift or p, depth, seed, N, first_index=N)
    a = code_points(sys, words_a)
    b = code_points(sys, words_b, reverse=True)
    return ks_compare(a, b)
