"""Similarity maps, IFS systems on the real line, words, and probability vectors.

Everything here is immutable after construction and safe to share between
threads.  The word convention is fixed once for the whole package: for a word
w = (w_1, ..., w_n) the first symbol is the *outermost* map, i.e.
apply_word(sys, w, x) = f_{w_1}(f_{w_2}(... f_{w_n}(x))).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AlphabetError, ConfigError

HULL_TOL = 1e-13


@dataclass(frozen=True)
class Interval:
    """A closed interval [lo, hi] on the line."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def diam(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def contains_interval(self, other: "Interval", slack: float = 0.0) -> bool:
        return self.lo - slack <= other.lo and other.hi <= self.hi + slack

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


@dataclass(frozen=True)
class SimilarityMap:
    """An affine contraction x -> ratio*x + offset with 0 < |ratio| < 1."""

    ratio: float
    offset: float

    def __post_init__(self):
        if not (0.0 < abs(self.ratio) < 1.0):
            raise ValueError(f"ratio {self.ratio} is not a contraction (need 0 < |r| < 1)")

    def apply(self, x: float) -> float:
        return self.ratio * x + self.offset

    def inverse_apply(self, x: float) -> float:
        return (x - self.offset) / self.ratio

    @property
    def fixed_point(self) -> float:
        return self.offset / (1.0 - self.ratio)

    def image(self, iv: Interval) -> Interval:
        a = self.apply(iv.lo)
        b = self.apply(iv.hi)
        return Interval(min(a, b), max(a, b))


def apply(m: SimilarityMap, x: float) -> float:
    return m.apply(x)


def inverse_apply(m: SimilarityMap, x: float) -> float:
    return m.inverse_apply(x)


def attractor_hull(maps: Sequence[SimilarityMap], tol: float = HULL_TOL) -> Interval:
    """Smallest interval H with union of map images of H inside H.

    Starts from the interval spanning all map fixed points, inflated by a
    factor 2 about its center, and iterates H <- hull(union of images).  The
    iteration contracts geometrically at rate max|r_i|; after the movement
    drops below ``tol`` it is continued until the endpoints stop changing at
    all, so the returned endpoints are an exact floating-point fixed point
    (this keeps hull-endpoint queries bit-stable).
    """
    if not maps:
        raise ValueError("need at least one map")
    if tol <= 0:
        raise ValueError("tol must be positive")
    fps = [m.fixed_point for m in maps]
    lo, hi = min(fps), max(fps)
    c, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    lo, hi = c - 2.0 * half, c + 2.0 * half
    settled = 0
    for _ in range(10_000):
        h = Interval(lo, hi)
        images = [m.image(h) for m in maps]
        new_lo = min(iv.lo for iv in images)
        new_hi = max(iv.hi for iv in images)
        moved = max(abs(new_lo - lo), abs(new_hi - hi))
        lo, hi = new_lo, new_hi
        if moved == 0.0:
            break
        if moved < tol:
            settled += 1
            if settled > 200:
                break
    return Interval(lo, hi)


@dataclass(frozen=True)
class IfsSystem:
    """A finite list of similarity contractions plus its attractor hull."""

    maps: tuple[SimilarityMap, ...]
    hull: Interval
    # cached coefficient arrays for the vectorized kernels
    ratios: np.ndarray = field(repr=False, compare=False, default=None)
    offsets: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(self.maps) < 1:
            raise ValueError("need at least one map")
        object.__setattr__(self, "ratios", np.array([m.ratio for m in self.maps]))
        object.__setattr__(self, "offsets", np.array([m.offset for m in self.maps]))
        self.ratios.setflags(write=False)
        self.offsets.setflags(write=False)

    @classmethod
    def from_maps(cls, maps: Sequence[SimilarityMap], tol: float = HULL_TOL) -> "IfsSystem":
        maps = tuple(maps)
        return cls(maps=maps, hull=attractor_hull(maps, tol))

    @classmethod
    def bernoulli_convolution(cls, lam: float) -> "IfsSystem":
        """The two-map system {lam*x - 1, lam*x + 1} for lam in (0, 1)."""
        return cls.from_maps([SimilarityMap(lam, -1.0), SimilarityMap(lam, 1.0)])

    @property
    def alphabet_size(self) -> int:
        return len(self.maps)

    @property
    def max_ratio(self) -> float:
        return max(abs(m.ratio) for m in self.maps)

    def check_symbols(self, symbols) -> None:
        for s in symbols:
            if not 0 <= s < self.alphabet_size:
                raise AlphabetError(f"symbol {s} outside alphabet of size {self.alphabet_size}")


@dataclass(frozen=True)
class Word:
    """A finite symbol string; symbols index into a system's map list."""

    symbols: tuple[int, ...]

    def __init__(self, symbols: Sequence[int]):
        object.__setattr__(self, "symbols", tuple(int(s) for s in symbols))
        if any(s < 0 for s in self.symbols):
            raise ValueError("symbols must be nonnegative")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def concat(self, other: "Word") -> "Word":
        return Word(self.symbols + other.symbols)

    def reversed(self) -> "Word":
        return Word(self.symbols[::-1])


def apply_word(sys: IfsSystem, w, x: float) -> float:
    """Evaluate the composition f_{w_1} o ... o f_{w_n} at x (w_1 outermost)."""
    symbols = tuple(w)
    sys.check_symbols(symbols)
    for s in reversed(symbols):
        m = sys.maps[s]
        x = m.ratio * x + m.offset
    return x


@dataclass(frozen=True)
class ProbabilityVector:
    """A strictly positive probability vector with its log-weight sum."""

    probs: tuple[float, ...]
    entropy_sum: float = None

    def __init__(self, probs: Sequence[float]):
        probs = tuple(float(p) for p in probs)
        if any(p <= 0 for p in probs):
            raise ValueError("all probabilities must be strictly positive")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "entropy_sum", math.fsum(p * math.log(p) for p in probs))

    @classmethod
    def uniform(cls, k: int) -> "ProbabilityVector":
        return cls([1.0 / k] * k)

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def log_probs(self) -> np.ndarray:
        return np.log(np.array(self.probs))

    @property
    def is_uniform(self) -> bool:
        return max(self.probs) - min(self.probs) <= 1e-15


@dataclass(frozen=True)
class SystemReport:
    """Invariant checks and overlap diagnostics for a system."""

    contraction_ok: bool
    hull_invariant_ok: bool
    hull_covered: bool  # union of first-level images equals the hull (full-interval regime)
    overlapping: bool
    overlap_pairs: tuple[tuple[int, int], ...]


def validate_system(sys: IfsSystem, tol: float = 1e-10) -> SystemReport:
    """Check invariants and report which first-level images overlap.

    ``hull_covered`` distinguishes the full-interval regime (the attractor is
    the whole hull, so chain counts against the hull are exact) from the
    Cantor regime, where hull-based counts are only upper bounds.
    """
    contraction_ok = all(0.0 < abs(m.ratio) < 1.0 for m in sys.maps)
    slack = tol * max(1.0, abs(sys.hull.lo), abs(sys.hull.hi))
    images = [m.image(sys.hull) for m in sys.maps]
    hull_invariant_ok = all(sys.hull.contains_interval(iv, slack) for iv in images)
    # sweep the sorted images looking for a gap inside the hull
    covered = True
    reach = sys.hull.lo
    for iv in sorted(images, key=lambda iv: iv.lo):
        if iv.lo > reach + slack:
            covered = False
            break
        reach = max(reach, iv.hi)
    covered = covered and reach >= sys.hull.hi - slack
    pairs = []
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            if images[i].intersects(images[j]):
                pairs.append((i, j))
    return SystemReport(
        contraction_ok=contraction_ok,
        hull_invariant_ok=hull_invariant_ok,
        hull_covered=covered,
        overlapping=bool(pairs),
        overlap_pairs=tuple(pairs),
    )


def system_from_spec(spec: dict) -> IfsSystem:
    """Build a system from its JSON description.

    Accepts either {"maps": [{"ratio": r, "offset": c}, ...]} or the shorthand
    {"bernoulli_convolution": {"lambda": lam}}.
    """
    if "bernoulli_convolution" in spec:
        inner = spec["bernoulli_convolution"]
        try:
            lam = float(inner["lambda"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("bernoulli_convolution needs a numeric 'lambda'") from e
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"lambda must be in (0, 1), got {lam}")
        return IfsSystem.bernoulli_convolution(lam)
    if "maps" in spec:
        try:
            maps = [SimilarityMap(float(m["ratio"]), float(m["offset"])) for m in spec["maps"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad map list in system spec: {e}") from e
        if not maps:
            raise ConfigError("system spec has an empty map list")
        return IfsSystem.from_maps(maps)
    raise ConfigError("system spec needs either 'maps' or 'bernoulli_convolution'")


def load_system(path) -> IfsSystem:
    """Parse a system definition file (JSON)."""
    with open(path) as f:
        try:
            spec = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
    return system_from_spec(spec)
