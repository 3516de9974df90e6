"""Deterministic dense point families on a box and the canonical atom sequence.

Two countable dense families are enumerated:

* ``d1``: the dyadic grid points of the box, by increasing depth, then
  lexicographically, skipping points already produced at a smaller depth.
* ``d2``: the same schedule shifted per axis by an irrational offset
  (default sqrt(2) - 1) and wrapped modulo the box side, deduplicated.

Shifted coordinates are never dyadic in exact arithmetic, so the two
families are disjoint; disjointness is carried structurally by the family
tag on each point, never decided by comparing floats.

Pairs (x, y) in d1 x d2 are enumerated along Cantor anti-diagonals, and the
canonical atom sequence interleaves normalized dipoles (odd indices) with
unit point masses (even indices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal, Sequence

from .measures import DiscreteSignedMeasure, Domain, Point, euclidean

FamilyTag = Literal["d1", "d2"]

DEFAULT_OFFSET = math.sqrt(2.0) - 1.0

__all__ = [
    "DEFAULT_OFFSET",
    "FamilyConfig",
    "FamilyPoint",
    "FamilyPair",
    "DeltaAtom",
    "d1_point",
    "d2_point",
    "family_pair",
    "pair_index",
    "pair_components",
    "delta_atom",
    "nearest_family_point",
    "snap_radius",
    "dump_pairs_csv",
]


@dataclass(frozen=True)
class FamilyConfig:
    """Box plus the irrational shift used by the d2 family."""

    domain: Domain
    offset: float = DEFAULT_OFFSET
    offset_label: str = "sqrt(2)-1"

    def __post_init__(self) -> None:
        if not 0.0 < self.offset < 1.0:
            raise ValueError("offset must lie in (0, 1)")


@dataclass(frozen=True)
class FamilyPoint:
    """A grid point with provenance: which family, enumeration index, and
    the exact dyadic ticks (numerators at ``depth``) that generated it."""

    family: FamilyTag
    index: int
    depth: int
    ticks: tuple[int, ...]
    coords: Point

    def __post_init__(self) -> None:
        limit = 1 << self.depth
        hi_ok = limit if self.family == "d1" else limit - 1
        if any(a < 0 or a > hi_ok for a in self.ticks):
            raise ValueError("ticks out of range for depth")


@dataclass(frozen=True)
class FamilyPair:
    """The j-th pair (x_j, y_j) of the d1 x d2 enumeration; x != y always."""

    index: int
    x: FamilyPoint
    y: FamilyPoint
    separation: float


@dataclass(frozen=True)
class DeltaAtom:
    """Canonical atom: normalized dipole at odd index, point mass at even."""

    index: int
    kind: Literal["dipole", "delta"]
    pair_index: int
    measure: DiscreteSignedMeasure


# -- exact dyadic enumeration ------------------------------------------------
#
# d1 at depth L uses ticks in {0..2^L}, d2 uses {0..2^L - 1} (the shifted
# value of tick 2^L wraps onto tick 0).  A tick tuple is new at depth L >= 1
# iff some tick is odd; depth 0 holds the corners (d1) or the single shifted
# origin (d2).  Cumulative counts through depth L are (2^L + 1)^n for d1 and
# 2^(L*n) for d2, which makes index <-> (depth, ticks) an exact integer
# computation.


def _cum_count(depth: int, n: int, family: FamilyTag) -> int:
    if depth < 0:
        return 0
    if family == "d1":
        return ((1 << depth) + 1) ** n
    return 1 << (depth * n)


def _depth_of_index(k: int, n: int, family: FamilyTag) -> int:
    depth = 0
    while _cum_count(depth, n, family) <= k:
        depth += 1
    return depth


def _values_per_axis(depth: int, family: FamilyTag) -> tuple[int, int]:
    """(total values, even values) per axis at this depth."""
    if family == "d1":
        total = (1 << depth) + 1
        even = (1 << max(depth - 1, 0)) + 1 if depth >= 1 else total
    else:
        total = 1 << depth
        even = 1 << max(depth - 1, 0) if depth >= 1 else total
    return total, even


def _completions(rem: int, need_odd: bool, total: int, even: int) -> int:
    """Number of valid tick suffixes of length ``rem``."""
    if not need_odd:
        return total**rem
    return total**rem - even**rem


def _unrank_ticks(rank: int, depth: int, n: int, family: FamilyTag) -> tuple[int, ...]:
    """rank-th (lex) tick tuple that is new at ``depth``."""
    total, even = _values_per_axis(depth, family)
    need_odd = depth >= 1
    ticks = []
    for i in range(n):
        rem = n - i - 1
        if not need_odd:
            per = _completions(rem, False, total, even)
            a, rank = divmod(rank, per)
        else:
            ce = _completions(rem, True, total, even)  # choosing an even tick
            co = _completions(rem, False, total, even)  # choosing an odd tick
            pair, r = divmod(rank, ce + co)
            if r < ce:
                a, rank = 2 * pair, r
            else:
                a, rank = 2 * pair + 1, r - ce
        if a >= total:
            raise ValueError("rank out of range at this depth")
        ticks.append(a)
        need_odd = need_odd and a % 2 == 0
    if rank != 0:
        raise ValueError("rank out of range at this depth")
    return tuple(ticks)


def _rank_ticks(ticks: Sequence[int], depth: int, n: int, family: FamilyTag) -> int:
    """Inverse of :func:`_unrank_ticks` for a tuple new at ``depth``."""
    total, even = _values_per_axis(depth, family)
    need_odd = depth >= 1
    rank = 0
    for i, a in enumerate(ticks):
        rem = n - i - 1
        if not need_odd:
            rank += a * _completions(rem, False, total, even)
        else:
            n_even_below = (a + 1) // 2
            n_odd_below = a // 2
            rank += n_even_below * _completions(rem, True, total, even)
            rank += n_odd_below * _completions(rem, False, total, even)
        need_odd = need_odd and a % 2 == 0
    if need_odd and depth >= 1:
        raise ValueError("ticks are not new at this depth (all even)")
    return rank


def _normalize(ticks: Sequence[int], depth: int) -> tuple[tuple[int, ...], int]:
    """Reduce (ticks, depth) to the minimal depth producing the same point."""
    t = list(ticks)
    while depth > 0 and all(a % 2 == 0 for a in t):
        t = [a // 2 for a in t]
        depth -= 1
    return tuple(t), depth


def _index_of(ticks: Sequence[int], depth: int, n: int, family: FamilyTag) -> int:
    ticks, depth = _normalize(ticks, depth)
    return _cum_count(depth - 1, n, family) + _rank_ticks(ticks, depth, n, family)


def _d1_rel(tick: int, depth: int) -> float:
    return tick / (1 << depth)


def _d2_rel(tick: int, depth: int, offset: float) -> float:
    u = tick / (1 << depth) + offset
    return u - 1.0 if u >= 1.0 else u


def _coords(ticks: Sequence[int], depth: int, cfg: FamilyConfig, family: FamilyTag) -> Point:
    rel = (
        [_d1_rel(a, depth) for a in ticks]
        if family == "d1"
        else [_d2_rel(a, depth, cfg.offset) for a in ticks]
    )
    return tuple(lo + (hi - lo) * t for lo, hi, t in zip(cfg.domain.lo, cfg.domain.hi, rel))


def _point_at(k: int, cfg: FamilyConfig, family: FamilyTag) -> FamilyPoint:
    if k < 0:
        raise ValueError("index must be nonnegative")
    n = cfg.domain.dim
    depth = _depth_of_index(k, n, family)
    rank = k - _cum_count(depth - 1, n, family)
    ticks = _unrank_ticks(rank, depth, n, family)
    return FamilyPoint(family, k, depth, ticks, _coords(ticks, depth, cfg, family))


def d1_point(k: int, cfg: FamilyConfig) -> FamilyPoint:
    """k-th point of the dyadic enumeration of the box (dense in K)."""
    return _point_at(k, cfg, "d1")


def d2_point(k: int, cfg: FamilyConfig) -> FamilyPoint:
    """k-th point of the shifted dyadic enumeration (dense, disjoint from d1)."""
    return _point_at(k, cfg, "d2")


def pair_index(a: int, b: int) -> int:
    """1-based Cantor anti-diagonal index of (d1_point(a), d2_point(b))."""
    if a < 0 or b < 0:
        raise ValueError("component indices must be nonnegative")
    s = a + b
    return s * (s + 1) // 2 + a + 1


def pair_components(j: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if j < 1:
        raise ValueError("pair index must be >= 1")
    t = j - 1
    s = (math.isqrt(8 * t + 1) - 1) // 2
    a = t - s * (s + 1) // 2
    return a, s - a


def family_pair(j: int, cfg: FamilyConfig) -> FamilyPair:
    """The j-th pair (x_j, y_j), j >= 1, walking d1 x d2 anti-diagonals."""
    a, b = pair_components(j)
    x = d1_point(a, cfg)
    y = d2_point(b, cfg)
    return FamilyPair(j, x, y, euclidean(x.coords, y.coords))


def delta_atom(j: int, cfg: FamilyConfig) -> DeltaAtom:
    """Canonical atom j: dipole (delta_x - delta_y)/|x-y| for odd j = 2k-1,
    unit mass delta_x for even j = 2k, built from pair k."""
    if j < 1:
        raise ValueError("atom index must be >= 1")
    k = (j + 1) // 2
    pair = family_pair(k, cfg)
    if j % 2 == 1:
        w = 1.0 / pair.separation
        measure = DiscreteSignedMeasure.from_atoms(
            cfg.domain, [(pair.x.coords, w), (pair.y.coords, -w)]
        )
        return DeltaAtom(j, "dipole", k, measure)
    measure = DiscreteSignedMeasure.from_atoms(cfg.domain, [(pair.x.coords, 1.0)])
    return DeltaAtom(j, "delta", k, measure)


def snap_radius(depth: int, cfg: FamilyConfig, which: FamilyTag) -> float:
    """Worst-case snap distance at this depth (d2 pays twice the d1 bound
    because the shifted grid is not symmetric about the box boundary)."""
    n = cfg.domain.dim
    half = math.sqrt(n) / 2.0 * cfg.domain.max_side / (1 << depth)
    return half if which == "d1" else 2.0 * half


def _axis_candidates(t: float, depth: int, cfg: FamilyConfig, which: FamilyTag) -> list[int]:
    """Candidate ticks bracketing relative coordinate t on one axis."""
    if which == "d1":
        hi = 1 << depth
        raw = t * hi
        base = math.floor(raw)
        cand = {min(max(a, 0), hi) for a in (base, base + 1)}
    else:
        size = 1 << depth
        shift = math.floor(cfg.offset * size)
        frac_shift = cfg.offset - shift / size
        raw = (t - frac_shift) * size
        base = math.floor(raw)
        cand = set()
        for i in (base - 1, base, base + 1):
            i = min(max(i, 0), size - 1)
            cand.add((i - shift) % size)
    return sorted(cand)


def nearest_family_point(
    p: Sequence[float], depth: int, which: FamilyTag, cfg: FamilyConfig
) -> tuple[FamilyPoint, float]:
    """Nearest depth-``depth`` grid point of the chosen family, with its
    Euclidean distance; ties broken toward the lexicographically smaller
    point."""
    p = cfg.domain.require_member(p)
    ticks = []
    for lo, hi, x in zip(cfg.domain.lo, cfg.domain.hi, p):
        t = (x - lo) / (hi - lo)
        best_a, best_v, best_d = None, None, None
        for a in _axis_candidates(t, depth, cfg, which):
            rel = _d1_rel(a, depth) if which == "d1" else _d2_rel(a, depth, cfg.offset)
            v = lo + (hi - lo) * rel
            d = abs(x - v)
            if best_d is None or d < best_d or (d == best_d and v < best_v):
                best_a, best_v, best_d = a, v, d
        ticks.append(best_a)
    norm_ticks, norm_depth = _normalize(ticks, depth)
    n = cfg.domain.dim
    idx = _cum_count(norm_depth - 1, n, which) + _rank_ticks(norm_ticks, norm_depth, n, which)
    point = FamilyPoint(which, idx, norm_depth, norm_ticks, _coords(norm_ticks, norm_depth, cfg, which))
    return point, euclidean(p, point.coords)


def iter_pairs(cfg: FamilyConfig, count: int) -> Iterator[FamilyPair]:
    for j in range(1, count + 1):
        yield family_pair(j, cfg)


def dump_pairs_csv(cfg: FamilyConfig, count: int) -> str:
    """CSV dump `j,x_1..x_n,y_1..y_n,separation` with 17 significant digits."""
    lines = []
    for pair in iter_pairs(cfg, count):
        fields = [str(pair.index)]
        fields += [format(c, ".17g") for c in pair.x.coords]
        fields += [format(c, ".17g") for c in pair.y.coords]
        fields.append(format(pair.separation, ".17g"))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"
