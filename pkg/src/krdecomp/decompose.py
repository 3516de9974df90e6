"""Constructive atomic decompositions over the canonical pair family.

A balanced measure is decomposed as a finite combination of normalized
dipoles taken from the pair family: each transport-plan edge is snapped
onto a family dipole, and the snap errors telescope down the dyadic
depths until the certified residual is below tolerance.  A general
measure additionally receives one point-mass coefficient per support
atom.  An exact alternative solves the l1-minimal coefficient program on
a truncated family.  Verification re-solves norms from scratch, checks
the two-sided norm-vs-l1 bounds, the per-term lower bound with its
explicit Lipschitz witness, and the invariance of the point-mass
coefficient sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .family import (
    FamilyConfig,
    FamilyPoint,
    family_pair,
    nearest_family_point,
    pair_index,
    snap_radius,
)
from .measures import DiscreteSignedMeasure, Point, euclidean
from .solver import kr0_norm, kr_norm, lip_norm, _solve_lp

_DEPTH_CAP = 60
_CHAIN_FRACTION = 0.45  # portion of the tolerance spent by chain leftovers

__all__ = [
    "AtomicDecomposition0",
    "AtomicDecomposition",
    "BoundReport",
    "TermBoundCheck",
    "TruncationCoverageError",
    "decompose_balanced",
    "decompose_full",
    "decompose_l1_minimal",
    "reconstruct",
    "term_measure",
    "testfn_eval",
    "verify_term_lower_bound",
    "verify_bounds",
    "mass_identity_check",
]


class TruncationCoverageError(ValueError):
    """Measure not representable over the truncated family."""


@dataclass(frozen=True)
class AtomicDecomposition0:
    """Dipole-only decomposition of a balanced measure: terms (j, alpha)."""

    family: FamilyConfig
    terms: tuple[tuple[int, float], ...]
    l1: float
    residual_norm: float
    target: DiscreteSignedMeasure
    method: str


@dataclass(frozen=True)
class AtomicDecomposition:
    """Dipole + point-mass decomposition: terms (j, alpha1, alpha2)."""

    family: FamilyConfig
    terms: tuple[tuple[int, float, float], ...]
    l1: float
    residual_norm: float
    target: DiscreteSignedMeasure
    method: str

    def sum_alpha2(self) -> float:
        return math.fsum(t[2] for t in self.terms)


Decomposition = Union[AtomicDecomposition0, AtomicDecomposition]


@dataclass(frozen=True)
class BoundReport:
    norm: float
    l1: float
    residual_norm: float
    upper_ok: bool
    ratio: float
    per_term_lower_ok: Optional[bool]
    ratio_floor_ok: Optional[bool]


class TermBoundCheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool
    pairing: float
    witness_lip_norm: Optional[float]


# -- greedy construction -------------------------------------------------


class _AtomSink:
    """Accumulates unnormalized dipole contributions c*(delta_x - delta_y)
    as coefficients of the normalized family atoms."""

    def __init__(self) -> None:
        self.parts: dict[int, list[float]] = {}

    def emit(self, x: FamilyPoint, y: FamilyPoint, c: float) -> None:
        j = pair_index(x.index, y.index)
        self.parts.setdefault(j, []).append(c * euclidean(x.coords, y.coords))

    def terms(self) -> tuple[tuple[int, float], ...]:
        out = []
        for j in sorted(self.parts):
            a = math.fsum(self.parts[j])
            if a != 0.0:
                out.append((j, a))
        return tuple(out)


def _chain(
    p: Point,
    start: FamilyPoint,
    start_dist: float,
    depth: int,
    cfg: FamilyConfig,
    c: float,
    budget: float,
    sink: _AtomSink,
) -> Optional[tuple[Point, Point, float]]:
    """Cover c*(delta_p - delta_start) by dipoles of ever deeper snaps of p
    within the family of ``start``; returns the leftover dipole
    (p, last snap, c) once its transport cost is within budget."""
    tag = start.family
    other = "d2" if tag == "d1" else "d1"
    cur, d_cur = start, start_dist
    while abs(c) * d_cur > budget and depth < _DEPTH_CAP:
        depth += 1
        nxt, d_nxt = nearest_family_point(p, depth, tag, cfg)
        if nxt.coords == cur.coords:
            continue
        mid, _ = nearest_family_point(p, depth, other, cfg)
        if tag == "d1":
            # c*(delta_nxt - delta_cur) routed through the d2 point mid
            sink.emit(nxt, mid, c)
            sink.emit(cur, mid, -c)
        else:
            sink.emit(mid, cur, c)
            sink.emit(mid, nxt, -c)
        cur, d_cur = nxt, d_nxt
    if d_cur == 0.0:
        return None
    return (p, cur.coords, c)


def _edge_chains(
    p: Point,
    q: Point,
    mass: float,
    budget: float,
    cfg: FamilyConfig,
    sink: _AtomSink,
    min_depth: int,
) -> list[tuple[Point, Point, float]]:
    """Decompose the plan-edge contribution mass*(delta_p - delta_q); the
    orientation with the smaller initial snap error wins."""
    length = euclidean(p, q)
    depth = min_depth
    while snap_radius(depth, cfg, "d2") > length / 4.0 and depth < _DEPTH_CAP:
        depth += 1
    xf, dxf = nearest_family_point(p, depth, "d1", cfg)
    yf, dyf = nearest_family_point(q, depth, "d2", cfg)
    xr, dxr = nearest_family_point(q, depth, "d1", cfg)
    yr, dyr = nearest_family_point(p, depth, "d2", cfg)
    leftovers = []
    if dxf + dyf <= dxr + dyr:
        sink.emit(xf, yf, mass)
        leftovers.append(_chain(p, xf, dxf, depth, cfg, mass, budget / 2, sink))
        leftovers.append(_chain(q, yf, dyf, depth, cfg, -mass, budget / 2, sink))
    else:
        sink.emit(xr, yr, -mass)
        leftovers.append(_chain(p, yr, dyr, depth, cfg, mass, budget / 2, sink))
        leftovers.append(_chain(q, xr, dxr, depth, cfg, -mass, budget / 2, sink))
    return [lo for lo in leftovers if lo is not None]


def decompose_balanced(
    m: DiscreteSignedMeasure,
    tol: float,
    cfg: FamilyConfig,
    min_depth: int = 0,
) -> AtomicDecomposition0:
    """Dipole decomposition of a balanced measure with certified residual.

    Solves the optimal transport of m, snaps every plan edge onto a family
    dipole and telescopes the snap errors to deeper grids; stops once the
    bookkept leftover cost is below tol, then certifies the actual residual
    with a fresh norm solve.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    base = kr0_norm(m)
    sink = _AtomSink()
    if base.value > 0.0:
        edge_costs = [e.cost() for e in base.plan.edges]
        total = math.fsum(edge_costs)
        for e, ec in zip(base.plan.edges, edge_costs):
            budget = _CHAIN_FRACTION * tol * ec / total
            _edge_chains(e.target, e.source, e.mass, budget, cfg, sink, min_depth)
    terms = sink.terms()
    dec = AtomicDecomposition0(
        family=cfg,
        terms=terms,
        l1=math.fsum(abs(a) for _, a in terms),
        residual_norm=0.0,
        target=m,
        method="greedy",
    )
    residual = kr0_norm(m - reconstruct(dec)).value
    return AtomicDecomposition0(cfg, terms, dec.l1, residual, m, "greedy")


def decompose_full(
    m: DiscreteSignedMeasure,
    tol: float,
    cfg: FamilyConfig,
    min_depth: int = 0,
) -> AtomicDecomposition:
    """Dipole + point-mass decomposition of any finitely supported measure.

    Each support atom is swapped onto a nearby d1 grid point carrying its
    full weight as a point-mass coefficient; the swap error is a balanced
    measure handed to :func:`decompose_balanced`.  The point-mass
    coefficients therefore sum to the total mass of m exactly.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    tv = m.total_variation()
    alpha2: dict[int, list[float]] = {}
    swap_atoms: list[tuple[Point, float]] = []
    if m.atoms:
        target_dist = tol / (4.0 * tv)
        depth = min_depth
        while snap_radius(depth, cfg, "d1") > target_dist and depth < _DEPTH_CAP:
            depth += 1
        for p, w in m.atoms:
            x, _ = nearest_family_point(p, depth, "d1", cfg)
            j = pair_index(x.index, 0)
            alpha2.setdefault(j, []).append(w)
            swap_atoms.append((p, w))
            swap_atoms.append((x.coords, -w))
    swap = DiscreteSignedMeasure.from_atoms(m.domain, swap_atoms)
    dec0 = decompose_balanced(swap, tol / 2.0, cfg, min_depth)
    merged: dict[int, tuple[float, float]] = {
        j: (a, 0.0) for j, a in dec0.terms
    }
    for j, parts in alpha2.items():
        a2 = math.fsum(parts)
        a1 = merged.get(j, (0.0, 0.0))[0]
        merged[j] = (a1, a2)
    terms = tuple(
        (j, a1, a2) for j, (a1, a2) in sorted(merged.items()) if (a1, a2) != (0.0, 0.0)
    )
    dec = AtomicDecomposition(
        family=cfg,
        terms=terms,
        l1=math.fsum(abs(a1) + abs(a2) for _, a1, a2 in terms),
        residual_norm=0.0,
        target=m,
        method="greedy",
    )
    residual = kr_norm(m - reconstruct(dec)).value
    return AtomicDecomposition(cfg, terms, dec.l1, residual, m, "greedy")


# -- l1-minimal construction ----------------------------------------------


def decompose_l1_minimal(
    m: DiscreteSignedMeasure,
    truncation: int,
    variant: str,
    cfg: FamilyConfig,
) -> Decomposition:
    """Exact minimum-l1 coefficients over atoms with pair index <= truncation.

    Solves min sum|alpha| subject to the combination matching m atom by
    atom; raises :class:`TruncationCoverageError` when the support is not
    covered (naming the points) or no exact combination exists.
    """
    if variant not in ("kr0", "kr"):
        raise ValueError("variant must be 'kr0' or 'kr'")
    if truncation < 1:
        raise ValueError("truncation size must be >= 1")
    if variant == "kr0" and not m.is_balanced(1e-10):
        raise ValueError("balanced variant needs a balanced measure")
    if not m.atoms:
        if variant == "kr0":
            return AtomicDecomposition0(cfg, (), 0.0, 0.0, m, "l1_minimal")
        return AtomicDecomposition(cfg, (), 0.0, 0.0, m, "l1_minimal")
    pairs = [family_pair(j, cfg) for j in range(1, truncation + 1)]
    covered: set[Point] = set()
    for pair in pairs:
        covered.add(pair.x.coords)
        covered.add(pair.y.coords)
    missing = [p for p, _ in m.atoms if p not in covered]
    if missing:
        raise TruncationCoverageError(
            f"support points not covered by the first {truncation} atoms: {missing}"
        )

    point_rows: dict[Point, int] = {}

    def row_of(p: Point) -> int:
        return point_rows.setdefault(p, len(point_rows))

    cols: list[list[tuple[int, float]]] = []
    col_term: list[tuple[int, int]] = []  # (pair index, 1=dipole | 2=delta)
    for pair in pairs:
        w = 1.0 / pair.separation
        cols.append([(row_of(pair.x.coords), w), (row_of(pair.y.coords), -w)])
        col_term.append((pair.index, 1))
        if variant == "kr":
            cols.append([(row_of(pair.x.coords), 1.0)])
            col_term.append((pair.index, 2))

    nrows, ncols = len(point_rows), len(cols)
    b = np.zeros(nrows)
    for p, w in m.atoms:
        b[point_rows[p]] = w
    rows_idx, cols_idx, vals = [], [], []
    for jcol, entries in enumerate(cols):
        for r, v in entries:
            # split alpha = alpha_plus - alpha_minus
            rows_idx += [r, r]
            cols_idx += [jcol, ncols + jcol]
            vals += [v, -v]
    A_eq = sp.coo_matrix((vals, (rows_idx, cols_idx)), shape=(nrows, 2 * ncols)).tocsr()
    try:
        res = _solve_lp(np.ones(2 * ncols), A_eq, b, bounds=(0, None))
    except RuntimeError as exc:
        raise TruncationCoverageError(
            f"no exact combination over the first {truncation} atoms: {exc}"
        ) from exc
    alpha = [float(v) for v in res.x[:ncols] - res.x[ncols:]]

    if variant == "kr0":
        terms0: dict[int, float] = {}
        for (j, _), a in zip(col_term, alpha):
            if a != 0.0:
                terms0[j] = terms0.get(j, 0.0) + a
        t0 = tuple(sorted(terms0.items()))
        dec0 = AtomicDecomposition0(
            cfg, t0, math.fsum(abs(a) for _, a in t0), 0.0, m, "l1_minimal"
        )
        residual = kr0_norm(m - reconstruct(dec0)).value
        return AtomicDecomposition0(cfg, t0, dec0.l1, residual, m, "l1_minimal")

    terms2: dict[int, list[float]] = {}
    for (j, slot), a in zip(col_term, alpha):
        if a != 0.0:
            pair_vals = terms2.setdefault(j, [0.0, 0.0])
            pair_vals[slot - 1] += a
    t2 = tuple((j, v[0], v[1]) for j, v in sorted(terms2.items()))
    dec = AtomicDecomposition(
        cfg,
        t2,
        math.fsum(abs(a1) + abs(a2) for _, a1, a2 in t2),
        0.0,
        m,
        "l1_minimal",
    )
    residual = kr_norm(m - reconstruct(dec)).value
    return AtomicDecomposition(cfg, t2, dec.l1, residual, m, "l1_minimal")


# -- reconstruction and verification ---------------------------------------


def reconstruct(dec: Decomposition, prefix: Optional[int] = None) -> DiscreteSignedMeasure:
    """Partial sum of the first ``prefix`` terms (all terms by default)."""
    terms = dec.terms
    if prefix is not None:
        if prefix < 0 or prefix > len(terms):
            raise ValueError("prefix out of range")
        terms = terms[:prefix]
    atoms: list[tuple[Point, float]] = []
    for term in terms:
        pair = family_pair(term[0], dec.family)
        a1 = term[1]
        a2 = term[2] if len(term) == 3 else 0.0
        if a1 != 0.0:
            w = a1 / pair.separation
            atoms.append((pair.x.coords, w))
            atoms.append((pair.y.coords, -w))
        if a2 != 0.0:
            atoms.append((pair.x.coords, a2))
    return DiscreteSignedMeasure.from_atoms(dec.target.domain, atoms)


def testfn_eval(
    j: int, alpha1: float, alpha2: float, z: Sequence[float], cfg: FamilyConfig
) -> float:
    """Piecewise witness for the per-term lower bound: a cone around x_j
    with slope 1/(diam+1), its sign pattern selected by (alpha1, alpha2)."""
    pair = family_pair(j, cfg)
    d = cfg.domain.diameter
    r = euclidean(pair.x.coords, z)
    if alpha1 >= 0 and alpha2 >= 0:
        return (1.0 - r) / (d + 1.0)
    if alpha1 < 0 and alpha2 >= 0:
        return (1.0 + r) / (d + 1.0)
    if alpha1 >= 0 and alpha2 < 0:
        return (-1.0 - r) / (d + 1.0)
    return (-1.0 + r) / (d + 1.0)


def _sample_grid(cfg: FamilyConfig, total: int) -> list[Point]:
    n = cfg.domain.dim
    per_axis = max(2, round(total ** (1.0 / n)))
    axes = [
        [lo + (hi - lo) * i / (per_axis - 1) for i in range(per_axis)]
        for lo, hi in zip(cfg.domain.lo, cfg.domain.hi)
    ]
    pts = [()]
    for axis in axes:
        pts = [p + (v,) for p in pts for v in axis]
    return pts


def term_measure(
    j: int, alpha1: float, alpha2: float, cfg: FamilyConfig
) -> DiscreteSignedMeasure:
    """The measure alpha1 * dipole_j + alpha2 * delta_{x_j}."""
    pair = family_pair(j, cfg)
    atoms = []
    if alpha1 != 0.0:
        w = alpha1 / pair.separation
        atoms += [(pair.x.coords, w), (pair.y.coords, -w)]
    if alpha2 != 0.0:
        atoms.append((pair.x.coords, alpha2))
    return DiscreteSignedMeasure.from_atoms(cfg.domain, atoms)


def verify_term_lower_bound(
    j: int,
    alpha1: float,
    alpha2: float,
    cfg: FamilyConfig,
    witness_grid: int = 0,
) -> TermBoundCheck:
    """Check  ||alpha1*dipole_j + alpha2*delta_{x_j}||  >=  (|a1|+|a2|)/(d+1)
    and that the explicit witness pairs to exactly the right-hand side;
    with ``witness_grid`` > 0 also samples the witness Lipschitz norm."""
    if alpha1 == 0.0 and alpha2 == 0.0:
        raise ValueError("coefficients must not both be zero")
    pair = family_pair(j, cfg)
    d = cfg.domain.diameter
    lhs = kr_norm(term_measure(j, alpha1, alpha2, cfg)).value
    rhs = (abs(alpha1) + abs(alpha2)) / (d + 1.0)
    fx = testfn_eval(j, alpha1, alpha2, pair.x.coords, cfg)
    fy = testfn_eval(j, alpha1, alpha2, pair.y.coords, cfg)
    pairing = (fx - fy) / pair.separation * alpha1 + fx * alpha2
    witness_lip = None
    if witness_grid > 0:
        grid = _sample_grid(cfg, witness_grid)
        values = [testfn_eval(j, alpha1, alpha2, z, cfg) for z in grid]
        witness_lip = lip_norm(grid, values)
    return TermBoundCheck(lhs, rhs, lhs >= rhs - 1e-9, pairing, witness_lip)


def _norm_for(dec: Decomposition, m: DiscreteSignedMeasure) -> float:
    if isinstance(dec, AtomicDecomposition0):
        return kr0_norm(m).value
    return kr_norm(m).value


def verify_bounds(
    m: DiscreteSignedMeasure,
    dec: Decomposition,
    tol: float,
    ratio_floor: Optional[float] = None,
    check_terms: int = 0,
) -> BoundReport:
    """Upper bound  ||m|| <= l1 + residual + tol  plus the empirical ratio
    ||m|| / l1; optionally re-checks the per-term lower bound on the
    ``check_terms`` largest terms and, for l1-minimal decompositions, the
    requested ratio floor."""
    if dec.target != m:
        raise ValueError("decomposition was produced for a different measure")
    norm = _norm_for(dec, m)
    upper_ok = norm <= dec.l1 + dec.residual_norm + tol
    ratio = norm / dec.l1 if dec.l1 > 0 else 1.0
    per_term: Optional[bool] = None
    if check_terms > 0 and dec.terms:
        def weight(term) -> float:
            return abs(term[1]) + (abs(term[2]) if len(term) == 3 else 0.0)

        largest = sorted(dec.terms, key=weight, reverse=True)[:check_terms]
        per_term = True
        for term in largest:
            a1 = term[1]
            a2 = term[2] if len(term) == 3 else 0.0
            if a1 == 0.0 and a2 == 0.0:
                continue
            chk = verify_term_lower_bound(term[0], a1, a2, dec.family)
            per_term = per_term and chk.ok
    floor_ok: Optional[bool] = None
    if ratio_floor is not None and dec.method == "l1_minimal":
        floor_ok = ratio >= ratio_floor
    return BoundReport(norm, dec.l1, dec.residual_norm, upper_ok, ratio, per_term, floor_ok)


def mass_identity_check(
    dec_a: AtomicDecomposition, dec_b: AtomicDecomposition, tol: float
) -> bool:
    """Two valid decompositions of one measure agree on the sum of their
    point-mass coefficients within the combined residual budget."""
    if dec_a.target != dec_b.target:
        raise ValueError("decompositions target different measures")
    for dec in (dec_a, dec_b):
        if dec.residual_norm > tol:
            raise ValueError("residual exceeds the stated tolerance")
    return abs(dec_a.sum_alpha2() - dec_b.sum_alpha2()) <= 2.0 * tol + 1e-9
