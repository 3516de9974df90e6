"""Dense family enumeration: dyadic schedules, dedup, pairing, snapping."""

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krdecomp import (
    DEFAULT_OFFSET,
    Domain,
    FamilyConfig,
    d1_point,
    d2_point,
    delta_atom,
    dump_pairs_csv,
    family_pair,
    nearest_family_point,
    pair_components,
    pair_index,
    snap_radius,
)
from krdecomp.family import _coords, _index_of

CFG1 = FamilyConfig(Domain.unit(1))
CFG2 = FamilyConfig(Domain.unit(2))
THETA = math.sqrt(2.0) - 1.0


def test_d1_first_points_on_unit_interval():
    assert d1_point(0, CFG1).coords == (0.0,)
    assert d1_point(1, CFG1).coords == (1.0,)
    assert d1_point(2, CFG1).coords == (0.5,)


def test_d1_matches_schedule_oracle():
    # oracle: walk depths, lexicographic within depth, skip repeats
    seen, expected = set(), []
    depth = 0
    while len(expected) < 40:
        for a in range((1 << depth) + 1):
            v = a / (1 << depth)
            if v not in seen:
                seen.add(v)
                expected.append((v,))
        depth += 1
    assert [d1_point(k, CFG1).coords for k in range(40)] == expected[:40]


def test_d2_first_value_is_the_shift():
    assert d2_point(0, CFG1).coords == (THETA,)


def test_d2_schedule_dedup_oracle_16_values():
    # oracle: same (depth, tick) schedule as d1, wrap by the shift, dedup
    seen, expected = set(), []
    depth = 0
    while len(expected) < 16:
        for a in range((1 << depth) + 1):
            v = (a / (1 << depth) + THETA) % 1.0
            if v not in seen:
                seen.add(v)
                expected.append((v,))
        depth += 1
    got = [d2_point(k, CFG1).coords for k in range(16)]
    assert got == expected[:16]
    assert got[1] == ((0.5 + THETA) % 1.0,)  # frac(1+theta) deduped away


def test_d2_dedup_oracle_2d():
    seen, expected = set(), []
    depth = 0
    while len(expected) < 50:
        total = (1 << depth) + 1
        for ticks in itertools.product(range(total), repeat=2):
            if depth >= 1 and all(a % 2 == 0 for a in ticks):
                continue
            c = tuple((a / (1 << depth) + THETA) % 1.0 for a in ticks)
            if c not in seen:
                seen.add(c)
                expected.append(c)
        depth += 1
    assert [d2_point(k, CFG2).coords for k in range(50)] == expected[:50]


def test_families_carry_disjoint_tags():
    assert d1_point(3, CFG1).family == "d1"
    assert d2_point(3, CFG1).family == "d2"


@settings(max_examples=300)
@given(k=st.integers(0, 5000), dim=st.sampled_from([1, 2, 3]))
def test_enumeration_indexing_roundtrip(k, dim):
    cfg = FamilyConfig(Domain.unit(dim))
    for which, point in (("d1", d1_point(k, cfg)), ("d2", d2_point(k, cfg))):
        assert point.index == k
        assert _index_of(point.ticks, point.depth, dim, which) == k


def test_family_pair_anti_diagonal_order():
    p1 = family_pair(1, CFG1)
    assert (p1.x.index, p1.y.index) == (0, 0)
    p2 = family_pair(2, CFG1)
    assert (p2.x.index, p2.y.index) == (0, 1)
    p3 = family_pair(3, CFG1)
    assert (p3.x.index, p3.y.index) == (1, 0)


def test_pair_index_bijection():
    seen = set()
    for j in range(1, 3000):
        ab = pair_components(j)
        assert pair_index(*ab) == j
        assert ab not in seen
        seen.add(ab)


def test_pair_separation_positive_exhaustive():
    # disjointness scan on the unit square for the first 10^4 pairs
    for j in range(1, 10_001):
        assert family_pair(j, CFG2).separation > 0.0


def test_delta_atoms_follow_the_interleaving():
    a1 = delta_atom(1, CFG1)
    assert a1.kind == "dipole" and a1.pair_index == 1
    assert a1.measure.total_mass() == 0.0
    sep = family_pair(1, CFG1).separation
    assert math.isclose(a1.measure.total_variation(), 2.0 / sep, rel_tol=1e-15)

    a2 = delta_atom(2, CFG1)
    assert a2.kind == "delta" and a2.pair_index == 1
    assert a2.measure.total_mass() == 1.0

    a3 = delta_atom(3, CFG1)
    assert a3.kind == "dipole" and a3.pair_index == 2
    assert a3.measure.total_mass() == 0.0


def test_nearest_family_point_identity_case():
    fp, dist = nearest_family_point((0.25,), 2, "d1", CFG1)
    assert fp.coords == (0.25,) and dist == 0.0


def test_nearest_family_point_d1_example():
    fp, dist = nearest_family_point((0.3,), 2, "d1", CFG1)
    assert fp.coords == (0.25,)
    assert math.isclose(dist, 0.05)


def test_nearest_family_point_d2_depth2():
    # oracle: enumerate the 4 shifted grid values frac(a/4 + theta)
    values = sorted(
        ((abs(0.3 - ((a / 4 + THETA) % 1.0)), (a / 4 + THETA) % 1.0) for a in range(4))
    )
    best_dist, best_val = values[0]
    fp, dist = nearest_family_point((0.3,), 2, "d2", CFG1)
    assert fp.coords == (best_val,)
    assert math.isclose(dist, best_dist)


def test_nearest_agrees_with_brute_force():
    import random

    cfg = FamilyConfig(Domain((0.0, -1.0), (2.0, 3.0)))
    rng = random.Random(11)
    for _ in range(150):
        p = (rng.uniform(0, 2), rng.uniform(-1, 3))
        depth = rng.randrange(0, 4)
        for which in ("d1", "d2"):
            fp, dist = nearest_family_point(p, depth, which, cfg)
            ticks_range = (
                range((1 << depth) + 1) if which == "d1" else range(1 << depth)
            )
            brute = min(
                (math.dist(p, _coords(t, depth, cfg, which)), _coords(t, depth, cfg, which))
                for t in itertools.product(ticks_range, repeat=2)
            )
            assert fp.coords == brute[1]
            assert math.isclose(dist, brute[0], abs_tol=1e-15)


def test_snap_radius_bounds_hold():
    import random

    rng = random.Random(23)
    for dim in (1, 2, 3):
        cfg = FamilyConfig(Domain.unit(dim))
        for depth in range(0, 11):
            for _ in range(20):
                p = tuple(rng.random() for _ in range(dim))
                _, dist1 = nearest_family_point(p, depth, "d1", cfg)
                assert dist1 <= snap_radius(depth, cfg, "d1") + 1e-12
                _, dist2 = nearest_family_point(p, depth, "d2", cfg)
                assert dist2 <= snap_radius(depth, cfg, "d2") + 1e-12


def test_density_quantified():
    # for any target eps, a deep enough snap gets below eps
    p = (0.7310987, 0.1234567)
    for eps in (1e-1, 1e-3, 1e-6):
        depth = 0
        while snap_radius(depth, CFG2, "d1") >= eps:
            depth += 1
        _, dist = nearest_family_point(p, depth, "d1", CFG2)
        assert dist < eps


def test_dump_replay_identical():
    assert dump_pairs_csv(CFG2, 200) == dump_pairs_csv(CFG2, 200)


def test_dipole_atoms_balanced_delta_atoms_unit_mass():
    for j in range(1, 41):
        atom = delta_atom(j, CFG2)
        if atom.kind == "dipole":
            assert atom.measure.total_mass() == 0.0
        else:
            assert atom.measure.total_mass() == 1.0


def test_offset_validation():
    with pytest.raises(ValueError):
        FamilyConfig(Domain.unit(1), offset=1.5)
    assert 0.0 < DEFAULT_OFFSET < 1.0
