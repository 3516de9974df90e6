"""Norm solver: metric identities, duality, witnesses, plan feasibility."""

import math
import random

import pytest

from krdecomp import (
    BalanceViolationError,
    DiscreteSignedMeasure,
    Domain,
    DualPotential,
    DuplicatePointError,
    EmptyPotentialError,
    dipole,
    dirac,
    euclidean,
    kr0_dual,
    kr0_norm,
    kr_dual,
    kr_norm,
    lip_norm,
    lipschitz_seminorm,
    mcshane_extend,
    oracle_kr,
    oracle_kr0,
)
from conftest import random_measure

DOM2 = Domain.unit(2)
DOM1_BIG = Domain((0.0,), (4.0,))

THREE_POINT = DiscreteSignedMeasure.from_atoms(
    DOM2, [((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0), ((0.5, 0.0), -2.0)]
)


def test_kr0_scaled_dipole_identity():
    m = dipole(DOM2, (0.0, 0.0), (0.3, 0.4), 2.0)
    res = kr0_norm(m)
    assert math.isclose(res.value, 1.0, abs_tol=1e-12)
    assert res.gap <= 1e-8
    assert res.plan.balance_gap(m) <= 1e-12


def test_kr0_zero_measure():
    res = kr0_norm(DiscreteSignedMeasure.zero(DOM2))
    assert res.value == 0.0 and res.plan.edges == () and res.potential.points == ()


def test_kr0_three_point_instance():
    # oracle: exhaustive unit matching after quantization at q = 1
    assert oracle_kr0(THREE_POINT, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert kr0_norm(THREE_POINT).value == pytest.approx(1.0, abs=1e-9)


def test_kr0_rejects_unbalanced():
    with pytest.raises(BalanceViolationError):
        kr0_norm(dirac(DOM2, (0.5, 0.5)))
    with pytest.raises(BalanceViolationError):
        kr0_dual(dirac(DOM2, (0.5, 0.5)))


def test_kr0_tolerates_mass_within_balance_tolerance():
    m = DiscreteSignedMeasure.from_atoms(
        DOM2, [((0.1, 0.1), 1.0 + 5e-11), ((0.8, 0.9), -1.0)]
    )
    res = kr0_norm(m)
    assert res.value == pytest.approx(euclidean((0.1, 0.1), (0.8, 0.9)), abs=1e-9)
    tiny = DiscreteSignedMeasure.from_atoms(DOM2, [((0.5, 0.5), 5e-11)])
    assert kr0_norm(tiny).value == 0.0


def test_kr_dirac_is_one():
    res = kr_norm(dirac(DOM2, (0.2, 0.9)))
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert res.gap <= 1e-8
    (edge,) = res.plan.edges
    assert edge.source is None and edge.mass == pytest.approx(1.0)


def test_kr_dipole_truncates_at_two():
    m = dipole(DOM1_BIG, (0.0,), (3.0,), 1.0)
    assert kr_norm(m).value == pytest.approx(2.0, abs=1e-9)
    m2 = dipole(DOM1_BIG, (0.0,), (1.5,), 1.0)
    assert kr_norm(m2).value == pytest.approx(1.5, abs=1e-9)


def test_kr_three_point_matches_kr0():
    # all pairwise distances < 2, so the bank is never used
    assert oracle_kr(THREE_POINT, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert kr_norm(THREE_POINT).value == pytest.approx(1.0, abs=1e-9)


def test_kr0_dual_dipole_witness():
    x, y = (0.1, 0.2), (0.7, 0.9)
    m = dipole(DOM2, x, y, 1.5)
    value, witness = kr0_dual(m)
    assert value == pytest.approx(1.5 * euclidean(x, y), abs=1e-9)
    table = dict(zip(witness.points, witness.values))
    assert table[x] - table[y] == pytest.approx(euclidean(x, y), abs=1e-9)


def test_kr0_dual_zero_measure():
    value, witness = kr0_dual(DiscreteSignedMeasure.zero(DOM2))
    assert value == 0.0 and witness.points == ()


def test_kr0_dual_matches_primal_on_random_instance():
    rng = random.Random(17)
    m = random_measure(rng, DOM2, 4, balanced=True)
    assert kr0_dual(m)[0] == pytest.approx(kr0_norm(m).value, abs=1e-8)


def test_kr_dual_signed_diracs():
    value, witness = kr_dual(dirac(DOM2, (0.4, 0.4)))
    assert value == pytest.approx(1.0, abs=1e-9)
    assert witness.values[0] == pytest.approx(1.0, abs=1e-9)

    neg = dirac(DOM2, (0.4, 0.4)).scaled(-1.0)
    value2, witness2 = kr_dual(neg)
    assert value2 == pytest.approx(1.0, abs=1e-9)
    assert witness2.values[0] == pytest.approx(-1.0, abs=1e-9)


def test_kr_dual_matches_primal_mixed():
    m = DiscreteSignedMeasure.from_atoms(
        DOM2, [((0.1, 0.1), 0.7), ((0.9, 0.2), -0.4), ((0.5, 0.8), 0.6)]
    )
    assert kr_dual(m)[0] == pytest.approx(kr_norm(m).value, abs=1e-8)


def test_strong_duality_random_instances():
    rng = random.Random(5)
    for _ in range(25):
        mb = random_measure(rng, DOM2, rng.randint(2, 12), balanced=True)
        res = kr0_norm(mb)
        assert res.gap <= 1e-8
        mg = random_measure(rng, DOM2, rng.randint(1, 12))
        res2 = kr_norm(mg)
        assert res2.gap <= 1e-8


def test_norm_axioms_random():
    rng = random.Random(7)
    for _ in range(15):
        m1 = random_measure(rng, DOM2, 5, balanced=True)
        m2 = random_measure(rng, DOM2, 4, balanced=True)
        a = rng.uniform(-3, 3)
        v1, v2 = kr0_norm(m1).value, kr0_norm(m2).value
        assert kr0_norm(m1.scaled(a)).value == pytest.approx(abs(a) * v1, abs=1e-8)
        assert kr0_norm(m1 + m2).value <= v1 + v2 + 2e-8
        g1, g2 = random_measure(rng, DOM2, 4), random_measure(rng, DOM2, 3)
        w1, w2 = kr_norm(g1).value, kr_norm(g2).value
        assert kr_norm(g1.scaled(a)).value == pytest.approx(abs(a) * w1, abs=1e-8)
        assert kr_norm(g1 + g2).value <= w1 + w2 + 2e-8


def test_kr_dominated_by_kr0_and_tv():
    rng = random.Random(11)
    for _ in range(10):
        mb = random_measure(rng, DOM2, 6, balanced=True)
        assert kr_norm(mb).value <= kr0_norm(mb).value + 1e-9
        mg = random_measure(rng, DOM2, 6)
        assert kr_norm(mg).value <= mg.total_variation() + 1e-9
        assert kr_norm(mg).value >= abs(mg.total_mass()) - 1e-9


def test_plan_feasibility_and_vertex_support():
    rng = random.Random(13)
    for _ in range(10):
        m = random_measure(rng, DOM2, rng.randint(2, 10), balanced=True)
        res = kr0_norm(m)
        assert res.plan.balance_gap(m) <= 1e-12
        hj = m.hahn_jordan()
        assert len(res.plan.edges) <= len(hj.positive.atoms) + len(hj.negative.atoms) - 1
        g = random_measure(rng, DOM2, rng.randint(1, 10))
        assert kr_norm(g).plan.balance_gap(g) <= 1e-12


def test_plan_cost_equals_value():
    rng = random.Random(19)
    m = random_measure(rng, DOM2, 8, balanced=True)
    res = kr0_norm(m)
    assert res.plan.cost() == pytest.approx(res.value, abs=1e-10)
    g = random_measure(rng, DOM2, 8)
    res2 = kr_norm(g)
    assert res2.plan.cost() == pytest.approx(res2.value, abs=1e-10)


def test_mcshane_interpolates_and_extends():
    pot = DualPotential.from_values(((0.0, 0.0), (1.0, 0.0)), (0.0, 1.0))
    assert pot.lip_bound == pytest.approx(1.0)
    assert mcshane_extend(pot, (0.0, 0.0)) == pytest.approx(0.0)
    assert mcshane_extend(pot, (1.0, 0.0)) == pytest.approx(1.0)

    single = DualPotential(((0.3, 0.4),), (0.0,), 1.0, 0.0)
    assert mcshane_extend(single, (0.3, 0.8)) == pytest.approx(0.4)

    with pytest.raises(EmptyPotentialError):
        mcshane_extend(DualPotential((), (), 0.0, 0.0), (0.5, 0.5))


def test_mcshane_grid_scan_preserves_lipschitz_bound():
    rng = random.Random(3)
    pts = [(rng.random(), rng.random()) for _ in range(5)]
    vals = [rng.uniform(-1, 1) for _ in range(5)]
    pot = DualPotential.from_values(pts, vals)
    grid = [(i / 9, j / 9) for i in range(10) for j in range(10)]
    ext = [mcshane_extend(pot, z) for z in grid]
    assert lipschitz_seminorm(grid, ext) <= pot.lip_bound + 1e-9


def test_mcshane_clip_keeps_ball_membership():
    pot = DualPotential.from_values(((0.0,), (4.0,)), (0.9, -0.9))
    vals = [mcshane_extend(pot, (z / 10,), clip=1.0) for z in range(41)]
    assert max(abs(v) for v in vals) <= 1.0


def test_lipschitz_seminorm_examples():
    assert lipschitz_seminorm([(0.0,), (0.5,), (1.0,)], [2.0, 2.0, 2.0]) == 0.0
    assert lipschitz_seminorm([(0.0,), (1.0,)], [0.0, 1.0]) == pytest.approx(1.0)
    assert lip_norm([(0.0,), (1.0,)], [0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(DuplicatePointError):
        lipschitz_seminorm([(0.0,), (0.0,)], [0.0, 1.0])


def test_witness_is_feasible_on_support():
    rng = random.Random(29)
    m = random_measure(rng, DOM2, 9, balanced=True)
    res = kr0_norm(m)
    assert lipschitz_seminorm(res.potential.points, res.potential.values) <= 1.0
    g = random_measure(rng, DOM2, 9)
    res2 = kr_norm(g)
    assert lipschitz_seminorm(res2.potential.points, res2.potential.values) <= 1.0
    assert res2.potential.sup_bound <= 1.0
