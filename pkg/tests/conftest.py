"""Shared generators for randomized test instances."""

from __future__ import annotations

import random

from krdecomp import DiscreteSignedMeasure, Domain


def random_measure(
    rng: random.Random,
    domain: Domain,
    size: int,
    balanced: bool = False,
) -> DiscreteSignedMeasure:
    """Uniform support points with weights uniform in [-1, 1]; with
    ``balanced`` the mean weight is subtracted so the total mass is ~0."""
    atoms = []
    for _ in range(size):
        p = tuple(rng.uniform(lo, hi) for lo, hi in zip(domain.lo, domain.hi))
        atoms.append((p, rng.uniform(-1.0, 1.0)))
    if balanced:
        mean = sum(w for _, w in atoms) / len(atoms)
        atoms = [(p, w - mean) for p, w in atoms]
    return DiscreteSignedMeasure.from_atoms(domain, atoms)


def random_quantized(
    rng: random.Random,
    domain: Domain,
    unit: float,
    pos_units: int,
    neg_units: int,
) -> DiscreteSignedMeasure:
    """Integer numbers of unit masses placed at random points."""
    counts: dict[tuple, int] = {}
    for _ in range(pos_units):
        p = tuple(rng.uniform(lo, hi) for lo, hi in zip(domain.lo, domain.hi))
        counts[p] = counts.get(p, 0) + 1
    for _ in range(neg_units):
        p = tuple(rng.uniform(lo, hi) for lo, hi in zip(domain.lo, domain.hi))
        counts[p] = counts.get(p, 0) - 1
    return DiscreteSignedMeasure.from_atoms(
        domain, [(p, unit * k) for p, k in counts.items()]
    )
