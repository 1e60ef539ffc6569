"""Empirical, exact-population, and Monte Carlo worst-case-over-distributions losses.

The central quantity is the distributional adversarial (DR) loss of a
classifier h: the expectation over clean labeled examples of the maximum,
across the example's perturbation distributions, of the expected 0-1 loss
under that distribution.  On finite tasks it is computed exactly by
summation; with Gaussian members a Monte Carlo estimate with a standard
error is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .perturb import (
    DistributionError,
    FiniteDistribution,
    GaussianDistribution,
    sample,
)

Example = tuple  # (x, y) with y in {-1, +1}


@dataclass(frozen=True)
class TaskInstance:
    """A data distribution over labeled examples plus per-x perturbation families.

    ``data_dist`` is a finite distribution whose support points are (x, y)
    pairs; ``family_of`` maps every x appearing in that support to its
    family.  Families are keyed by the instance x alone, so label-noisy
    tasks (same x under both labels) share one family.
    """

    data_dist: FiniteDistribution
    family_of: Mapping

    def __post_init__(self):
        for (x, y) in self.data_dist.support:
            if y not in (-1, 1):
                raise ValueError(f"label {y!r} must be -1 or +1")
            if x not in self.family_of:
                raise ValueError(f"no distribution family for x={x!r}")

    def atoms(self) -> list:
        """(x, y, prob) triples of the data distribution."""
        return [(x, y, p) for (x, y), p in zip(self.data_dist.support, self.data_dist.probs)]

    def members_for(self, x, view: str) -> tuple:
        return self.family_of[x].members(view)

    def is_finite(self, view: str = "true") -> bool:
        """True when every family member in ``view`` has finite support."""
        return all(
            isinstance(u, FiniteDistribution)
            for x, _, _ in self.atoms()
            for u in self.members_for(x, view)
        )

    def domain_points(self, views: Sequence[str] = ("true",)) -> list:
        """Sorted distinct instance points: clean x's plus all member supports."""
        pts = {x for x, _, _ in self.atoms()}
        for x, _, _ in self.atoms():
            for view in views:
                for u in self.members_for(x, view):
                    if isinstance(u, FiniteDistribution):
                        pts.update(u.support)
                    else:
                        raise DistributionError("domain enumeration requires finite members")
        return sorted(pts)

    def max_family_size(self, view: str = "true") -> int:
        return max(len(self.members_for(x, view)) for x, _, _ in self.atoms())


@dataclass(frozen=True)
class SampleSet:
    """A drawn training set: n clean examples plus m perturbations per family member.

    ``perturbed[(i, j)]`` holds the m draws for clean example i and its
    family member j, each batch drawn once and shared by every hypothesis
    scored against this set.  Total size is at most n*m*k + n.
    """

    clean: tuple
    perturbed: Mapping
    m: int
    sampled_from: str = "true"

    def __post_init__(self):
        if not self.clean:
            raise ValueError("empty sample set")
        for key, batch in self.perturbed.items():
            if len(batch) != self.m:
                raise ValueError(f"batch {key} has {len(batch)} draws, expected m={self.m}")

    @property
    def n(self) -> int:
        return len(self.clean)

    def member_count(self, i: int) -> int:
        j = 0
        while (i, j) in self.perturbed:
            j += 1
        return j

    def all_points(self) -> list:
        """Distinct points of the set (clean instances and all perturbations), sorted."""
        pts = {x for x, _ in self.clean}
        for batch in self.perturbed.values():
            pts.update(batch)
        return sorted(pts)


def empirical_dr_loss(h, s: SampleSet) -> float:
    """Average over clean examples of the worst per-member misclassified fraction.

    Clean points themselves carry no loss terms; they only matter for
    behavior enumeration upstream.
    """
    total = 0.0
    for i, (x, y) in enumerate(s.clean):
        worst = 0.0
        j = 0
        while (i, j) in s.perturbed:
            batch = s.perturbed[(i, j)]
            wrong = sum(1 for z in batch if h.predict(z) != y)
            worst = max(worst, wrong / s.m)
            j += 1
        if j == 0:
            raise ValueError(f"clean example {i} has no perturbation batches")
        total += worst
    return total / s.n


def population_dr_loss_exact(h, task: TaskInstance, view: str = "true") -> float:
    """Exact DR loss by direct summation; requires finite family members."""
    total = 0.0
    for x, y, p in task.atoms():
        worst = 0.0
        for u in task.members_for(x, view):
            if not isinstance(u, FiniteDistribution):
                raise DistributionError("exact DR loss needs finite members; use the Monte Carlo estimator")
            err = math.fsum(q for z, q in zip(u.support, u.probs) if h.predict(z) != y)
            worst = max(worst, err)
        total += p * worst
    return total


class McEstimate(NamedTuple):
    value: float
    stderr: float


def population_dr_loss_mc(h, task: TaskInstance, n: int, m: int,
                          rng: np.random.Generator, view: str = "true") -> McEstimate:
    """Monte Carlo DR loss: n clean draws, one m-sample batch per (x, member) pair.

    Batches are shared across repeated clean draws of the same x (one batch
    per pair, never fresh batches per hypothesis).  The reported standard
    error combines the per-example variance of the outer average with the
    binomial noise of each argmax member's batch; the latter uses the
    (count + 1/2)/(m + 1) variance estimate so it never degenerates to zero
    on one-sided batches.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    atoms = task.atoms()
    probs = np.array([p for _, _, p in atoms])
    counts = rng.multinomial(n, probs)

    values = np.zeros(len(atoms))
    inner_var = np.zeros(len(atoms))
    for a, (x, y, _) in enumerate(atoms):
        best_val = -1.0
        best_var = 0.0
        for u in task.members_for(x, view):
            if isinstance(u, FiniteDistribution):
                draw = rng.multinomial(m, u.prob_array())
                wrong = int(sum(c for z, c in zip(u.support, draw) if h.predict(z) != y))
            elif isinstance(u, GaussianDistribution):
                wrong = sum(1 for z in sample(u, m, rng) if h.predict(z) != y)
            else:
                raise DistributionError(f"cannot sample member of type {type(u).__name__}")
            p_hat = wrong / m
            if p_hat > best_val:
                p_smooth = (wrong + 0.5) / (m + 1)
                best_val = p_hat
                best_var = p_smooth * (1.0 - p_smooth) / m
        values[a] = best_val
        inner_var[a] = best_var

    weights = counts / n
    value = float(weights @ values)
    if n > 1:
        outer_var = float(counts @ (values - value) ** 2) / (n - 1)
    else:
        outer_var = 0.0
    stderr = math.sqrt(outer_var / n + float(weights ** 2 @ inner_var))
    return McEstimate(value, stderr)


def adversarial_point_loss(classifier, x, y, a_set: Sequence, trials: int,
                           rng: np.random.Generator = None) -> float:
    """Worst expected error over the attack set A(x) for a randomized classifier.

    ``trials=0`` requests exact enumeration over a finite randomness
    distribution; otherwise one shared batch of ``trials`` randomness draws
    is evaluated at every attack point.
    """
    a_set = list(a_set)
    if not a_set:
        raise ValueError("attack set must be nonempty")
    if trials == 0:
        dist = classifier.randomness
        if not isinstance(dist, FiniteDistribution):
            raise DistributionError("exact enumeration needs finite randomness")
        return max(
            math.fsum(q for r, q in zip(dist.support, dist.probs)
                      if classifier.evaluate(xp, r) != y)
            for xp in a_set
        )
    if rng is None:
        raise ValueError("rng required when trials > 0")
    draws = sample(classifier.randomness, trials, rng)
    return max(
        sum(1 for r in draws if classifier.evaluate(xp, r) != y) / trials
        for xp in a_set
    )
