"""Built-in tasks and synthetic constructions used by the experiment suites.

Everything here is desk-scale and fully discrete (Gaussians excepted for
the smoothing task), so exact brute-force evaluation is always available.
The canonical running task ``t1`` places a negative example at 0 and a
positive one at 3, each with a point-mass member and a two-point uniform
member; thresholds in (1, 2] achieve zero worst-case loss on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .derand import AttackTask, RandomizedCertifier, RandomizedClassifier
from .hypo import TableHypothesis
from .loss import TaskInstance
from .perturb import DistributionFamily, FiniteDistribution, GaussianDistribution


def t1() -> TaskInstance:
    """Two atoms, realizable by thresholds in (1, 2]."""
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    families = {
        0.0: DistributionFamily(
            [FiniteDistribution.point_mass(0.0), FiniteDistribution.uniform([0.0, 1.0])], k=2),
        3.0: DistributionFamily(
            [FiniteDistribution.point_mass(3.0), FiniteDistribution.uniform([2.0, 3.0])], k=2),
    }
    return TaskInstance(data, families)


def with_label_noise(task: TaskInstance, rate: float) -> TaskInstance:
    """Flip each atom's label with probability ``rate``; families stay keyed by x."""
    if not 0 <= rate < 0.5:
        raise ValueError("noise rate must be in [0, 1/2)")
    mass: dict = {}
    for x, y, p in task.atoms():
        mass[(x, y)] = mass.get((x, y), 0.0) + p * (1.0 - rate)
        mass[(x, -y)] = mass.get((x, -y), 0.0) + p * rate
    pairs = sorted(mass.items())
    data = FiniteDistribution([xy for xy, _ in pairs], [p for _, p in pairs])
    return TaskInstance(data, task.family_of)


def model1_task() -> TaskInstance:
    """Representative sets at TV radius exactly 0.1 from the extra true members.

    Each true family adds one member that leaks 0.1 mass across the label
    boundary, so a representative-trained zero-loss threshold carries true
    loss 0.1: nonzero but inside the epsilon + 0.1 guarantee.
    """
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    rep0 = FiniteDistribution.uniform([0.0, 1.0])
    leak0 = FiniteDistribution([0.0, 1.0, 2.0], [0.45, 0.45, 0.10])
    rep3 = FiniteDistribution.uniform([2.0, 3.0])
    leak3 = FiniteDistribution([1.0, 2.0, 3.0], [0.10, 0.45, 0.45])
    families = {
        0.0: DistributionFamily([rep0, leak0], [rep0], k=1),
        3.0: DistributionFamily([rep3, leak3], [rep3], k=1),
    }
    return TaskInstance(data, families)


def model2_task() -> TaskInstance:
    """Pointwise-dominated true member: the renormalized max of two representatives."""
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    r1 = FiniteDistribution.uniform([0.0, 1.0])
    r2 = FiniteDistribution([0.0, 2.0], [0.8, 0.2])
    # max density (0.8, 0.5, 0.2) renormalized by its mass 1.5
    mix = FiniteDistribution([0.0, 1.0, 2.0], [8 / 15, 5 / 15, 2 / 15])
    d3 = FiniteDistribution.point_mass(3.0)
    families = {
        0.0: DistributionFamily([r1, r2, mix], [r1, r2], k=2),
        3.0: DistributionFamily([d3], [d3], k=2),
    }
    return TaskInstance(data, families)


def near_threshold_task() -> TaskInstance:
    """One behavior sits just above the target loss level.

    At epsilon = 0.2 the threshold-at-1 behavior has exact worst-case loss
    0.225, and tiny samples (n = 2, m = 3) leave it unseparated often
    enough that the zero-train-loss event has visible probability.
    """
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    families = {
        0.0: DistributionFamily([FiniteDistribution([0.0, 1.0], [0.55, 0.45])], k=1),
        3.0: DistributionFamily([FiniteDistribution.point_mass(3.0)], k=1),
    }
    return TaskInstance(data, families)


def hoeffding_inner_task() -> TaskInstance:
    """Single atom whose one member is a fair coin for the paired hypothesis.

    With the threshold at 0.5 the member Unif{0, 1} is misclassified with
    probability exactly 1/2, the worst case for a binomial tail.
    """
    data = FiniteDistribution([(0.0, -1)], [1.0])
    families = {0.0: DistributionFamily([FiniteDistribution.uniform([0.0, 1.0])], k=1)}
    return TaskInstance(data, families)


def hoeffding_outer_task() -> TaskInstance:
    """Two point-mass atoms giving the per-example loss a fair-coin law."""
    data = FiniteDistribution([(0.0, -1), (1.0, -1)], [0.5, 0.5])
    families = {
        0.0: DistributionFamily([FiniteDistribution.point_mass(0.0)], k=1),
        1.0: DistributionFamily([FiniteDistribution.point_mass(1.0)], k=1),
    }
    return TaskInstance(data, families)


def smoothing_task(sigma: float = 1.0) -> TaskInstance:
    """Real-line task whose single family member is the Gaussian around each atom."""
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    families = {
        x: DistributionFamily([GaussianDistribution(x, sigma)],
                              [GaussianDistribution(x, sigma)], k=1)
        for x in (0.0, 3.0)
    }
    return TaskInstance(data, families)


def with_constructed_cover(task: TaskInstance, k: int) -> TaskInstance:
    """Replace every family's representative set with a greedy k-center cover.

    For tasks that ship only true families, this is how Model I experiments
    obtain their representatives; the achieved TV radius is whatever the
    greedy construction reaches, and the suites read it off the task.
    """
    from .perturb import build_representative_cover

    families = {}
    for x, fam in task.family_of.items():
        cover = build_representative_cover(fam.true_set, k)
        families[x] = DistributionFamily(fam.true_set, cover.representatives, k=k)
    return TaskInstance(task.data_dist, families)


def grid_randomness(grid: int = 1000) -> FiniteDistribution:
    """Uniform finite randomness on midpoints of [0, 1); keeps vote math exact.

    Any per-draw error probability that is a multiple of 1/grid is realized
    exactly by thresholding a draw, so constructed error levels like 0.2
    are not approximations.
    """
    return FiniteDistribution.uniform([(i + 0.5) / grid for i in range(grid)])


@dataclass(frozen=True)
class DerandSetup:
    """A synthetic randomized classifier with analytically known per-point errors."""

    attack_task: AttackTask
    base: RandomizedClassifier
    errors: dict          # attack point -> per-draw error probability
    mean_error: float     # expected worst per-draw error over the data


def derand_classifier_setup(p_err: float = 0.2, a_size: int = 8, grid: int = 1000,
                            p_err_high: Optional[float] = None) -> DerandSetup:
    """Two-atom attack task with a constructed per-draw error at every attack point.

    All attack points err with probability ``p_err``; when ``p_err_high``
    is given, the positive atom's points use it instead (half the data
    mass), which puts that mass beyond any vote count's reach once the
    level crosses one half.
    """
    atoms = [((0.0, -1), 0.5), ((10.0, 1), 0.5)]
    data = FiniteDistribution([xy for xy, _ in atoms], [p for _, p in atoms])
    attacks = {
        0.0: tuple(0.0 + 0.1 * s for s in range(a_size)),
        10.0: tuple(10.0 + 0.1 * s for s in range(a_size)),
    }
    errors = {}
    label_of = {}
    for (x, y), _ in atoms:
        level = p_err
        if p_err_high is not None and y == 1:
            level = p_err_high
        for xp in attacks[x]:
            errors[xp] = level
            label_of[xp] = y

    def evaluate(xp, r):
        return -label_of[xp] if r < errors[xp] else label_of[xp]

    base = RandomizedClassifier(evaluate=evaluate, randomness=grid_randomness(grid))
    task = AttackTask(data, attacks)
    mean_error = sum(p * max(errors[xp] for xp in attacks[x]) for (x, _), p in atoms)
    return DerandSetup(task, base, errors, mean_error)


@dataclass(frozen=True)
class CertifierSetup:
    """A synthetic randomized certifier with a known in-band probability."""

    attack_task: AttackTask
    certifier: RandomizedCertifier
    q_in: float
    alpha: float
    beta: float


def derand_certifier_setup(q_in: float = 0.9, a_size: int = 8, grid: int = 1000,
                           alpha: float = 0.5, beta: float = 0.5) -> CertifierSetup:
    """Certifier whose radius is exact with probability ``q_in``, else far above band.

    The ground-truth robust region is the distance to the cut at 1.5 of the
    underlying threshold classifier; attack points stay clear of the cut so
    the region is always positive here.
    """
    cut = 1.5
    data = FiniteDistribution([(0.0, -1), (3.0, 1)], [0.5, 0.5])
    attacks = {
        0.0: tuple(0.0 + 0.1 * s for s in range(a_size)),
        3.0: tuple(3.0 - 0.1 * s for s in range(a_size)),
    }

    def robust_region(xp):
        return abs(xp - cut)

    def evaluate(xp, r):
        region = robust_region(xp)
        return region * (2.0 + alpha) if r < 1.0 - q_in else region

    cert = RandomizedCertifier(evaluate=evaluate, randomness=grid_randomness(grid),
                               robust_region=robust_region)
    return CertifierSetup(AttackTask(data, attacks), cert, q_in, alpha, beta)


def random_finite_task(rng: np.random.Generator, max_points: int = 6,
                       max_k: int = 3, grid: int = 20) -> TaskInstance:
    """A random small discrete task with grid-valued probabilities.

    Probabilities are multiples of 1/grid, so member error levels sit well
    away from 0 and 1 unless they are exactly 0 or 1; that keeps Monte
    Carlo standard errors honest in the oracle-exactness checks.
    """
    n_points = int(rng.integers(2, max_points + 1))
    points = [float(i) for i in range(n_points)]
    n_atoms = int(rng.integers(1, n_points + 1))
    atom_idx = sorted(rng.choice(n_points, size=n_atoms, replace=False).tolist())
    labels = [int(v) for v in rng.choice([-1, 1], size=n_atoms)]
    weights = rng.multinomial(grid - n_atoms, [1.0 / n_atoms] * n_atoms) + 1
    data = FiniteDistribution(
        [(points[i], y) for i, y in zip(atom_idx, labels)],
        [w / grid for w in weights],
    )
    families = {}
    for i in atom_idx:
        k = int(rng.integers(1, max_k + 1))
        members = []
        for _ in range(k):
            counts = rng.multinomial(grid, [1.0 / n_points] * n_points)
            support = [points[d] for d in range(n_points) if counts[d] > 0]
            probs = [counts[d] / grid for d in range(n_points) if counts[d] > 0]
            members.append(FiniteDistribution(support, probs))
        families[points[i]] = DistributionFamily(members, k=k)
    return TaskInstance(data, families)


def random_table_hypothesis(rng: np.random.Generator, points) -> TableHypothesis:
    return TableHypothesis({p: int(v) for p, v in zip(points, rng.choice([-1, 1], size=len(points)))})


BUILTIN_TASKS: dict = {
    "t1": t1,
    "t1-noise": lambda rate=0.1: with_label_noise(t1(), rate),
    "model1": model1_task,
    "model2": model2_task,
    "near-threshold": near_threshold_task,
    "hoeffding-inner": hoeffding_inner_task,
    "hoeffding-outer": hoeffding_outer_task,
    "smoothing": smoothing_task,
}


def _point_from_json(z):
    return tuple(float(v) for v in z) if isinstance(z, list) else float(z)


def _distribution_from_json(spec):
    if isinstance(spec, dict) and "gaussian" in spec:
        g = spec["gaussian"]
        return GaussianDistribution(_point_from_json(g["center"]), float(g["sigma"]))
    return FiniteDistribution([_point_from_json(z) for z, _ in spec], [float(p) for _, p in spec])


def task_from_dict(d: dict) -> TaskInstance:
    """Build a task from its declarative form.

    Schema::

        atoms: [[x, y, prob], ...]
        distributions: {name: [[point, prob], ...] | {gaussian: {center, sigma}}}
        families: [{x: _, true: [names], rep: [names] | null, k: int}, ...]
    """
    dists = {name: _distribution_from_json(spec) for name, spec in d["distributions"].items()}
    data = FiniteDistribution(
        [(_point_from_json(x), int(y)) for x, y, _ in d["atoms"]],
        [float(p) for _, _, p in d["atoms"]],
    )
    families = {}
    for fam in d["families"]:
        rep = fam.get("rep")
        families[_point_from_json(fam["x"])] = DistributionFamily(
            [dists[name] for name in fam["true"]],
            [dists[name] for name in rep] if rep is not None else None,
            k=int(fam.get("k", 1)),
        )
    return TaskInstance(data, families)


def build_task(spec: dict) -> TaskInstance:
    """Resolve a config task reference: builtin name, inline table, or file."""
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTIN_TASKS:
            raise ValueError(f"unknown builtin task {name!r}")
        return BUILTIN_TASKS[name](**spec.get("params", {}))
    if "inline" in spec:
        return task_from_dict(spec["inline"])
    if "file" in spec:
        text = Path(spec["file"]).read_text()
        return task_from_dict(json.loads(text))
    raise ValueError("task spec needs one of: builtin, inline, file")
