"""Guarantee-checking suites: seeded trial sweeps with exact oracles.

Each suite turns one guarantee into a violation frequency over many seeded
trials and checks it against its probability budget with explicit slack.
Trials are split into fixed-size chunks, each owning its own derived
random stream, so reports are identical regardless of worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import seeding
from ..derand import encode_seeds, epsilon_eta, required_trials, worst_point_errors
from ..hypo import ThresholdClass
from ..learner import LearnConfig, draw_training_set, drerm
from ..perturb import gaussian_shift_tv, pointwise_cover_violation, sample, tv_distance
from ..stats import (
    Assertion,
    freq_at_most,
    freq_within_three_sigma,
    wilson_interval,
)
from ..tasks import (
    build_task,
    derand_certifier_setup,
    derand_classifier_setup,
    with_constructed_cover,
)
from .config import ConfigError, ExperimentConfig, build_hypothesis, build_hypothesis_class
from .indexed import FiniteView
from .report import ExperimentReport

CHUNK = 256
EXACT_ZERO_TOL = 1e-12
SEED_DUMP_LIMIT = 100_000  # max trials * t for verbatim hex seed dumps


def _chunk_ranges(trials: int) -> list:
    return [(c, lo, min(lo + CHUNK, trials))
            for c, lo in enumerate(range(0, trials, CHUNK))]


def _collect(jobs: int, fn, jobspecs: list) -> list:
    if jobs == 1:
        return [fn(*spec) for spec in jobspecs]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*jobspecs)))


def _median(values) -> float:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


# ---------------------------------------------------------------------------
# ERM-style suites: realizable / agnostic / model1 / model2


def _erm_views(flavor: str):
    if flavor in ("model1", "model2"):
        return ("true", "rep"), "rep"
    return ("true",), "true"


def _erm_setup(cfg: ExperimentConfig, flavor: str):
    task = build_task(cfg.task)
    hclass = build_hypothesis_class(cfg.hypothesis_class)
    views, train_view = _erm_views(flavor)
    if train_view == "rep":
        cover_k = cfg.params.get("cover_k")
        if cover_k:
            task = with_constructed_cover(task, int(cover_k))
        for x, _, _ in task.atoms():
            if task.family_of[x].rep_set is None:
                raise ConfigError(f"{flavor} requires representative sets; x={x!r} has none")
    view = FiniteView(task, views=views)
    labels, witnesses = view.behaviors(hclass)
    dr_true = view.dr_exact(labels, "true")
    return task, hclass, view, labels, witnesses, dr_true, train_view


def _model_bound(cfg: ExperimentConfig, flavor: str, task, epsilon: float) -> tuple:
    """(bound, eps_prime) for the cover models; eps_prime is NaN for model2."""
    if flavor == "model1":
        eps_prime = 0.0
        for x, _, _ in task.atoms():
            fam = task.family_of[x]
            for u in fam.true_set:
                eps_prime = max(eps_prime, min(tv_distance(u, r) for r in fam.rep_set))
        return epsilon + eps_prime, eps_prime
    k = max(task.family_of[x].k for x, _, _ in task.atoms())
    return k * epsilon, float("nan")


def _erm_chunk(cfg: ExperimentConfig, flavor: str, grid_idx: int,
               chunk_idx: int, lo: int, hi: int) -> list:
    task, hclass, view, labels, _, dr_true, train_view = _erm_setup(cfg, flavor)
    entry = cfg.grid[grid_idx]
    n, m = int(entry["n"]), int(entry["m"])
    epsilon = float(entry["epsilon"])
    trials = hi - lo
    exact_inner = bool(entry.get("exact_inner", False))
    rng = seeding.stream(cfg.master_seed, grid_idx, chunk_idx)
    slots = view.draw_clean_slots(rng, trials * n)
    if exact_inner:
        counts = None
        dr_s = view.dr_s_exact_inner(labels, slots, trials, n, train_view)
    else:
        counts = view.draw_slot_counts(rng, slots, m, train_view)
        dr_s = view.dr_s(labels, slots, counts, trials, n, m)

    if flavor in ("model1", "model2"):
        bound, eps_prime = _model_bound(cfg, flavor, task, epsilon)
        level = bound
    else:
        bound, eps_prime = epsilon, float("nan")
        level = epsilon

    k_col = task.max_family_size(train_view)
    witnesses_cache = None
    rows = []
    for t in range(trials):
        if exact_inner:
            # no sampled points to enumerate on; minimize over the full-domain behaviors
            if witnesses_cache is None:
                _, witnesses_cache = view.behaviors(hclass)
            best = int(np.argmin(dr_s[:, t]))
            erm_h = witnesses_cache[best]
            loss_emp = float(dr_s[best, t])
            loss_pop = float(dr_true[best])
        else:
            t_slots = slots[t * n:(t + 1) * n]
            t_counts = counts[t * n:(t + 1) * n]
            erm_h, loss_emp, full_labels = view.erm_on_sample(hclass, t_slots, t_counts, m)
            loss_pop = float(view.dr_exact(full_labels, "true")[0])
        row = {
            "grid_index": grid_idx,
            "trial": lo + t,
            "n": n,
            "m": m,
            "k": k_col,
            "epsilon": epsilon,
            "delta": float(entry.get("delta", 0.05)),
            "loss_emp": loss_emp,
            "loss_pop": loss_pop,
            "gap": abs(loss_emp - loss_pop),
            "hypothesis": erm_h.to_json(),
        }
        zero_train = dr_s[:, t] <= EXACT_ZERO_TOL
        if flavor == "agnostic":
            max_gap = float(np.max(np.abs(dr_s[:, t] - dr_true)))
            row["max_gap"] = max_gap
            row["viol"] = bool(max_gap > epsilon)
        else:
            row["viol_erm"] = bool(loss_emp <= EXACT_ZERO_TOL and loss_pop >= level)
            row["viol_any"] = bool(np.any(zero_train & (dr_true >= level)))
            if flavor in ("model1", "model2"):
                row["bound"] = bound
                if flavor == "model1":
                    row["eps_prime"] = eps_prime
        rows.append(row)
    return rows


_ERM_COLUMNS = {
    "realizable": ["grid_index", "trial", "n", "m", "k", "epsilon", "delta",
                   "loss_emp", "loss_pop", "gap", "viol_erm", "viol_any", "hypothesis"],
    "agnostic": ["grid_index", "trial", "n", "m", "k", "epsilon", "delta",
                 "loss_emp", "loss_pop", "gap", "max_gap", "viol", "hypothesis"],
    "model1": ["grid_index", "trial", "n", "m", "k", "epsilon", "delta", "eps_prime",
               "bound", "loss_emp", "loss_pop", "gap", "viol_erm", "viol_any", "hypothesis"],
    "model2": ["grid_index", "trial", "n", "m", "k", "epsilon", "delta",
               "bound", "loss_emp", "loss_pop", "gap", "viol_erm", "viol_any", "hypothesis"],
}


def _run_erm_suite(cfg: ExperimentConfig, flavor: str) -> ExperimentReport:
    start = time.perf_counter()
    task, hclass, view, labels, witnesses, dr_true, train_view = _erm_setup(cfg, flavor)

    if flavor == "realizable":
        best = float(dr_true.min())
        if best > EXACT_ZERO_TOL:
            raise ConfigError(
                "task is not realizable: exhaustive enumeration of "
                f"{len(dr_true)} behaviors has minimum exact DR loss {best:.6g} > 0"
            )
    if flavor == "model2":
        for x, _, _ in task.atoms():
            fam = task.family_of[x]
            for ui, u in enumerate(fam.true_set):
                bad = pointwise_cover_violation(u, fam.rep_set)
                if bad is not None:
                    z, pu, pr = bad
                    raise ConfigError(
                        f"pointwise cover violated at x={x!r}, member {ui}, "
                        f"point {z!r}: {pu:.6g} > {pr:.6g}"
                    )

    jobspecs = [(cfg, flavor, g, c, lo, hi)
                for g in range(len(cfg.grid))
                for c, lo, hi in _chunk_ranges(cfg.trials)]
    rows = [row for chunk in _collect(cfg.jobs, _erm_chunk, jobspecs) for row in chunk]

    aggregates = []
    assertions = []
    viol_key = "viol" if flavor == "agnostic" else "viol_erm"
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        viol = sum(1 for r in grid_rows if r[viol_key])
        lo_w, hi_w = wilson_interval(viol, len(grid_rows))
        delta = float(entry.get("delta", 0.05))
        agg = {
            "grid_index": g,
            "n": entry["n"],
            "m": entry["m"],
            "epsilon": entry["epsilon"],
            "delta": delta,
            "trials": len(grid_rows),
            f"{viol_key}_freq": viol / len(grid_rows),
            "wilson_lo": lo_w,
            "wilson_hi": hi_w,
            "median_gap": _median([r["gap"] for r in grid_rows]),
            "asserted": bool(entry.get("assert", False)),
        }
        if flavor != "agnostic":
            agg["viol_any_freq"] = sum(1 for r in grid_rows if r["viol_any"]) / len(grid_rows)
        if flavor in ("model1", "model2"):
            agg["bound"] = grid_rows[0]["bound"]
        if entry.get("assert", False):
            a = freq_at_most(f"{flavor} violation freq (grid {g})", viol, len(grid_rows), delta)
            assertions.append(a)
            agg["passed"] = a.passed
        else:
            agg["passed"] = True
        aggregates.append(agg)

    agg_columns = sorted({k for a in aggregates for k in a})
    report = ExperimentReport(
        kind=flavor,
        config=cfg.echo(),
        columns=_ERM_COLUMNS[flavor],
        rows=rows,
        agg_columns=agg_columns,
        aggregates=aggregates,
        assertions=assertions,
        passed=all(a.passed for a in assertions),
        wall_clock_s=time.perf_counter() - start,
    )
    return report


def run_realizable(cfg: ExperimentConfig) -> ExperimentReport:
    return _run_erm_suite(cfg, "realizable")


def run_agnostic(cfg: ExperimentConfig) -> ExperimentReport:
    return _run_erm_suite(cfg, "agnostic")


def run_model1(cfg: ExperimentConfig) -> ExperimentReport:
    return _run_erm_suite(cfg, "model1")


def run_model2(cfg: ExperimentConfig) -> ExperimentReport:
    return _run_erm_suite(cfg, "model2")


# ---------------------------------------------------------------------------
# Double-sampling lemma


def _double_trial(cfg: ExperimentConfig, grid_idx: int, trial: int) -> list:
    task = build_task(cfg.task)
    hclass = build_hypothesis_class(cfg.hypothesis_class)
    view = FiniteView(task, views=("true",))
    labels, _ = view.behaviors(hclass)
    dr_true = view.dr_exact(labels, "true")
    entry = cfg.grid[grid_idx]
    n, m = int(entry["n"]), int(entry["m"])
    epsilon = float(entry["epsilon"])
    draws = int(cfg.params.get("draws", 20000))
    rng = seeding.stream(cfg.master_seed, grid_idx, trial)

    def batch_dr_s():
        slots = view.draw_clean_slots(rng, draws * n)
        counts = view.draw_slot_counts(rng, slots, m, "true")
        return view.dr_s(labels, slots, counts, draws, n, m)

    dr_s = batch_dr_s()
    dr_sp = batch_dr_s()
    zero = dr_s <= EXACT_ZERO_TOL
    event_a = np.any(zero & (dr_true[:, None] >= epsilon), axis=0)
    event_b = np.any(zero & (dr_sp >= epsilon / 2), axis=0)
    d = event_b.astype(float) - 0.4 * event_a.astype(float)
    mean_d = float(d.mean())
    se_d = float(d.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    pr_a = float(event_a.mean())
    vacuous = pr_a == 0.0
    passed = vacuous or mean_d >= -3.0 * se_d
    return [{
        "grid_index": grid_idx,
        "trial": trial,
        "n": n,
        "m": m,
        "epsilon": epsilon,
        "draws": draws,
        "pr_a": pr_a,
        "pr_b": float(event_b.mean()),
        "mean_d": mean_d,
        "se_d": se_d,
        "vacuous": vacuous,
        "passed": passed,
    }]


def run_double_sampling(cfg: ExperimentConfig) -> ExperimentReport:
    """Paired-draw estimate of Pr(B) >= (2/5) Pr(A), checked per master-seed trial."""
    start = time.perf_counter()
    jobspecs = [(cfg, g, t) for g in range(len(cfg.grid)) for t in range(cfg.trials)]
    rows = [row for out in _collect(cfg.jobs, _double_trial, jobspecs) for row in out]

    assertions = []
    aggregates = []
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        for r in grid_rows:
            if r["vacuous"]:
                continue
            assertions.append(Assertion(
                name=f"double-sampling grid {g} trial {r['trial']}",
                observed=r["mean_d"],
                bound=-3.0 * r["se_d"],
                slack_rule="mean(1_B - (2/5) 1_A) >= -3 se",
                passed=r["passed"],
            ))
        aggregates.append({
            "grid_index": g,
            "n": entry["n"],
            "m": entry["m"],
            "epsilon": entry["epsilon"],
            "trials": len(grid_rows),
            "mean_pr_a": sum(r["pr_a"] for r in grid_rows) / len(grid_rows),
            "mean_pr_b": sum(r["pr_b"] for r in grid_rows) / len(grid_rows),
            "min_margin": min(r["mean_d"] + 3 * r["se_d"] for r in grid_rows),
            "vacuous_trials": sum(1 for r in grid_rows if r["vacuous"]),
            "passed": all(r["passed"] for r in grid_rows),
        })

    agg_columns = sorted({k for a in aggregates for k in a})
    return ExperimentReport(
        kind="double-sampling",
        config=cfg.echo(),
        columns=["grid_index", "trial", "n", "m", "epsilon", "draws",
                 "pr_a", "pr_b", "mean_d", "se_d", "vacuous", "passed"],
        rows=rows,
        agg_columns=agg_columns,
        aggregates=aggregates,
        assertions=assertions,
        passed=all(r["passed"] for r in rows),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Concentration suite


def _binom_pmf(m: int, p: float) -> np.ndarray:
    # exact pmf via integer binomials; m stays desk-scale here
    return np.array([math.comb(m, i) * (p ** i) * ((1 - p) ** (m - i)) for i in range(m + 1)])


def _exact_mean_worst(m: int, probs: list) -> float:
    """E[max_j Binomial(m, p_j)] / m for independent batches, by enumeration."""
    if len(probs) == 1:
        return probs[0]
    if len(probs) == 2:
        pmf_a = _binom_pmf(m, probs[0])
        pmf_b = _binom_pmf(m, probs[1])
        grid = np.maximum.outer(np.arange(m + 1), np.arange(m + 1))
        return float(pmf_a @ grid @ pmf_b) / m
    raise ConfigError("exact outer mean implemented for at most 2 members per example")


def _mistake_prob(h, dist, y) -> float:
    return math.fsum(q for z, q in zip(dist.support, dist.probs) if h.predict(z) != y)


def _hoeffding_chunk(cfg: ExperimentConfig, grid_idx: int, chunk_idx: int,
                     lo: int, hi: int) -> list:
    entry = cfg.grid[grid_idx]
    target = entry["target"]
    epsilon = float(entry["epsilon"])
    trials = hi - lo
    h = build_hypothesis(cfg.params["hypothesis"])
    rng = seeding.stream(cfg.master_seed, grid_idx, chunk_idx)
    rows = []
    if target == "inner":
        m = int(entry["m"])
        task = build_task(cfg.params["inner_task"])
        x, y, _ = task.atoms()[0]
        u = task.members_for(x, "true")[0]
        p = _mistake_prob(h, u, y)
        mist = np.array([1.0 if h.predict(z) != y else 0.0 for z in u.support])
        counts = rng.multinomial(m, u.prob_array(), size=trials)
        devs = np.abs(counts @ mist / m - p)
        threshold = epsilon / 8.0
        n_col = ""
        m_col = m
    elif target == "outer":
        n = int(entry["n"])
        m = int(cfg.params.get("outer_m", 1))
        task = build_task(cfg.params["outer_task"])
        view = FiniteView(task, views=("true",))
        p_members = np.zeros((view.n_atoms, view.max_k["true"]))
        for a, x in enumerate(view.atom_x):
            for j, u in enumerate(view.task.members_for(x, "true")):
                p_members[a, j] = _mistake_prob(h, u, view.atom_y[a])
        expected = math.fsum(
            view.atom_p[a] * _exact_mean_worst(m, [p_members[a, j] for j in range(
                len(view.task.members_for(view.atom_x[a], "true")))])
            for a in range(view.n_atoms)
        )
        slots = rng.choice(view.n_atoms, size=(trials, n), p=view.atom_p)
        worst = np.zeros((trials, n))
        for j in range(p_members.shape[1]):
            pj = p_members[slots, j]
            draws = rng.binomial(m, pj) / m
            np.maximum(worst, draws, out=worst)
        devs = np.abs(worst.mean(axis=1) - expected)
        threshold = epsilon / 4.0
        n_col = n
        m_col = m
    else:
        raise ConfigError(f"hoeffding target must be inner or outer, got {target!r}")
    for t, dev in enumerate(devs):
        rows.append({
            "grid_index": grid_idx,
            "trial": lo + t,
            "target": target,
            "n": n_col,
            "m": m_col,
            "epsilon": epsilon,
            "deviation": float(dev),
            "exceeded": bool(dev >= threshold),
        })
    return rows


def run_hoeffding(cfg: ExperimentConfig) -> ExperimentReport:
    """Empirical tails of the inner (per-member) and outer (per-sample) deviations.

    Inner: Pr[|mean - p| >= eps/8] against 2 exp(-m eps^2 / 32).
    Outer: Pr[|avg worst-member loss - E| >= eps/4] against 2 exp(-n eps^2 / 8).
    """
    start = time.perf_counter()
    jobspecs = [(cfg, g, c, lo, hi)
                for g in range(len(cfg.grid))
                for c, lo, hi in _chunk_ranges(cfg.trials)]
    rows = [row for out in _collect(cfg.jobs, _hoeffding_chunk, jobspecs) for row in out]

    aggregates = []
    assertions = []
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        epsilon = float(entry["epsilon"])
        if entry["target"] == "inner":
            bound = 2.0 * math.exp(-int(entry["m"]) * epsilon ** 2 / 32.0)
            threshold = epsilon / 8.0
        else:
            bound = 2.0 * math.exp(-int(entry["n"]) * epsilon ** 2 / 8.0)
            threshold = epsilon / 4.0
        exceed = sum(1 for r in grid_rows if r["exceeded"])
        lo_w, hi_w = wilson_interval(exceed, len(grid_rows))
        asserted = bool(entry.get("assert", True))
        agg = {
            "grid_index": g,
            "target": entry["target"],
            "n": entry.get("n", ""),
            "m": entry.get("m", cfg.params.get("outer_m", 1)),
            "epsilon": epsilon,
            "threshold": threshold,
            "bound": min(1.0, bound),
            "trials": len(grid_rows),
            "exceed_freq": exceed / len(grid_rows),
            "wilson_lo": lo_w,
            "wilson_hi": hi_w,
            "asserted": asserted,
        }
        if asserted:
            a = freq_within_three_sigma(
                f"hoeffding {entry['target']} tail (grid {g})",
                exceed, len(grid_rows), min(1.0, bound))
            assertions.append(a)
            agg["passed"] = a.passed
        else:
            agg["passed"] = True
        aggregates.append(agg)

    return ExperimentReport(
        kind="hoeffding",
        config=cfg.echo(),
        columns=["grid_index", "trial", "target", "n", "m", "epsilon", "deviation", "exceeded"],
        rows=rows,
        agg_columns=sorted({k for a in aggregates for k in a}),
        aggregates=aggregates,
        assertions=assertions,
        passed=all(a.passed for a in assertions),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Derandomization suites


def _seed_ref(cfg: ExperimentConfig, grid_idx: int, trial: int) -> str:
    return f"philox[{cfg.master_seed}/{grid_idx}/{trial}]"


def _derand_chunk(cfg: ExperimentConfig, grid_idx: int, chunk_idx: int,
                  lo: int, hi: int) -> list:
    entry = cfg.grid[grid_idx]
    eta = float(entry["eta"])
    delta = float(entry["delta"])
    setup = derand_classifier_setup(
        p_err=float(cfg.params.get("p_err", 0.2)),
        a_size=int(cfg.params.get("a_size", 8)),
        grid=int(cfg.params.get("grid_randomness", 1000)),
        p_err_high=cfg.params.get("p_err_high"),
    )
    task = setup.attack_task
    errors = worst_point_errors(setup.base, task)
    eps_eta = epsilon_eta(task, errors, eta)
    t_votes = int(entry.get("t") or required_trials(eta, task.max_attack_size(), delta))
    threshold = delta + eps_eta
    dump_seeds = cfg.trials * t_votes <= SEED_DUMP_LIMIT

    atoms = task.atoms()
    rows = []
    for trial in range(lo, hi):
        rng = seeding.stream(cfg.master_seed, grid_idx, trial)
        draws = np.sort(np.asarray(sample(setup.base.randomness, t_votes, rng)))
        dr_value = 0.0
        for x, y, p in atoms:
            fooled = False
            for xp in task.attacks[x]:
                wrong = int(np.searchsorted(draws, setup.errors[xp], side="left"))
                if 2 * wrong > t_votes or (2 * wrong == t_votes and y == 1):
                    fooled = True
                    break
            if fooled:
                dr_value += p
        rows.append({
            "grid_index": grid_idx,
            "trial": trial,
            "eta": eta,
            "delta": delta,
            "t_votes": t_votes,
            "dr_value": dr_value,
            "threshold": threshold,
            "exceeded": bool(dr_value > threshold),
            "seed_ref": _seed_ref(cfg, grid_idx, trial),
            "seeds_hex": ";".join(encode_seeds(draws.tolist())) if dump_seeds else "",
        })
    return rows


def run_derand_classifier(cfg: ExperimentConfig) -> ExperimentReport:
    """Re-derandomization sweep: plurality-vote DR must stay under delta + eps(eta)."""
    start = time.perf_counter()
    jobspecs = [(cfg, g, c, lo, hi)
                for g in range(len(cfg.grid))
                for c, lo, hi in _chunk_ranges(cfg.trials)]
    rows = [row for out in _collect(cfg.jobs, _derand_chunk, jobspecs) for row in out]

    setup = derand_classifier_setup(
        p_err=float(cfg.params.get("p_err", 0.2)),
        a_size=int(cfg.params.get("a_size", 8)),
        grid=int(cfg.params.get("grid_randomness", 1000)),
        p_err_high=cfg.params.get("p_err_high"),
    )
    errors = worst_point_errors(setup.base, setup.attack_task)
    aggregates = []
    assertions = []
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        eta = float(entry["eta"])
        delta = float(entry["delta"])
        eps_eta = epsilon_eta(setup.attack_task, errors, eta)
        markov = 2.0 * setup.mean_error / (1.0 - 2.0 * eta)
        exceed = sum(1 for r in grid_rows if r["exceeded"])
        lo_w, hi_w = wilson_interval(exceed, len(grid_rows))
        asserted = bool(entry.get("assert", True))
        agg = {
            "grid_index": g,
            "eta": eta,
            "delta": delta,
            "t_votes": grid_rows[0]["t_votes"],
            "eps_mean": setup.mean_error,
            "eps_eta": eps_eta,
            "markov_bound": markov,
            "trials": len(grid_rows),
            "exceed_freq": exceed / len(grid_rows),
            "wilson_lo": lo_w,
            "wilson_hi": hi_w,
            "asserted": asserted,
        }
        mk = Assertion(
            name=f"eps(eta) Markov check (grid {g})",
            observed=eps_eta,
            bound=markov,
            slack_rule="exact: eps(eta) <= 2 eps / (1 - 2 eta)",
            passed=eps_eta <= markov + 1e-12,
        )
        assertions.append(mk)
        if asserted:
            a = freq_at_most(f"derand classifier exceed freq (grid {g})",
                             exceed, len(grid_rows), delta)
            assertions.append(a)
            agg["passed"] = a.passed and mk.passed
        else:
            agg["passed"] = mk.passed
        aggregates.append(agg)

    return ExperimentReport(
        kind="derand-classifier",
        config=cfg.echo(),
        columns=["grid_index", "trial", "eta", "delta", "t_votes", "dr_value",
                 "threshold", "exceeded", "seed_ref", "seeds_hex"],
        rows=rows,
        agg_columns=sorted({k for a in aggregates for k in a}),
        aggregates=aggregates,
        assertions=assertions,
        passed=all(a.passed for a in assertions),
        wall_clock_s=time.perf_counter() - start,
    )


def _cert_chunk(cfg: ExperimentConfig, grid_idx: int, chunk_idx: int,
                lo: int, hi: int) -> list:
    entry = cfg.grid[grid_idx]
    eta = float(entry["eta"])
    delta = float(entry["delta"])
    setup = derand_certifier_setup(
        q_in=float(cfg.params.get("q_in", 0.9)),
        a_size=int(cfg.params.get("a_size", 8)),
        grid=int(cfg.params.get("grid_randomness", 1000)),
        alpha=float(cfg.params.get("alpha", 0.5)),
        beta=float(cfg.params.get("beta", 0.5)),
    )
    task = setup.attack_task
    gamma = {(x, y): 1.0 - setup.q_in for x, y, _ in task.atoms()}
    eps_eta = epsilon_eta(task, gamma, eta)
    t_votes = int(entry.get("t") or required_trials(eta, task.max_attack_size(), delta))
    threshold = eps_eta + delta
    # lower median is in band iff in-band draws fill positions 0..(t-1)//2
    need_in = (t_votes - 1) // 2 + 1
    out_level = 1.0 - setup.q_in
    dump_seeds = cfg.trials * t_votes <= SEED_DUMP_LIMIT

    rows = []
    for trial in range(lo, hi):
        rng = seeding.stream(cfg.master_seed, grid_idx, trial)
        draws = np.sort(np.asarray(sample(setup.certifier.randomness, t_votes, rng)))
        out_votes = int(np.searchsorted(draws, out_level, side="left"))
        in_votes = t_votes - out_votes
        band_value = 0.0
        if in_votes < need_in:  # same per-draw out probability at every attack point
            band_value = 1.0
        rows.append({
            "grid_index": grid_idx,
            "trial": trial,
            "eta": eta,
            "delta": delta,
            "t_votes": t_votes,
            "band_value": band_value,
            "threshold": threshold,
            "exceeded": bool(band_value > threshold),
            "seed_ref": _seed_ref(cfg, grid_idx, trial),
            "seeds_hex": ";".join(encode_seeds(draws.tolist())) if dump_seeds else "",
        })
    return rows


def run_derand_certifier(cfg: ExperimentConfig) -> ExperimentReport:
    """Median-radius band preservation: out-of-band mass stays under eps(eta) + delta."""
    start = time.perf_counter()
    jobspecs = [(cfg, g, c, lo, hi)
                for g in range(len(cfg.grid))
                for c, lo, hi in _chunk_ranges(cfg.trials)]
    rows = [row for out in _collect(cfg.jobs, _cert_chunk, jobspecs) for row in out]

    q_in = float(cfg.params.get("q_in", 0.9))
    aggregates = []
    assertions = []
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        eta = float(entry["eta"])
        delta = float(entry["delta"])
        eps_eta = 1.0 if (1.0 - q_in) >= 0.5 - eta else 0.0
        exceed = sum(1 for r in grid_rows if r["exceeded"])
        lo_w, hi_w = wilson_interval(exceed, len(grid_rows))
        asserted = bool(entry.get("assert", True))
        agg = {
            "grid_index": g,
            "eta": eta,
            "delta": delta,
            "q_in": q_in,
            "t_votes": grid_rows[0]["t_votes"],
            "eps_eta": eps_eta,
            "trials": len(grid_rows),
            "exceed_freq": exceed / len(grid_rows),
            "wilson_lo": lo_w,
            "wilson_hi": hi_w,
            "asserted": asserted,
        }
        if asserted:
            a = freq_at_most(f"derand certifier exceed freq (grid {g})",
                             exceed, len(grid_rows), delta)
            assertions.append(a)
            agg["passed"] = a.passed
        else:
            agg["passed"] = True
        aggregates.append(agg)

    return ExperimentReport(
        kind="derand-certifier",
        config=cfg.echo(),
        columns=["grid_index", "trial", "eta", "delta", "t_votes", "band_value",
                 "threshold", "exceeded", "seed_ref", "seeds_hex"],
        rows=rows,
        agg_columns=sorted({k for a in aggregates for k in a}),
        aggregates=aggregates,
        assertions=assertions,
        passed=all(a.passed for a in assertions),
        wall_clock_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Smoothing suite


def _phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def smoothed_threshold_error(cut: float, x: float, y: int, sigma: float) -> float:
    """Exact Gaussian-noise error of a threshold classifier at a (possibly shifted) point."""
    p_plus = 1.0 - _phi((cut - x) / sigma)
    return p_plus if y == -1 else 1.0 - p_plus


def _smoothing_trial(cfg: ExperimentConfig, trial: int) -> list:
    sigma = float(cfg.params.get("sigma", 1.0))
    n = int(cfg.params.get("n", 100))
    m = int(cfg.params.get("m", 100))
    shift_points = int(cfg.params.get("shift_points", 21))
    mc_slack = float(cfg.params.get("mc_slack", 0.01))
    task = build_task(cfg.task)
    hclass = build_hypothesis_class(cfg.hypothesis_class)
    if not isinstance(hclass, ThresholdClass):
        raise ConfigError("the smoothing suite's exact loss oracle covers thresholds only")

    rng = seeding.stream(cfg.master_seed, 0, trial)
    lcfg = LearnConfig(n=n, m=m, hypothesis_class=hclass, sample_from="rep")
    s = draw_training_set(task, lcfg, rng)
    cut = drerm(hclass, s).t

    atoms = task.atoms()
    clean_loss = math.fsum(p * smoothed_threshold_error(cut, x, y, sigma)
                           for x, y, p in atoms)
    rows = []
    for g, entry in enumerate(cfg.grid):
        delta = float(entry["delta"])
        worst = 0.0
        for x, y, p in atoms:
            if delta == 0.0:
                shifts = [x]
            else:
                shifts = np.linspace(x - delta, x + delta, shift_points)
            worst += p * max(smoothed_threshold_error(cut, float(xp), y, sigma)
                             for xp in shifts)
        d_delta = gaussian_shift_tv(delta, sigma)
        excess = worst - clean_loss
        rows.append({
            "grid_index": g,
            "trial": trial,
            "delta": delta,
            "sigma": sigma,
            "t_hat": cut,
            "clean_loss": clean_loss,
            "worst_loss": worst,
            "excess": excess,
            "d_delta": d_delta,
            "ok": bool(excess <= d_delta + mc_slack),
        })
    return rows


def run_smoothing(cfg: ExperimentConfig) -> ExperimentReport:
    """Train on the Gaussian representative, then bound the worst-shift excess by d(delta).

    The per-shift smoothed loss is evaluated with the exact Gaussian CDF,
    so the excess-vs-TV comparison carries no Monte Carlo noise beyond the
    training draw itself.
    """
    start = time.perf_counter()
    jobspecs = [(cfg, t) for t in range(cfg.trials)]
    rows = [row for out in _collect(cfg.jobs, _smoothing_trial, jobspecs) for row in out]
    rows.sort(key=lambda r: (r["grid_index"], r["trial"]))

    mc_slack = float(cfg.params.get("mc_slack", 0.01))
    aggregates = []
    assertions = []
    for g, entry in enumerate(cfg.grid):
        grid_rows = [r for r in rows if r["grid_index"] == g]
        max_excess = max(r["excess"] for r in grid_rows)
        d_delta = grid_rows[0]["d_delta"]
        asserted = bool(entry.get("assert", True))
        agg = {
            "grid_index": g,
            "delta": entry["delta"],
            "sigma": grid_rows[0]["sigma"],
            "trials": len(grid_rows),
            "max_excess": max_excess,
            "d_delta": d_delta,
            "slack": mc_slack,
            "asserted": asserted,
        }
        if asserted:
            a = Assertion(
                name=f"smoothing excess vs TV (delta={entry['delta']})",
                observed=max_excess,
                bound=d_delta + mc_slack,
                slack_rule="max excess <= d(delta) + slack",
                passed=max_excess <= d_delta + mc_slack,
            )
            assertions.append(a)
            agg["passed"] = a.passed
        else:
            agg["passed"] = True
        aggregates.append(agg)

    return ExperimentReport(
        kind="smoothing",
        config=cfg.echo(),
        columns=["grid_index", "trial", "delta", "sigma", "t_hat", "clean_loss",
                 "worst_loss", "excess", "d_delta", "ok"],
        rows=rows,
        agg_columns=sorted({k for a in aggregates for k in a}),
        aggregates=aggregates,
        assertions=assertions,
        passed=all(a.passed for a in assertions),
        wall_clock_s=time.perf_counter() - start,
    )


SUITES = {
    "realizable": run_realizable,
    "agnostic": run_agnostic,
    "model1": run_model1,
    "model2": run_model2,
    "double-sampling": run_double_sampling,
    "hoeffding": run_hoeffding,
    "derand-classifier": run_derand_classifier,
    "derand-certifier": run_derand_certifier,
    "smoothing": run_smoothing,
}


def run_suite(cfg: ExperimentConfig) -> ExperimentReport:
    try:
        runner = SUITES[cfg.kind]
    except KeyError:
        raise ConfigError(f"unknown suite kind {cfg.kind!r}") from None
    return runner(cfg)
