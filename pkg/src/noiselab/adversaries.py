"""Concrete oblivious and adaptive corruption strategies.

Single-query attacks are exact optimizers within their point-count budget;
multi-query attacks are greedy heuristics.  A strong adaptive strategy runs
an ordinary adaptive attack and then applies a small random perturbation
whose TV tail is sub-Gaussian in the sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (DiscreteDistribution, RngLike, SampleMultiset, as_generator,
                   mixture, tolerant_floor, tv_distance, uniform_of)
from .noise_models import (NoiseKind, NoiseModel, adaptive_feasible,
                           enumerate_corruptions)
from .sq_engine import StatisticalQuery


@dataclass(frozen=True)
class ObliviousStrategy:
    """Maps (clean distribution, model) to a feasible corrupted distribution."""

    name: str
    produce: Callable[[DiscreteDistribution, NoiseModel], DiscreteDistribution]


@dataclass(frozen=True)
class AdaptiveStrategy:
    """Maps (clean sample, model, rng) to a feasible corrupted sample."""

    name: str
    corrupt: Callable[[SampleMultiset, NoiseModel, Optional[np.random.Generator]],
                      SampleMultiset]


def identity_oblivious() -> ObliviousStrategy:
    return ObliviousStrategy("identity", lambda d, model: d)


def mixing_oblivious(contaminant: DiscreteDistribution) -> ObliviousStrategy:
    """Huber-style corruption (1-eta) D + eta E for a fixed E."""
    return ObliviousStrategy(
        f"mix({contaminant.weights.tolist()})",
        lambda d, model: mixture(1.0 - model.eta, d, contaminant))


def identity_adaptive() -> AdaptiveStrategy:
    return AdaptiveStrategy("identity", lambda s, model, rng: s)


def additive_point_mass_attack(element: int) -> AdaptiveStrategy:
    """Append the full addition budget as copies of one fixed element."""
    def corrupt(s, model, rng):
        extra = model.additions_allowed(s.size)
        return s.add(element, extra) if extra else s
    return AdaptiveStrategy(f"additive_point_mass({element})", corrupt)


def _arg_extreme(values: np.ndarray, maximize: bool) -> int:
    # ties broken by lowest element id (argmax/argmin already do this)
    return int(np.argmax(values)) if maximize else int(np.argmin(values))


def additive_single_query_attack(s: SampleMultiset, eta: float,
                                 psi: StatisticalQuery,
                                 direction: str = "max") -> SampleMultiset:
    """Exact optimizer of psi(U(Shat)) over corruptions appending at most
    floor(|s| * eta / (1 - eta)) points: append them all at the arg-extreme
    of psi.  With eta = 0 the sample is returned unchanged.
    """
    if s.size == 0:
        raise ValueError("cannot attack an empty sample")
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    extra = tolerant_floor(s.size * eta / (1.0 - eta))
    if extra == 0:
        return s
    target = _arg_extreme(psi.values, direction == "max")
    return s.add(target, extra)


def _replace_toward_target(s: SampleMultiset, budget: int, target: int,
                           removal_order: np.ndarray) -> SampleMultiset:
    counts = s.counts.copy()
    removed = 0
    for x in removal_order:
        if x == target:
            continue
        take = min(budget - removed, int(counts[x]))
        counts[x] -= take
        removed += take
        if removed == budget:
            break
    counts[target] += removed
    return SampleMultiset(s.domain, counts)


def nasty_single_query_attack(s: SampleMultiset, eta: float,
                              psi: StatisticalQuery,
                              direction: str = "max") -> SampleMultiset:
    """Exact optimizer of psi(U(Shat)) over replacements of at most
    floor(eta * |s|) points: replace the worst-psi points by copies of the
    arg-extreme of psi.
    """
    if s.size == 0:
        raise ValueError("cannot attack an empty sample")
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    budget = tolerant_floor(eta * s.size)
    return _nasty_query_attack_with_budget(s, budget, psi, direction)


def _nasty_query_attack_with_budget(s, budget, psi, direction):
    if budget == 0:
        return s
    maximize = direction == "max"
    values = psi.values
    target = _arg_extreme(values, maximize)
    # remove from the element with the worst query value first; ties by id
    order = np.lexsort((np.arange(len(values)),
                        values if maximize else -values))
    return _replace_toward_target(s, budget, target, order)


def nasty_point_mass_attack(element: int) -> AdaptiveStrategy:
    """Replace the full replacement budget with copies of one fixed element,
    removing from the lowest ids first."""
    def corrupt(s, model, rng):
        budget = model.replacements_allowed(s.size)
        return _replace_toward_target(s, budget, element,
                                      np.arange(s.domain.size))
    return AdaptiveStrategy(f"nasty_swap({element})", corrupt)


def random_budget_wrap(eta: float, flavor: str,
                       psi: StatisticalQuery,
                       direction: str = "max") -> AdaptiveStrategy:
    """The random-budget variant: the number of changed (or added) points is
    drawn as Binomial(n, eta) instead of being fixed at the floor budget.

    Deliberately stronger than the fixed-budget adversary: roughly half the
    time the draw exceeds floor(eta * n), so outputs need not satisfy the
    fixed-budget feasibility predicate.
    """
    if flavor not in ("additive", "nasty"):
        raise ValueError("flavor must be 'additive' or 'nasty'")

    def corrupt(s, model, rng):
        gen = as_generator(rng)
        budget = int(gen.binomial(s.size, eta))
        if flavor == "nasty":
            return _nasty_query_attack_with_budget(s, budget, psi, direction)
        if budget == 0:
            return s
        target = _arg_extreme(psi.values, direction == "max")
        return s.add(target, budget)

    return AdaptiveStrategy(f"random_budget_{flavor}_{direction}", corrupt)


def single_query_attack_strategy(psi: StatisticalQuery, direction: str = "max",
                                 flavor: str = "additive") -> AdaptiveStrategy:
    """Wrap a single-query attack as a reusable strategy."""
    if flavor == "additive":
        def corrupt(s, model, rng):
            return additive_single_query_attack(s, model.eta, psi, direction)
    elif flavor == "nasty":
        def corrupt(s, model, rng):
            return nasty_single_query_attack(s, model.eta, psi, direction)
    else:
        raise ValueError("flavor must be 'additive' or 'nasty'")
    return AdaptiveStrategy(f"{flavor}_query_{direction}", corrupt)


def table_attack(mapping: dict, name: str = "table") -> AdaptiveStrategy:
    """An attack given by an explicit lookup table keyed by counts tuples."""
    def corrupt(s, model, rng):
        return mapping[tuple(s.counts.tolist())]
    return AdaptiveStrategy(name, corrupt)


def attack_by_name(name: str, **kwargs) -> AdaptiveStrategy:
    """Look up the named attack used in experiment configs.

    Known names: ``identity``, ``additive_point_mass`` (kwarg: element),
    ``nasty_swap`` (kwarg: element).  The hypercube cluster attack lives in
    the lower-bound module and is selected there as ``cluster_majority``.
    """
    if name == "identity":
        return identity_adaptive()
    if name == "additive_point_mass":
        return additive_point_mass_attack(int(kwargs.get("element", 0)))
    if name == "nasty_swap":
        return nasty_point_mass_attack(int(kwargs.get("element", 0)))
    raise ValueError(f"unknown attack name {name!r}")


def greedy_objective_attack(objective: Callable[[SampleMultiset], float],
                            direction: str = "max",
                            restarts: int = 3) -> AdaptiveStrategy:
    """Heuristic multi-query attack: greedy coordinate steps over which points
    to add (additive) or swap (nasty), restarted from shuffled step orders.
    Only single-query attacks carry optimality guarantees.
    """
    sign = 1.0 if direction == "max" else -1.0

    def corrupt(s, model, rng):
        gen = as_generator(rng) if rng is not None else np.random.default_rng(0)
        k = s.domain.size
        if model.kind is NoiseKind.ADDITIVE:
            budget = model.additions_allowed(s.size)
            step_choices = list(range(k))
        elif model.kind is NoiseKind.NASTY:
            budget = model.replacements_allowed(s.size)
            step_choices = [(i, j) for i in range(k) for j in range(k) if i != j]
        else:
            raise ValueError("greedy attack supports additive and nasty models")
        best, best_val = s, sign * objective(s)
        for _ in range(restarts):
            cur, cur_val = s, sign * objective(s)
            for _ in range(budget):
                order = gen.permutation(len(step_choices))
                improved = False
                for idx in order:
                    choice = step_choices[idx]
                    if model.kind is NoiseKind.ADDITIVE:
                        cand = cur.add(choice)
                    else:
                        i, j = choice
                        if cur.counts[i] == 0:
                            continue
                        counts = cur.counts.copy()
                        counts[i] -= 1
                        counts[j] += 1
                        cand = SampleMultiset(s.domain, counts)
                    if not adaptive_feasible(model, s, cand):
                        continue
                    val = sign * objective(cand)
                    if val > cur_val + 1e-15:
                        cur, cur_val = cand, val
                        improved = True
                        break
                if not improved:
                    break
            if cur_val > best_val:
                best, best_val = cur, cur_val
        return best

    return AdaptiveStrategy(f"greedy_{direction}", corrupt)


def exhaustive_best_corruption(s: SampleMultiset, model: NoiseModel,
                               objective: Callable[[SampleMultiset], float],
                               direction: str = "max") -> SampleMultiset:
    """Brute-force optimum over the enumerated corruption set (micro only)."""
    sign = 1.0 if direction == "max" else -1.0
    best, best_val = None, -math.inf
    for cand in enumerate_corruptions(model, s):
        val = sign * objective(cand)
        if val > best_val:
            best, best_val = cand, val
    return best


# ---------------------------------------------------------------------------
# Strong adaptive adversary: adaptive attack + small random perturbation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrongAdaptiveStrategy:
    """Two-stage corruption: a base adaptive attack producing Shat, then a
    random perturbation to Shat' that resamples a Binomial(n, c/sqrt(n))-sized
    subset of Shat's points i.i.d. from U(Shat).

    The perturbation keeps E[tv(U(Shat), U(Shat'))] <= c/sqrt(n) and its tail
    decays like exp(-Theta(n t^2)); the profile constant c is a knob.
    """

    base: AdaptiveStrategy
    n: int
    c: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("profile constant c must be positive")

    def corrupt_two_stage(self, s, model, rng):
        gen = as_generator(rng)
        shat = self.base.corrupt(s, model, gen)
        rate = min(1.0, self.c / math.sqrt(self.n))
        m = shat.size
        changed = int(gen.binomial(self.n, rate))
        changed = min(changed, m)
        if changed == 0:
            return shat, shat
        u = uniform_of(shat)
        removed = gen.multivariate_hypergeometric(shat.counts, changed)
        added = gen.multinomial(changed, u.weights)
        counts = shat.counts - removed + added
        return shat, SampleMultiset(shat.domain, counts)

    def corrupt(self, s, model, rng):
        return self.corrupt_two_stage(s, model, rng)[1]

    @property
    def name(self):
        return f"strong({self.base.name}, c={self.c})"


def strong_adaptive_wrap(base: AdaptiveStrategy, n: int,
                         c: float) -> StrongAdaptiveStrategy:
    return StrongAdaptiveStrategy(base, n, c)


def perturbation_tail_profile(n: int, c: float, t: float) -> float:
    """Configured tail bound exp(-n t^2 / (8 c^2)) for the second stage."""
    return math.exp(-n * t * t / (8.0 * c * c))


def perturbation_tv_samples(strategy: StrongAdaptiveStrategy,
                            d: DiscreteDistribution, model: NoiseModel,
                            trials: int, rng: RngLike) -> np.ndarray:
    """Monte Carlo draws of tv(U(Shat), U(Shat')) for profile checks."""
    gen = as_generator(rng)
    out = np.empty(trials)
    for i in range(trials):
        counts = gen.multinomial(strategy.n, d.weights)
        s = SampleMultiset(d.domain, counts)
        shat, shat2 = strategy.corrupt_two_stage(s, model, gen)
        out[i] = tv_distance(uniform_of(shat), uniform_of(shat2))
    return out
