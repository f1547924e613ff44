"""Corruption cost functions with budgets, feasibility predicates, and checks.

A noise model is a cost function rho between distributions plus a budget eta.
An oblivious adversary may move the data distribution D to any Dhat with
rho(D, Dhat) <= eta; an adaptive adversary may replace a drawn sample S by any
Shat with rho(U(S), U(Shat)) <= eta.

Models implemented:

* additive       -- Dhat = (1-eta') D + eta' E; cost is the smallest such eta'.
                    Adaptively: append floor(n*eta/(1-eta)) arbitrary points.
* subtractive    -- additive with the arguments swapped (point removal).
* nasty          -- arbitrary replacement; cost is TV distance.
* nasty_classification -- label-only replacement on a product domain X x Y;
                    infinite cost when the X-marginals differ.
* malicious_encoded -- per-point replacement with budget eta, encoded on a
                    domain augmented with a placeholder element (the LAST id);
                    cost is 0 when Dhat has no placeholder mass and dominates
                    the encoded source pointwise, infinity otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import (ATOL, DiscreteDistribution, Domain, DomainMismatchError,
                   RngLike, SampleMultiset, as_generator, sample_iid_ordered,
                   tolerant_floor, tv_distance, uniform_of)

# Slack added to every budget comparison; feasibility itself is exact.
BUDGET_SLACK = 1e-12


class NoiseKind(str, Enum):
    ADDITIVE = "additive"
    SUBTRACTIVE = "subtractive"
    NASTY = "nasty"
    NASTY_CLASSIFICATION = "nasty_classification"
    MALICIOUS_ENCODED = "malicious_encoded"


@dataclass(frozen=True)
class NoiseModel:
    """A cost function kind with corruption budget eta.

    ``label_split = (x_size, y_size)`` factors the domain as X x Y for the
    classification model, with element id = x * y_size + y.
    """

    kind: NoiseKind
    eta: float
    label_split: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"budget eta={self.eta} outside [0, 1)")
        if self.kind is NoiseKind.NASTY_CLASSIFICATION and self.label_split is None:
            raise ValueError("nasty_classification requires a label_split (x_size, y_size)")

    @property
    def locality(self) -> float:
        """TV inflation factor: nearby base distributions admit corruptions at
        TV distance at most ``locality`` times the base TV, at equal cost."""
        if self.kind is NoiseKind.SUBTRACTIVE:
            return 1.0 / (1.0 - self.eta)
        return 1.0

    def additions_allowed(self, n: int) -> int:
        """Points an adaptive additive adversary may append to a size-n sample."""
        return tolerant_floor(n * self.eta / (1.0 - self.eta))

    def replacements_allowed(self, n: int) -> int:
        """Points an adaptive nasty/subtractive adversary may change or remove."""
        return tolerant_floor(self.eta * n)


def additive(eta: float) -> NoiseModel:
    return NoiseModel(NoiseKind.ADDITIVE, eta)


def subtractive(eta: float) -> NoiseModel:
    return NoiseModel(NoiseKind.SUBTRACTIVE, eta)


def nasty(eta: float) -> NoiseModel:
    return NoiseModel(NoiseKind.NASTY, eta)


def nasty_classification(eta: float, x_size: int, y_size: int) -> NoiseModel:
    return NoiseModel(NoiseKind.NASTY_CLASSIFICATION, eta, (x_size, y_size))


def malicious_encoded(eta: float) -> NoiseModel:
    return NoiseModel(NoiseKind.MALICIOUS_ENCODED, eta)


def model_from_config(config: dict) -> NoiseModel:
    """Build a model from a config mapping like {"kind": "additive", "eta": 0.1}."""
    kind = NoiseKind(config["kind"])
    eta = float(config["eta"])
    if kind is NoiseKind.NASTY_CLASSIFICATION:
        return nasty_classification(eta, int(config["x_size"]), int(config["y_size"]))
    return NoiseModel(kind, eta)


def _cost_additive(d: np.ndarray, dhat: np.ndarray) -> float:
    # Smallest eta' admitting dhat = (1-eta') d + eta' E, i.e. 1 minus the
    # minimum ratio dhat(x)/d(x) over the support of d.  Closed form, O(|X|).
    supp = d > 0
    ratio = float(np.min(dhat[supp] / d[supp]))
    return float(min(1.0, max(0.0, 1.0 - ratio)))


def _x_marginal(w: np.ndarray, split: tuple[int, int]) -> np.ndarray:
    x_size, y_size = split
    return w.reshape(x_size, y_size).sum(axis=1)


def cost(model: NoiseModel, d: DiscreteDistribution,
         dhat: DiscreteDistribution) -> float:
    """The corruption cost rho(d, dhat); may be ``math.inf``."""
    if d.domain != dhat.domain:
        raise DomainMismatchError("cost requires distributions on one domain")
    w, what = d.weights, dhat.weights
    if model.kind is NoiseKind.ADDITIVE:
        return _cost_additive(w, what)
    if model.kind is NoiseKind.SUBTRACTIVE:
        return _cost_additive(what, w)
    if model.kind is NoiseKind.NASTY:
        return tv_distance(d, dhat)
    if model.kind is NoiseKind.NASTY_CLASSIFICATION:
        split = model.label_split
        if split[0] * split[1] != d.domain.size:
            raise ValueError("label_split does not factor the domain")
        gap = np.abs(_x_marginal(w, split) - _x_marginal(what, split)).sum()
        if gap > 1e-9:
            return math.inf
        return tv_distance(d, dhat)
    if model.kind is NoiseKind.MALICIOUS_ENCODED:
        # Placeholder element is the last id of the augmented domain.
        if what[-1] > ATOL:
            return math.inf
        if (what[:-1] < w[:-1] - ATOL).any():
            return math.inf
        return 0.0
    raise AssertionError(f"unhandled kind {model.kind}")


def encode_malicious_source(d: DiscreteDistribution, eta: float) -> DiscreteDistribution:
    """Lift D over X to (1-eta) D + eta * placeholder over X u {placeholder}."""
    aug = Domain(d.domain.size + 1, name=d.domain.name + "+placeholder")
    w = np.append((1.0 - eta) * d.weights, eta)
    return DiscreteDistribution(aug, w)


def feasible(model: NoiseModel, d: DiscreteDistribution,
             dhat: DiscreteDistribution) -> bool:
    return cost(model, d, dhat) <= model.eta + BUDGET_SLACK


def adaptive_feasible(model: NoiseModel, s: SampleMultiset,
                      shat: SampleMultiset) -> bool:
    """Whether shat is an allowed adaptive corruption of s (cost at budget)."""
    if s.size == 0:
        raise ValueError("adaptive feasibility needs a nonempty clean sample")
    return feasible(model, uniform_of(s), uniform_of(shat))


# ---------------------------------------------------------------------------
# Extremal query values over the feasible corruption set
# ---------------------------------------------------------------------------

def feasible_query_interval(model: NoiseModel, d: DiscreteDistribution,
                            phi: np.ndarray) -> tuple[float, float]:
    """The exact interval {E_{x~Dhat}[phi(x)] : cost(d, Dhat) <= eta}.

    The feasible corruption set is convex for these models, so the image of a
    linear functional is a closed interval; both endpoints have closed or
    greedy forms.  Supported: additive, nasty, subtractive.
    """
    phi = np.asarray(phi, dtype=np.float64)
    eta = model.eta
    base = float(phi @ d.weights)
    if model.kind is NoiseKind.ADDITIVE:
        # Dhat = (1-eta') D + eta' E; extremes put E on the arg-extreme of phi.
        return ((1 - eta) * base + eta * float(phi.min()),
                (1 - eta) * base + eta * float(phi.max()))
    if model.kind is NoiseKind.NASTY:
        return (_tv_ball_extreme(d.weights, phi, eta, maximize=False),
                _tv_ball_extreme(d.weights, phi, eta, maximize=True))
    if model.kind is NoiseKind.SUBTRACTIVE:
        return (_capped_extreme(d.weights, phi, eta, maximize=False),
                _capped_extreme(d.weights, phi, eta, maximize=True))
    raise ValueError(f"no exact query interval for {model.kind}")


def _tv_ball_extreme(w: np.ndarray, phi: np.ndarray, eta: float,
                     maximize: bool) -> float:
    # Greedy mass transport inside the TV ball: move up to eta mass from the
    # worst-phi elements onto the single best-phi element.
    order = np.argsort(phi) if maximize else np.argsort(-phi)
    target = int(np.argmax(phi)) if maximize else int(np.argmin(phi))
    budget = eta
    value = float(phi @ w)
    for x in order:
        if x == target or budget <= 0:
            continue
        moved = min(budget, float(w[x]))
        value += moved * (phi[target] - phi[x])
        budget -= moved
    return value


def _capped_extreme(w: np.ndarray, phi: np.ndarray, eta: float,
                    maximize: bool) -> float:
    # Feasible Dhat are exactly those with Dhat(x) <= D(x)/(1-eta) pointwise;
    # the extreme fills caps greedily from the best phi downward.
    caps = w / (1.0 - eta)
    order = np.argsort(-phi) if maximize else np.argsort(phi)
    remaining = 1.0
    value = 0.0
    for x in order:
        take = min(caps[x], remaining)
        value += take * phi[x]
        remaining -= take
        if remaining <= 1e-15:
            break
    return float(value)


# ---------------------------------------------------------------------------
# Corruption enumeration (micro instances)
# ---------------------------------------------------------------------------

def enumerate_corruptions(model: NoiseModel, s: SampleMultiset,
                          max_results: int = 200_000) -> list[SampleMultiset]:
    """All corrupted multisets under the model's point-count convention.

    Additive: append at most floor(n*eta/(1-eta)) points; nasty: change at
    most floor(eta*n) points keeping the size; subtractive: remove at most
    floor(eta*n) points.  These enumerations realize the standard adversaries;
    the budget predicate ``adaptive_feasible`` is weakly more permissive.
    """
    n, k = s.size, s.domain.size
    if n == 0:
        raise ValueError("cannot corrupt an empty sample")
    out: list[SampleMultiset] = []
    if model.kind is NoiseKind.ADDITIVE:
        cap = model.additions_allowed(n)
        for total in range(cap + 1):
            for extra in _compositions(total, k):
                out.append(SampleMultiset(s.domain, s.counts + np.array(extra)))
                if len(out) > max_results:
                    raise ValueError("corruption enumeration too large")
    elif model.kind in (NoiseKind.NASTY, NoiseKind.NASTY_CLASSIFICATION):
        cap = model.replacements_allowed(n)
        for counts in _compositions(n, k):
            c = np.array(counts)
            changed = int(np.maximum(s.counts - c, 0).sum())
            if changed <= cap:
                if model.kind is NoiseKind.NASTY_CLASSIFICATION:
                    split = model.label_split
                    sx = s.counts.reshape(split).sum(axis=1)
                    cx = c.reshape(split).sum(axis=1)
                    if not np.array_equal(sx, cx):
                        continue
                out.append(SampleMultiset(s.domain, c))
                if len(out) > max_results:
                    raise ValueError("corruption enumeration too large")
    elif model.kind is NoiseKind.SUBTRACTIVE:
        cap = model.replacements_allowed(n)
        for removed_total in range(cap + 1):
            for removal in _compositions(removed_total, k):
                r = np.array(removal)
                if (r <= s.counts).all() and removed_total < n:
                    out.append(SampleMultiset(s.domain, s.counts - r))
                    if len(out) > max_results:
                        raise ValueError("corruption enumeration too large")
    else:
        raise ValueError(f"no enumeration for {model.kind}")
    # dedupe (compositions can revisit the same multiset via different paths)
    seen = {}
    for m in out:
        seen[m.counts.tobytes()] = m
    return list(seen.values())


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Closure under mixtures
# ---------------------------------------------------------------------------

@dataclass
class MixtureClosureReport:
    kind: NoiseKind
    trials: int
    violations: int
    max_violation: float
    worst_case: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_closed_under_mixtures(model: NoiseModel, trials: int,
                                 rng: RngLike, domain_size: int = 6) -> MixtureClosureReport:
    """Sample random tuples (theta, D1, D2, Dhat1, Dhat2) and check

        rho(theta D1 + (1-theta) D2, theta Dhat1 + (1-theta) Dhat2)
            <= max(rho(D1, Dhat1), rho(D2, Dhat2)).

    Pairs are drawn so that a non-trivial share has finite cost (for the
    models whose cost is usually infinite on random pairs).  Violations are
    counted at tolerance 1e-9; the report carries the worst case found.
    """
    if domain_size > 8:
        raise ValueError("brute-force regime is domain_size <= 8")
    gen = as_generator(rng)
    if model.kind is NoiseKind.NASTY_CLASSIFICATION:
        split = model.label_split
        if split[0] * split[1] > 8:
            raise ValueError("label_split too large for the brute-force regime")
        domain_size = split[0] * split[1]

    theta = gen.uniform(size=trials)[:, None]
    d1 = gen.dirichlet(np.ones(domain_size), size=trials)
    d2 = gen.dirichlet(np.ones(domain_size), size=trials)
    dh1 = _random_partners(model, d1, gen)
    dh2 = _random_partners(model, d2, gen)

    lhs = _batch_costs(model, theta * d1 + (1 - theta) * d2,
                       theta * dh1 + (1 - theta) * dh2)
    rhs = np.maximum(_batch_costs(model, d1, dh1), _batch_costs(model, d2, dh2))
    theta = theta[:, 0]

    # rhs = inf makes the inequality vacuous; otherwise gap = lhs - rhs must
    # be <= 0 (an infinite lhs against finite rhs is a genuine violation).
    finite = np.isfinite(rhs)
    gap = np.full(trials, -math.inf)
    gap[finite] = lhs[finite] - rhs[finite]
    violations = int((gap > 1e-9).sum())
    max_violation = float(np.max(gap[finite], initial=-math.inf))
    worst = None
    if trials and finite.any():
        i = int(np.argmax(gap))
        worst = {"theta": float(theta[i]), "d1": d1[i].tolist(), "d2": d2[i].tolist(),
                 "dhat1": dh1[i].tolist(), "dhat2": dh2[i].tolist(),
                 "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return MixtureClosureReport(model.kind, trials, violations, max_violation, worst)


def _batch_costs(model: NoiseModel, d: np.ndarray, dhat: np.ndarray) -> np.ndarray:
    """Row-wise ``cost`` over (trials, |X|) weight matrices."""
    if model.kind is NoiseKind.SUBTRACTIVE:
        d, dhat = dhat, d
    if model.kind in (NoiseKind.ADDITIVE, NoiseKind.SUBTRACTIVE):
        ratio = np.divide(dhat, d, out=np.full_like(d, np.inf), where=d > 0)
        return np.clip(1.0 - ratio.min(axis=1), 0.0, 1.0)
    if model.kind is NoiseKind.NASTY:
        return 0.5 * np.abs(d - dhat).sum(axis=1)
    if model.kind is NoiseKind.NASTY_CLASSIFICATION:
        x_size, y_size = model.label_split
        trials = d.shape[0]
        gap = np.abs(d.reshape(trials, x_size, y_size).sum(axis=2)
                     - dhat.reshape(trials, x_size, y_size).sum(axis=2)).sum(axis=1)
        tv = 0.5 * np.abs(d - dhat).sum(axis=1)
        return np.where(gap > 1e-9, np.inf, tv)
    if model.kind is NoiseKind.MALICIOUS_ENCODED:
        bad = (dhat[:, -1] > ATOL) | (dhat[:, :-1] < d[:, :-1] - ATOL).any(axis=1)
        return np.where(bad, np.inf, 0.0)
    raise AssertionError(model.kind)


def _random_partners(model: NoiseModel, base: np.ndarray,
                     gen: np.random.Generator) -> np.ndarray:
    """Random Dhat rows; for mostly-infinite-cost models, draw feasible ones."""
    trials, k = base.shape
    if model.kind in (NoiseKind.ADDITIVE, NoiseKind.SUBTRACTIVE, NoiseKind.NASTY):
        # Arbitrary pairs already have finite cost; mix in feasible ones so
        # both low-cost and high-cost regions are exercised.
        arbitrary = gen.dirichlet(np.ones(k), size=trials)
        etas = gen.uniform(0, 1, size=(trials, 1)) * max(model.eta, 0.5)
        contam = gen.dirichlet(np.ones(k), size=trials)
        feasible_rows = (1 - etas) * base + etas * contam
        pick = gen.uniform(size=(trials, 1)) < 0.5
        return np.where(pick, feasible_rows, arbitrary)
    if model.kind is NoiseKind.NASTY_CLASSIFICATION:
        x_size, y_size = model.label_split
        marg = base.reshape(trials, x_size, y_size).sum(axis=2)
        labels = gen.dirichlet(np.ones(y_size), size=(trials, x_size))
        same_marginal = (marg[:, :, None] * labels).reshape(trials, x_size * y_size)
        mismatched = gen.dirichlet(np.ones(x_size * y_size), size=trials)
        pick = gen.uniform(size=(trials, 1)) < 0.85
        return np.where(pick, same_marginal, mismatched)
    if model.kind is NoiseKind.MALICIOUS_ENCODED:
        # base rows are on the augmented domain; rebuild them with placeholder
        # mass and pair with dominating corruptions (cost 0) or arbitrary rows.
        redistribute = gen.dirichlet(np.ones(k - 1), size=trials)
        dominated = base.copy()
        dominated[:, :-1] += base[:, -1:] * redistribute
        dominated[:, -1] = 0.0
        arbitrary = gen.dirichlet(np.ones(k), size=trials)
        pick = gen.uniform(size=(trials, 1)) < 0.7
        return np.where(pick, dominated, arbitrary)
    raise AssertionError(model.kind)


# ---------------------------------------------------------------------------
# Lifting an adaptive attack to an oblivious corruption
# ---------------------------------------------------------------------------

def lift_adaptive_to_oblivious(model: NoiseModel, d: DiscreteDistribution, n: int,
                               attack, rng: RngLike, mode: str = "auto",
                               mc_trials: int = 100_000) -> DiscreteDistribution:
    """The distribution of: draw S ~ D^n, corrupt S to Shat, draw x ~ U(Shat).

    In enumeration mode (|X|^n small) the result is exact and the closure
    property guarantees cost(D, Dhat) <= eta, which is asserted.  In Monte
    Carlo mode the result is the empirical distribution over ``mc_trials``
    runs of the two-step process.

    ``attack`` is an adaptive strategy object with ``corrupt(s, model, rng)``.
    Raises if the attack emits an infeasible corruption.
    """
    k = d.domain.size
    if mode == "auto":
        mode = "enumerate" if k ** n <= 1_000_000 else "monte_carlo"
    gen = as_generator(rng)
    if mode == "enumerate":
        weights = np.zeros(k)
        for tup in itertools.product(range(k), repeat=n):
            p = float(np.prod(d.weights[list(tup)]))
            if p == 0.0:
                continue
            s = SampleMultiset.from_elements(d.domain, tup)
            shat = attack.corrupt(s, model, gen)
            if not adaptive_feasible(model, s, shat):
                raise ValueError(f"attack produced infeasible corruption of {tup}")
            weights += p * uniform_of(shat).weights
        dhat = DiscreteDistribution(d.domain, weights)
        c = cost(model, d, dhat)
        if c > model.eta + 1e-9:
            raise AssertionError(
                f"lifted corruption has cost {c} > eta={model.eta}; "
                "closure under mixtures violated")
        return dhat
    if mode == "monte_carlo":
        counts = np.zeros(k, dtype=np.int64)
        for t in range(mc_trials):
            s_elems = sample_iid_ordered(d, n, gen)
            s = SampleMultiset.from_elements(d.domain, s_elems)
            shat = attack.corrupt(s, model, gen)
            if not adaptive_feasible(model, s, shat):
                raise ValueError("attack produced infeasible corruption")
            x = gen.choice(k, p=uniform_of(shat).weights)
            counts[x] += 1
        return DiscreteDistribution(d.domain, counts / mc_trials)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Model-specific structural checks used by the test-suite
# ---------------------------------------------------------------------------

def additive_locality_witness(d: DiscreteDistribution, e: DiscreteDistribution,
                              dhat: DiscreteDistribution) -> DiscreteDistribution:
    """An Ehat with cost_add(E, Ehat) <= cost_add(D, Dhat) and
    tv(Dhat, Ehat) <= tv(D, E): apply D's contamination to E.
    """
    eta = _cost_additive(d.weights, dhat.weights)
    if eta <= 0.0:
        return e
    residual = (dhat.weights - (1.0 - eta) * d.weights) / eta
    residual = np.clip(residual, 0.0, None)
    residual /= residual.sum()
    return DiscreteDistribution(d.domain, (1.0 - eta) * e.weights + eta * residual)


def malicious_feasible_equals_mixtures(d: DiscreteDistribution, eta: float,
                                       grid_steps: int = 12) -> bool:
    """On a tiny domain, enumerate a simplex grid over the augmented domain
    and confirm: finite malicious cost from the encoded source holds exactly
    for the additive mixtures (1-eta) D + eta E (with no placeholder mass).
    """
    model = malicious_encoded(eta)
    encoded = encode_malicious_source(d, eta)
    aug = encoded.domain
    for counts in _compositions(grid_steps, aug.size):
        w = np.array(counts, dtype=np.float64) / grid_steps
        cand = DiscreteDistribution(aug, w)
        is_feasible = math.isfinite(cost(model, encoded, cand))
        # mixture form: no placeholder mass and w >= (1-eta) d pointwise
        is_mixture = (w[-1] <= ATOL
                      and (w[:-1] >= (1.0 - eta) * d.weights - 1e-9).all())
        if is_feasible != is_mixture:
            return False
    return True
