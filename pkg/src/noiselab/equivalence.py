"""Extremal acceptance probabilities under the two adversary regimes.

For a black-box decision algorithm A, the four quantities of interest are the
sup/inf of its acceptance probability over feasible oblivious corruptions of
the data distribution, and the expected sup/inf over feasible adaptive
corruptions of a drawn sample.  The two regimes are called (n, m, eps)-
equivalent when the max and min agree within eps across them, for the given
sample sizes.

Micro instances (|X| = 2, pair-sized inputs, additive noise) admit exact
closed forms; everything else is estimated by Monte Carlo search over
explicit corruption families, which the reports label as such.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import binom

from .adversaries import (AdaptiveStrategy, additive_point_mass_attack,
                          identity_adaptive)
from .core import (DiscreteDistribution, Domain, RngLike, SampleMultiset,
                   as_generator, sample_iid)
from .noise_models import NoiseKind, NoiseModel, enumerate_corruptions
from .subsampling import SubsampleFilter, WrappedAlgorithm, subsample


# ---------------------------------------------------------------------------
# Black-box algorithms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlackBoxAlgorithm:
    """A decision procedure on sample multisets.

    ``decide(s, rng)`` must return 0 or 1 and be deterministic given the
    supplied generator; ``n`` records the intended input size (informative,
    not enforced).  ``ordered_table`` is set on algorithms defined over
    ordered pairs; multiset inputs are presented to the table in a uniformly
    random order, which leaves all acceptance probabilities unchanged.
    """

    name: str
    decide: Callable[[SampleMultiset, Optional[np.random.Generator]], int]
    n: int = 0
    ordered_table: Optional[tuple] = None

    @classmethod
    def constant(cls, bit: int) -> "BlackBoxAlgorithm":
        return cls(f"const{bit}", lambda s, rng: bit)

    @classmethod
    def from_counts_predicate(cls, name: str,
                              predicate: Callable[[np.ndarray, int], bool],
                              n: int = 0) -> "BlackBoxAlgorithm":
        return cls(name, lambda s, rng: int(predicate(s.counts, s.size)), n)

    @classmethod
    def from_ordered_pair_table(cls, table: Sequence[int]) -> "BlackBoxAlgorithm":
        """A deterministic rule on ordered pairs over a two-element domain;
        table = (t00, t01, t10, t11) indexed by (x1, x2)."""
        t = tuple(int(b) for b in table)
        if len(t) != 4:
            raise ValueError("pair table has four entries")

        def decide(s, rng):
            if s.size != 2:
                raise ValueError("pair algorithm expects exactly two points")
            elems = s.elements()
            if rng is not None and elems[0] != elems[1]:
                gen = as_generator(rng)
                if gen.integers(0, 2):
                    elems = elems[::-1]
            return t[2 * elems[0] + elems[1]]

        return cls(f"pair{''.join(map(str, t))}", decide, n=2, ordered_table=t)


def indicator_adapter(search_algorithm: Callable[[SampleMultiset], object],
                      good_outputs) -> BlackBoxAlgorithm:
    """Turn a search algorithm into a decision one: accept iff its output
    lands in the good set."""
    good = set(good_outputs)
    return BlackBoxAlgorithm("indicator", lambda s, rng: int(search_algorithm(s) in good))


def acceptance_probability(alg, d: DiscreteDistribution, n: int, trials: int,
                           rng: RngLike) -> float:
    """Monte Carlo acceptance rate of alg on size-n i.i.d. samples from d."""
    gen = as_generator(rng)
    hits = 0
    for _ in range(trials):
        s = sample_iid(d, n, gen)
        hits += alg.decide(s, gen)
    return hits / trials


# ---------------------------------------------------------------------------
# Stochastic maps and the additive corruption family
# ---------------------------------------------------------------------------

class StochasticMap:
    """A per-element output distribution (a row-stochastic kernel)."""

    __slots__ = ("domain", "kernel", "label")

    def __init__(self, domain: Domain, kernel, label: str = ""):
        k = np.asarray(kernel, dtype=np.float64)
        if k.shape != (domain.size, domain.size):
            raise ValueError("kernel must be square over the domain")
        if not np.isfinite(k).all():
            raise ValueError("kernel entries must be finite")
        if (k < -1e-12).any() or (np.abs(k.sum(axis=1) - 1.0) > 1e-9).any():
            raise ValueError("kernel rows must be distributions")
        k = np.clip(k, 0.0, None)
        k /= k.sum(axis=1, keepdims=True)
        k.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("StochasticMap is immutable")

    @classmethod
    def identity(cls, domain: Domain) -> "StochasticMap":
        return cls(domain, np.eye(domain.size), "identity")

    @classmethod
    def keep_or_resample(cls, domain: Domain, eta: float,
                         resample: DiscreteDistribution,
                         label: str = "") -> "StochasticMap":
        """Keep the input with probability 1 - eta, else draw from
        ``resample``.  Composing with any D gives (1-eta) D + eta resample."""
        kernel = ((1.0 - eta) * np.eye(domain.size)
                  + eta * np.tile(resample.weights, (domain.size, 1)))
        return cls(domain, kernel, label or f"keep_or_resample(eta={eta})")

    def pushforward(self, d: DiscreteDistribution) -> DiscreteDistribution:
        """The exact law of f(x), x ~ d."""
        return DiscreteDistribution(self.domain, d.weights @ self.kernel)


def apply_stochastic(f: StochasticMap, s: SampleMultiset,
                     rng: RngLike) -> SampleMultiset:
    """Apply f element-wise and independently to the multiset."""
    gen = as_generator(rng)
    out = np.zeros(f.domain.size, dtype=np.int64)
    for x in range(f.domain.size):
        c = int(s.counts[x])
        if c:
            out += gen.multinomial(c, f.kernel[x])
    return SampleMultiset(s.domain, out)


@dataclass(frozen=True)
class AdditiveFamilyF:
    """The family of keep-or-resample maps indexed by contaminant tuples T.

    Exhaustive mode enumerates every distinct empirical law U(T) of tuples
    T of the given length (micro domains only); sampled mode draws member
    tuples uniformly and is documented as a one-sided search.
    """

    eta: float
    tuple_len: int
    members: tuple[StochasticMap, ...]
    mode: str

    def __len__(self):
        return len(self.members)

    @classmethod
    def exhaustive(cls, domain: Domain, eta: float, tuple_len: int,
                   limit: int = 100_000) -> "AdditiveFamilyF":
        if math.comb(tuple_len + domain.size - 1, domain.size - 1) > limit:
            raise ValueError("exhaustive family too large; use sampled mode")
        members = []
        for counts in _compositions(tuple_len, domain.size):
            u = DiscreteDistribution(domain, np.array(counts) / tuple_len)
            members.append(StochasticMap.keep_or_resample(
                domain, eta, u, label=f"T~{counts}"))
        return cls(eta, tuple_len, tuple(members), "exhaustive")

    @classmethod
    def sampled(cls, domain: Domain, eta: float, tuple_len: int, count: int,
                rng: RngLike) -> "AdditiveFamilyF":
        gen = as_generator(rng)
        members = []
        for _ in range(count):
            t = gen.integers(0, domain.size, size=tuple_len)
            counts = np.bincount(t, minlength=domain.size)
            u = DiscreteDistribution(domain, counts / tuple_len)
            members.append(StochasticMap.keep_or_resample(
                domain, eta, u, label=f"T~{counts.tolist()}"))
        return cls(eta, tuple_len, tuple(members), "sampled")


def family_tuple_length(n: int, eps: float) -> int:
    """Contaminant tuple length n^2/eps (rounded up) that makes the family
    span oblivious additive corruptions to accuracy eps."""
    return int(math.ceil(n * n / eps))


def est_max_sample_size(m: int, eps: float) -> int:
    """ceil(m log(2/eps) / (2 eps^2)): draws needed by the batch estimator."""
    return int(math.ceil(m * math.log(2.0 / eps) / (2.0 * eps * eps)))


def _est_extreme(alg, family: AdditiveFamilyF, d: DiscreteDistribution,
                 n: int, r: int, rng: RngLike, maximize: bool):
    gen = as_generator(rng)
    # one shared batch of clean samples, reused across every family member
    batch = [sample_iid(d, n, gen) for _ in range(r)]
    per_member = np.empty(len(family.members))
    for j, f in enumerate(family.members):
        hits = 0
        for s in batch:
            hits += alg.decide(apply_stochastic(f, s, gen), gen)
        per_member[j] = hits / r
    best = int(np.argmax(per_member) if maximize else np.argmin(per_member))
    value = float(per_member[best])
    return value, per_member, family.members[best].label


def est_max(alg, family: AdditiveFamilyF, d: DiscreteDistribution, n: int,
            r: int, rng: RngLike) -> float:
    """max over family members of the r-trial acceptance average, with the
    sample batch shared across members."""
    return _est_extreme(alg, family, d, n, r, rng, maximize=True)[0]


def est_min(alg, family: AdditiveFamilyF, d: DiscreteDistribution, n: int,
            r: int, rng: RngLike) -> float:
    return _est_extreme(alg, family, d, n, r, rng, maximize=False)[0]


# ---------------------------------------------------------------------------
# Oblivious and adaptive extremal estimates (search-based)
# ---------------------------------------------------------------------------

@dataclass
class ExtremalEstimate:
    value: float
    mode: str                 # how the number was produced
    breadth: int              # corruptions searched
    std_error: float = 0.0
    best_label: str = ""


def oblivious_extreme(alg, d: DiscreteDistribution, model: NoiseModel, n: int,
                      trials: int, rng: RngLike, maximize: bool = True,
                      family: Optional[AdditiveFamilyF] = None,
                      candidates: Optional[Sequence[DiscreteDistribution]] = None,
                      eps: float = 0.25, family_size: int = 16) -> ExtremalEstimate:
    """Search the oblivious corruption set for the extreme acceptance rate.

    Additive models search the keep-or-resample family (exhaustive on micro
    domains, sampled otherwise); other models require an explicit candidate
    list of feasible corrupted distributions.  Search-based values are
    one-sided: they under-shoot a sup and over-shoot an inf.
    """
    if model.eta == 0.0:
        value = acceptance_probability(alg, d, n, trials, rng)
        se = math.sqrt(max(value * (1 - value), 1e-12) / trials)
        return ExtremalEstimate(value, "eta-zero", 1, se)
    if candidates is not None:
        gen = as_generator(rng)
        vals = [acceptance_probability(alg, cand, n, trials, gen)
                for cand in candidates]
        best = int(np.argmax(vals) if maximize else np.argmin(vals))
        se = math.sqrt(0.25 / trials)
        return ExtremalEstimate(float(vals[best]), "candidates", len(vals), se)
    if model.kind is not NoiseKind.ADDITIVE:
        raise ValueError("non-additive models need an explicit candidate list")
    if family is None:
        tl = family_tuple_length(n, eps)
        try:
            family = AdditiveFamilyF.exhaustive(d.domain, model.eta, tl, limit=64)
        except ValueError:
            family = AdditiveFamilyF.sampled(d.domain, model.eta, tl,
                                             family_size, rng)
    value, _, label = _est_extreme(alg, family, d, n, trials, rng, maximize)
    se = math.sqrt(0.25 / trials)
    return ExtremalEstimate(value, f"family-{family.mode}", len(family), se, label)


def oblivious_max(alg, d, model, n, trials, rng, **kw) -> ExtremalEstimate:
    return oblivious_extreme(alg, d, model, n, trials, rng, True, **kw)


def oblivious_min(alg, d, model, n, trials, rng, **kw) -> ExtremalEstimate:
    return oblivious_extreme(alg, d, model, n, trials, rng, False, **kw)


AttackSpec = Union[str, AdaptiveStrategy, Sequence[AdaptiveStrategy]]


def adaptive_extreme(alg, d: DiscreteDistribution, model: NoiseModel, m: int,
                     attack: AttackSpec, trials: int, rng: RngLike,
                     maximize: bool = True,
                     acceptance_trials: int = 1) -> ExtremalEstimate:
    """Monte Carlo average over S ~ D^m of the extreme of alg over searched
    corruptions of S.

    ``attack = "exhaustive"`` enumerates the corruption multisets (micro
    instances only) and takes a true inner extreme; otherwise the supplied
    strategies give a one-sided estimate.  ``acceptance_trials`` averages
    randomized algorithms per corruption.
    """
    gen = as_generator(rng)
    if isinstance(attack, AdaptiveStrategy):
        strategies = [attack]
    elif attack == "exhaustive":
        strategies = None
    else:
        strategies = list(attack)
    total = 0.0
    breadth = 0
    for _ in range(trials):
        s = sample_iid(d, m, gen)
        if strategies is None:
            corruptions = enumerate_corruptions(model, s)
        else:
            corruptions = [st.corrupt(s, model, gen) for st in strategies]
        breadth = max(breadth, len(corruptions))
        inner = None
        for shat in corruptions:
            if acceptance_trials == 1:
                val = float(alg.decide(shat, gen))
            else:
                val = float(np.mean([alg.decide(shat, gen)
                                     for _ in range(acceptance_trials)]))
            inner = val if inner is None else (max(inner, val) if maximize
                                               else min(inner, val))
            if acceptance_trials == 1 and inner == (1.0 if maximize else 0.0):
                break
        total += inner
    value = total / trials
    se = math.sqrt(max(value * (1 - value), 1e-12) / trials)
    mode = "exhaustive" if strategies is None else "attacks"
    return ExtremalEstimate(value, mode, breadth, se)


def adaptive_max(alg, d, model, m, attack, trials, rng, **kw) -> ExtremalEstimate:
    return adaptive_extreme(alg, d, model, m, attack, trials, rng, True, **kw)


def adaptive_min(alg, d, model, m, attack, trials, rng, **kw) -> ExtremalEstimate:
    return adaptive_extreme(alg, d, model, m, attack, trials, rng, False, **kw)


def adaptive_extreme_exact_micro(alg, d: DiscreteDistribution, model: NoiseModel,
                                 m: int, maximize: bool = True,
                                 decision_on_ordered=None) -> float:
    """Exact expected inner extreme on micro instances: enumerate ordered
    clean samples and, per sample, every corruption multiset.

    ``decision_on_ordered(counts) -> value in [0,1]`` may supply an exact
    (randomness-averaged) acceptance for a corruption; by default the
    algorithm is called once with no randomness.
    """
    k = d.domain.size
    if k ** m > 100_000:
        raise ValueError("micro enumeration too large")
    total = 0.0
    for tup in itertools.product(range(k), repeat=m):
        p = float(np.prod(d.weights[list(tup)]))
        if p == 0.0:
            continue
        s = SampleMultiset.from_elements(d.domain, tup)
        vals = []
        for shat in enumerate_corruptions(model, s):
            if decision_on_ordered is not None:
                vals.append(decision_on_ordered(shat.counts))
            else:
                vals.append(float(alg.decide(shat, None)))
        total += p * (max(vals) if maximize else min(vals))
    return total


# ---------------------------------------------------------------------------
# Exact micro formulas: two-element domain, ordered-pair algorithms, additive
# ---------------------------------------------------------------------------

def pair_acceptance_coeffs(table: Sequence[int]) -> tuple[float, float, float]:
    """Acceptance of an ordered-pair rule on i.i.d. draws with P[element 0]=q
    is the quadratic alpha q^2 + beta q + gamma; returns its coefficients."""
    t00, t01, t10, t11 = table
    return (t00 - t01 - t10 + t11, t01 + t10 - 2 * t11, float(t11))


def quad_extreme_on_interval(coeffs, lo: float, hi: float,
                             maximize: bool = True) -> float:
    alpha, beta, gamma = coeffs
    cand = [lo, hi]
    if alpha != 0.0:
        vertex = -beta / (2.0 * alpha)
        if lo < vertex < hi:
            cand.append(vertex)
    vals = [alpha * q * q + beta * q + gamma for q in cand]
    return max(vals) if maximize else min(vals)


def additive_weight_interval(eta: float, t: float) -> tuple[float, float]:
    """Feasible corrupted weight of element 0 when the clean weight is t:
    all mixtures (1-eta') t + eta' e, eta' <= eta, e in [0,1]."""
    return ((1.0 - eta) * t, (1.0 - eta) * t + eta)


def oblivious_extreme_pair_exact(table: Sequence[int], p: float, eta: float,
                                 maximize: bool = True) -> float:
    """Exact oblivious extreme for an ordered-pair rule over {0,1}."""
    lo, hi = additive_weight_interval(eta, p)
    return quad_extreme_on_interval(pair_acceptance_coeffs(table), lo, hi, maximize)


def _quad_extreme_vec(coeffs, lo: np.ndarray, hi: np.ndarray,
                      maximize: bool) -> np.ndarray:
    alpha, beta, gamma = coeffs

    def val(q):
        return alpha * q * q + beta * q + gamma

    out = np.maximum(val(lo), val(hi)) if maximize else np.minimum(val(lo), val(hi))
    if alpha != 0.0:
        vertex = -beta / (2.0 * alpha)
        inside = (lo < vertex) & (vertex < hi)
        if maximize and alpha < 0:
            out = np.where(inside, val(vertex), out)
        if not maximize and alpha > 0:
            out = np.where(inside, val(vertex), out)
    return out


def subsampled_adaptive_extreme_pair_exact(table: Sequence[int], p: float,
                                           eta: float, M: int,
                                           maximize: bool = True) -> float:
    """Exact adaptive extreme of the pair rule wrapped in a subsampling
    filter, at adversary sample size M.

    The wrapped acceptance depends on the corrupted sample only through its
    empirical weight q of element 0, so the inner extreme is the quadratic
    extreme over the feasible weight interval; the outer expectation is a
    binomial sum over the clean empirical weight.
    """
    coeffs = pair_acceptance_coeffs(table)
    js = np.arange(M + 1)
    pmf = binom.pmf(js, M, p)
    lo, hi = additive_weight_interval(eta, js / M)
    vals = _quad_extreme_vec(coeffs, lo, hi, maximize)
    return float(pmf @ vals)


# ---------------------------------------------------------------------------
# Equivalence report
# ---------------------------------------------------------------------------

@dataclass
class EquivalenceReport:
    oblivious_max: float
    oblivious_min: float
    adaptive_max: float
    adaptive_min: float
    epsilon: float
    n: int
    M: int
    mode: str
    max_gap: float = field(init=False)
    verdict: bool = field(init=False)
    std_errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.max_gap = max(abs(self.oblivious_max - self.adaptive_max),
                           abs(self.oblivious_min - self.adaptive_min))
        self.verdict = self.max_gap <= self.epsilon

    def to_json(self) -> str:
        return json.dumps({
            "oblivious_max": self.oblivious_max,
            "oblivious_min": self.oblivious_min,
            "adaptive_max": self.adaptive_max,
            "adaptive_min": self.adaptive_min,
            "epsilon": self.epsilon, "n": self.n, "M": self.M,
            "mode": self.mode, "max_gap": self.max_gap,
            "verdict": "pass" if self.verdict else "fail",
            "std_errors": self.std_errors, "meta": self.meta,
        })


def check_equivalence(alg: BlackBoxAlgorithm, d: DiscreteDistribution, n: int,
                      model: NoiseModel, epsilon: float, M: int,
                      trials: int, rng: RngLike,
                      mode: str = "auto") -> EquivalenceReport:
    """Compare the oblivious extremes of alg at size n against the adaptive
    extremes of its subsampled wrapper at size M, at tolerance epsilon.

    Pair-table algorithms over a two-element domain with additive noise are
    computed exactly; everything else uses the Monte Carlo searches, whose
    one-sidedness is recorded in the report.
    """
    exact_ok = (alg.ordered_table is not None and d.domain.size == 2
                and n == 2 and model.kind is NoiseKind.ADDITIVE)
    if mode == "auto":
        mode = "micro-exact" if exact_ok else "monte-carlo"
    if mode == "micro-exact":
        if not exact_ok:
            raise ValueError("micro-exact mode needs a pair table, |X|=2, "
                             "n=2, additive noise")
        p = float(d.weights[0])
        t = alg.ordered_table
        return EquivalenceReport(
            oblivious_max=oblivious_extreme_pair_exact(t, p, model.eta, True),
            oblivious_min=oblivious_extreme_pair_exact(t, p, model.eta, False),
            adaptive_max=subsampled_adaptive_extreme_pair_exact(t, p, model.eta, M, True),
            adaptive_min=subsampled_adaptive_extreme_pair_exact(t, p, model.eta, M, False),
            epsilon=epsilon, n=n, M=M, mode="micro-exact")
    gen = as_generator(rng)
    wrapped = WrappedAlgorithm(alg, SubsampleFilter(n))
    attacks = [identity_adaptive()] + [additive_point_mass_attack(x)
                                       for x in range(d.domain.size)]
    ob_max = oblivious_max(alg, d, model, n, trials, gen)
    ob_min = oblivious_min(alg, d, model, n, trials, gen)
    ad_max = adaptive_max(wrapped, d, model, M, attacks, trials, gen,
                          acceptance_trials=8)
    ad_min = adaptive_min(wrapped, d, model, M, attacks, trials, gen,
                          acceptance_trials=8)
    report = EquivalenceReport(
        ob_max.value, ob_min.value, ad_max.value, ad_min.value,
        epsilon, n, M, mode="monte-carlo",
        std_errors={"oblivious_max": ob_max.std_error,
                    "oblivious_min": ob_min.std_error,
                    "adaptive_max": ad_max.std_error,
                    "adaptive_min": ad_min.std_error})
    report.meta = {"oblivious_mode": ob_max.mode, "adaptive_mode": ad_max.mode,
                   "oblivious_breadth": ob_max.breadth,
                   "adaptive_breadth": ad_max.breadth}
    return report


# ---------------------------------------------------------------------------
# The batch distinguisher diagnostic
# ---------------------------------------------------------------------------

@dataclass
class DistinguisherReport:
    epsilon: float
    batch_size: int
    repetitions: int
    success_rate_iid: float        # declared iid when the source was iid
    success_rate_subsampled: float # declared subsampled when it was

    @property
    def overall(self) -> float:
        return 0.5 * (self.success_rate_iid + self.success_rate_subsampled)


def distinguisher_test(d: DiscreteDistribution, m_prime: int, M: int,
                       est: Callable[[SampleMultiset], float], mu: float,
                       epsilon: float, rng: RngLike,
                       repetitions: int = 40) -> DistinguisherReport:
    """The batch test that tells size-m' i.i.d. samples apart from m'-point
    subsamples of a size-M sample, given an estimator whose value on i.i.d.
    input concentrates near the reference mu.

    Per repetition it draws ceil(6/eps) batches, runs the estimator on each,
    and declares "i.i.d." when fewer than a 2*eps fraction of estimates land
    outside mu +- 2*eps.  When M is large the two sources are nearly
    indistinguishable and success hovers near chance.
    """
    gen = as_generator(rng)
    batch = int(math.ceil(6.0 / epsilon))
    correct = {"iid": 0, "subsampled": 0}
    for _ in range(repetitions):
        for source in ("iid", "subsampled"):
            deviating = 0
            for _ in range(batch):
                if source == "iid":
                    s = sample_iid(d, m_prime, gen)
                else:
                    big = sample_iid(d, M, gen)
                    s = subsample(big, m_prime, gen)
                if abs(est(s) - mu) > 2.0 * epsilon:
                    deviating += 1
            declared_iid = deviating < 2.0 * epsilon * batch
            if (source == "iid") == declared_iid:
                correct[source] += 1
    return DistinguisherReport(epsilon, batch, repetitions,
                               correct["iid"] / repetitions,
                               correct["subsampled"] / repetitions)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
