"""The subsampling filter and the with/without-replacement coupling.

``subsample`` draws n points i.i.d. from the uniform distribution over a
multiset (with replacement, always).  ``coupled_pair`` realizes the explicit
coupling between a fresh i.i.d. sample of size m and an m-point subsample of
a size-M i.i.d. sample; the two disagree only when some index of the big
sample is drawn twice, which happens with probability at most m(m-1)/(2M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DiscreteDistribution, RngLike, SampleMultiset,
                   as_generator, uniform_of)


@dataclass(frozen=True)
class SubsampleFilter:
    """Reduces any input multiset to n i.i.d. draws from its empirical law."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("output size must be at least 1")

    def apply(self, s: SampleMultiset, rng: RngLike) -> SampleMultiset:
        return subsample(s, self.n, rng)


@dataclass(frozen=True)
class WrappedAlgorithm:
    """inner o filter: subsample to the inner algorithm's input size, then run.

    ``inner`` is any black-box decision procedure with a
    ``decide(multiset, rng)`` method.
    """

    inner: object
    filter: SubsampleFilter

    def decide(self, s: SampleMultiset, rng: RngLike) -> int:
        gen = as_generator(rng)
        return self.inner.decide(self.filter.apply(s, gen), gen)

    @property
    def name(self):
        inner_name = getattr(self.inner, "name", repr(self.inner))
        return f"subsampled({inner_name}, n={self.filter.n})"


def subsample(s: SampleMultiset, n: int, rng: RngLike) -> SampleMultiset:
    """n i.i.d. draws from uniform_of(s), with replacement."""
    if s.size == 0:
        raise ValueError("cannot subsample an empty multiset")
    gen = as_generator(rng)
    counts = gen.multinomial(n, uniform_of(s).weights)
    return SampleMultiset(s.domain, counts)


def pair_collision_bound(m: int, M: int) -> float:
    """m(m-1)/(2M): union bound on a repeated index among m draws from [M]."""
    return m * (m - 1) / (2.0 * M)


def coupled_pair(d: DiscreteDistribution, m: int, M: int,
                 rng: RngLike) -> tuple[SampleMultiset, SampleMultiset, bool]:
    """One draw of the coupling between D^m and an m-point subsample of D^M.

    Repeat m times: draw an index i from [M]; if slot i is unset, fill it
    with a fresh draw from D and give that value to both sides; otherwise the
    subsample side reuses slot i while the i.i.d. side draws fresh.  Returns
    (S, S_sub, collided); S = S_sub whenever no index repeated.
    """
    if not 1 <= m <= M:
        raise ValueError("need 1 <= m <= M")
    gen = as_generator(rng)
    idx = gen.integers(0, M, size=m)
    slots: dict[int, int] = {}
    s_vals = np.empty(m, dtype=np.int64)
    sub_vals = np.empty(m, dtype=np.int64)
    collided = False
    for t in range(m):
        i = int(idx[t])
        if i in slots:
            collided = True
            sub_vals[t] = slots[i]
            s_vals[t] = gen.choice(d.domain.size, p=d.weights)
        else:
            x = int(gen.choice(d.domain.size, p=d.weights))
            slots[i] = x
            s_vals[t] = x
            sub_vals[t] = x
    return (SampleMultiset.from_elements(d.domain, s_vals),
            SampleMultiset.from_elements(d.domain, sub_vals),
            collided)


@dataclass
class CouplingBatch:
    m: int
    M: int
    trials: int
    collided_rate: float
    neq_rate: float
    bound: float

    @property
    def collided_std_error(self) -> float:
        p = self.collided_rate
        return math.sqrt(max(p * (1 - p), 1e-12) / self.trials)

    @property
    def neq_std_error(self) -> float:
        p = self.neq_rate
        return math.sqrt(max(p * (1 - p), 1e-12) / self.trials)


def coupling_experiment(d: DiscreteDistribution, m: int, M: int, trials: int,
                        rng: RngLike) -> tuple[CouplingBatch, np.ndarray, np.ndarray]:
    """Vectorized batch of coupled draws.

    Returns the batch summary plus the per-trial (collided, multisets_differ)
    boolean arrays.  ``multisets_differ`` compares the two sides as multisets,
    so it is never above ``collided``.
    """
    if not 1 <= m <= M:
        raise ValueError("need 1 <= m <= M")
    gen = as_generator(rng)
    idx = gen.integers(0, M, size=(trials, m))
    fresh = gen.choice(d.domain.size, size=(trials, m), p=d.weights)
    sub = fresh.copy()
    # first_pos[t] = earliest position with the same index; repeats reuse it
    for t in range(1, m):
        taken = np.zeros(trials, dtype=bool)
        for t2 in range(t):
            hit = (idx[:, t] == idx[:, t2]) & ~taken
            sub[hit, t] = sub[hit, t2]
            taken |= hit
    sorted_idx = np.sort(idx, axis=1)
    collided = (np.diff(sorted_idx, axis=1) == 0).any(axis=1)
    neq = (np.sort(fresh, axis=1) != np.sort(sub, axis=1)).any(axis=1)
    batch = CouplingBatch(m, M, trials,
                          float(collided.mean()), float(neq.mean()),
                          pair_collision_bound(m, M))
    return batch, collided, neq


def exact_collision_probability(m: int, M: int) -> float:
    """P[some index repeats among m uniform draws from [M]], exactly."""
    p_distinct = 1.0
    for j in range(m):
        p_distinct *= (M - j) / M
    return 1.0 - p_distinct


def subsampled_tuple_distribution(d: DiscreteDistribution, m: int,
                                  M: int) -> np.ndarray:
    """Exact law of an ordered m-tuple from: draw S ~ D^M, then m uniform
    draws from S.  Enumerates multinomial count vectors of the big sample;
    feasible only while |X|^m and the composition count stay small.
    """
    k = d.domain.size
    if k ** m > 1_000_000:
        raise ValueError("tuple enumeration too large")
    probs = np.zeros((k,) * m)
    log_fact = np.cumsum(np.log(np.arange(1, M + 1)))
    log_fact = np.concatenate([[0.0], log_fact])

    def multinomial_pmf(counts):
        if any(c > 0 and d.weights[x] == 0 for x, c in enumerate(counts)):
            return 0.0
        log_p = log_fact[M] - sum(log_fact[c] for c in counts)
        for x, c in enumerate(counts):
            if c > 0:
                log_p += c * math.log(d.weights[x])
        return math.exp(log_p)

    for counts in _compositions(M, k):
        p_counts = multinomial_pmf(counts)
        if p_counts == 0.0:
            continue
        u = np.array(counts, dtype=np.float64) / M
        # outer product u x u x ... x u over the m tuple coordinates
        cond = u
        for _ in range(m - 1):
            cond = np.multiply.outer(cond, u)
        probs += p_counts * cond
    return probs


def iid_tuple_distribution(d: DiscreteDistribution, m: int) -> np.ndarray:
    """Exact law of an ordered m-tuple of i.i.d. draws from D."""
    out = d.weights
    for _ in range(m - 1):
        out = np.multiply.outer(out, d.weights)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class TvBoundRow:
    m: int
    M: int
    bound: float
    empirical_neq_rate: float
    exact_tv: float | None
    trials: int


def tv_bound_check(d: DiscreteDistribution, m: int, M: int, trials: int,
                   rng: RngLike, exact: str = "auto") -> TvBoundRow:
    """Monte Carlo disagreement frequency of the coupling against the
    m(m-1)/(2M) bound; in the exact regime also the true TV between the
    m-tuple laws by full enumeration.
    """
    batch, _, _ = coupling_experiment(d, m, M, trials, rng)
    k = d.domain.size
    do_exact = exact == "always" or (exact == "auto" and k ** m <= 4096 and
                                     math.comb(M + k - 1, k - 1) <= 200_000)
    exact_tv = None
    if do_exact:
        p1 = iid_tuple_distribution(d, m)
        p2 = subsampled_tuple_distribution(d, m, M)
        exact_tv = float(0.5 * np.abs(p1 - p2).sum())
    return TvBoundRow(m, M, batch.bound, batch.neq_rate, exact_tv, trials)
