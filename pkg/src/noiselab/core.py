"""Finite domains, discrete distributions, sample multisets, TV distance, couplings.

Everything downstream (noise models, attacks, subsampling experiments) is built
on the small set of objects in this module.  Domains are registered up front
and elements are dense integer ids; probabilities are double-precision floats
with all equality checks done at absolute tolerance ``ATOL``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

# Absolute tolerance for probability equality checks.  Inputs are conceptually
# rational; float64 round-off is orders of magnitude below this.
ATOL = 1e-12


def tolerant_floor(x: float) -> int:
    """floor with a 1e-9 grace so rational budgets like 2*(1/3)/(2/3) floor
    to their exact integer value despite float round-off."""
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True)
class Domain:
    """A finite domain of ``size`` elements, identified by ids 0..size-1."""

    size: int
    name: str = ""

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("domain must have at least one element")

    def __len__(self):
        return self.size


class DomainMismatchError(ValueError):
    """Two objects that must share a domain do not."""


def _check_same_domain(a, b):
    if a.domain != b.domain:
        raise DomainMismatchError(f"domain mismatch: {a.domain} vs {b.domain}")


@dataclass(frozen=True)
class RandomSource:
    """Seeded, stream-addressable randomness.

    Identical ``(seed, stream)`` pairs reproduce identical draws; distinct
    stream ids give statistically independent streams (PCG64 under a
    SeedSequence spawn key).  Instances are immutable; every ``generator()``
    call returns a fresh generator at the stream's initial state, so
    per-trial streams should use distinct stream ids.
    """

    seed: int
    stream: int = 0

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def spawn(self, count: int) -> list[np.random.Generator]:
        """``count`` independent child generators, deterministic in (seed, stream)."""
        return [np.random.Generator(np.random.PCG64(ss))
                for ss in self.seed_sequence().spawn(count)]

    def substream(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream * 1_000_003 + index + 1)


RngLike = Union[RandomSource, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either a RandomSource or an already-built numpy Generator."""
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomSource or numpy Generator, got {type(rng)!r}")


class DiscreteDistribution:
    """An explicit probability table over a registered finite domain.

    Weights are validated on construction: non-negative and summing to 1
    within ``ATOL``.  Instances are immutable.
    """

    __slots__ = ("domain", "weights")

    def __init__(self, domain: Domain, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (domain.size,):
            raise ValueError(f"expected {domain.size} weights, got shape {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        if (w < -ATOL).any():
            raise ValueError("negative weight")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total}, not 1")
        # Repair sub-1e-9 float drift so the ATOL sum invariant holds exactly.
        w = np.clip(w, 0.0, None) / total
        w.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteDistribution is immutable")

    def __eq__(self, other):
        return (isinstance(other, DiscreteDistribution)
                and self.domain == other.domain
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.domain, self.weights.tobytes()))

    def __repr__(self):
        return f"DiscreteDistribution({self.domain}, {self.weights.tolist()})"

    def prob(self, element: int) -> float:
        return float(self.weights[element])

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @classmethod
    def point_mass(cls, domain: Domain, element: int) -> "DiscreteDistribution":
        w = np.zeros(domain.size)
        w[element] = 1.0
        return cls(domain, w)

    @classmethod
    def uniform(cls, domain: Domain) -> "DiscreteDistribution":
        return cls(domain, np.full(domain.size, 1.0 / domain.size))

    @classmethod
    def random(cls, domain: Domain, rng: RngLike) -> "DiscreteDistribution":
        gen = as_generator(rng)
        return cls(domain, gen.dirichlet(np.ones(domain.size)))

    def to_json(self) -> str:
        return json.dumps({"domain_size": self.domain.size,
                           "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution":
        obj = json.loads(text)
        return cls(Domain(obj["domain_size"]), obj["weights"])


class SampleMultiset:
    """A multiset of domain elements stored as a dense count vector."""

    __slots__ = ("domain", "counts", "size")

    def __init__(self, domain: Domain, counts):
        c = np.asarray(counts, dtype=np.int64)
        if c.shape != (domain.size,):
            raise ValueError(f"expected {domain.size} counts, got shape {c.shape}")
        if (c < 0).any():
            raise ValueError("negative multiplicity")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "size", int(c.sum()))

    def __setattr__(self, name, value):
        raise AttributeError("SampleMultiset is immutable")

    def __eq__(self, other):
        return (isinstance(other, SampleMultiset)
                and self.domain == other.domain
                and np.array_equal(self.counts, other.counts))

    def __hash__(self):
        return hash((self.domain, self.counts.tobytes()))

    def __repr__(self):
        return f"SampleMultiset({self.domain}, {self.counts.tolist()})"

    def __len__(self):
        return self.size

    @classmethod
    def from_elements(cls, domain: Domain, elements: Iterable[int]) -> "SampleMultiset":
        counts = np.bincount(np.asarray(list(elements), dtype=np.int64),
                             minlength=domain.size)
        return cls(domain, counts)

    @classmethod
    def empty(cls, domain: Domain) -> "SampleMultiset":
        return cls(domain, np.zeros(domain.size, dtype=np.int64))

    def add(self, element: int, multiplicity: int = 1) -> "SampleMultiset":
        c = self.counts.copy()
        c[element] += multiplicity
        return SampleMultiset(self.domain, c)

    def union(self, other: "SampleMultiset") -> "SampleMultiset":
        _check_same_domain(self, other)
        return SampleMultiset(self.domain, self.counts + other.counts)

    def elements(self) -> np.ndarray:
        """The multiset expanded to a sorted element array of length ``size``."""
        return np.repeat(np.arange(self.domain.size), self.counts)

    def to_json(self) -> str:
        nz = {str(i): int(c) for i, c in enumerate(self.counts) if c > 0}
        return json.dumps({"domain_size": self.domain.size, "counts": nz})

    @classmethod
    def from_json(cls, text: str) -> "SampleMultiset":
        obj = json.loads(text)
        counts = np.zeros(obj["domain_size"], dtype=np.int64)
        for key, mult in obj["counts"].items():
            counts[int(key)] = mult
        return cls(Domain(obj["domain_size"]), counts)


def tv_distance(d1: DiscreteDistribution, d2: DiscreteDistribution) -> float:
    """Total variation distance, (1/2) * sum_x |d1(x) - d2(x)|.

    On a finite domain this equals both the best-distinguishing-test and the
    optimal-coupling characterizations of TV.
    """
    _check_same_domain(d1, d2)
    return float(0.5 * np.abs(d1.weights - d2.weights).sum())


def uniform_of(s: SampleMultiset) -> DiscreteDistribution:
    """The uniform (empirical) distribution over a nonempty multiset."""
    if s.size == 0:
        raise ValueError("uniform distribution of an empty multiset is undefined")
    return DiscreteDistribution(s.domain, s.counts / s.size)


def mixture(theta: float, d1: DiscreteDistribution,
            d2: DiscreteDistribution) -> DiscreteDistribution:
    """Pointwise mixture theta*d1 + (1-theta)*d2."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"mixture weight {theta} outside [0, 1]")
    _check_same_domain(d1, d2)
    return DiscreteDistribution(d1.domain,
                                theta * d1.weights + (1.0 - theta) * d2.weights)


def sample_iid(d: DiscreteDistribution, n: int, rng: RngLike) -> SampleMultiset:
    """n independent draws from d, deterministic given (seed, stream)."""
    if n < 0:
        raise ValueError("sample size must be non-negative")
    if n == 0:
        return SampleMultiset.empty(d.domain)
    gen = as_generator(rng)
    counts = gen.multinomial(n, d.weights)
    return SampleMultiset(d.domain, counts)


def sample_iid_ordered(d: DiscreteDistribution, n: int, rng: RngLike) -> np.ndarray:
    """n ordered i.i.d. draws (element id array); for order-sensitive consumers."""
    if n < 0:
        raise ValueError("sample size must be non-negative")
    gen = as_generator(rng)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return gen.choice(d.domain.size, size=n, p=d.weights)


class Coupling:
    """A joint distribution over pairs (x, x') with prescribed marginals."""

    __slots__ = ("domain", "joint")

    def __init__(self, domain: Domain, joint):
        j = np.asarray(joint, dtype=np.float64)
        if j.shape != (domain.size, domain.size):
            raise ValueError("joint table must be square over the domain")
        if not np.isfinite(j).all():
            raise ValueError("joint probabilities must be finite")
        if (j < -ATOL).any():
            raise ValueError("negative joint probability")
        total = float(j.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError("joint table must sum to 1")
        j = np.clip(j, 0.0, None) / total
        j.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "joint", j)

    def __setattr__(self, name, value):
        raise AttributeError("Coupling is immutable")

    def left_marginal(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.domain, self.joint.sum(axis=1))

    def right_marginal(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.domain, self.joint.sum(axis=0))

    def prob_different(self) -> float:
        """P[x != x'] under the coupling."""
        return float(1.0 - np.trace(self.joint))

    def check_marginals(self, d1: DiscreteDistribution, d2: DiscreteDistribution,
                        atol: float = ATOL) -> bool:
        return (np.abs(self.joint.sum(axis=1) - d1.weights).max() <= atol
                and np.abs(self.joint.sum(axis=0) - d2.weights).max() <= atol)

    @classmethod
    def independent(cls, d1: DiscreteDistribution,
                    d2: DiscreteDistribution) -> "Coupling":
        _check_same_domain(d1, d2)
        return cls(d1.domain, np.outer(d1.weights, d2.weights))

    @classmethod
    def optimal(cls, d1: DiscreteDistribution, d2: DiscreteDistribution) -> "Coupling":
        """The maximal coupling: P[x != x'] equals tv_distance(d1, d2).

        Diagonal carries min(d1, d2); the residual masses are paired up
        independently.
        """
        _check_same_domain(d1, d2)
        n = d1.domain.size
        common = np.minimum(d1.weights, d2.weights)
        omega = float(common.sum())
        joint = np.zeros((n, n))
        joint[np.arange(n), np.arange(n)] = common
        if omega < 1.0 - ATOL:
            r1 = d1.weights - common
            r2 = d2.weights - common
            joint += np.outer(r1, r2) / (1.0 - omega)
        return cls(d1.domain, joint)

    @classmethod
    def mix(cls, theta: float, c1: "Coupling", c2: "Coupling") -> "Coupling":
        """Convex combination of two couplings (marginals are preserved)."""
        if not 0.0 <= theta <= 1.0:
            raise ValueError("mixing weight outside [0, 1]")
        if c1.domain != c2.domain:
            raise DomainMismatchError("couplings over different domains")
        return cls(c1.domain, theta * c1.joint + (1.0 - theta) * c2.joint)
