"""The high-dimensional separation experiment on the signed hypercube.

The correlated-pair tester accepts a point set iff every point has a distinct
partner with inner product at least a threshold t.  Against a uniform base
distribution the analytic bound eta^n + n exp(-t^2 / 2d) caps the acceptance
under ANY feasible additive oblivious corruption, while the cluster-majority
adaptive attack pushes the subsampled tester's acceptance toward 1 once the
corrupted sample contains one majority center per chunk of k sample points.

Points are d-dimensional sign vectors; inner products are exact integers
computed on bit-packed words (XOR + popcount), never floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import RandomSource, RngLike, as_generator, tolerant_floor

_WORD = 64


def sample_sign_matrix(count: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """count uniform points of {-1, +1}^d as an int8 matrix."""
    return (gen.integers(0, 2, size=(count, d), dtype=np.int8) << 1) - 1


def pack_signs(signs: np.ndarray) -> np.ndarray:
    """Pack sign rows (+1 -> bit 1) into uint64 words, zero-padded."""
    signs = np.atleast_2d(signs)
    bits = (signs > 0).astype(np.uint8)
    pad = (-bits.shape[1]) % _WORD
    if pad:
        bits = np.pad(bits, ((0, 0), (0, pad)))
    words = np.packbits(bits, axis=1, bitorder="little")
    return words.reshape(bits.shape[0], -1, 8).view(np.uint64)[:, :, 0]


def packed_inner_products(packed_a: np.ndarray, packed_b: np.ndarray,
                          d: int) -> np.ndarray:
    """Exact pairwise inner products <a_i, b_j> = d - 2 * hamming(a_i, b_j).

    Padding bits agree on both sides, so they never contribute mismatches.
    """
    mism = np.bitwise_count(packed_a[:, None, :] ^ packed_b[None, :, :])
    return d - 2 * mism.sum(axis=2, dtype=np.int64)


@dataclass(frozen=True)
class HypercubePoint:
    """A single signed point, bit-packed; ``d`` is the true dimension."""

    words: tuple[int, ...]
    d: int

    @classmethod
    def from_signs(cls, signs) -> "HypercubePoint":
        signs = np.asarray(signs, dtype=np.int8)
        if signs.ndim != 1 or signs.size < 1:
            raise ValueError("need a 1-d sign vector")
        if not np.isin(signs, (-1, 1)).all():
            raise ValueError("entries must be +1 or -1")
        return cls(tuple(int(w) for w in pack_signs(signs)[0]), signs.size)

    def to_signs(self) -> np.ndarray:
        words = np.array(self.words, dtype=np.uint64)[None, :]
        bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:self.d]
        return (bits.astype(np.int8) << 1) - 1

    def inner(self, other: "HypercubePoint") -> int:
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        a = np.array(self.words, dtype=np.uint64)
        b = np.array(other.words, dtype=np.uint64)
        return int(self.d - 2 * np.bitwise_count(a ^ b).sum())


def correlated_pair_algorithm(points: np.ndarray, t: int) -> int:
    """1 iff every point has a distinct partner with inner product >= t.

    ``points`` is an (n, d) sign matrix, n >= 2.  Exact integer arithmetic
    throughout (bit-packed XOR/popcount).
    """
    points = np.atleast_2d(points)
    n, d = points.shape
    if n < 2:
        raise ValueError("need at least two points")
    packed = pack_signs(points)
    gram = packed_inner_products(packed, packed, d)
    np.fill_diagonal(gram, np.iinfo(np.int64).min)
    return int((gram.max(axis=1) >= t).all())


def majority_cluster_attack(points: np.ndarray, eta: float, k: int,
                            rng: Optional[RngLike] = None) -> np.ndarray:
    """The appended cluster centers: center j is the coordinate-wise majority
    of the j-th chunk of k sample points, chunk indices wrapping around.

    The number of centers is the full addition budget floor(m*eta/(1-eta)).
    k should be odd; ties (even k only) break toward +1.
    """
    points = np.atleast_2d(points)
    m, d = points.shape
    centers = tolerant_floor(m * eta / (1.0 - eta))
    if centers < 1:
        return np.empty((0, d), dtype=np.int8)
    idx = (np.arange(centers)[:, None] * k + np.arange(k)[None, :]) % m
    sums = points[idx].sum(axis=1, dtype=np.int32)
    return np.where(sums >= 0, 1, -1).astype(np.int8)


def cluster_mean_correlation(d: int, k: int) -> float:
    """sqrt(2/pi) * d / sqrt(k): the expected inner product between a chunk
    point and its majority center, to leading order."""
    return math.sqrt(2.0 / math.pi) * d / math.sqrt(k)


def oblivious_failure_bound(n: int, d: int, t: float, eta: float) -> float:
    """eta^n + n exp(-t^2 / 2d): acceptance cap under any additive oblivious
    corruption of the uniform base distribution (Hoeffding plus the chance
    that no clean point appears)."""
    return eta ** n + n * math.exp(-t * t / (2.0 * d))


def good_center_count(m: int, k: int, centers: int) -> int:
    """floor(centers*k/m): how many chunks each sample index participates in
    (at least); pure arithmetic of the wrap-around chunking."""
    return (centers * k) // m


@dataclass(frozen=True)
class LowerBoundConfig:
    n: int
    m: int
    d: int
    eta: float
    eps: float
    k: int
    trials: int = 200
    seed: int = 0
    t: int = field(init=False)

    def __post_init__(self):
        if self.k % 2 == 0:
            raise ValueError("cluster size k must be odd")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta outside [0, 1)")
        object.__setattr__(self, "t",
                           int(math.floor(cluster_mean_correlation(self.d, self.k) / 2.0)))

    @property
    def additions(self) -> int:
        return tolerant_floor(self.m * self.eta / (1.0 - self.eta))

    def recipe_ok(self) -> bool:
        """k = Omega(m log n / n) and d = Omega(k log n), unit constants."""
        ln = math.log(self.n)
        return self.k >= self.m * ln / self.n and self.d >= self.k * ln


@dataclass
class SeparationTrialRow:
    trial: int
    clean_accept: int
    oblivious_accepts: dict
    adaptive_accept: int


@dataclass
class SeparationReport:
    config: LowerBoundConfig
    rows: list[SeparationTrialRow]
    clean_rate: float
    oblivious_rates: dict
    oblivious_bound: float
    adaptive_rate: float
    separated: bool

    @property
    def gap(self) -> float:
        worst_oblivious = max([self.clean_rate, self.oblivious_bound]
                              + list(self.oblivious_rates.values()))
        return self.adaptive_rate - worst_oblivious


def _subsampled_accept(shat: np.ndarray, n: int, t: int,
                       gen: np.random.Generator) -> int:
    pick = gen.integers(0, shat.shape[0], size=n)
    return correlated_pair_algorithm(shat[pick], t)


def run_separation(config: LowerBoundConfig,
                   rng: Optional[RngLike] = None) -> SeparationReport:
    """Per trial: (a) the tester on a clean size-n sample, (b) the tester on
    samples from a battery of concrete oblivious corruptions (the analytic
    bound is the authoritative oblivious ceiling), and (c) the subsampled
    tester on the cluster-attacked size-m sample.

    Separated iff the adaptive rate reaches 1 - eps/2 while every oblivious
    figure (empirical and analytic) stays below eps/2.  The attack's addition
    count and additive feasibility are asserted every trial.
    """
    if rng is None:
        rng = RandomSource(config.seed)
    gen = as_generator(rng)
    cfg = config
    bound = oblivious_failure_bound(cfg.n, cfg.d, cfg.t, cfg.eta)
    if not cfg.recipe_ok():
        import warnings
        warnings.warn("parameters violate the k/d growth recipe; running anyway")

    planted = sample_sign_matrix(1, cfg.d, gen)[0]
    battery = ["point_mass", "uniform", "planted_center"]
    rows = []
    for trial in range(cfg.trials):
        clean = sample_sign_matrix(cfg.n, cfg.d, gen)
        clean_accept = correlated_pair_algorithm(clean, cfg.t)

        oblivious_accepts = {}
        for name in battery:
            pts = sample_sign_matrix(cfg.n, cfg.d, gen)
            contaminated = gen.random(cfg.n) < cfg.eta
            if name == "point_mass":
                pts[contaminated] = planted
            elif name == "planted_center":
                # contaminant concentrated near one center: flip a few signs
                noise = gen.random((int(contaminated.sum()), cfg.d)) < 0.05
                block = np.tile(planted, (int(contaminated.sum()), 1))
                block[noise] *= -1
                pts[contaminated] = block
            # "uniform": contaminant equals the base distribution; no edit
            oblivious_accepts[name] = correlated_pair_algorithm(pts, cfg.t)

        sample = sample_sign_matrix(cfg.m, cfg.d, gen)
        centers = majority_cluster_attack(sample, cfg.eta, cfg.k)
        if centers.shape[0] != cfg.additions:
            raise AssertionError("attack did not spend the full addition budget")
        shat = np.concatenate([sample, centers], axis=0)
        # additive feasibility: |T| appended points against budget eta
        if centers.shape[0] / shat.shape[0] > cfg.eta + 1e-12:
            raise AssertionError("attack exceeded the additive budget")
        adaptive_accept = _subsampled_accept(shat, cfg.n, cfg.t, gen)
        rows.append(SeparationTrialRow(trial, clean_accept,
                                       oblivious_accepts, adaptive_accept))

    clean_rate = float(np.mean([r.clean_accept for r in rows]))
    oblivious_rates = {name: float(np.mean([r.oblivious_accepts[name] for r in rows]))
                       for name in battery}
    adaptive_rate = float(np.mean([r.adaptive_accept for r in rows]))
    worst_oblivious = max([clean_rate, bound] + list(oblivious_rates.values()))
    separated = (adaptive_rate >= 1.0 - cfg.eps / 2.0
                 and worst_oblivious <= cfg.eps / 2.0)
    return SeparationReport(cfg, rows, clean_rate, oblivious_rates, bound,
                            adaptive_rate, separated)


@dataclass
class FrontierRow:
    m: int
    k: int
    t: int
    adaptive_rate: float
    oblivious_bound: float
    gap: float
    separated: bool


def frontier_sweep(n: int, eta: float, eps: float, d: int,
                   m_values: tuple[int, ...], c1: float = 4.0,
                   trials: int = 40, seed: int = 0) -> list[FrontierRow]:
    """Sweep the adversary sample size m at fixed dimension d.

    The cluster size grows as k = c1 * m * ln(n) / n, so larger m shrinks the
    threshold t and degrades the analytic oblivious ceiling toward vacuity:
    the frontier where subsampling starts to defend.
    """
    ln = math.log(n)
    rows = []
    for i, m in enumerate(m_values):
        k = max(3, int(round(c1 * m * ln / n)))
        if k % 2 == 0:
            k += 1
        cfg = LowerBoundConfig(n, m, d, eta, eps, k, trials=trials, seed=seed)
        report = run_separation(cfg, RandomSource(seed, 9000 + i))
        worst = max([report.clean_rate, report.oblivious_bound]
                    + list(report.oblivious_rates.values()))
        rows.append(FrontierRow(m, k, cfg.t, report.adaptive_rate,
                                report.oblivious_bound,
                                report.adaptive_rate - worst,
                                report.separated))
    return rows


@dataclass
class SearchOutcome:
    config: Optional[LowerBoundConfig]
    report: Optional[SeparationReport]
    near_misses: list
    trials_spent: int


def parameter_search(n: int, eta: float, eps: float, budget: int,
                     seed: int = 0, d_max: int = 16384,
                     m_over_n: tuple[int, ...] = (4, 8),
                     c1_grid: tuple[float, ...] = (2.0, 4.0, 6.0),
                     c2_grid: tuple[float, ...] = (16.0, 32.0, 48.0),
                     screen_trials: int = 25,
                     confirm_trials: int = 200) -> SearchOutcome:
    """Sweep the constant factors of k = c1 * m * ln(n) / n and
    d = c2 * k * ln(n) until both sides of the separation hold empirically.

    Candidates whose analytic oblivious bound exceeds eps/2 are discarded
    without spending Monte Carlo budget; survivors get a short screen and
    the first screen passer is confirmed at full trial count.  ``budget``
    caps the total Monte Carlo trials spent; near-misses are reported when
    it runs out.
    """
    ln = math.log(n)
    near_misses = []
    spent = 0
    stream = 0
    for mn in m_over_n:
        m = mn * n
        for c1 in c1_grid:
            k = max(3, int(round(c1 * m * ln / n)))
            if k % 2 == 0:
                k += 1
            for c2 in c2_grid:
                d = int(round(c2 * k * ln))
                if d > d_max:
                    continue
                cfg = LowerBoundConfig(n, m, d, eta, eps, k,
                                       trials=screen_trials, seed=seed)
                if oblivious_failure_bound(n, d, cfg.t, eta) > eps / 2.0:
                    continue
                if spent + screen_trials > budget:
                    return SearchOutcome(None, None, near_misses, spent)
                stream += 1
                screen = run_separation(cfg, RandomSource(seed, stream))
                spent += screen_trials
                if not screen.separated:
                    near_misses.append({"config": cfg,
                                        "adaptive_rate": screen.adaptive_rate,
                                        "bound": screen.oblivious_bound})
                    continue
                if spent + confirm_trials > budget:
                    return SearchOutcome(None, None, near_misses, spent)
                final_cfg = replace(cfg, trials=confirm_trials)
                stream += 1
                report = run_separation(final_cfg, RandomSource(seed, stream))
                spent += confirm_trials
                if report.separated:
                    return SearchOutcome(final_cfg, report, near_misses, spent)
                near_misses.append({"config": final_cfg,
                                    "adaptive_rate": report.adaptive_rate,
                                    "bound": report.oblivious_bound})
    return SearchOutcome(None, None, near_misses, spent)
