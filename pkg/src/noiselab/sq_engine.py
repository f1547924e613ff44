"""Statistical queries, adaptive query algorithms, and robustness certificates.

A statistical query is a bounded function phi : X -> [-1, 1] answered to
within a shared tolerance tau.  A k-query algorithm chooses each query from
the rounded answers to the previous ones; running it against a sample or a
distribution yields a transcript of rounded values.

The module certifies when a sample remains trustworthy under corruption
(robust representativeness), constructs an explicit separating query when a
transcript is unreachable by any feasibly corrupted distribution, and runs
the Monte Carlo concentration experiments that compare measured failure
rates against the analytic bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .core import (DiscreteDistribution, Domain, RngLike, SampleMultiset,
                   as_generator, uniform_of)
from .noise_models import (NoiseKind, NoiseModel, enumerate_corruptions,
                           feasible_query_interval)

ROUND_TIE_EPS = 1e-12


def _format_value(v: float) -> str:
    """Canonical short form of a rounded transcript value for table keys."""
    return f"{float(v):.10g}"


class StatisticalQuery:
    """A query phi : X -> [-1, 1] with tolerance tau, as a value table."""

    __slots__ = ("domain", "values", "tau")

    def __init__(self, domain: Domain, values, tau: float):
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (domain.size,):
            raise ValueError("query needs one value per domain element")
        if not np.isfinite(v).all() or (np.abs(v) > 1.0 + 1e-12).any():
            raise ValueError("query values must lie in [-1, 1]")
        if not 0.0 < tau <= 2.0:
            raise ValueError("tolerance must lie in (0, 2]")
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tau", float(tau))

    def __setattr__(self, name, value):
        raise AttributeError("StatisticalQuery is immutable")

    @classmethod
    def indicator(cls, domain: Domain, elements, tau: float) -> "StatisticalQuery":
        v = np.zeros(domain.size)
        v[np.asarray(elements, dtype=np.int64)] = 1.0
        return cls(domain, v, tau)


def eval_query(phi: StatisticalQuery,
               target: Union[SampleMultiset, DiscreteDistribution]) -> float:
    """phi(S) = mean over the multiset, or phi(D) = expectation under D."""
    if phi.domain != target.domain:
        raise ValueError("query and target live on different domains")
    if isinstance(target, SampleMultiset):
        if target.size == 0:
            raise ValueError("cannot evaluate a query on an empty sample")
        return float(phi.values @ target.counts) / target.size
    if isinstance(target, DiscreteDistribution):
        return float(phi.values @ target.weights)
    raise TypeError(f"expected multiset or distribution, got {type(target)!r}")


def round_to_tau(v: float, tau: float) -> float:
    """v rounded to the nearest integer multiple of tau; ties round up."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    lo = math.floor(v / tau)
    d_lo = abs(v - lo * tau)
    d_hi = abs((lo + 1) * tau - v)
    k = lo + 1 if d_hi <= d_lo + ROUND_TIE_EPS else lo
    return k * tau


def round_to_tau_array(v: np.ndarray, tau: float) -> np.ndarray:
    lo = np.floor(v / tau)
    d_lo = np.abs(v - lo * tau)
    d_hi = np.abs((lo + 1) * tau - v)
    return np.where(d_hi <= d_lo + ROUND_TIE_EPS, lo + 1, lo) * tau


@dataclass(frozen=True)
class Transcript:
    """The rounded answers (v_1, ..., v_k) produced by a query algorithm."""

    values: tuple[float, ...]
    tau: float

    def __post_init__(self):
        bound = 1.0 + self.tau / 2 + 1e-9
        for v in self.values:
            if abs(v) > bound:
                raise ValueError(f"transcript value {v} outside [-1-tau/2, 1+tau/2]")

    def __len__(self):
        return len(self.values)


class SqAlgorithm:
    """An adaptive k-query algorithm with one shared tolerance.

    ``next_query(prefix)`` returns the (i+1)-st query given the rounded
    answers to the first i; it must be deterministic in the prefix and all
    returned queries must carry the shared tau.  ``accept`` maps a full
    transcript to a 0/1 decision.
    """

    def __init__(self, k: int, tau: float,
                 next_query: Callable[[tuple[float, ...]], StatisticalQuery],
                 accept: Callable[[Transcript], int] = lambda t: 1):
        if k < 1:
            raise ValueError("need at least one query")
        self.k = k
        self.tau = float(tau)
        self._next_query = next_query
        self.accept = accept

    def next_query(self, prefix: tuple[float, ...]) -> StatisticalQuery:
        q = self._next_query(tuple(prefix))
        if abs(q.tau - self.tau) > 1e-12:
            raise ValueError("all queries of one algorithm share one tolerance")
        return q

    @classmethod
    def fixed(cls, queries: Sequence[StatisticalQuery],
              accept: Callable[[Transcript], int] = lambda t: 1) -> "SqAlgorithm":
        """A non-adaptive algorithm asking a fixed query list."""
        taus = {q.tau for q in queries}
        if len(taus) != 1:
            raise ValueError("all queries of one algorithm share one tolerance")
        qs = list(queries)
        return cls(len(qs), qs[0].tau, lambda prefix: qs[len(prefix)], accept)

    @classmethod
    def from_config(cls, domain: Domain, config: dict) -> "SqAlgorithm":
        """Build an algorithm from a config table.

        ``config`` holds ``k``, ``tau``, a ``queries`` map from transcript
        prefixes (comma-joined rounded values; "" for the first query) to
        value tables, and optionally ``accept``: a list of accepting
        transcripts.  Example::

            {"k": 2, "tau": 0.5,
             "queries": {"": [1, -1], "0.5": [1, 1], "-0.5": [-1, -1],
                         "0.0": [0, 0], "1.0": [1, -1], "-1.0": [1, -1]},
             "accept": [[0.5, 1.0]]}
        """
        tau = float(config["tau"])
        k = int(config["k"])

        def canon(key: str) -> str:
            if not key:
                return ""
            return ",".join(_format_value(float(part))
                            for part in key.split(","))

        tables = {canon(key): np.asarray(vals, dtype=np.float64)
                  for key, vals in config["queries"].items()}

        def next_query(prefix):
            key = ",".join(_format_value(v) for v in prefix)
            if key not in tables:
                raise KeyError(f"no query configured for transcript {key!r}")
            return StatisticalQuery(domain, tables[key], tau)

        accept_set = None
        if "accept" in config:
            accept_set = {tuple(_format_value(v) for v in row)
                          for row in config["accept"]}

        def accept(transcript):
            if accept_set is None:
                return 1
            return int(tuple(_format_value(v)
                             for v in transcript.values) in accept_set)

        return cls(k, tau, next_query, accept)


def run_transcript(alg: SqAlgorithm,
                   source: Union[SampleMultiset, DiscreteDistribution]) -> Transcript:
    """The deterministic transcript of rounded answers from a sample or
    distribution: v_{i+1} = round(phi^{(i+1)}(source), tau)."""
    values: list[float] = []
    for _ in range(alg.k):
        q = alg.next_query(tuple(values))
        values.append(round_to_tau(eval_query(q, source), alg.tau))
    return Transcript(tuple(values), alg.tau)


def transcript_queries(alg: SqAlgorithm,
                       source: Union[SampleMultiset, DiscreteDistribution]
                       ) -> tuple[Transcript, list[StatisticalQuery]]:
    """The transcript together with the queries asked along it."""
    values: list[float] = []
    queries: list[StatisticalQuery] = []
    for _ in range(alg.k):
        q = alg.next_query(tuple(values))
        queries.append(q)
        values.append(round_to_tau(eval_query(q, source), alg.tau))
    return Transcript(tuple(values), alg.tau), queries


def is_representative(s: SampleMultiset, d: DiscreteDistribution,
                      alg: SqAlgorithm) -> bool:
    """Whether the sample-generated transcript answers stay within tau of the
    distribution's answers along the same query path."""
    if s.size == 0:
        raise ValueError("empty sample")
    values: list[float] = []
    for _ in range(alg.k):
        q = alg.next_query(tuple(values))
        v = round_to_tau(eval_query(q, s), alg.tau)
        if abs(v - eval_query(q, d)) > alg.tau + 1e-12:
            return False
        values.append(v)
    return True


# ---------------------------------------------------------------------------
# Robust representativeness
# ---------------------------------------------------------------------------

@dataclass
class RobustnessSearch:
    """Configuration for the certificate search in the undecidable regime."""

    max_domain: int = 4
    max_corruptions: int = 20_000


@dataclass
class RobustnessResult:
    verdict: Optional[bool]          # True / False / None (= unknown)
    mode: str
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        raise TypeError("inspect .verdict explicitly; result may be unknown")


def is_robustly_representative(s: SampleMultiset, d: DiscreteDistribution,
                               alg: SqAlgorithm, model: NoiseModel,
                               search: Optional[RobustnessSearch] = None
                               ) -> RobustnessResult:
    """Decide whether every feasible corruption Shat of s is representative of
    some feasible corruption Dhat of d.

    Decidable configurations:

    * ``k = 1`` with an additive, nasty, or subtractive model: exact, via
      interval arithmetic on the single query value (corruptions quantified
      at the distribution level, i.e. every U(Shat) with cost at most eta).
    * tiny domains, same models: corruptions enumerated under the
      point-count conventions of ``enumerate_corruptions`` and each checked
      for a witness Dhat by linear-program feasibility over the corruption
      polytope.

    Everything else returns an unknown verdict carrying the evidence found.
    """
    decidable = (NoiseKind.ADDITIVE, NoiseKind.NASTY, NoiseKind.SUBTRACTIVE)
    if search is None:
        search = RobustnessSearch()
    if model.eta == 0.0:
        return RobustnessResult(is_representative(s, d, alg), "eta-zero")
    if alg.k == 1 and model.kind in decidable:
        return _robust_single_query(s, d, alg, model)
    if d.domain.size <= search.max_domain and model.kind in decidable:
        return _robust_enumerated(s, d, alg, model, search)
    return RobustnessResult(None, "unknown",
                            {"reason": "no decidable configuration applies"})


def _robust_single_query(s, d, alg, model) -> RobustnessResult:
    q = alg.next_query(())
    tau = alg.tau
    # Feasible corrupted query means form closed intervals on both sides.
    dist_lo, dist_hi = feasible_query_interval(model, d, q.values)
    samp_lo, samp_hi = feasible_query_interval(model, uniform_of(s), q.values)
    v_lo = round_to_tau(samp_lo, tau)
    v_hi = round_to_tau(samp_hi, tau)
    ok = (v_lo >= dist_lo - tau - 1e-12) and (v_hi <= dist_hi + tau + 1e-12)
    return RobustnessResult(ok, "single-query-exact",
                            {"sample_interval": (samp_lo, samp_hi),
                             "dist_interval": (dist_lo, dist_hi),
                             "rounded_range": (v_lo, v_hi)})


def _feasible_dhat_polytope_lp(d: DiscreteDistribution, model: NoiseModel,
                               query_values: np.ndarray, boxes) -> bool:
    """Is there a feasible Dhat with every query mean inside its box?

    query_values: (k, |X|) array; boxes: list of (lo, hi).  The feasible set
    is a polytope for additive (mixture weights over corner corruptions) and
    nasty (a TV ball intersected with the simplex); membership is an LP.
    """
    k, size = query_values.shape
    if model.kind is NoiseKind.ADDITIVE:
        # Dhat = (1 - eta') D + eta' E: equivalently Dhat >= (1 - eta) D.
        floor = (1.0 - model.eta) * d.weights
        n_var = size
        A_ub, b_ub = [], []
        for i in range(k):
            lo, hi = boxes[i]
            A_ub.append(query_values[i]); b_ub.append(hi)
            A_ub.append(-query_values[i]); b_ub.append(-lo)
        res = linprog(np.zeros(n_var), A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                      A_eq=np.ones((1, n_var)), b_eq=[1.0],
                      bounds=[(float(f), None) for f in floor], method="highs")
        return res.status == 0
    if model.kind is NoiseKind.NASTY:
        # variables: w (the Dhat weights) and u >= |w - d|, with sum(u) <= 2 eta
        n_var = 2 * size
        A_ub, b_ub = [], []
        for i in range(k):
            lo, hi = boxes[i]
            row = np.zeros(n_var); row[:size] = query_values[i]
            A_ub.append(row); b_ub.append(hi)
            A_ub.append(-row); b_ub.append(-lo)
        for x in range(size):
            r1 = np.zeros(n_var); r1[x] = 1.0; r1[size + x] = -1.0
            r2 = np.zeros(n_var); r2[x] = -1.0; r2[size + x] = -1.0
            A_ub.append(r1); b_ub.append(d.weights[x])
            A_ub.append(r2); b_ub.append(-d.weights[x])
        row = np.zeros(n_var); row[size:] = 1.0
        A_ub.append(row); b_ub.append(2.0 * model.eta)
        A_eq = np.zeros((1, n_var)); A_eq[0, :size] = 1.0
        bounds = [(0.0, None)] * size + [(0.0, None)] * size
        res = linprog(np.zeros(n_var), A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                      A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
        return res.status == 0
    if model.kind is NoiseKind.SUBTRACTIVE:
        # Dhat feasible iff Dhat(x) <= D(x) / (1 - eta) pointwise
        caps = d.weights / (1.0 - model.eta)
        A_ub, b_ub = [], []
        for i in range(k):
            lo, hi = boxes[i]
            A_ub.append(query_values[i]); b_ub.append(hi)
            A_ub.append(-query_values[i]); b_ub.append(-lo)
        res = linprog(np.zeros(size), A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                      A_eq=np.ones((1, size)), b_eq=[1.0],
                      bounds=[(0.0, float(c)) for c in caps], method="highs")
        return res.status == 0
    raise ValueError(f"no polytope certificate for {model.kind}")


def _robust_enumerated(s, d, alg, model, search) -> RobustnessResult:
    corruptions = enumerate_corruptions(model, s, search.max_corruptions)
    for shat in corruptions:
        transcript, queries = transcript_queries(alg, shat)
        qv = np.vstack([q.values for q in queries])
        boxes = [(v - alg.tau, v + alg.tau) for v in transcript.values]
        if not _feasible_dhat_polytope_lp(d, model, qv, boxes):
            return RobustnessResult(False, "enumerated",
                                    {"counterexample": shat.counts.tolist(),
                                     "transcript": transcript.values})
    return RobustnessResult(True, "enumerated",
                            {"corruptions_checked": len(corruptions)})


# ---------------------------------------------------------------------------
# Separating query construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatingQuery:
    """A composite query Psi(x) = sum_i w_i phi_i(x) with ||w||_1 = 1 and a
    threshold T such that Psi stays at most T on every feasible corruption of
    the distribution while exceeding T + tau/2 on the transcript's inner box.
    """

    weights: tuple[float, ...]
    threshold: float
    values: np.ndarray               # Psi on the domain
    margin: float

    def query(self, domain: Domain, tau: float) -> StatisticalQuery:
        return StatisticalQuery(domain, self.values, tau)


def moment_polytope_vertices(queries: Sequence[StatisticalQuery],
                             d: DiscreteDistribution,
                             model: NoiseModel) -> np.ndarray:
    """Vertices of {(phi_1(Dhat), ..., phi_k(Dhat)) : Dhat feasible} for the
    additive model: (1-eta) phi(D) + eta phi(x), one per domain element."""
    if model.kind is not NoiseKind.ADDITIVE:
        raise ValueError("moment polytope vertices implemented for additive only")
    qv = np.vstack([q.values for q in queries])          # (k, |X|)
    base = qv @ d.weights                                # (k,)
    return ((1.0 - model.eta) * base[:, None] + model.eta * qv).T   # (|X|, k)


def _box_corners(centers: Sequence[float], radius: float) -> np.ndarray:
    return np.array(list(itertools.product(*[(c - radius, c + radius)
                                             for c in centers])))


def separating_query(queries: Sequence[StatisticalQuery], values: Transcript,
                     d: DiscreteDistribution,
                     model: NoiseModel) -> Optional[SeparatingQuery]:
    """Construct the margin-maximizing linear separator between the feasible
    moment polytope and the transcript box (both convex).

    Returns None when the transcript box values +- tau intersects the
    polytope (no separator exists).  Only the additive model is supported;
    query count is capped at 20 by the corner enumeration.
    """
    k = len(queries)
    if k != len(values.values):
        raise ValueError("need one transcript value per query")
    if k > 20:
        raise ValueError("corner enumeration is limited to 20 queries")
    if model.kind is not NoiseKind.ADDITIVE:
        raise ValueError("separating query implemented for the additive model")
    tau = values.tau
    verts = moment_polytope_vertices(queries, d, model)   # (|X|, k)

    if _polytope_box_intersect(verts, values.values, tau):
        return None

    inner = _box_corners(values.values, tau / 2.0)
    # variables: w (k), u (k) with u >= |w|, T, delta; maximize delta
    n_var = 2 * k + 2
    c = np.zeros(n_var); c[-1] = -1.0
    A_ub, b_ub = [], []
    for a in verts:
        row = np.zeros(n_var); row[:k] = a; row[2 * k] = -1.0
        A_ub.append(row); b_ub.append(0.0)
    for b in inner:
        row = np.zeros(n_var); row[:k] = -b; row[2 * k] = 1.0; row[2 * k + 1] = 1.0
        A_ub.append(row); b_ub.append(-tau / 2.0)
    for i in range(k):
        r1 = np.zeros(n_var); r1[i] = 1.0; r1[k + i] = -1.0
        r2 = np.zeros(n_var); r2[i] = -1.0; r2[k + i] = -1.0
        A_ub.append(r1); b_ub.append(0.0)
        A_ub.append(r2); b_ub.append(0.0)
    row = np.zeros(n_var); row[k:2 * k] = 1.0
    A_ub.append(row); b_ub.append(1.0)
    bounds = ([(None, None)] * k + [(0.0, None)] * k
              + [(None, None), (0.0, None)])
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds,
                  method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        # disjoint convex compact sets always admit a positive margin; no
        # solution means the instance was effectively intersecting
        return None
    w = res.x[:k]
    t_raw = float(res.x[2 * k])
    norm = float(np.abs(w).sum())
    w = w / norm
    threshold = t_raw / norm
    qv = np.vstack([q.values for q in queries])
    psi = w @ qv
    return SeparatingQuery(tuple(w.tolist()), threshold, psi,
                           margin=float(res.x[-1]) / norm)


def _polytope_box_intersect(verts: np.ndarray, centers, radius: float) -> bool:
    """LP feasibility: some convex combination of the vertices lies in the box."""
    nv, k = verts.shape
    centers = np.asarray(centers, dtype=np.float64)
    A_ub = np.vstack([verts.T, -verts.T])
    b_ub = np.concatenate([centers + radius, -(centers - radius)])
    res = linprog(np.zeros(nv), A_ub=A_ub, b_ub=b_ub,
                  A_eq=np.ones((1, nv)), b_eq=[1.0],
                  bounds=[(0.0, None)] * nv, method="highs")
    return res.status == 0


# ---------------------------------------------------------------------------
# Analytic failure bounds and concentration experiments
# ---------------------------------------------------------------------------

def single_query_failure_bound(tau: float, n: int, locality: float = 1.0) -> float:
    """exp(-tau^2 n / (8 l^2)): the bounded-difference tail for the best
    single-query corruption value exceeding its oblivious ceiling by tau/2."""
    return math.exp(-tau * tau * n / (8.0 * locality * locality))


def transcript_failure_bound(tau: float, n: int, k: int,
                             locality: float = 1.0) -> float:
    """Union bound over the <= (2/tau + 1)^k possible transcripts:
    exp(-tau^2 n / (8 l^2) + k log(2/tau + 1)), natural log."""
    return math.exp(-tau * tau * n / (8.0 * locality * locality)
                    + k * math.log(2.0 / tau + 1.0))


@dataclass
class ConcentrationRow:
    n: int
    empirical_failure: float
    theory_bound: float
    trials: int
    std_error: float


@dataclass
class ConcentrationReport:
    rows: list[ConcentrationRow]
    kind: str

    @property
    def passed(self) -> bool:
        return all(r.empirical_failure <= r.theory_bound + 3.0 * r.std_error
                   for r in self.rows)


def _batch_phi_means(d: DiscreteDistribution, phi: np.ndarray, n: int,
                     trials: int, gen: np.random.Generator) -> np.ndarray:
    counts = gen.multinomial(n, d.weights, size=trials)
    return counts @ phi / n


def sq_concentration_experiment(alg: SqAlgorithm, d: DiscreteDistribution,
                                model: NoiseModel, n_values: Sequence[int],
                                trials: int, rng: RngLike) -> ConcentrationReport:
    """Frequency of drawn samples failing to be robustly representative,
    against the analytic bound exp(-tau^2 n / (8 l^2) + k log(2/tau + 1)).

    Fast exact path for single-query additive/nasty configurations; tiny
    domains fall back to the enumerated certificate (much slower).
    """
    gen = as_generator(rng)
    tau, k, loc = alg.tau, alg.k, model.locality
    rows = []
    fast = (k == 1 and model.kind in (NoiseKind.ADDITIVE, NoiseKind.NASTY))
    for n in n_values:
        bound = transcript_failure_bound(tau, n, k, loc)
        if fast:
            q = alg.next_query(())
            dist_lo, dist_hi = feasible_query_interval(model, d, q.values)
            if model.kind is NoiseKind.ADDITIVE:
                means = _batch_phi_means(d, q.values, n, trials, gen)
                eta = model.eta
                samp_hi = (1 - eta) * means + eta * float(q.values.max())
                samp_lo = (1 - eta) * means + eta * float(q.values.min())
            else:
                # nasty extremes come from the greedy TV-ball movement,
                # evaluated per drawn empirical distribution
                samp_hi = np.empty(trials)
                samp_lo = np.empty(trials)
                counts = gen.multinomial(n, d.weights, size=trials)
                for i in range(trials):
                    u = DiscreteDistribution(d.domain, counts[i] / n)
                    samp_lo[i], samp_hi[i] = feasible_query_interval(
                        model, u, q.values)
            v_hi = round_to_tau_array(samp_hi, tau)
            v_lo = round_to_tau_array(samp_lo, tau)
            fail = ((v_hi > dist_hi + tau + 1e-12)
                    | (v_lo < dist_lo - tau - 1e-12))
            rate = float(fail.mean())
        else:
            fails = 0
            for t in range(trials):
                counts = gen.multinomial(n, d.weights)
                s = SampleMultiset(d.domain, counts)
                res = is_robustly_representative(s, d, alg, model)
                if res.verdict is None:
                    raise ValueError("configuration is not decidable")
                fails += 0 if res.verdict else 1
            rate = fails / trials
        se = math.sqrt(max(rate * (1 - rate), 1e-12) / trials)
        rows.append(ConcentrationRow(n, rate, bound, trials, se))
    return ConcentrationReport(rows, kind="robust-representativeness")


def single_query_exceedance_experiment(d: DiscreteDistribution,
                                       phi_values, tau: float, eta: float,
                                       n_values: Sequence[int], trials: int,
                                       rng: RngLike) -> ConcentrationReport:
    """Frequency with which the exact additive append attack pushes the query
    mean past T + tau/2, where T is the oblivious ceiling of the query; the
    analytic comparison value is exp(-tau^2 n / 8).

    The attack appends floor(n * eta / (1 - eta)) copies of the query's
    argmax, the exact optimizer within that addition budget.
    """
    gen = as_generator(rng)
    phi = np.asarray(phi_values, dtype=np.float64)
    model = NoiseModel(NoiseKind.ADDITIVE, eta)
    _, ceiling = feasible_query_interval(model, d, phi)
    rows = []
    for n in n_values:
        extra = model.additions_allowed(n)
        means = _batch_phi_means(d, phi, n, trials, gen)
        attacked = (n * means + extra * float(phi.max())) / (n + extra)
        rate = float((attacked >= ceiling + tau / 2.0 - 1e-12).mean())
        bound = single_query_failure_bound(tau, n, locality=1.0)
        se = math.sqrt(max(rate * (1 - rate), 1e-12) / trials)
        rows.append(ConcentrationRow(n, rate, bound, trials, se))
    return ConcentrationReport(rows, kind="single-query-exceedance")
