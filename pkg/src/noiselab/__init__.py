"""noiselab: a desk-scale lab for oblivious vs. adaptive corruption adversaries.

Finite-domain distributions and samples, the standard corruption cost
functions, statistical-query robustness certificates, the subsampling filter
with its coupling diagnostics, acceptance-probability equivalence
experiments, and the hypercube separation construction.
"""

__version__ = "0.1.0"

from .core import (ATOL, Coupling, DiscreteDistribution, Domain,
                   DomainMismatchError, RandomSource, SampleMultiset,
                   mixture, sample_iid, tv_distance, uniform_of)
from .noise_models import (NoiseKind, NoiseModel, adaptive_feasible,
                           additive, cost, feasible, malicious_encoded,
                           nasty, nasty_classification, subtractive,
                           verify_closed_under_mixtures,
                           lift_adaptive_to_oblivious)
from .sq_engine import (SqAlgorithm, StatisticalQuery, Transcript,
                        eval_query, is_representative,
                        is_robustly_representative, round_to_tau,
                        run_transcript, separating_query,
                        single_query_failure_bound, transcript_failure_bound)
from .adversaries import (AdaptiveStrategy, ObliviousStrategy,
                          StrongAdaptiveStrategy,
                          additive_single_query_attack,
                          nasty_single_query_attack, strong_adaptive_wrap)
from .subsampling import (SubsampleFilter, WrappedAlgorithm, coupled_pair,
                          pair_collision_bound, subsample, tv_bound_check)
from .equivalence import (AdditiveFamilyF, BlackBoxAlgorithm,
                          EquivalenceReport, StochasticMap, apply_stochastic,
                          check_equivalence, distinguisher_test, est_max,
                          est_max_sample_size, est_min, oblivious_max,
                          oblivious_min, adaptive_max, adaptive_min)
from .hypercube import (HypercubePoint, LowerBoundConfig,
                        correlated_pair_algorithm, majority_cluster_attack,
                        oblivious_failure_bound, parameter_search,
                        run_separation)
