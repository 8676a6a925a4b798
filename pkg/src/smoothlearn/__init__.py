"""Smoothed-adversary learning on finite discretized domains.

A library for two linked experiment families over finite instance spaces:

* no-regret online learning with Hedge over consistency-oracle covers,
  against adaptive adversaries constrained to smooth per-round
  distributions, plus the worst-case point-mass baseline they replace;
* differentially private query answering and synthetic-data release for
  smooth datasets (multiplicative-weights mechanisms with data-independent
  covers and KL projection onto the smooth polytope, and a subsampled
  small-dataset mechanism).

Supporting machinery: epsilon-bracketings (threshold base case, k-fold
composition, symmetric differences, pullback along embeddings), smoothness
certification, and a seeded, reproducible experiment harness.
"""

__version__ = "0.1.0"

from .domains import (
    Dataset,
    Dist,
    Domain,
    DomainMismatchError,
    is_sigma_smooth,
    make_smooth_dataset,
    make_two_level_dataset,
    query_value,
    sample,
    smoothness_cap,
    validate_sigma,
)
from .hypotheses import (
    Hypothesis,
    HypothesisClass,
    HalfspaceClass,
    IntervalUnionClass,
    PolyThresholdClass,
    ThresholdClass,
    consistency_oracle,
    error_query,
    evaluate,
    kfold_combine,
    monomial_embed,
    parse_hypothesis,
    sym_difference_class,
)
from .covers import Cover, build_cover, nearest_in_cover
from .brackets import (
    AtomMap,
    Bracket,
    Bracketing,
    bracket_thresholds,
    build_base_bracketing,
    complement_bracketing,
    compose_brackets,
    pullback_bracketing,
    pushforward,
    register_base_bracketing,
    sym_diff_bracketing,
    verify_bracketing,
)
from .online import (
    Adversary,
    BinarySearchAdversary,
    FixedSmoothAdversary,
    GreedyConcentrationStrategy,
    HalvingLearner,
    LearnerState,
    QuarterCommitAdversary,
    RegretRecord,
    SmoothnessContractError,
    UncertaintyRegionAdversary,
    UniformDeviationStrategy,
    adversary_appendix_b,
    adversary_binary_search,
    adversary_uncertainty_region,
    binary_search_duel,
    cap_concentrated_dist,
    hedge_update,
    max_deviation_monte_carlo,
    smooth_online_play,
)
from .dp import (
    MechanismTranscript,
    PrivacyParams,
    SmoothPolytope,
    advanced_composition,
    answer_with_cover,
    exponential_mechanism,
    exponential_mechanism_probabilities,
    kl_divergence,
    kl_project_capped_simplex,
    laplace_sample,
    multiplicative_update,
    mwem,
    projected_smooth_mwem,
    smooth_mwem,
    subsampled_net_mechanism,
    subsampled_net_selection_probabilities,
)
from .certify import PseudoSmoothCertificate, certify_pseudo_smooth
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunRecord,
    SuiteReport,
    derive_seed,
    replicate_suite,
    rng_for,
    run_experiment,
)
