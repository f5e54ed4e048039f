"""Debiased inference for rankings under the Bradley-Terry-Luce model.

Typical pipeline::

    data = simulate_dataset(scores, p=0.2, L=200, seed=1)
    fit = solve_mle(data)
    res = debias(fit.theta, data, fit.lambda0)
    test_pairwise(res, 0, 1, alpha=0.05)
"""
from .bootstrap import (
    BootstrapDraws,
    EdgeSetSpec,
    Explicit,
    Full,
    Star,
    draw_max_statistics,
    p_value,
    quantile_cw,
    residual_profile,
)
from .debias import DebiasResult, augmented_inverse, constrained_inverse, debias, pairwise_variance
from .errors import (
    AlphaOutOfRange,
    BoundaryTie,
    DisconnectedGraph,
    EmptyEdgeSet,
    IndexOutOfRange,
    InsufficientUsers,
    NoConvergence,
    RankInferError,
    SingularSystem,
    UnsupportedProperty,
)
from .estimate import (
    MleConfig,
    MleResult,
    check_connected,
    fit_mle,
    gradient,
    hessian,
    neg_log_likelihood,
    solve_mle,
)
from .inference import (
    SelectionResult,
    TestReport,
    by_cutoff,
    select_by,
    select_topk_fdr_by,
    select_topk_fwer,
    test_general_property,
    test_pairwise,
    test_topk,
)
from .ingest import equalize_replicates, ratings_to_comparisons, read_comparisons, write_comparisons
from .model import (
    ComparisonDataset,
    ComparisonGraph,
    PairwisePreferred,
    RankingProperty,
    ScoreVector,
    TopK,
    property_holds,
    rank_of,
)
from .simulate import (
    block_scores,
    divider_cardinality,
    generate_graph,
    generate_outcomes,
    signal_distance,
    simulate_dataset,
    uniform_scores,
)

__version__ = "0.1.0"
