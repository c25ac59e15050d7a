"""Two-stage convex recovery of sparse signals from magnitude-squared
measurements with constrained (subspace) sensing vectors."""

from .baselines import BaselineConfig, BaselineResult, solve_l1_only, solve_sdp_l1
from .ensemble import (
    SensingEnsemble,
    SparseInstance,
    apply_A,
    apply_A_adjoint,
    apply_W,
    apply_W_adjoint,
    estimate_rip_constant,
    generate_instance,
    lift,
    make_ensemble,
    problem_from_json,
    problem_to_json,
)
from .estimators import L1Recovery, TraceL1Recovery, TwoStageRecovery
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    emit_csv,
    empirical_quantile,
    experiment1_spec,
    experiment2_spec,
    run_experiment,
)
from .lowrank import (
    LowRankResult,
    LowRankSolveConfig,
    project_l2_ball,
    project_psd,
    solve_trace_min,
    solve_trace_reg,
)
from .oracles import (
    brute_force_cpr,
    check_disjoint_support_lemma,
    check_gamma_threshold,
    check_rip_product,
    run_verification,
)
from .postprocess import (
    RecoveryResult,
    extract_signal,
    postprocess_estimate,
    project_k_sparse,
    project_rank_one_psd,
    relative_errors,
)
from .sparse import (
    SparseResult,
    SparseSolveConfig,
    sigma_max,
    soft_threshold,
    solve_l1_min,
    solve_l1_reg,
)

__version__ = "0.1.0"
