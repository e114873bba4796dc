"""Gaussian couplings, long-run covariance estimation, and calibrated
sequential-mean / CUSUM tests for high-dimensional nonstationary time series,
plus a simulation harness that measures the implied constants of the error
bounds at desk scale.
"""

from .errors import InvalidInputError, NotPSDError
from .matops import (
    EigenDecomp,
    SymMat,
    as_matrix,
    eigen,
    gaussian_w2,
    pack_symmetric,
    pos_neg_parts,
    psd_project,
    sqrt_psd,
    trace_norm,
    unpack_symmetric,
)
from .procmodel import (
    CategoricalKernel,
    InnovationStream,
    Kernel,
    LinearKernel,
    ThetaMeta,
    autocov_analytic,
    categorical_kernel,
    gamma_tv,
    gen_path,
    iid_kernel,
    innovation_pair_moment,
    jump_kernel,
    kernel_from_spec,
    kernel_to_spec,
    lipschitz_kernel,
    load_kernel,
    ma1_kernel,
    sigma_analytic,
    theta_analytic,
    theta_mc,
)
from .coupling import (
    CoupledPaths,
    CouplingPlan,
    GaussianPairCoupling,
    PartialSumCoupling,
    RateParams,
    block_size,
    couple_gaussian_pair,
    couple_partial_sums,
    decoupled_surrogate,
    decoupling_bound,
    default_block_length,
    plan_blocks,
    rate_chi,
    rate_xi,
    rate_zaitsev,
    xi_breakpoint,
)
from .covest import CovProcess, bandwidth_default, qhat, qhat_error, qtrue
from .inference import (
    CalibrationResult,
    ConditionReport,
    TestConfig,
    TestReport,
    calibrate_quantile,
    default_offsets,
    quantile_mc,
    run_test,
    seq_test_condition,
    stat_cusum,
    stat_seq,
)
from .experiments import (
    ExperimentSpec,
    GridPoint,
    ScalingReport,
    exp_coupling_scaling,
    exp_dist_approx,
    exp_qhat_scaling,
    exp_rosenthal,
    exp_size,
    ks_two_sample,
    rosenthal_rhs_euclidean,
    rosenthal_rhs_general,
    run_experiment,
    theta_matrix,
)
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult", "CategoricalKernel", "ConditionReport", "CoupledPaths",
    "CouplingPlan", "CovProcess", "EigenDecomp", "ExperimentSpec",
    "GaussianPairCoupling", "GridPoint", "InnovationStream", "InvalidInputError",
    "Kernel", "LinearKernel", "NotPSDError", "PartialSumCoupling", "RateParams",
    "ScalingReport", "SymMat", "TestConfig", "TestReport", "ThetaMeta",
    "as_matrix", "autocov_analytic", "bandwidth_default", "block_size",
    "calibrate_quantile", "categorical_kernel", "cli_main", "couple_gaussian_pair",
    "couple_partial_sums", "decoupled_surrogate", "decoupling_bound",
    "default_block_length", "default_offsets", "eigen", "exp_coupling_scaling",
    "exp_dist_approx", "exp_qhat_scaling", "exp_rosenthal", "exp_size",
    "gamma_tv", "gaussian_w2", "gen_path", "iid_kernel", "innovation_pair_moment",
    "jump_kernel", "kernel_from_spec", "kernel_to_spec", "ks_two_sample",
    "lipschitz_kernel", "load_kernel", "ma1_kernel", "pack_symmetric",
    "plan_blocks", "pos_neg_parts", "psd_project", "qhat", "qhat_error", "qtrue",
    "quantile_mc", "rate_chi", "rate_xi", "rate_zaitsev", "rosenthal_rhs_euclidean",
    "rosenthal_rhs_general", "run_experiment", "run_test", "seq_test_condition",
    "sigma_analytic", "sqrt_psd", "stat_cusum", "stat_seq", "theta_analytic",
    "theta_matrix", "theta_mc", "trace_norm", "unpack_symmetric", "xi_breakpoint",
]
