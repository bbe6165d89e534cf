"""Relaxed scenario programs for support vector methods with
distribution-free risk certificates."""

from ._accel import active_backend, set_backend
from .bounds import (
    BoundQuery,
    ExplicitBoundPair,
    RiskInterval,
    binomial_tail_phi,
    certificate_residual_sign,
    epsilon_bounds,
    epsilon_table,
    exact_root_oracle,
    explicit_lower_bound,
    explicit_upper_bound,
    log_binomial,
)
from .experiments import (
    CostRiskRow,
    SincConfig,
    ValidationReport,
    empirical_risk,
    gen_sinc,
    monte_carlo_validation,
    rho_sweep,
)
from .kernels import GramMatrix, KernelSpec, gram_matrix, kernel_eval, psd_check
from .models import (
    Dataset,
    RiskCertificate,
    SvddModel,
    SvmModel,
    SvrModel,
    certify,
    fit_svdd,
    fit_svm,
    fit_svr,
    load_model,
    predict,
    save_model,
    scenario_cost,
    svdd_complexity,
    svm_complexity,
    svr_complexity,
)
from .qp import (
    QpProblem,
    QpSolution,
    SolverSettings,
    kkt_residuals,
    lexicographic_solve,
    solve_qp,
)

__version__ = "0.1.0"
