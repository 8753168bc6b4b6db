"""Multiple imputation with bridged joint-model and chained-regression priors.

Subpackages implement the Gaussian partition algebra, seedable samplers, the
prior bridge between normal-inverse-Wishart and normal-inverse-gamma forms,
joint-model and fully-conditional imputers, amputation, pooled analysis and a
simulation harness with a command-line interface.
"""

from ._kernels import BACKEND as kernel_backend
from .amputate import AmputationSpec, ampute, generate_complete
from .analysis import (
    EvalSummary,
    OrderEffectResult,
    PooledEstimate,
    batch_means_ci,
    evaluate,
    ks_two_sample,
    pool,
    posterior_compare,
)
from .data import IncompleteData
from .fcs import (
    NigPosterior,
    SingularDesignError,
    VisitSequence,
    draw_regression,
    fcs_impute,
    fcs_iterate,
    impute_column,
    nig_posterior_update,
)
from .gaussian import (
    ConditionalRegression,
    GaussianParams,
    NotPositiveDefiniteError,
    PartitionedGaussian,
    conditional_mvn,
    log_density_mvn,
    partition,
    to_regression,
)
from .harness import ExperimentConfig, transform_prior
from .jm import JmState, jm_gibbs_step, jm_impute, niw_posterior_update
from .priors import (
    NigPrior,
    NiwPartition,
    NiwPrior,
    decompose,
    log_factored_density,
    log_joint_theta_density,
    log_niw_density,
    marginal_t_params,
)
from .samplers import (
    draw_inv_gamma,
    draw_inv_wishart,
    draw_mv_student_t,
    draw_mvn,
    stream,
)

__version__ = "0.1.0"
