"""
geoclip - geometry-aware gradient clipping for differentially private SGD.

GeoClip clips and noises per-sample gradients in a basis estimated from
previously released gradients, so that the noise added for privacy is
shaped to the gradient distribution instead of being isotropic. The package
provides the transform, its estimators, the privatizers (GeoClip and the
vanilla, AdaClip and quantile baselines), an RDP accountant, models with
exact per-sample gradients and a benchmark harness.
"""

from .core import config, update_config, logger
from .geometry import (
    EigenPairs,
    TransformPair,
    clamp_eigenvalues,
    eigendecompose,
    identity_transform,
    lowrank_transform,
    optimal_transform,
    transformed_covariance_diag,
    whitening_transform,
)
from .estimator import (
    DiagVarState,
    FullCovState,
    LowRankState,
    streaming_rank_k_update,
    update_cov_full,
    update_mean,
)
from .privatizers import (
    ClipStrategyConfig,
    PrivatizedGradient,
    StrategyKind,
    adaclip_step,
    geoclip_step,
    make_strategy,
    quantile_step,
    vanilla_step,
)
from .accountant import (
    EpsilonCurve,
    PrivacyLedger,
    PrivacySpec,
    compose_heterogeneous,
    epsilon_curve,
    epsilon_of,
    rdp_subsampled_gaussian,
    sigma_for_target,
)
from .models import ModelKind, ModelSpec, make_model, per_sample_gradient
from .data import (
    Dataset,
    SplitSpec,
    gen_synthetic_classification,
    gen_synthetic_regression,
    split,
)
from .io import load_csv
from .harness import RunConfig, RunRecord, emit, load_run_config, sweep, train

__version__ = "0.1.0"

__all__ = [
    'config',
    'update_config',
    'logger',
    'EigenPairs',
    'TransformPair',
    'clamp_eigenvalues',
    'eigendecompose',
    'identity_transform',
    'lowrank_transform',
    'optimal_transform',
    'transformed_covariance_diag',
    'whitening_transform',
    'DiagVarState',
    'FullCovState',
    'LowRankState',
    'streaming_rank_k_update',
    'update_cov_full',
    'update_mean',
    'ClipStrategyConfig',
    'PrivatizedGradient',
    'StrategyKind',
    'adaclip_step',
    'geoclip_step',
    'make_strategy',
    'quantile_step',
    'vanilla_step',
    'EpsilonCurve',
    'PrivacyLedger',
    'PrivacySpec',
    'compose_heterogeneous',
    'epsilon_curve',
    'epsilon_of',
    'rdp_subsampled_gaussian',
    'sigma_for_target',
    'ModelKind',
    'ModelSpec',
    'make_model',
    'per_sample_gradient',
    'Dataset',
    'SplitSpec',
    'gen_synthetic_classification',
    'gen_synthetic_regression',
    'split',
    'load_csv',
    'RunConfig',
    'RunRecord',
    'emit',
    'load_run_config',
    'sweep',
    'train',
]
