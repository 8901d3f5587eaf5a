"""Superposable additive RBF networks for interpretable binary
susceptibility modeling: composite-feature expansion, tournament feature
ranking, multistage teacher training, knowledge distillation into
per-feature subnets, evaluation metrics, reference baselines, and
explainability products."""

from .baselines import (
    FiParams,
    LogRModel,
    LrModel,
    MlpConfig,
    MlpModel,
    collinearity_screen,
    failure_index,
    load_logr,
    load_lr,
    logr_score,
    logr_train,
    lr_score,
    lr_train,
    minmax_categorize,
    mlp_baseline_train,
    mlp_score,
    save_logr,
    save_lr,
    wetness,
)
from .dataset import (
    Dataset,
    RasterGrid,
    Standardizer,
    checkerboard_split,
    class_weights,
    cv_subsample,
    dataset_from_rasters,
    load_csv,
    read_esri_ascii,
    save_csv,
    values_to_raster,
    weight_vector,
    write_esri_ascii,
)
from .distill import (
    DistillConfig,
    FractionalResult,
    SubnetFit,
    fractional_distill,
    parallel_distill,
    superpose,
)
from .errors import DataError, NumericalError, UsageError
from .explain import (
    ContributionCurve,
    DeltaSbarMap,
    WindowReport,
    climate_vs_slope_map,
    contribution_curve,
    delta_sbar_map,
    normalized_deltas,
)
from .lm import LmConfig, LmResult, lm_fit, lm_step, weighted_sse
from .metrics import (
    Confusion,
    CvAurocCi,
    RocCurve,
    SuccessRateCurve,
    auroc,
    confusion,
    cv_auroc_ci,
    optimal_threshold,
    roc_curve,
    success_rate_curve,
)
from .monomials import (
    CompositeDesign,
    Monomial,
    canonicalize,
    composite_design,
    evaluate,
    evaluate_matrix,
    expand,
    parse_label,
)
from .pipeline import PipelineConfig, TrainResult, train_snn
from .rbf import (
    SnnModel,
    SnnSubnet,
    SubnetParams,
    fit_subnet,
    init_subnet,
    load_model,
    save_model,
    subnet_eval,
    subnet_jacobian,
)
from .synthetic import AdditiveSpec, ToySpec, gen_additive, gen_raster_demo, gen_toy
from .teacher import TeacherConfig, TeacherModel, soft_targets, train_teacher
from .tournament import (
    Ranking,
    Selection,
    TournamentConfig,
    backwards_eliminate,
    forward_select,
    run_tournament,
)

__version__ = "0.1.0"
