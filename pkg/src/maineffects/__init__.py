"""Main-effect estimation for black-box models.

Three estimators over one batched prediction interface: partial dependence,
accumulated local effects, and accumulation of locally D-optimal factorial
slopes, plus the benchmark harness that verifies their variance and accuracy
behavior.
"""

__version__ = "0.1.0"

from .benchmarks import (
    DependenceSpec,
    evaluate_function,
    get_function,
    ground_truth_main_effect,
    sample_inputs,
)
from .binning import assign_bins, locate, quantile_partition
from .core import (
    BinIndexSets,
    Dataset,
    EffectCurve,
    ExperimentConfig,
    Normalizer,
    Partition,
    center_curve,
    fit_normalizer,
)
from .estimators import (
    BinIncrement,
    LocalDesign,
    SlopeVector,
    bin_increment_variance,
    build_local_design,
    estimate_a2d2e,
    estimate_ale,
    estimate_curves,
    estimate_pd,
    local_slopes_fast,
    local_slopes_ols,
    slope_matrix,
)
from .evaluation import (
    OrmseReport,
    VarianceReport,
    aggregate_ormse,
    ormse,
    run_benchmark_suite,
    run_consistency_experiment,
    run_variance_experiment,
)
from .predictors import (
    AnalyticPredictor,
    CountingPredictor,
    MemoizedPredictor,
    NNTrainConfig,
    NoisyPredictor,
    Predictor,
    PredictorError,
    SubprocessPredictor,
    TinyNN,
    calibrate_noise_sigma,
    train_tiny_nn,
    wrap_with_noise,
)
