"""Analytic class-incremental learning over pre-extracted feature vectors.

The pipeline adapts frozen-backbone features task by task without gradients:
incremental class statistics, a contrastive projection layer solved in closed
form against repulsion-separated class-mean targets, and a pseudo-replay
extreme-learning-machine classifier. Closed-form baselines (raw nearest class
mean, incremental ridge, random-projection ridge) and a benchmark harness are
included.
"""

from .analytic import (
    GramAccumulator,
    RPMatrix,
    accumulate,
    empty_accumulator,
    gelu,
    project,
    random_projection,
    ridge_solve,
)
from .classifier import (
    ElmClassifier,
    ReplaySampler,
    elm_classify,
    elm_scores,
    make_replay_sampler,
    ncm_classify,
    ncm_distances,
    one_hot,
    rebuild_elm,
    sample_replay,
)
from .cp_layer import CPHead, CPState, cp_transform, cp_update, derive_prototypes, make_cp_state
from .features import (
    FeatureDataset,
    SynthSpec,
    TaskSplit,
    TaskStream,
    generate_synthetic,
    ground_truth,
    load_feature_file,
    make_task_stream,
    save_feature_file,
)
from .pipeline import (
    LearnerConfig,
    RunReport,
    build_learner,
    learn_task,
    load_learner,
    parameter_count,
    predict,
    rel_error_reduction,
    run_stream,
    save_learner,
)
from .repulsion import (
    TargetPrototypes,
    cosine_sum,
    delta_signs,
    means_prototypes,
    separate_prototypes,
)
from .stats import ClassStats, WhitenTransform, empty_stats, make_whitener, update_stats

__version__ = "0.1.0"
