"""Domain adaptation with proportion-constrained pseudo-labeling.

A classifier pre-trained on a labeled source domain is adapted to an
unlabeled target domain whose class proportions are known: each epoch, every
target sample gets a pseudo-label from an exact minimum-cost assignment that
matches those proportions, and the model retrains on source labels plus
pseudo-labels.
"""

from .core import (
    Assignment,
    Centroids,
    CountVector,
    FeatureMatrix,
    InfeasibleError,
    LabeledDataset,
    ProportionSpec,
    UnlabeledDataset,
    ValidationError,
    class_counts,
    compute_centroids,
    proportions_to_counts,
)
from .solver import (
    CostMatrix,
    build_cost_matrix,
    brute_force_assignment,
    nearest_centroid_assignment,
    solve_assignment,
)
from .model import (
    BatchPlan,
    Classifier,
    DenseLayer,
    OptimizerState,
    TrainingError,
    adam_step,
    balanced_batches,
    cross_entropy_loss,
    forward,
    forward_batch,
    init_classifier,
    predict,
    proportion_loss,
)
from .adapt import (
    AdaptConfig,
    AdaptReport,
    EpochRecord,
    adapt,
    adapt_proportion_loss_baseline,
    pretrain,
    pseudo_label_epoch,
)
from .metrics import MetricsReport, evaluate
from .synth import (
    ScenarioData,
    ShiftScenario,
    canonical_config,
    canonical_scenario,
    generate_scenario,
    noise_sweep,
    perturb_proportions,
    run_pipeline,
)

__version__ = "0.1.0"
