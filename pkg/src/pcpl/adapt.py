"""Pre-training and the iterative adaptation loop.

The loop alternates, once per epoch: (1) extract target features with the
current model, (2) assign pseudo-labels by the count-constrained solver,
(3) one pass of class-balanced mixed-batch training on source (true labels)
plus target (pseudo-labels). Early stopping watches validation macro-F1.

Two baselines share the loop skeleton: nearest-centroid pseudo-labeling
(the unconstrained variant) and proportion-loss fine-tuning (no per-sample
pseudo-labels; target batches pull the mean prediction toward the given
proportions).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .core import (
    CountVector,
    Centroids,
    FeatureMatrix,
    LabeledDataset,
    ProportionSpec,
    UnlabeledDataset,
    ValidationError,
    compute_centroids,
    proportions_to_counts,
)
from .metrics import MetricsReport, evaluate
from .model import (
    OptimizerState,
    Classifier,
    TrainingError,
    adam_step,
    backprop,
    balanced_sample,
    clone_classifier,
    cross_entropy_loss,
    extract_features,
    forward_batch,
    parameters,
    predict,
    proportion_loss,
)
from .solver import Assignment, build_cost_matrix, nearest_centroid_assignment, solve_assignment

__all__ = [
    "AdaptConfig",
    "EpochRecord",
    "AdaptReport",
    "pretrain",
    "pseudo_label_epoch",
    "adapt",
    "adapt_proportion_loss_baseline",
]

MODE_CONSTRAINED = "constrained"
MODE_NEAREST = "nearest-centroid"
MODE_PROPORTION_LOSS = "proportion-loss"


@dataclass(frozen=True)
class AdaptConfig:
    """Training hyperparameters; defaults follow the reference protocol
    (batch 64, 100 epochs, patience 20, Adam at 1e-5 / 1e-6)."""

    max_epochs: int = 100
    patience: int = 20
    pretrain_lr: float = 1e-5
    adapt_lr: float = 1e-6
    batch_size: int = 64
    recompute_centroids: bool = True
    source_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 0:
            raise ValidationError("max_epochs must be >= 0")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValidationError("patience must satisfy 0 <= patience <= max_epochs")
        if self.pretrain_lr <= 0 or self.adapt_lr <= 0:
            raise ValidationError("learning rates must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if not 0.0 <= self.source_fraction <= 1.0:
            raise ValidationError("source_fraction must be in [0, 1]")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_macro_precision: float
    val_macro_recall: float
    val_macro_f1: float
    assignment_cost: float | None = None
    pseudo_counts: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "val_mprecision": self.val_macro_precision,
            "val_mrecall": self.val_macro_recall,
            "val_mf1": self.val_macro_f1,
            "assignment_cost": self.assignment_cost,
            "pseudo_counts": list(self.pseudo_counts) if self.pseudo_counts is not None else None,
        }


@dataclass
class AdaptReport:
    """Experiment bookkeeping: one record per epoch plus the outcome."""

    mode: str
    records: list[EpochRecord]
    best_epoch: int
    final_val: MetricsReport
    target_counts: tuple[int, ...] | None = None
    final_assignment: Assignment | None = None
    final_test: MetricsReport | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "records": [r.to_dict() for r in self.records],
            "best_epoch": self.best_epoch,
            "final_val": self.final_val.to_dict(),
            "target_counts": list(self.target_counts) if self.target_counts is not None else None,
            "final_assignment": (
                self.final_assignment.class_of.tolist() if self.final_assignment is not None else None
            ),
            "final_assignment_cost": (
                self.final_assignment.total_cost if self.final_assignment is not None else None
            ),
            "final_test": self.final_test.to_dict() if self.final_test is not None else None,
        }


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _val_metrics(model: Classifier, val: LabeledDataset) -> MetricsReport:
    return evaluate(val.labels, predict(model, val.features.data), val.num_classes)


class _EarlyStopper:
    """Tracks the best validation macro-F1 and a snapshot of its parameters.

    The incoming model counts as epoch 0, so a loop that never improves
    validation returns the input parameters.
    """

    def __init__(self, model: Classifier, val: LabeledDataset, patience: int):
        self.patience = patience
        self.best_model = clone_classifier(model)
        self.best_metrics = _val_metrics(model, val)
        self.best_epoch = 0
        self.stale = 0

    def observe(self, epoch: int, model: Classifier, val: LabeledDataset) -> tuple[MetricsReport, bool]:
        metrics = _val_metrics(model, val)
        if metrics.macro_f1 >= self.best_metrics.macro_f1:
            # ties still advance the snapshot: on a small validation split
            # plateaus are common and the later model is the more trained one
            if metrics.macro_f1 > self.best_metrics.macro_f1:
                self.stale = 0
            else:
                self.stale += 1
            self.best_metrics = metrics
            self.best_model = clone_classifier(model)
            self.best_epoch = epoch
        else:
            self.stale += 1
        return metrics, self.stale >= self.patience


def pretrain(
    source: LabeledDataset,
    val: LabeledDataset,
    cfg: AdaptConfig,
    model: Classifier | None = None,
) -> tuple[Classifier, list[EpochRecord]]:
    """Supervised training on the source domain with early stopping.

    Returns the parameters of the epoch with the best validation macro-F1
    and the per-epoch history. ``model`` defaults to a fresh MLP classifier
    sized for the source features.
    """
    if source.num_classes != val.num_classes:
        raise ValidationError("source and validation datasets disagree on num_classes")
    from .model import init_classifier

    if model is None:
        model = init_classifier(source.features.d, source.num_classes, seed=cfg.seed)
    model = clone_classifier(model)
    if cfg.max_epochs == 0:
        return model, []

    params = parameters(model)
    opt = OptimizerState.for_params(params, lr=cfg.pretrain_lr)
    stopper = _EarlyStopper(model, val, cfg.patience)
    rng = _rng(cfg.seed, 1)
    x = source.features.data
    steps_per_epoch = ceil(source.n / cfg.batch_size)
    history: list[EpochRecord] = []

    for epoch in range(1, cfg.max_epochs + 1):
        losses = []
        for _ in range(steps_per_epoch):
            idx = balanced_sample(source.labels, source.num_classes, cfg.batch_size, rng)
            _, probs = forward_batch(model, x[idx])
            loss, dlogits = cross_entropy_loss(probs, source.labels[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"epoch {epoch}: non-finite training loss")
            adam_step(params, backprop(model, x[idx], dlogits), opt)
            losses.append(loss)
        metrics, stop = stopper.observe(epoch, model, val)
        history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(losses)),
                val_accuracy=metrics.accuracy,
                val_macro_precision=metrics.macro_precision,
                val_macro_recall=metrics.macro_recall,
                val_macro_f1=metrics.macro_f1,
            )
        )
        if stop:
            break
    return stopper.best_model, history


def pseudo_label_epoch(
    model: Classifier,
    source: LabeledDataset,
    target: UnlabeledDataset,
    counts: CountVector,
    recompute: bool = True,
    base_centroids: Centroids | None = None,
) -> Assignment:
    """One round of proportion-constrained pseudo-labeling.

    Extracts target features under ``model``; centroids come from the source
    features under the same model when ``recompute`` is true, otherwise from
    ``base_centroids`` (the pre-training-time centroids). Mixing feature
    spaces is the caller's responsibility in the latter mode.
    """
    if counts.total != target.n:
        raise ValidationError(f"counts sum to {counts.total}, target has {target.n} samples")
    if recompute:
        feats = extract_features(model, source.features.data)
        centroids = compute_centroids(
            LabeledDataset(FeatureMatrix(feats), source.labels, source.num_classes)
        )
    else:
        if base_centroids is None:
            raise ValidationError("recompute=False requires base_centroids")
        centroids = base_centroids
    target_feats = FeatureMatrix(extract_features(model, target.features.data))
    costs = build_cost_matrix(target_feats, centroids)
    return solve_assignment(costs, counts)


def _mixed_step(
    model: Classifier,
    params: list[np.ndarray],
    opt: OptimizerState,
    src_x: np.ndarray,
    src_y: np.ndarray,
    tgt_x: np.ndarray,
    tgt_y: np.ndarray | None,
    p: ProportionSpec | None,
    epoch: int,
) -> float:
    """One optimizer step on a source half and a target half.

    With target labels: a single cross-entropy step on the concatenated
    batch. Without (proportion-loss mode): cross-entropy on the source half
    plus proportion loss on the target half, gradients summed.
    """
    if tgt_y is not None:
        bx = np.concatenate([src_x, tgt_x]) if src_x.size else tgt_x
        by = np.concatenate([src_y, tgt_y]) if src_x.size else tgt_y
        _, probs = forward_batch(model, bx)
        loss, dlogits = cross_entropy_loss(probs, by)
        if not np.isfinite(loss):
            raise TrainingError(f"epoch {epoch}: non-finite training loss")
        adam_step(params, backprop(model, bx, dlogits), opt)
        return loss

    total = 0.0
    grads = None
    if src_x.size:
        _, probs = forward_batch(model, src_x)
        ce, dlogits = cross_entropy_loss(probs, src_y)
        grads = backprop(model, src_x, dlogits)
        total += ce
    if tgt_x.size:
        _, probs = forward_batch(model, tgt_x)
        pl, dlogits = proportion_loss(probs, p)
        tgrads = backprop(model, tgt_x, dlogits)
        grads = tgrads if grads is None else [a + b for a, b in zip(grads, tgrads)]
        total += pl
    if not np.isfinite(total):
        raise TrainingError(f"epoch {epoch}: non-finite training loss")
    adam_step(params, grads, opt)
    return total


def _run_adaptation(
    model: Classifier,
    source: LabeledDataset,
    target: UnlabeledDataset,
    target_val: LabeledDataset,
    p: ProportionSpec,
    cfg: AdaptConfig,
    mode: str,
) -> tuple[Classifier, AdaptReport]:
    if source.num_classes != target.num_classes or source.num_classes != target_val.num_classes:
        raise ValidationError("datasets disagree on num_classes")
    if p.num_classes != target.num_classes:
        raise ValidationError(
            f"proportions have {p.num_classes} classes, target has {target.num_classes}"
        )
    counts = proportions_to_counts(p, target.n)
    model = clone_classifier(model)

    base_centroids = None
    if mode != MODE_PROPORTION_LOSS and not cfg.recompute_centroids:
        feats = extract_features(model, source.features.data)
        base_centroids = compute_centroids(
            LabeledDataset(FeatureMatrix(feats), source.labels, source.num_classes)
        )

    def assign_pseudo(current: Classifier) -> Assignment:
        if mode == MODE_NEAREST:
            feats = extract_features(current, source.features.data)
            centroids = (
                compute_centroids(
                    LabeledDataset(FeatureMatrix(feats), source.labels, source.num_classes)
                )
                if cfg.recompute_centroids
                else base_centroids
            )
            target_feats = FeatureMatrix(extract_features(current, target.features.data))
            return nearest_centroid_assignment(build_cost_matrix(target_feats, centroids))
        return pseudo_label_epoch(
            current, source, target, counts, cfg.recompute_centroids, base_centroids
        )

    records: list[EpochRecord] = []
    if cfg.max_epochs == 0:
        final_val = _val_metrics(model, target_val)
        assignment = assign_pseudo(model) if mode != MODE_PROPORTION_LOSS else None
        return model, AdaptReport(
            mode=mode,
            records=records,
            best_epoch=0,
            final_val=final_val,
            target_counts=tuple(int(v) for v in counts.n_c),
            final_assignment=assignment,
        )

    params = parameters(model)
    opt = OptimizerState.for_params(params, lr=cfg.adapt_lr)
    stopper = _EarlyStopper(model, target_val, cfg.patience)
    rng = _rng(cfg.seed, 2)
    src_x = source.features.data
    tgt_x = target.features.data
    steps_per_epoch = ceil((source.n + target.n) / cfg.batch_size)
    n_src = int(round(cfg.batch_size * cfg.source_fraction))
    n_tgt = cfg.batch_size - n_src

    for epoch in range(1, cfg.max_epochs + 1):
        assignment = None
        pseudo_labels = None
        if mode != MODE_PROPORTION_LOSS:
            assignment = assign_pseudo(model)
            pseudo_labels = assignment.class_of
        losses = []
        for _ in range(steps_per_epoch):
            si = (
                balanced_sample(source.labels, source.num_classes, n_src, rng)
                if n_src
                else np.empty(0, dtype=np.int64)
            )
            if mode == MODE_PROPORTION_LOSS:
                ti = rng.integers(0, target.n, size=n_tgt) if n_tgt else np.empty(0, dtype=np.int64)
                ty = None
            else:
                ti = (
                    balanced_sample(pseudo_labels, target.num_classes, n_tgt, rng)
                    if n_tgt
                    else np.empty(0, dtype=np.int64)
                )
                ty = pseudo_labels[ti]
            losses.append(
                _mixed_step(
                    model, params, opt, src_x[si], source.labels[si], tgt_x[ti], ty, p, epoch
                )
            )
        metrics, stop = stopper.observe(epoch, model, target_val)
        records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(losses)),
                val_accuracy=metrics.accuracy,
                val_macro_precision=metrics.macro_precision,
                val_macro_recall=metrics.macro_recall,
                val_macro_f1=metrics.macro_f1,
                assignment_cost=assignment.total_cost if assignment is not None else None,
                pseudo_counts=(
                    tuple(int(v) for v in assignment.counts.n_c) if assignment is not None else None
                ),
            )
        )
        if stop:
            break

    best = stopper.best_model
    final_assignment = assign_pseudo(best) if mode != MODE_PROPORTION_LOSS else None
    report = AdaptReport(
        mode=mode,
        records=records,
        best_epoch=stopper.best_epoch,
        final_val=stopper.best_metrics,
        target_counts=tuple(int(v) for v in counts.n_c),
        final_assignment=final_assignment,
    )
    return best, report


def adapt(
    model: Classifier,
    source: LabeledDataset,
    target: UnlabeledDataset,
    target_val: LabeledDataset,
    p: ProportionSpec,
    cfg: AdaptConfig,
    pseudo_labeling: str = MODE_CONSTRAINED,
) -> tuple[Classifier, AdaptReport]:
    """Adapt a pre-trained classifier to the target domain.

    ``pseudo_labeling`` selects the assignment rule: "constrained" (count
    constraints enforced exactly, the default) or "nearest-centroid" (the
    unconstrained self-training variant). The input model is not mutated.
    """
    if pseudo_labeling not in (MODE_CONSTRAINED, MODE_NEAREST):
        raise ValidationError(f"unknown pseudo_labeling mode {pseudo_labeling!r}")
    return _run_adaptation(model, source, target, target_val, p, cfg, pseudo_labeling)


def adapt_proportion_loss_baseline(
    model: Classifier,
    source: LabeledDataset,
    target: UnlabeledDataset,
    target_val: LabeledDataset,
    p: ProportionSpec,
    cfg: AdaptConfig,
) -> tuple[Classifier, AdaptReport]:
    """Fine-tune with proportion loss on target batches instead of pseudo-labels."""
    return _run_adaptation(model, source, target, target_val, p, cfg, MODE_PROPORTION_LOSS)
