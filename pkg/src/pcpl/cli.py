"""Command-line entry point.

Thin composition of the library modules: every subcommand parses flags,
loads files through the io module, calls one pipeline function and writes
io-module formats. Stdout stays machine-readable (JSON or CSV); diagnostics
go to stderr. Exit codes: 0 success, 1 validation/format problems, 2
infeasible assignment instances.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as pio
from .adapt import MODE_CONSTRAINED, MODE_NEAREST, MODE_PROPORTION_LOSS, AdaptConfig, adapt, adapt_proportion_loss_baseline, pretrain
from .core import (
    Centroids,
    FeatureMatrix,
    InfeasibleError,
    LabeledDataset,
    ProportionSpec,
    UnlabeledDataset,
    ValidationError,
    compute_centroids,
    proportions_to_counts,
)
from .metrics import evaluate
from .model import extract_features, init_classifier, predict
from .solver import build_cost_matrix, solve_assignment
from .synth import ShiftScenario, canonical_scenario, generate_scenario, noise_sweep

__all__ = ["main", "run"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract is exit 1 with
    # a one-line diagnostic.
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _load_config(path: str | None, seed: int | None) -> AdaptConfig:
    cfg = pio.read_config(path) if path else AdaptConfig()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _load_labeled(features_path, labels_path, num_classes: int) -> LabeledDataset:
    features = pio.read_features(features_path)
    labels = pio.read_labels(labels_path)
    return LabeledDataset(features, labels, num_classes)


def _infer_num_classes(*label_arrays) -> int:
    top = 0
    for arr in label_arrays:
        if arr.size:
            top = max(top, int(arr.max()))
    return top + 1


_SCENARIO_KEYS = {
    "source_means",
    "cov_scale",
    "translation",
    "rotation_degrees",
    "source_proportions",
    "target_proportions",
    "n_source",
    "n_target_train",
    "n_target_test",
    "seed",
    "val_per_class",
}


def _load_scenario(path: str | None, seed: int | None) -> ShiftScenario:
    base = canonical_scenario()
    if path is None:
        scenario = base
    else:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise pio.FormatError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(data, dict):
            raise pio.FormatError(f"{path}: expected a JSON object")
        for key in data:
            if key not in _SCENARIO_KEYS:
                raise pio.FormatError(f"{path}: unknown scenario key {key!r}")
        scenario = ShiftScenario(
            source_means=np.asarray(data.get("source_means", base.source_means), dtype=np.float64),
            cov_scale=float(data.get("cov_scale", base.cov_scale)),
            translation=np.asarray(data.get("translation", base.translation), dtype=np.float64),
            rotation=np.deg2rad(float(data["rotation_degrees"]))
            if "rotation_degrees" in data
            else base.rotation,
            source_proportions=ProportionSpec(np.asarray(data["source_proportions"], dtype=np.float64))
            if "source_proportions" in data
            else base.source_proportions,
            target_proportions=ProportionSpec(np.asarray(data["target_proportions"], dtype=np.float64))
            if "target_proportions" in data
            else base.target_proportions,
            n_source=int(data.get("n_source", base.n_source)),
            n_target_train=int(data.get("n_target_train", base.n_target_train)),
            n_target_test=int(data.get("n_target_test", base.n_target_test)),
            seed=int(data.get("seed", base.seed)),
            val_per_class=int(data.get("val_per_class", base.val_per_class)),
        )
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    return scenario


def _cmd_pretrain(args) -> int:
    cfg = _load_config(args.config, args.seed)
    source_labels = pio.read_labels(args.source_labels)
    val_labels = pio.read_labels(args.val_labels)
    num_classes = args.num_classes or _infer_num_classes(source_labels, val_labels)
    source = _load_labeled(args.source_features, args.source_labels, num_classes)
    val = _load_labeled(args.val_features, args.val_labels, num_classes)
    hidden = tuple(int(v) for v in args.hidden.split(",") if v.strip()) if args.hidden else ()
    model = init_classifier(
        source.features.d, num_classes, hidden=hidden, activation=args.activation, seed=cfg.seed
    )
    model, history = pretrain(source, val, cfg, model)
    pio.write_checkpoint(model, args.out_model)
    # ties on val macro-F1 resolve to the later epoch, matching the snapshot rule
    best = max(reversed(history), key=lambda r: r.val_macro_f1) if history else None
    _emit(
        {
            "epochs_run": len(history),
            "best_epoch": best.epoch if best else 0,
            "best_val_mf1": best.val_macro_f1 if best else None,
            "out_model": args.out_model,
        }
    )
    return 0


def _cmd_adapt(args) -> int:
    cfg = _load_config(args.config, args.seed)
    model = pio.read_checkpoint(args.model)
    num_classes = model.num_classes
    source = _load_labeled(args.source_features, args.source_labels, num_classes)
    target = UnlabeledDataset(pio.read_features(args.target_features), num_classes)
    target_val = _load_labeled(args.val_features, args.val_labels, num_classes)
    p = pio.read_proportions(args.proportions)
    if args.baseline == "proportion-loss":
        adapted, report = adapt_proportion_loss_baseline(model, source, target, target_val, p, cfg)
    else:
        mode = MODE_NEAREST if args.baseline == "nearest-centroid" else MODE_CONSTRAINED
        adapted, report = adapt(model, source, target, target_val, p, cfg, mode)
    pio.write_checkpoint(adapted, args.out_model)
    pio.write_report(report, args.out_report)
    _emit(
        {
            "mode": report.mode,
            "epochs_run": len(report.records),
            "best_epoch": report.best_epoch,
            "best_val_mf1": report.final_val.macro_f1,
            "out_model": args.out_model,
            "out_report": args.out_report,
        }
    )
    return 0


def _cmd_assign(args) -> int:
    features = pio.read_features(args.features)
    p = pio.read_proportions(args.proportions)
    num_classes = p.num_classes
    if args.centroid_file:
        mu = pio.read_features(args.centroid_file)
        if mu.n != num_classes:
            raise ValidationError(
                f"centroid file has {mu.n} rows, proportions have {num_classes} classes"
            )
        centroids = Centroids(mu.data)
        target_feats = features
    else:
        if not (args.model and args.source_features and args.source_labels):
            raise ValidationError(
                "assign needs either --centroid-file or --model with --source-features/--source-labels"
            )
        model = pio.read_checkpoint(args.model)
        if model.num_classes != num_classes:
            raise ValidationError(
                f"model predicts {model.num_classes} classes, proportions have {num_classes}"
            )
        source = _load_labeled(args.source_features, args.source_labels, num_classes)
        src_feats = FeatureMatrix(extract_features(model, source.features.data))
        centroids = compute_centroids(LabeledDataset(src_feats, source.labels, num_classes))
        target_feats = FeatureMatrix(extract_features(model, features.data))
    counts = proportions_to_counts(p, target_feats.n)
    assignment = solve_assignment(build_cost_matrix(target_feats, centroids), counts)
    pio.write_labels(assignment.class_of, args.out_labels)
    _emit(
        {
            "total_cost": assignment.total_cost,
            "counts": assignment.counts.n_c.tolist(),
            "out_labels": args.out_labels,
        }
    )
    return 0


def _cmd_eval(args) -> int:
    model = pio.read_checkpoint(args.model)
    features = pio.read_features(args.features)
    labels = pio.read_labels(args.labels)
    if labels.shape[0] != features.n:
        raise ValidationError(
            f"label count {labels.shape[0]} does not match feature rows {features.n}"
        )
    preds = predict(model, features.data)
    report = evaluate(labels, preds, model.num_classes)
    _emit(report.to_dict())
    return 0


def _cmd_synth(args) -> int:
    scenario = _load_scenario(args.scenario_config, args.seed)
    data = generate_scenario(scenario)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pio.write_features(data.source.features, out / "source_features.pcpl")
    pio.write_labels(data.source.labels, out / "source_labels.txt")
    pio.write_features(data.target_train.features, out / "target_train_features.pcpl")
    pio.write_labels(data.target_train_labels, out / "target_train_hidden_labels.txt")
    pio.write_features(data.target_val.features, out / "target_val_features.pcpl")
    pio.write_labels(data.target_val.labels, out / "target_val_labels.txt")
    pio.write_features(data.target_test.features, out / "target_test_features.pcpl")
    pio.write_labels(data.target_test.labels, out / "target_test_labels.txt")
    pio.write_proportions(scenario.target_proportions, out / "target_proportions.json")
    summary = {
        "num_classes": scenario.num_classes,
        "dim": scenario.dim,
        "seed": scenario.seed,
        "n_source": scenario.n_source,
        "n_target_train": scenario.n_target_train,
        "n_target_val": scenario.num_classes * scenario.val_per_class,
        "n_target_test": scenario.n_target_test,
        "target_proportions": [float(v) for v in scenario.target_proportions.p],
    }
    (out / "scenario.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    _emit({"out_dir": str(out), **summary})
    return 0


def _cmd_noise_sweep(args) -> int:
    scenario = _load_scenario(args.scenario_config, args.seed)
    cfg = _load_config(args.config, args.seed)
    deltas = [float(v) for v in args.deltas.split(",") if v.strip()]
    table = noise_sweep(scenario, deltas, args.repeats, cfg)
    Path(args.out_csv).write_text(table.to_csv(), encoding="ascii")
    _emit({"out_csv": args.out_csv, "aggregates": table.aggregates()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcpl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="supervised training on source features")
    p.add_argument("--source-features", required=True)
    p.add_argument("--source-labels", required=True)
    p.add_argument("--val-features", required=True)
    p.add_argument("--val-labels", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out-model", required=True)
    p.add_argument("--hidden", default="64,32", help="comma list of layer widths, empty for identity")
    p.add_argument("--activation", default="softplus")
    p.add_argument("--num-classes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_pretrain)

    p = sub.add_parser("adapt", help="adapt a pre-trained model to target features")
    p.add_argument("--model", required=True)
    p.add_argument("--source-features", required=True)
    p.add_argument("--source-labels", required=True)
    p.add_argument("--target-features", required=True)
    p.add_argument("--proportions", required=True)
    p.add_argument("--val-features", required=True)
    p.add_argument("--val-labels", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--baseline", choices=["nearest-centroid", "proportion-loss"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_adapt)

    p = sub.add_parser("assign", help="one-shot count-constrained assignment, no training")
    p.add_argument("--features", required=True)
    p.add_argument("--proportions", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--centroid-file", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--source-features", default=None)
    p.add_argument("--source-labels", default=None)
    p.set_defaults(fn=_cmd_assign)

    p = sub.add_parser("eval", help="score a model on labeled features")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic domain-shift dataset")
    p.add_argument("--scenario-config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("noise-sweep", help="adaptation under noisy proportions")
    p.add_argument("--scenario-config", default=None)
    p.add_argument("--deltas", default="0,0.01,0.05,0.1")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--config", default=None)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_noise_sweep)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except InfeasibleError as e:
        print(f"pcpl {args.command}: infeasible: {e}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as e:
        print(f"pcpl {args.command}: error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
