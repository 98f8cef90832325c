"""Experiment orchestration: train, estimate, analyze, write reports.

All emitted files are deterministic functions of the config: floats are
serialized with repr, JSON keys are sorted, and no timestamps or absolute
paths appear, so re-running a config reproduces every file byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (
    DistanceRecord,
    ReferralCurve,
    ThresholdPoint,
    distance_perception_summary,
    distance_records,
    referral_curve,
    threshold_curve,
)
from .augment import PerturbationPolicy
from .config import ExperimentConfig, canonical_text, config_hash
from .data import Dataset
from .errors import InvalidInputError, UndefinedMetricError
from .estimators import (
    EstimatorOutput,
    ensemble_predict,
    mc_dropout_predict,
    single_forward,
    tta_predict,
)
from .prob_metrics import (
    PredictionBatch,
    ReliabilityBins,
    accuracy,
    brier_score,
    expected_calibration_error,
    negative_log_likelihood_binary,
    roc_auc,
)
from .mlp import MlpModel, save_model
from .trainer import TrainLog, dataset_from_config, train
from .version import __version__

OUTPUT_ROOT_ENV = "MIXBOOT_OUTPUT_ROOT"
_MC_RNG_KEY = 201
_TTA_RNG_KEY = 202

SWEEP_AXES = {
    "alphas": ("alpha", float),
    "noise_rates": ("noise_rate", float),
    "methods": ("method", str),
    "tta_repeats": ("repeats", int),
    "ensemble_sizes": ("ensemble_size", int),
}
METRICS_CSV_COLUMNS = (
    "method", "noise_rate", "estimator", "roc_auc", "ece", "brier",
    "nll", "accuracy", "seed",
)


@dataclass(frozen=True)
class MetricsReport:
    """One experiment's headline metrics plus provenance."""

    method: str
    noise_rate: float
    estimator: str
    roc_auc: float
    ece: float
    brier: float
    nll: float
    accuracy: float
    seed: int
    config_hash: str
    version: str

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "brier": self.brier,
            "ece": self.ece,
            "nll": self.nll,
            "roc_auc": self.roc_auc,
            "provenance": {
                "config_hash": self.config_hash,
                "estimator": self.estimator,
                "method": self.method,
                "noise_rate": self.noise_rate,
                "seed": self.seed,
                "version": self.version,
            },
        }

    def csv_row(self) -> str:
        return ",".join(
            repr(v) if isinstance(v, float) else str(v)
            for v in (self.method, self.noise_rate, self.estimator,
                      self.roc_auc, self.ece, self.brier, self.nll,
                      self.accuracy, self.seed)
        )


def resolve_output_dir(config: ExperimentConfig) -> Path:
    """Relative output dirs are rooted at $MIXBOOT_OUTPUT_ROOT (default cwd)."""
    out = Path(config.output_dir)
    if out.is_absolute():
        return out
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / out


def train_models(config: ExperimentConfig) -> tuple[Dataset, list[MlpModel], list[TrainLog]]:
    """Train one model, or ensemble_size members differing only by seed."""
    dataset = dataset_from_config(config.train)
    n_models = config.estimator.ensemble_size if config.estimator.kind == "ensemble" else 1
    models, logs = [], []
    for m in range(n_models):
        member_cfg = replace(config.train, seed=config.train.seed + m) if m else config.train
        model, log = train(member_cfg, dataset)
        models.append(model)
        logs.append(log)
    return dataset, models, logs


def estimate(config: ExperimentConfig, models: list[MlpModel],
             inputs: np.ndarray) -> EstimatorOutput:
    kind = config.estimator.kind
    seed = config.train.seed
    if kind == "single":
        return single_forward(models[0], inputs)
    if kind == "ensemble":
        return ensemble_predict(models, inputs)
    if kind == "mc_dropout":
        rng = np.random.default_rng([seed, _MC_RNG_KEY])
        return mc_dropout_predict(models[0], inputs, config.estimator.passes,
                                  config.estimator.tau_inv, rng)
    if kind == "tta":
        policy = PerturbationPolicy(config.estimator.policy_noise_sigma,
                                    config.estimator.policy_scale_jitter)
        rng = np.random.default_rng([seed, _TTA_RNG_KEY])
        return tta_predict(models[0], inputs, policy,
                           config.estimator.repeats, rng)
    raise InvalidInputError(f"unknown estimator kind {kind!r}")


def compute_report(config: ExperimentConfig, batch: PredictionBatch
                   ) -> tuple[MetricsReport, ReliabilityBins]:
    ece, bins = expected_calibration_error(batch, config.analysis.bin_width)
    report = MetricsReport(
        method=config.train.method,
        noise_rate=config.train.noise_rate,
        estimator=config.estimator.kind,
        roc_auc=roc_auc(batch.probs[:, 1], batch.labels),
        ece=ece,
        brier=brier_score(batch),
        nll=negative_log_likelihood_binary(batch),
        accuracy=accuracy(batch),
        seed=config.train.seed,
        config_hash=config_hash(config),
        version=__version__,
    )
    return report, bins


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _provenance_lines(report: MetricsReport) -> str:
    return (f"# config_hash={report.config_hash}\n"
            f"# seed={report.seed}\n"
            f"# version={report.version}\n")


def _metrics_csv(report: MetricsReport) -> str:
    return (_provenance_lines(report)
            + ",".join(METRICS_CSV_COLUMNS) + "\n"
            + report.csv_row() + "\n")


def _reliability_csv(report: MetricsReport, bins: ReliabilityBins) -> str:
    lines = [_provenance_lines(report) + "bin_lo,bin_hi,count,conf_mean,acc,gap"]
    gaps = bins.gaps()
    for i in range(bins.n_bins):
        lines.append(",".join([
            repr(float(bins.edges[i])), repr(float(bins.edges[i + 1])),
            str(int(bins.counts[i])), repr(float(bins.conf_mean[i])),
            repr(float(bins.acc[i])), repr(float(gaps[i])),
        ]))
    return "\n".join(lines) + "\n"


def _referral_csv(report: MetricsReport, curve: ReferralCurve) -> str:
    lines = [_provenance_lines(report) + "rejected_fraction,accuracy,auc,n_retained"]
    for p in curve.points:
        auc = repr(p.auc) if p.auc is not None else "nan"
        lines.append(f"{p.rejected_fraction!r},{p.accuracy!r},{auc},{p.n_retained}")
    return "\n".join(lines) + "\n"


def _threshold_csv(report: MetricsReport, points: list[ThresholdPoint]) -> str:
    lines = [_provenance_lines(report) + "threshold,accuracy,n_retained"]
    for p in points:
        lines.append(f"{p.threshold!r},{p.accuracy!r},{p.n_retained}")
    return "\n".join(lines) + "\n"


def _distance_csv(report: MetricsReport, records: list[DistanceRecord]) -> str:
    lines = [_provenance_lines(report)
             + "sample_index,min_cosine_distance,uncertainty,correct"]
    for r in records:
        lines.append(f"{r.sample_index},{r.min_cosine_distance!r},"
                     f"{r.uncertainty!r},{int(r.correct)}")
    return "\n".join(lines) + "\n"


def _predictions_csv(batch: PredictionBatch) -> str:
    header = "sample_index,label," + ",".join(f"prob_{j}" for j in range(batch.k))
    lines = [header]
    for i in range(batch.n):
        probs = ",".join(repr(float(v)) for v in batch.probs[i])
        lines.append(f"{i},{int(batch.labels[i])},{probs}")
    return "\n".join(lines) + "\n"


def read_predictions(path) -> PredictionBatch:
    """Rebuild the exact PredictionBatch persisted by run_experiment."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    k = len(header) - 2
    labels, probs = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        labels.append(int(parts[1]))
        probs.append([float(p) for p in parts[2:2 + k]])
    return PredictionBatch(np.array(probs), np.array(labels))


def _safe_distance_summary(records: list[DistanceRecord]) -> dict:
    # degenerate geometry (constant distances) leaves the correlation undefined
    try:
        return distance_perception_summary(records)
    except UndefinedMetricError as exc:
        return {"n": len(records), "degenerate": str(exc)}


def run_experiment(config: ExperimentConfig) -> tuple[MetricsReport, Path]:
    """Train, evaluate on the validation split, and write all artifacts."""
    out = resolve_output_dir(config)
    dataset, models, logs = train_models(config)
    output = estimate(config, models, dataset.val_inputs)
    batch = PredictionBatch(output.mean_probs, dataset.val_labels)
    report, bins = compute_report(config, batch)

    correctness = batch.correctness()
    scores = batch.probs[:, 1]
    curve = referral_curve(output.uncertainty, correctness, scores,
                           config.analysis.fractions, labels=batch.labels)
    thresholds = threshold_curve(output.uncertainty, correctness,
                                 config.analysis.thresholds)
    bank = models[0].features(dataset.train_inputs)
    queries = models[0].features(dataset.val_inputs)
    records = distance_records(queries, bank, output.uncertainty, correctness)
    summary = _safe_distance_summary(records)

    _write(out / "config.txt", canonical_text(config))
    if "json" in config.formats:
        _write(out / "metrics.json", _json_text(report.to_dict()))
    if "csv" in config.formats:
        _write(out / "metrics.csv", _metrics_csv(report))
    _write(out / "reliability_bins.csv", _reliability_csv(report, bins))
    _write(out / "referral_curve.csv", _referral_csv(report, curve))
    _write(out / "threshold_curve.csv", _threshold_csv(report, thresholds))
    _write(out / "distance_records.csv", _distance_csv(report, records))
    _write(out / "distance_summary.json", _json_text(summary))
    _write(out / "train_log.json",
           _json_text({"models": [log.to_dict() for log in logs]}))
    _write(out / "predictions.csv", _predictions_csv(batch))
    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    for m, model in enumerate(models):
        save_model(model, models_dir / f"model_{m}.txt")
    return report, out


def _sweep_member_config(base: ExperimentConfig, axis: str, value,
                         ordinal: int) -> ExperimentConfig:
    field, _ = SWEEP_AXES[axis]
    train = replace(base.train, seed=base.train.seed + ordinal)
    estimator = base.estimator
    if axis in ("alphas", "noise_rates", "methods"):
        train = replace(train, **{field: value})
    elif axis == "tta_repeats":
        estimator = replace(estimator, kind="tta", repeats=int(value))
    else:
        estimator = replace(estimator, kind="ensemble", ensemble_size=int(value))
    member_dir = str(Path(base.output_dir) / f"member_{ordinal}")
    return replace(base, train=train, estimator=estimator, output_dir=member_dir)


def run_sweep(base: ExperimentConfig, axis: str, values: list) -> tuple[str, Path]:
    """One experiment per axis value; consolidated CSV ordered as given.

    A failing member becomes a status=error row instead of aborting.
    """
    if axis not in SWEEP_AXES:
        raise InvalidInputError(f"unknown sweep axis {axis!r}; "
                                f"expected one of {tuple(SWEEP_AXES)}")
    if not values:
        raise InvalidInputError("sweep needs at least one value")
    out = resolve_output_dir(base)
    header = "axis,value,status," + ",".join(METRICS_CSV_COLUMNS)
    lines = [f"# config_hash={config_hash(base)}",
             f"# seed={base.train.seed}",
             f"# version={__version__}",
             header]
    for ordinal, value in enumerate(values):
        try:
            member = _sweep_member_config(base, axis, value, ordinal)
            report, _ = run_experiment(member)
            lines.append(f"{axis},{value},ok," + report.csv_row())
        except Exception as exc:  # member failure must not kill the sweep
            empty = ",".join([""] * len(METRICS_CSV_COLUMNS))
            lines.append(f"{axis},{value},error: {type(exc).__name__},{empty}")
    text = "\n".join(lines) + "\n"
    _write(out / "sweep.csv", text)
    return text, out
