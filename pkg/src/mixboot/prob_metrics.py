"""Stateless metric kernels over batches of class-probability predictions.

Entropy, expected calibration error with reliability bins, binary NLL,
Brier score, ROC-AUC and accuracy.  All functions are pure and safe to
call concurrently; sums accumulate in a fixed order within one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError, UndefinedMetricError, UnsupportedShapeError

ROW_SUM_TOL = 1e-6
LOG_EPS = 1e-12


@dataclass
class PredictionBatch:
    """N rows of K class probabilities plus N integer labels.

    Rows must sum to 1 within 1e-6, every probability must lie in [0, 1]
    and every label must be a valid class index.
    """

    probs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.probs.ndim != 2:
            raise InvalidInputError(f"probs must be N x K, got shape {self.probs.shape}")
        n, k = self.probs.shape
        if self.labels.shape != (n,):
            raise InvalidInputError(
                f"labels must have length {n}, got shape {self.labels.shape}"
            )
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        row_sums = self.probs.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            raise InvalidInputError("every probability row must sum to 1 within 1e-6")
        if n > 0 and (self.labels.min() < 0 or self.labels.max() >= k):
            raise InvalidInputError(f"labels must lie in 0..{k - 1}")

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def k(self) -> int:
        return self.probs.shape[1]

    def confidences(self) -> np.ndarray:
        """Per-sample confidence: the maximum class probability."""
        return self.probs.max(axis=1)

    def predictions(self) -> np.ndarray:
        """Predicted class per sample, lowest index winning ties."""
        return self.probs.argmax(axis=1)

    def correctness(self) -> np.ndarray:
        return (self.predictions() == self.labels).astype(np.float64)


@dataclass
class ReliabilityBins:
    """Per-bin counts, mean confidences and empirical accuracies.

    Bin m covers the half-open interval (m*w, (m+1)*w]; a confidence of
    exactly 0 lands in the first bin.  conf_mean/acc are NaN for empty bins.
    """

    bin_width: float
    counts: np.ndarray
    conf_mean: np.ndarray
    acc: np.ndarray
    edges: np.ndarray = field(repr=False)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def gaps(self) -> np.ndarray:
        """|conf - acc| per bin, NaN where the bin is empty."""
        return np.abs(self.conf_mean - self.acc)


def predictive_entropy(probs_row: np.ndarray) -> float:
    """Shannon entropy of one probability row, in nats, with 0*ln(0) = 0."""
    p = np.asarray(probs_row, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidInputError("predictive_entropy expects a single probability row")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidInputError("probability row must sum to 1 within 1e-6")
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


def reliability_bins(batch: PredictionBatch, bin_width: float = 0.1) -> ReliabilityBins:
    """Bin samples by confidence into (m*w, (m+1)*w] intervals."""
    if batch.n == 0:
        raise InvalidInputError("cannot bin an empty batch")
    if not 0.0 < bin_width <= 1.0:
        raise InvalidInputError("bin_width must lie in (0, 1]")
    n_bins = int(np.ceil(1.0 / bin_width))
    edges = np.minimum(bin_width * np.arange(n_bins + 1), 1.0)
    conf = batch.confidences()
    correct = batch.correctness()
    # searchsorted(edges, c, 'left') - 1 realizes the (lo, hi] convention;
    # confidence 0 is pushed into bin 0.
    idx = np.searchsorted(edges, conf, side="left") - 1
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=correct, minlength=n_bins)
    with np.errstate(invalid="ignore"):
        conf_mean = conf_sum / counts
        acc = acc_sum / counts
    return ReliabilityBins(
        bin_width=float(bin_width),
        counts=counts,
        conf_mean=conf_mean,
        acc=acc,
        edges=edges,
    )


def expected_calibration_error(
    batch: PredictionBatch, bin_width: float = 0.1
) -> tuple[float, ReliabilityBins]:
    """Bin-weighted mean |confidence - accuracy| gap, plus the bins used."""
    bins = reliability_bins(batch, bin_width)
    nonempty = bins.counts > 0
    weights = bins.counts[nonempty] / batch.n
    gaps = np.abs(bins.conf_mean[nonempty] - bins.acc[nonempty])
    return float((weights * gaps).sum()), bins


def negative_log_likelihood_binary(batch: PredictionBatch) -> float:
    """Mean -ln p(true class), binary only, probabilities clamped by 1e-12."""
    if batch.k != 2:
        raise UnsupportedShapeError(f"binary NLL requires K = 2, got K = {batch.k}")
    if batch.n == 0:
        raise InvalidInputError("cannot score an empty batch")
    p_true = batch.probs[np.arange(batch.n), batch.labels]
    p_true = np.clip(p_true, LOG_EPS, 1.0 - LOG_EPS)
    return float(-np.log(p_true).mean())


def brier_score(batch: PredictionBatch) -> float:
    """Mean over samples of K^-1 * sum_k (onehot_k - p_k)^2."""
    if batch.n == 0:
        raise InvalidInputError("cannot score an empty batch")
    onehot = np.zeros_like(batch.probs)
    onehot[np.arange(batch.n), batch.labels] = 1.0
    return float(((onehot - batch.probs) ** 2).sum(axis=1).mean() / batch.k)


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney ROC-AUC with average ranks for tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InvalidInputError("scores and labels must be equal-length 1-D arrays")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC-AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def accuracy(batch: PredictionBatch) -> float:
    """Fraction of samples whose argmax probability hits the label."""
    if batch.n == 0:
        raise InvalidInputError("cannot score an empty batch")
    return float(batch.correctness().mean())
