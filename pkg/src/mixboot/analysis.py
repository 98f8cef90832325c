"""Decision-referral curves, uncertainty thresholds, feature distances and
rank correlation between similarity and uncertainty."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .errors import InvalidInputError, UndefinedMetricError
from .prob_metrics import roc_auc

EXACT_PERMUTATION_MAX_N = 10
_PERM_CHUNK = 100_000


@dataclass(frozen=True)
class ReferralPoint:
    rejected_fraction: float
    accuracy: float
    auc: float | None
    n_retained: int


@dataclass(frozen=True)
class ReferralCurve:
    """Accuracy/AUC of the retained set as the most-uncertain samples are
    rejected; auc is None where only one class remains."""

    points: tuple[ReferralPoint, ...]


@dataclass(frozen=True)
class ThresholdPoint:
    threshold: float
    accuracy: float
    n_retained: int


@dataclass(frozen=True)
class DistanceRecord:
    """Per-sample min cosine distance to the train bank plus its uncertainty."""

    sample_index: int
    min_cosine_distance: float
    uncertainty: float
    correct: bool


def _check_fractions(fractions) -> np.ndarray:
    f = np.unique(np.asarray(fractions, dtype=np.float64))
    if f.size == 0:
        raise InvalidInputError("fractions must be nonempty")
    if f.min() < 0.0 or f.max() >= 1.0:
        raise InvalidInputError("fractions must lie in [0, 1)")
    return f


def _labels_from_scores(scores: np.ndarray, correctness: np.ndarray) -> np.ndarray:
    # binary positive-class scores: predicted = score > 0.5, and the true
    # label is the prediction iff the sample is correct
    predicted = (scores > 0.5).astype(np.int64)
    return np.where(correctness.astype(bool), predicted, 1 - predicted)


def referral_curve(
    uncertainties: np.ndarray,
    correctness: np.ndarray,
    scores: np.ndarray,
    fractions,
    labels: np.ndarray | None = None,
) -> ReferralCurve:
    """Reject the ceil(f*N) most-uncertain samples per fraction f.

    Ties in uncertainty are broken by sample index.  ``scores`` are binary
    positive-class probabilities used for the retained-set ROC-AUC; true
    labels are reconstructed from scores and correctness unless given.
    """
    u = np.asarray(uncertainties, dtype=np.float64)
    c = np.asarray(correctness, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if not (len(u) == len(c) == len(s)) or len(u) == 0:
        raise InvalidInputError("uncertainties, correctness, scores must match")
    fracs = _check_fractions(fractions)
    y = np.asarray(labels) if labels is not None else _labels_from_scores(s, c)
    if len(y) != len(u):
        raise InvalidInputError("labels length must match")

    order = np.argsort(-u, kind="stable")  # most uncertain first, index ties
    n = len(u)
    points = []
    for f in fracs:
        n_reject = int(math.ceil(f * n))
        retained = np.sort(order[n_reject:])
        if retained.size == 0:
            warnings.warn(f"fraction {f} rejects every sample; point excluded")
            continue
        acc = float(c[retained].mean())
        if len(np.unique(y[retained])) < 2:
            auc = None
        else:
            auc = roc_auc(s[retained], y[retained])
        points.append(ReferralPoint(float(f), acc, auc, int(retained.size)))
    return ReferralCurve(tuple(points))


def threshold_curve(
    uncertainties: np.ndarray, correctness: np.ndarray, thresholds
) -> list[ThresholdPoint]:
    """Retain samples with uncertainty <= t for each threshold t."""
    u = np.asarray(uncertainties, dtype=np.float64)
    c = np.asarray(correctness, dtype=np.float64)
    if len(u) != len(c) or len(u) == 0:
        raise InvalidInputError("uncertainties and correctness must match")
    out = []
    for t in np.unique(np.asarray(thresholds, dtype=np.float64)):
        keep = u <= t
        if not keep.any():
            warnings.warn(f"threshold {t} retains no samples; point excluded")
            continue
        out.append(ThresholdPoint(float(t), float(c[keep].mean()), int(keep.sum())))
    return out


def _nonzero_bank(bank: np.ndarray) -> np.ndarray:
    b = np.asarray(bank, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] == 0:
        raise InvalidInputError("bank must be a nonempty M x H array")
    keep = np.sqrt((b * b).sum(axis=1)) > 0.0
    if not keep.any():
        raise InvalidInputError("bank has no nonzero row")
    return b[keep]


def min_cosine_distance(query_features: np.ndarray, train_bank: np.ndarray) -> float:
    """1 - max cosine similarity between the query and any bank row."""
    q = np.asarray(query_features, dtype=np.float64)
    if q.ndim != 1:
        raise InvalidInputError("query must be a single H-vector")
    if np.sqrt((q * q).sum()) == 0.0:
        raise InvalidInputError("zero-norm query has no direction")
    bank = _nonzero_bank(train_bank)
    return float(_kernels.min_cosine_distances(q[None, :], bank)[0])


def min_cosine_distances(queries: np.ndarray, train_bank: np.ndarray) -> np.ndarray:
    """Batch form; zero-norm queries yield NaN instead of an error."""
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2:
        raise InvalidInputError("queries must be an N x H array")
    bank = _nonzero_bank(train_bank)
    norms = np.sqrt((q * q).sum(axis=1))
    out = np.full(q.shape[0], np.nan)
    ok = norms > 0.0
    if ok.any():
        out[ok] = _kernels.min_cosine_distances(q[ok], bank)
    return out


def distance_records(
    query_features: np.ndarray,
    bank_features: np.ndarray,
    uncertainties: np.ndarray,
    correctness: np.ndarray,
) -> list[DistanceRecord]:
    d = min_cosine_distances(query_features, bank_features)
    u = np.asarray(uncertainties, dtype=np.float64)
    c = np.asarray(correctness)
    if not (len(d) == len(u) == len(c)):
        raise InvalidInputError("features, uncertainties, correctness must match")
    return [
        DistanceRecord(i, float(d[i]), float(u[i]), bool(c[i]))
        for i in range(len(d))
    ]


def _rank(x: np.ndarray) -> np.ndarray:
    return stats.rankdata(x, method="average")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    am = a - a.mean()
    bm = b - b.mean()
    return float((am * bm).sum() / np.sqrt((am * am).sum() * (bm * bm).sum()))


def _exact_two_tailed_p(xr: np.ndarray, yr: np.ndarray, rho_obs: float) -> float:
    """Permutation p-value: share of y-rank permutations with |rho| >= |rho_obs|."""
    n = len(xr)
    xm = xr - xr.mean()
    denom = np.sqrt((xm * xm).sum() * ((yr - yr.mean()) ** 2).sum())
    target = abs(rho_obs) - 1e-12
    count = 0
    total = 0
    perms = itertools.permutations(yr)
    while True:
        chunk = np.array(list(itertools.islice(perms, _PERM_CHUNK)))
        if chunk.size == 0:
            break
        rhos = (chunk - yr.mean()) @ xm / denom
        count += int((np.abs(rhos) >= target).sum())
        total += chunk.shape[0]
    return count / total


def spearman(x: np.ndarray, y: np.ndarray, exact: bool = False) -> tuple[float, float]:
    """Rank correlation with average ranks for ties, plus a two-tailed p.

    The p-value uses the t approximation t = rho*sqrt((N-2)/(1-rho^2))
    with N-2 degrees of freedom; ``exact`` switches to a full permutation
    test (only for N <= 10).
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1 or len(xa) != len(ya):
        raise InvalidInputError("x and y must be equal-length 1-D arrays")
    n = len(xa)
    if n < 3:
        raise InvalidInputError("spearman needs at least 3 samples")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise UndefinedMetricError("correlation undefined for a constant vector")
    xr, yr = _rank(xa), _rank(ya)
    rho = _pearson(xr, yr)
    if exact:
        if n > EXACT_PERMUTATION_MAX_N:
            raise InvalidInputError(
                f"exact mode supports N <= {EXACT_PERMUTATION_MAX_N}"
            )
        return rho, _exact_two_tailed_p(xr, yr, rho)
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return rho, p


def distance_perception_summary(
    records: list[DistanceRecord], exact: bool = False
) -> dict:
    """Spearman of uncertainty vs. similarity (1 - distance) and vs. distance.

    NaN-distance records (zero-norm features) are dropped first.
    """
    d = np.array([r.min_cosine_distance for r in records])
    u = np.array([r.uncertainty for r in records])
    ok = np.isfinite(d)
    d, u = d[ok], u[ok]
    rho_sim, p_sim = spearman(1.0 - d, u, exact=exact)
    rho_dist, p_dist = spearman(d, u, exact=exact)
    return {
        "n": int(ok.sum()),
        "n_dropped": int((~ok).sum()),
        "rho_similarity": rho_sim,
        "p_similarity": p_sim,
        "rho_distance": rho_dist,
        "p_distance": p_dist,
    }
