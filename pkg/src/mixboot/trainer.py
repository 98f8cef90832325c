"""Minibatch training of the dropout MLP under four loss regimes.

Regimes: plain cross-entropy (ce), cross-entropy on perturbed inputs
(ce_aug), mixup cross-entropy (mixup_ce), and bootstrapped mixup (bsm).
For bsm, a two-component beta mixture is refit after every epoch on that
epoch's per-sample cross-entropy losses (unmixed inputs, dropout off),
and the resulting noisy-posterior weights drive the next epoch; the first
``warmup_epochs`` epochs use w = 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from . import _kernels
from .augment import PerturbationPolicy, mixup_batch, perturb
from .data import GENERATORS, Dataset, build_dataset
from .errors import ConfigError, TrainingDivergenceError
from .losses import batch_bsm_targets, batch_mixup_targets, batch_onehot
from .mlp import MlpModel, adam_init, backward_step, forward, kaiming_init
from .noise_model import BetaMixtureModel, fit_bmm, noisy_posterior, normalize_losses

METHODS = ("ce", "ce_aug", "mixup_ce", "bsm")

# fixed per-purpose rng stream keys, combined with the config seed
_INIT_KEY = 1
_SHUFFLE_KEY = 2
_DROPOUT_KEY = 3
_MIXUP_KEY = 4
_AUGMENT_KEY = 5


@dataclass(frozen=True)
class TrainConfig:
    """Optimization recipe plus the dataset it trains on."""

    method: str = "ce"
    alpha: float = 0.3
    noise_rate: float = 0.0
    learning_rate: float = 5e-4
    lr_decay: float = 0.95
    weight_decay: float = 5e-4
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 20
    warmup_epochs: int = 1
    seed: int = 0
    generator: str = "two_moons"
    n_train: int = 2000
    n_val: int = 500
    generator_noise: float = 0.2
    hidden_1: int = 64
    hidden_2: int = 64
    dropout: float = 0.2
    soft_bootstrap: bool = False
    aug_noise_sigma: float = 0.1
    aug_scale_jitter: float = 0.0

    def __post_init__(self):
        checks = [
            (self.method in METHODS, f"method must be one of {METHODS}"),
            (self.alpha > 0.0, "alpha must be positive"),
            (0.0 <= self.noise_rate <= 1.0, "noise_rate must lie in [0, 1]"),
            (self.learning_rate > 0.0, "learning_rate must be positive"),
            (0.0 < self.lr_decay <= 1.0, "lr_decay must lie in (0, 1]"),
            (self.weight_decay >= 0.0, "weight_decay must be nonnegative"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.max_epochs >= 1, "max_epochs must be >= 1"),
            (self.patience >= 1, "patience must be >= 1"),
            (self.warmup_epochs >= 0, "warmup_epochs must be nonnegative"),
            (self.generator in GENERATORS, f"generator must be one of {GENERATORS}"),
            (self.n_train >= 2, "n_train must be >= 2"),
            (self.n_val >= 2, "n_val must be >= 2"),
            (self.hidden_1 >= 1 and self.hidden_2 >= 1, "hidden sizes must be >= 1"),
            (0.0 <= self.dropout < 1.0, "dropout must lie in [0, 1)"),
            (self.aug_noise_sigma >= 0.0, "aug_noise_sigma must be nonnegative"),
            (self.aug_scale_jitter >= 0.0, "aug_scale_jitter must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)


@dataclass
class TrainLog:
    """Per-epoch training history, JSON-serializable via to_dict()."""

    method: str
    seed: int
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    clean_ce: list[float] = field(default_factory=list)
    flipped_ce: list[float] = field(default_factory=list)
    bmm: list[dict | None] = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = -1.0
    stopped_epoch: int = -1

    def to_dict(self) -> dict:
        def clean(v):
            return None if (isinstance(v, float) and not math.isfinite(v)) else v

        d = asdict(self)
        d["clean_ce"] = [clean(v) for v in d["clean_ce"]]
        d["flipped_ce"] = [clean(v) for v in d["flipped_ce"]]
        return d


def dataset_from_config(config: TrainConfig) -> Dataset:
    return build_dataset(
        config.generator,
        config.n_train,
        config.n_val,
        config.generator_noise,
        config.noise_rate,
        config.seed,
    )


def _bmm_record(model: BetaMixtureModel) -> dict:
    return {
        "alpha_1": model.alpha_1,
        "beta_1": model.beta_1,
        "alpha_2": model.alpha_2,
        "beta_2": model.beta_2,
        "pi": model.pi,
        "uninformative": model.uninformative,
    }


def _per_sample_ce(model: MlpModel, inputs: np.ndarray, labels: np.ndarray,
                   k: int) -> np.ndarray:
    """No-gradient, no-dropout per-sample cross-entropy losses."""
    logits = model.predict_logits(inputs)
    values, _ = _kernels.loss_from_targets(logits, batch_onehot(labels, k))
    return values


def train(config: TrainConfig, dataset: Dataset) -> tuple[MlpModel, TrainLog]:
    """Run the epoch loop and return the best-validation checkpoint + log."""
    x_train = dataset.train_inputs
    y_train = dataset.train_labels
    flip_mask = dataset.train_flip_mask
    n_train = x_train.shape[0]
    k = int(dataset.clean_labels.max()) + 1
    d = x_train.shape[1]

    model = kaiming_init((d, config.hidden_1, config.hidden_2, k),
                         seed=[config.seed, _INIT_KEY], dropout=config.dropout)
    adam_state = adam_init(model.params())
    shuffle_rng = np.random.default_rng([config.seed, _SHUFFLE_KEY])
    dropout_rng = np.random.default_rng([config.seed, _DROPOUT_KEY])
    mixup_rng = np.random.default_rng([config.seed, _MIXUP_KEY])
    augment_rng = np.random.default_rng([config.seed, _AUGMENT_KEY])
    policy = PerturbationPolicy(config.aug_noise_sigma, config.aug_scale_jitter)

    log = TrainLog(method=config.method, seed=config.seed)
    current_w = np.zeros(n_train)
    best_params = model.copy()
    best_acc = -1.0

    for epoch in range(config.max_epochs):
        lr = config.learning_rate * config.lr_decay ** epoch
        w_used = current_w if epoch >= config.warmup_epochs else np.zeros(n_train)
        order = shuffle_rng.permutation(n_train)
        batch_losses = []

        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            x, y = x_train[idx], y_train[idx]
            mixed = config.method in ("mixup_ce", "bsm") and len(idx) >= 2

            if mixed:
                pairs = mixup_batch(x, y, config.alpha, mixup_rng)
                xb = np.stack([p.mixed_input for p in pairs])
                gammas = np.array([p.gamma for p in pairs])
                labels_i = np.array([p.label_i for p in pairs])
                labels_j = np.array([p.label_j for p in pairs])
                j_local = np.array([p.source_indices[1] for p in pairs])
            elif config.method == "ce_aug":
                xb = perturb(x, policy, augment_rng)
            else:
                xb = x

            logits, _, cache = forward(model, xb, dropout_active=True,
                                       rng=dropout_rng)
            if mixed and config.method == "bsm":
                targets = batch_bsm_targets(
                    logits, labels_i, labels_j, gammas,
                    w_used[idx], w_used[idx[j_local]], config.soft_bootstrap,
                )
            elif mixed:
                targets = batch_mixup_targets(labels_i, labels_j, gammas, k)
            elif config.method == "bsm":
                # leftover single-sample batch: self-pair degenerates to
                # a plain bootstrap target
                z_rows = batch_onehot(logits.argmax(axis=-1), k)
                wi = w_used[idx][:, None]
                targets = (1.0 - wi) * batch_onehot(y, k) + wi * z_rows
            else:
                targets = batch_onehot(y, k)

            values, grad_logits = _kernels.loss_from_targets(logits, targets)
            if not np.isfinite(values).all():
                raise TrainingDivergenceError(
                    f"non-finite loss at epoch {epoch}"
                )
            batch_losses.append(float(values.mean()))
            backward_step(model, cache, grad_logits, adam_state, lr,
                          config.weight_decay)

        # epoch-end bookkeeping on original inputs, dropout off
        ce_values = _per_sample_ce(model, x_train, y_train, k)
        clean_ce = float(ce_values[~flip_mask].mean()) if (~flip_mask).any() else float("nan")
        flipped_ce = float(ce_values[flip_mask].mean()) if flip_mask.any() else float("nan")

        bmm_entry = None
        if config.method == "bsm":
            bmm = fit_bmm(normalize_losses(ce_values))
            current_w = noisy_posterior(bmm, normalize_losses(ce_values))
            bmm_entry = _bmm_record(bmm)

        val_logits = model.predict_logits(dataset.val_inputs)
        val_acc = float((val_logits.argmax(axis=-1) == dataset.val_labels).mean())

        log.train_loss.append(float(np.mean(batch_losses)))
        log.val_accuracy.append(val_acc)
        log.learning_rate.append(lr)
        log.clean_ce.append(clean_ce)
        log.flipped_ce.append(flipped_ce)
        log.bmm.append(bmm_entry)

        if val_acc > best_acc:
            best_acc = val_acc
            best_params = model.copy()
            log.best_epoch = epoch
        log.stopped_epoch = epoch
        if epoch - log.best_epoch >= config.patience:
            break

    log.best_val_accuracy = best_acc
    return best_params, log
