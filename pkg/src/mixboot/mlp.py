"""Small fully-connected classifier: manual forward/backward plus Adam.

Architecture is input -> H1 -> H2 -> K with ReLU hidden units and
inverted dropout on both hidden activations.  The penultimate (H2)
activations double as the sample's feature vector for distance analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, TrainingDivergenceError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

MODEL_FORMAT_HEADER = "mixboot-mlp v1"


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    dropout: float = 0.2
    training: bool = False

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1], self.w3.shape[1])

    def params(self) -> list[np.ndarray]:
        """Parameters in the fixed update/serialization order."""
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.w1.copy(), self.b1.copy(), self.w2.copy(),
            self.b2.copy(), self.w3.copy(), self.b3.copy(),
            dropout=self.dropout, training=self.training,
        )

    # estimator-facing surface
    def predict_logits(
        self,
        inputs: np.ndarray,
        dropout_active: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        logits, _, _ = forward(self, inputs, dropout_active=dropout_active, rng=rng)
        return logits

    def features(self, inputs: np.ndarray) -> np.ndarray:
        """Penultimate activations with dropout inactive."""
        _, feats, _ = forward(self, inputs, dropout_active=False)
        return feats


@dataclass
class ForwardCache:
    x: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    mask1: np.ndarray | None
    mask2: np.ndarray | None


def kaiming_init(
    shape: tuple[int, int, int, int], seed, dropout: float = 0.2
) -> MlpModel:
    """Zero-mean weights with variance 2/fan_in per layer; zero biases."""
    d, h1, h2, k = shape
    if min(d, h1, h2, k) < 1:
        raise InvalidInputError(f"invalid model shape {shape}")
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h1))
    w2 = rng.normal(0.0, np.sqrt(2.0 / h1), size=(h1, h2))
    w3 = rng.normal(0.0, np.sqrt(2.0 / h2), size=(h2, k))
    return MlpModel(
        w1, np.zeros(h1), w2, np.zeros(h2), w3, np.zeros(k), dropout=dropout
    )


def _dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    # inverted dropout: surviving units are scaled by 1/(1-rate)
    return (rng.random(shape) >= rate).astype(np.float64) / (1.0 - rate)


def forward(
    model: MlpModel,
    inputs: np.ndarray,
    dropout_active: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Affine/ReLU stack; returns (logits, penultimate features, cache).

    Accepts one D-vector or an N x D batch and matches the output rank.
    A dropout rate of 0 draws nothing, so active and inactive modes agree.
    """
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    use_dropout = dropout_active and model.dropout > 0.0
    if use_dropout and rng is None:
        raise InvalidInputError("active dropout requires an rng")

    z1 = x2 @ model.w1 + model.b1
    a1 = np.maximum(z1, 0.0)
    mask1 = None
    if use_dropout:
        mask1 = _dropout_mask(a1.shape, model.dropout, rng)
        a1 = a1 * mask1
    z2 = a1 @ model.w2 + model.b2
    a2 = np.maximum(z2, 0.0)
    mask2 = None
    if use_dropout:
        mask2 = _dropout_mask(a2.shape, model.dropout, rng)
        a2 = a2 * mask2
    logits = a2 @ model.w3 + model.b3
    if not np.isfinite(logits).all():
        raise TrainingDivergenceError("non-finite activations in forward pass")

    cache = ForwardCache(x2, z1, a1, z2, a2, mask1, mask2)
    if single:
        return logits[0], a2[0], cache
    return logits, a2, cache


def backward(
    model: MlpModel, cache: ForwardCache, grad_logits: np.ndarray
) -> list[np.ndarray]:
    """Parameter gradients of the batch-mean loss, in params() order.

    grad_logits rows are per-sample dloss_i/dlogits_i; the mean over the
    batch is folded in here.
    """
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    n = g.shape[0]

    dw3 = cache.a2.T @ g / n
    db3 = g.mean(axis=0)
    da2 = g @ model.w3.T
    if cache.mask2 is not None:
        da2 = da2 * cache.mask2
    dz2 = da2 * (cache.z2 > 0.0)
    dw2 = cache.a1.T @ dz2 / n
    db2 = dz2.mean(axis=0)
    da1 = dz2 @ model.w2.T
    if cache.mask1 is not None:
        da1 = da1 * cache.mask1
    dz1 = da1 * (cache.z1 > 0.0)
    dw1 = cache.x.T @ dz1 / n
    db1 = dz1.mean(axis=0)
    return [dw1, db1, dw2, db2, dw3, db3]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


def adam_init(params: list[np.ndarray]) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> None:
    """One decoupled-weight-decay Adam update, in place."""
    state.t += 1
    bc1 = 1.0 - ADAM_BETA1 ** state.t
    bc2 = 1.0 - ADAM_BETA2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if weight_decay != 0.0:
            p -= lr * weight_decay * p
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def backward_step(
    model: MlpModel,
    cache: ForwardCache,
    grad_logits: np.ndarray,
    adam_state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[MlpModel, AdamState]:
    """Backprop the batch gradient and apply one Adam update in place."""
    grads = backward(model, cache, grad_logits)
    adam_step(model.params(), grads, adam_state, lr, weight_decay)
    return model, adam_state


def save_model(model: MlpModel, path) -> None:
    """Versioned plain-text dump; floats use repr so reloads are exact."""
    d, h1, h2, k = model.dims
    lines = [MODEL_FORMAT_HEADER, f"dims {d} {h1} {h2} {k}", f"dropout {model.dropout!r}"]
    names = ["w1", "b1", "w2", "b2", "w3", "b3"]
    for name, p in zip(names, model.params()):
        shape = " ".join(str(s) for s in p.shape)
        lines.append(f"param {name} {shape}")
        rows = p if p.ndim == 2 else p[None, :]
        for row in rows:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> MlpModel:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        raise InvalidInputError(f"unrecognized model file header in {path}")
    dims = tuple(int(t) for t in lines[1].split()[1:])
    dropout = float(lines[2].split()[1])
    params = {}
    i = 3
    while i < len(lines):
        tokens = lines[i].split()
        if tokens[0] != "param":
            raise InvalidInputError(f"malformed model file at line {i + 1}")
        name = tokens[1]
        shape = tuple(int(t) for t in tokens[2:])
        n_rows = shape[0] if len(shape) == 2 else 1
        block = [
            [float(t) for t in lines[i + 1 + r].split()] for r in range(n_rows)
        ]
        arr = np.array(block, dtype=np.float64)
        params[name] = arr if len(shape) == 2 else arr[0]
        i += 1 + n_rows
    model = MlpModel(
        params["w1"], params["b1"], params["w2"],
        params["b2"], params["w3"], params["b3"], dropout=dropout,
    )
    if model.dims != dims:
        raise InvalidInputError("model file dims header disagrees with parameters")
    return model
