"""Mini-batch SGD training of ReLU/softmax MLPs on softmax cross-entropy."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DivergenceError
from .model import DenseLayer, FactoredLayer, ModelGraph, accuracy_score, predict, softmax

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple = (256, 128)
    lr: float = 0.05
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    weight_decay: float = 0.03


@dataclass
class TrainResult:
    model: ModelGraph
    train_accuracy: float
    losses: list = field(default_factory=list)


def init_mlp(dims, rng):
    """He-initialized dense layers for the chain ``dims[0] -> ... -> dims[-1]``."""
    layers = []
    for i, (n_in, n_out) in enumerate(zip(dims, dims[1:])):
        w = rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / n_in)
        act = "softmax" if i == len(dims) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(n_out), act))
    return ModelGraph(layers, dims[0], dims[-1])


def _backprop(ws, bs, X, y, weight_decay):
    # Overflow is reported by the caller as divergence, not as a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        return _backprop_unguarded(ws, bs, X, y, weight_decay)


def _backprop_unguarded(ws, bs, X, y, weight_decay):
    n = X.shape[0]
    acts, pre = [X], []
    h = X
    for w, b in zip(ws[:-1], bs[:-1]):
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    probs = softmax(h @ ws[-1].T + bs[-1])
    loss = -np.mean(np.log(np.clip(probs[np.arange(n), y], 1e-300, None)))
    if weight_decay:
        loss += 0.5 * weight_decay * sum(np.sum(w * w) for w in ws)

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = [None] * len(ws)
    for i in range(len(ws) - 1, -1, -1):
        dw = delta.T @ acts[i]
        if weight_decay:
            dw = dw + weight_decay * ws[i]
        grads[i] = (dw, delta.sum(axis=0))
        if i:
            delta = (delta @ ws[i]) * (pre[i - 1] > 0)
    return float(loss), grads


def loss_and_grads(model, X, y, weight_decay=0.0):
    """Mean cross-entropy (plus ``weight_decay/2 * sum ||W||^2``) and its gradients.

    Gradients come back as a list of ``(dW, db)`` pairs aligned with
    ``model.layers``. The model must be all-dense with ReLU hidden layers and
    a softmax output.
    """
    if any(isinstance(layer, FactoredLayer) for layer in model.layers):
        raise ContractError("training requires an all-dense model")
    ws = [layer.w for layer in model.layers]
    bs = [layer.bias for layer in model.layers]
    return _backprop(ws, bs, np.asarray(X, dtype=np.float64), np.asarray(y), weight_decay)


def train_mlp(X, y, config=TrainConfig(), class_count=None):
    """Train a fresh MLP ``d -> hidden... -> class_count`` with mini-batch SGD.

    Deterministic for a given ``config.seed``. Raises :class:`DivergenceError`
    if the epoch loss becomes non-finite.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ContractError("training data must be a nonempty (samples, features) array with labels")
    if class_count is None:
        class_count = int(y.max()) + 1
    if y.min() < 0 or y.max() >= class_count:
        raise ContractError(f"labels must lie in [0, {class_count})")
    rng = np.random.default_rng(config.seed)
    model = init_mlp([X.shape[1], *config.hidden, class_count], rng)
    ws = [layer.w.copy() for layer in model.layers]
    bs = [layer.bias.copy() for layer in model.layers]
    acts = [layer.activation for layer in model.layers]

    losses = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(X.shape[0])
        total = 0.0
        for start in range(0, X.shape[0], config.batch_size):
            idx = order[start : start + config.batch_size]
            batch_loss, grads = _backprop(ws, bs, X[idx], y[idx], config.weight_decay)
            total += batch_loss * idx.size
            with np.errstate(over="ignore", invalid="ignore"):
                for (dw, db), w, b in zip(grads, ws, bs):
                    w -= config.lr * dw
                    b -= config.lr * db
        epoch_loss = total / X.shape[0]
        if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(w)) for w in ws):
            raise DivergenceError(f"training diverged at epoch {epoch}", epoch=epoch)
        losses.append(epoch_loss)
        log.debug("epoch %d loss %.6f", epoch, epoch_loss)

    model = ModelGraph(
        [DenseLayer(w, b, a) for w, b, a in zip(ws, bs, acts)], X.shape[1], class_count
    )
    acc = accuracy_score(y, predict(model, X))
    log.info("trained %s: train accuracy %.4f", model.dims, acc)
    return TrainResult(model, acc, losses)
