"""Fully connected networks with dense or factored layers.

A model is an ordered chain of layers mapping ``input_dim`` features to
``class_count`` scores. Hidden layers use ReLU and the last layer softmax.
Inputs may be a single vector or a batch with one sample per row.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .compress import arsvd_compress, cost_model, fixed_rank_truncate, reconstruction_error
from .errors import ArsvdError, ContractError, ShapeError, attach_context
from .linalg import as_matrix, as_vector, svd
from .report import CompressionReport, LayerReport, LogRecord

ACTIVATIONS = ("relu", "softmax", "identity")


def _check_activation(tag):
    if tag not in ACTIVATIONS:
        raise ContractError(f"unknown activation {tag!r}; expected one of {ACTIVATIONS}")
    return tag


@dataclass(frozen=True, eq=False)
class DenseLayer:
    w: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "w", as_matrix(self.w, "w"))
        object.__setattr__(self, "bias", as_vector(self.bias, "bias"))
        _check_activation(self.activation)
        if self.bias.shape[0] != self.w.shape[0]:
            raise ShapeError(f"bias length {self.bias.shape[0]} != rows of w {self.w.shape}")

    @property
    def shape(self):
        return self.w.shape

    @property
    def in_dim(self):
        return self.w.shape[1]

    @property
    def out_dim(self):
        return self.w.shape[0]


@dataclass(frozen=True, eq=False)
class FactoredLayer:
    """Rank-``k`` layer ``act(u @ diag(s) @ vt @ h + bias)``; the product is never formed."""

    factors: object
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "bias", as_vector(self.bias, "bias"))
        _check_activation(self.activation)
        if self.bias.shape[0] != self.factors.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != output dim {self.factors.shape[0]}"
            )

    u = property(lambda self: self.factors.u)
    s = property(lambda self: self.factors.s)
    vt = property(lambda self: self.factors.vt)
    k = property(lambda self: self.factors.k)

    @property
    def shape(self):
        return self.factors.shape

    @property
    def in_dim(self):
        return self.factors.shape[1]

    @property
    def out_dim(self):
        return self.factors.shape[0]


@dataclass(frozen=True, eq=False)
class ModelGraph:
    layers: tuple
    input_dim: int
    class_count: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ContractError("a model needs at least one layer")
        if self.layers[0].in_dim != self.input_dim:
            raise ShapeError(
                f"first layer takes {self.layers[0].in_dim} inputs, model declares {self.input_dim}"
            )
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer {i} outputs {a.out_dim} but layer {i + 1} takes {b.in_dim}")
        if self.layers[-1].out_dim != self.class_count:
            raise ShapeError(
                f"last layer outputs {self.layers[-1].out_dim}, model declares "
                f"{self.class_count} classes"
            )

    @property
    def dims(self):
        return [self.input_dim] + [layer.out_dim for layer in self.layers]


@dataclass
class FlopMeter:
    """Multiply-add counter. ``linear`` covers weight products only;
    bias adds and activations accumulate in ``elementwise``."""

    linear: int = 0
    elementwise: int = 0
    per_layer: dict = field(default_factory=dict)

    def add(self, index, linear, elementwise):
        self.linear += linear
        self.elementwise += elementwise
        self.per_layer[index] = self.per_layer.get(index, 0) + linear


def softmax(z):
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def activate(z, tag):
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "softmax":
        return softmax(z)
    return z


def _batch_size(h):
    return 1 if h.ndim == 1 else h.shape[0]


def _check_input(h, n):
    h = np.asarray(h, dtype=np.float64)
    if h.ndim not in (1, 2) or h.shape[-1] != n:
        raise ShapeError(f"expected input with trailing dimension {n}, got shape {h.shape}")
    return h


def forward_dense_layer(layer, h, meter=None, index=0):
    h = _check_input(h, layer.in_dim)
    z = h @ layer.w.T + layer.bias
    if meter is not None:
        m, n = layer.shape
        meter.add(index, m * n * _batch_size(h), 2 * m * _batch_size(h))
    return activate(z, layer.activation)


def forward_factored(layer, h, meter=None, index=0):
    """Apply a factored layer as project (``vt``), scale (``s``), expand (``u``)."""
    h = _check_input(h, layer.in_dim)
    t = h @ layer.vt.T
    t = t * layer.s
    z = t @ layer.u.T + layer.bias
    if meter is not None:
        m, n = layer.shape
        k = layer.k
        meter.add(index, (k * n + k + k * m) * _batch_size(h), 2 * m * _batch_size(h))
    return activate(z, layer.activation)


def forward_layer(layer, h, meter=None, index=0):
    if isinstance(layer, FactoredLayer):
        return forward_factored(layer, h, meter, index)
    return forward_dense_layer(layer, h, meter, index)


def forward(model, x, meter=None):
    """Class probabilities for one sample or a batch of samples."""
    h = _check_input(x, model.input_dim)
    for i, layer in enumerate(model.layers):
        h = forward_layer(layer, h, meter, i)
    return h


def predict(model, x):
    return np.argmax(forward(model, x), axis=-1)


def _compress(model, choose, no_inflate):
    new_layers, log, report = [], [], CompressionReport()
    for idx, layer in enumerate(model.layers):
        if not isinstance(layer, DenseLayer):
            new_layers.append(layer)
            continue
        m, n = layer.shape
        try:
            factors, tau, fraction, method = choose(idx, layer)
            err = reconstruction_error(layer.w, factors)
            cost = cost_model(m, n, factors.k)
        except ArsvdError as exc:
            raise attach_context(exc, f"layer {idx}", layer_index=idx)
        keep_dense = no_inflate and cost.inflates
        if keep_dense:
            new_layers.append(layer)
            params_after, flops_after, err = cost.dense_params, cost.dense_flops, 0.0
        else:
            new_layers.append(FactoredLayer(factors, layer.bias, layer.activation))
            params_after, flops_after = cost.factored_params, cost.factored_flops
        log.append(LogRecord(idx, m, n, factors.k, tau))
        report.layers.append(
            LayerReport(
                layer_index=idx,
                method=method,
                m=m,
                n=n,
                k=factors.k,
                tau=tau,
                params_before=cost.dense_params,
                params_after=params_after,
                flops_before=cost.dense_flops,
                flops_after=flops_after,
                reconstruction_error=err,
                achieved_fraction=fraction,
                inflation=cost.inflates,
                kept_dense=keep_dense,
            )
        )
    if not log:
        raise ContractError("model has no dense layers to compress")
    return ModelGraph(new_layers, model.input_dim, model.class_count), log, report


def compress_model(model, tau, no_inflate=False):
    """Replace every dense layer by its entropy-selected low-rank factorization.

    Biases and activations are carried over unchanged. Returns the new model,
    a per-layer ``(m, n, k)`` log and a :class:`CompressionReport`. With
    ``no_inflate`` a layer whose factored form would store at least as many
    parameters as the dense one is left dense.
    """

    def choose(idx, layer):
        factors, sel = arsvd_compress(layer.w, tau)
        return factors, sel.tau, sel.achieved_fraction, "arsvd"

    return _compress(model, choose, no_inflate)


def compress_model_fixed_rank(model, ranks, no_inflate=False):
    """Truncated-SVD baseline.

    ``ranks`` is either one global rank, clipped to ``min(m, n)`` per layer,
    or a sequence giving the exact rank of each dense layer in order.
    """
    dense_idx = [i for i, layer in enumerate(model.layers) if isinstance(layer, DenseLayer)]
    if np.ndim(ranks) == 0:
        per_layer = {i: min(int(ranks), min(model.layers[i].shape)) for i in dense_idx}
        if int(ranks) < 1:
            raise ContractError(f"fixed rank must be positive, got {ranks}")
    else:
        ranks = list(ranks)
        if len(ranks) != len(dense_idx):
            raise ContractError(f"got {len(ranks)} ranks for {len(dense_idx)} dense layers")
        per_layer = dict(zip(dense_idx, ranks))

    def choose(idx, layer):
        return fixed_rank_truncate(layer.w, per_layer[idx]), None, None, "fixed"

    return _compress(model, choose, no_inflate)


def layer_spectra(model):
    """Singular values of every dense layer (materialized product for factored ones)."""
    out = []
    for layer in model.layers:
        w = layer.w if isinstance(layer, DenseLayer) else layer.factors.materialize()
        out.append(svd(w).s)
    return out


def parameter_count(model, include_bias=True):
    """Scalars stored by the model, counting ``s`` of factored layers."""
    total = 0
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            total += layer.w.size
        else:
            total += layer.factors.stored_params
        if include_bias:
            total += layer.bias.size
    return total


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    seconds_per_sample: float
    flops: int
    flops_per_layer: dict


def accuracy_score(y_true, y_pred):
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred)))


def macro_f1(y_true, y_pred):
    """Unweighted mean of per-class F1 over labels seen in either array; 0/0 counts as 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    scores = []
    for c in np.union1d(y_true, y_pred):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def evaluate(model, X, y, repeat=5):
    """Accuracy, macro-F1, median seconds per sample and FLOPs of one pass.

    Timing runs one warm-up pass and then ``repeat`` timed passes over the
    whole dataset, reporting the median.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError("cannot evaluate on an empty dataset")
    if repeat < 1:
        raise ContractError("repeat must be at least 1")
    meter = FlopMeter()
    probs = forward(model, X, meter)
    pred = np.argmax(probs, axis=1)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        forward(model, X)
        times.append(time.perf_counter() - t0)
    return Metrics(
        accuracy=accuracy_score(y, pred),
        macro_f1=macro_f1(y, pred),
        seconds_per_sample=float(np.median(times)) / X.shape[0],
        flops=meter.linear,
        flops_per_layer=dict(meter.per_layer),
    )
