"""Synthetic fixtures and the ARSVD-vs-fixed-rank comparison sweep.

Two kinds of fixture live here:

* matrices with a prescribed singular spectrum (power law, flat, step,
  low rank plus a decaying noise floor), and
* small classification problems: seeded Gaussian blobs for a trained MLP,
  and a "teacher" network built from step-spectrum weights that labels its
  own Gaussian inputs.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ArsvdError, ContractError, attach_context
from .model import (
    DenseLayer,
    ModelGraph,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    predict,
)
from .train import TrainConfig, train_mlp

SPECTRUM_KINDS = ("power_law", "flat", "step", "noisy_low_rank")


@dataclass(frozen=True)
class SpectrumSpec:
    kind: str
    length: int
    alpha: float = 1.0
    g: int = 1
    eps: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise ContractError(f"unknown spectrum kind {self.kind!r}")
        if self.length < 1:
            raise ContractError("spectrum length must be positive")
        if self.kind in ("step", "noisy_low_rank") and not 1 <= self.g <= self.length:
            raise ContractError(f"step width g={self.g} outside [1, {self.length}]")
        if self.eps < 0 or self.sigma < 0:
            raise ContractError("eps and sigma must be nonnegative")

    @classmethod
    def power_law(cls, length, alpha):
        return cls("power_law", length, alpha=alpha)

    @classmethod
    def flat(cls, length):
        return cls("flat", length)

    @classmethod
    def step(cls, length, g, eps=0.0):
        return cls("step", length, g=g, eps=eps)

    @classmethod
    def noisy_low_rank(cls, length, g, sigma):
        return cls("noisy_low_rank", length, g=g, sigma=sigma)

    def values(self):
        """The non-increasing spectrum; the leading value is always 1."""
        r = self.length
        i = np.arange(1, r + 1, dtype=np.float64)
        if self.kind == "power_law":
            return i ** (-self.alpha)
        if self.kind == "flat":
            return np.ones(r)
        tail = r - self.g
        s = np.ones(r)
        if self.kind == "step":
            s[self.g :] = self.eps
        else:
            # Noise floor of height sigma decaying linearly to sigma / tail.
            s[self.g :] = self.sigma * (tail - np.arange(tail)) / max(tail, 1)
        return s


def random_orthonormal(rows, cols, rng):
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def make_matrix_with_spectrum(spec, m, n, seed):
    """``Q1 @ diag(s) @ Q2.T`` with seeded Haar-like orthonormal ``Q1 (m, r)``, ``Q2 (n, r)``."""
    r = min(m, n)
    if spec.length != r:
        raise ContractError(f"spectrum length {spec.length} != min(m, n) = {r}")
    rng = np.random.default_rng(seed)
    q1 = random_orthonormal(m, r, rng)
    q2 = random_orthonormal(n, r, rng)
    return (q1 * spec.values()) @ q2.T


@dataclass(frozen=True)
class BlobSpec:
    classes: int = 10
    per_class: int = 500
    dim: int = 64
    separation: float = 4.0
    test_fraction: float = 0.2
    seed: int = 0


def make_blobs(spec):
    """Isotropic unit-variance Gaussian clusters, shuffled and split into train/test.

    Class centres are drawn with per-coordinate scale ``separation / sqrt(dim)``,
    so typical centre distances are about ``separation * sqrt(2)``.
    """
    rng = np.random.default_rng(spec.seed)
    centres = rng.standard_normal((spec.classes, spec.dim)) * spec.separation / math.sqrt(spec.dim)
    y = np.repeat(np.arange(spec.classes), spec.per_class)
    X = centres[y] + rng.standard_normal((y.size, spec.dim))
    order = rng.permutation(y.size)
    X, y = X[order], y[order]
    cut = y.size - int(round(spec.test_fraction * y.size))
    return X[:cut], y[:cut], X[cut:], y[cut:]


def step_spectrum_model(dims, seed, eps=1e-9, gain=2.0):
    """Network whose every weight has a step spectrum ``(gain x g, gain*eps x rest)``, ``g = r // 4``."""
    layers = []
    for i, (n_in, n_out) in enumerate(zip(dims, dims[1:])):
        r = min(n_in, n_out)
        spec = SpectrumSpec.step(r, max(1, r // 4), eps)
        w = gain * make_matrix_with_spectrum(spec, n_out, n_in, seed * 1000 + i)
        act = "softmax" if i == len(dims) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(n_out), act))
    return ModelGraph(layers, dims[0], dims[-1])


def teacher_dataset(model, samples, seed):
    """Standard-normal inputs labelled by ``model``'s own predictions."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, model.input_dim))
    return X, predict(model, X)


@dataclass
class ExperimentConfig:
    blobs: BlobSpec = field(default_factory=BlobSpec)
    hidden: tuple = (256, 128)
    taus: tuple = (0.5, 0.7, 0.9, 1.0)
    fixed_ranks: tuple = (8, 16, 32)
    seeds: tuple = (0, 1, 2)
    repeat: int = 5
    lr: float = 0.05
    batch_size: int = 32
    epochs: int = 30
    weight_decay: float = 0.03

    def __post_init__(self):
        if not self.taus and not self.fixed_ranks:
            raise ContractError("sweep needs at least one tau or fixed rank")
        if not self.seeds:
            raise ContractError("sweep needs at least one seed")

    def train_config(self, seed):
        return TrainConfig(
            hidden=tuple(self.hidden),
            lr=self.lr,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=seed,
            weight_decay=self.weight_decay,
        )

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown sweep config keys: {sorted(unknown)}")
        if "blobs" in data:
            data["blobs"] = BlobSpec(**data["blobs"])
        for key in ("hidden", "taus", "fixed_ranks", "seeds"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class SweepRow:
    seed: int
    method: str
    tau: float | None
    fixed_rank: int | None
    ranks: tuple
    params_before: int
    params_after: int
    accuracy: float
    macro_f1: float
    seconds_per_sample: float
    flops: int

    def as_dict(self):
        return asdict(self)


def _row(seed, method, metrics, ranks, before, after, tau=None, fixed_rank=None):
    return SweepRow(
        seed=seed,
        method=method,
        tau=tau,
        fixed_rank=fixed_rank,
        ranks=tuple(ranks),
        params_before=before,
        params_after=after,
        accuracy=metrics.accuracy,
        macro_f1=metrics.macro_f1,
        seconds_per_sample=metrics.seconds_per_sample,
        flops=metrics.flops,
    )


def run_sweep(config, progress=None):
    """Train one fixture per seed, then compress and evaluate at every tau and fixed rank.

    Returns a list of :class:`SweepRow`: one ``dense`` row per seed followed by
    its ``arsvd`` and ``fixed`` rows.
    """
    rows = []
    for seed in config.seeds:
        coord = f"seed {seed}"
        try:
            blobs = BlobSpec(**{**asdict(config.blobs), "seed": seed})
            Xtr, ytr, Xte, yte = make_blobs(blobs)
            model = train_mlp(Xtr, ytr, config.train_config(seed), blobs.classes).model
        except ArsvdError as exc:
            raise attach_context(exc, coord, sweep_coordinate=coord)
        dense_params = sum(layer.w.size for layer in model.layers)
        dims = [min(layer.shape) for layer in model.layers]
        rows.append(
            _row(seed, "dense", evaluate(model, Xte, yte, config.repeat), dims,
                 dense_params, dense_params)
        )
        jobs = [("arsvd", t) for t in config.taus] + [("fixed", k) for k in config.fixed_ranks]
        for method, value in jobs:
            coord = f"seed {seed}, {method} {value}"
            try:
                if method == "arsvd":
                    cmodel, _, report = compress_model(model, value)
                else:
                    cmodel, _, report = compress_model_fixed_rank(model, value)
            except ArsvdError as exc:
                raise attach_context(exc, coord, sweep_coordinate=coord)
            totals = report.totals()
            rows.append(
                _row(
                    seed,
                    method,
                    evaluate(cmodel, Xte, yte, config.repeat),
                    report.ranks,
                    totals["params_before"],
                    totals["params_after"],
                    tau=value if method == "arsvd" else None,
                    fixed_rank=value if method == "fixed" else None,
                )
            )
            if progress:
                progress(rows[-1])
    return rows


def write_sweep(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row.as_dict()) + "\n")
