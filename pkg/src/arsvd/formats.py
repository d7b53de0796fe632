"""On-disk formats: the ARTN tensor container, model manifests and CSV datasets.

Container layout (all integers little-endian)::

    b"ARTN" | u32 version (=1) | u32 tensor_count
    per tensor: u32 name_len | utf-8 name | u8 dtype (0 = float64) | u8 ndim
                | u64 dim * ndim | float64 payload, row-major
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .compress import LowRankFactors
from .errors import (
    BadMagicError,
    ContainerError,
    ContractError,
    DatasetError,
    DuplicateNameError,
    PayloadMismatchError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .model import DenseLayer, FactoredLayer, ModelGraph

MAGIC = b"ARTN"
VERSION = 1
DTYPE_FLOAT64 = 0
HEADER_SIZE = 12
_LE_F64 = np.dtype("<f8")


def tensor_record_size(name, shape):
    """Bytes one tensor occupies in a container."""
    return 4 + len(name.encode("utf-8")) + 2 + 8 * len(shape) + 8 * int(np.prod(shape, dtype=np.int64))


def _items(tensors):
    items = list(tensors.items()) if isinstance(tensors, dict) else list(tensors)
    seen = set()
    for name, _ in items:
        if name in seen:
            raise DuplicateNameError(f"duplicate tensor name {name!r}")
        seen.add(name)
    return items


def encode_container(tensors):
    """Serialize a mapping (or sequence of pairs) of name -> float64 array."""
    parts = [MAGIC, struct.pack("<II", VERSION, 0)]
    items = _items(tensors)
    for name, arr in items:
        arr = np.asarray(arr)
        if arr.dtype != np.float64:
            raise ContractError(f"tensor {name!r} has dtype {arr.dtype}; only float64 is supported")
        raw = name.encode("utf-8")
        if arr.ndim > 255:
            raise ContractError(f"tensor {name!r} has too many dimensions")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack("<BB", DTYPE_FLOAT64, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_LE_F64).tobytes())
    parts[1] = struct.pack("<II", VERSION, len(items))
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise TruncatedFileError(
                f"container truncated while reading {what} at byte {self.pos} "
                f"(need {n}, have {len(self.data) - self.pos})"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_container(data):
    """Parse container bytes into an insertion-ordered ``{name: array}`` dict."""
    rd = _Reader(memoryview(data).tobytes())
    if len(rd.data) >= 4 and rd.data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {rd.data[:4]!r}, expected {MAGIC!r}")
    rd.take(4, "magic")
    (version,) = rd.unpack("<I", "version")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    (count,) = rd.unpack("<I", "tensor count")
    out = {}
    for i in range(count):
        (name_len,) = rd.unpack("<I", f"name length of tensor {i}")
        try:
            name = rd.take(name_len, f"name of tensor {i}").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ContainerError(f"tensor {i} name is not valid UTF-8") from exc
        if name in out:
            raise DuplicateNameError(f"duplicate tensor name {name!r}")
        dtype, ndim = rd.unpack("<BB", f"header of {name!r}")
        if dtype != DTYPE_FLOAT64:
            raise ContainerError(f"tensor {name!r} has unsupported dtype code {dtype}")
        dims = rd.unpack(f"<{ndim}Q", f"dims of {name!r}")
        count_values = int(np.prod(dims, dtype=np.uint64)) if dims else 1
        payload = rd.take(8 * count_values, f"payload of {name!r}")
        out[name] = np.frombuffer(payload, dtype=_LE_F64).astype(np.float64).reshape(dims)
    if rd.pos != len(rd.data):
        raise PayloadMismatchError(
            f"{len(rd.data) - rd.pos} trailing bytes after the last declared tensor"
        )
    return out


def write_container(path, tensors):
    data = encode_container(tensors)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise ContainerError(f"cannot write container {path}: {exc}") from exc
    return len(data)


def read_container(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read container {path}: {exc}") from exc
    return decode_container(data)


def default_manifest_path(container_path):
    return Path(container_path).with_suffix(".txt")


def model_tensors(model):
    """Tensors and manifest for ``model``; factored layers store ``u``, ``s`` and ``vt`` separately."""
    tensors = {}
    layers = []
    for i, layer in enumerate(model.layers):
        entry = {"activation": layer.activation, "bias": f"layer{i}.b"}
        if isinstance(layer, FactoredLayer):
            entry.update(kind="factored", k=layer.k, u=f"layer{i}.u", s=f"layer{i}.s",
                         vt=f"layer{i}.vt")
            tensors[entry["u"]] = layer.u
            tensors[entry["s"]] = layer.s
            tensors[entry["vt"]] = layer.vt
        else:
            entry.update(kind="dense", w=f"layer{i}.w")
            tensors[entry["w"]] = layer.w
        tensors[entry["bias"]] = layer.bias
        layers.append(entry)
    manifest = {
        "format": "arsvd-manifest",
        "version": 1,
        "input_dim": model.input_dim,
        "class_count": model.class_count,
        "layers": layers,
    }
    return tensors, manifest


def model_from_tensors(tensors, manifest):
    def get(name):
        if name not in tensors:
            raise ContractError(f"manifest references missing tensor {name!r}")
        return tensors[name]

    layers = []
    for i, entry in enumerate(manifest["layers"]):
        kind = entry.get("kind")
        bias = get(entry["bias"])
        if kind == "dense":
            layers.append(DenseLayer(get(entry["w"]), bias, entry["activation"]))
        elif kind == "factored":
            factors = LowRankFactors(get(entry["u"]), get(entry["s"]), get(entry["vt"]))
            if "k" in entry and entry["k"] != factors.k:
                raise ContractError(f"layer {i}: manifest k={entry['k']} but factors have k={factors.k}")
            layers.append(FactoredLayer(factors, bias, entry["activation"]))
        else:
            raise ContractError(f"layer {i}: unknown layer kind {kind!r}")
    return ModelGraph(layers, manifest["input_dim"], manifest["class_count"])


def save_model(model, path, manifest_path=None):
    tensors, manifest = model_tensors(model)
    write_container(path, tensors)
    manifest_path = manifest_path or default_manifest_path(path)
    try:
        Path(manifest_path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ContainerError(f"cannot write manifest {manifest_path}: {exc}") from exc
    return manifest_path


def load_manifest(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ContainerError(f"cannot read manifest {path}: {exc}") from exc
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContractError(f"manifest {path} is not valid JSON: {exc}") from exc
    if manifest.get("format") != "arsvd-manifest":
        raise ContractError(f"{path} is not a model manifest")
    return manifest


def load_model(path, manifest_path=None):
    manifest = load_manifest(manifest_path or default_manifest_path(path))
    return model_from_tensors(read_container(path), manifest)


def load_dataset(path, class_count=None, delimiter=","):
    """Read ``label, feature, feature, ...`` lines into ``(X, y)``.

    Blank lines are skipped. Raises :class:`DatasetError` for empty files,
    ragged rows, non-numeric fields and labels outside ``[0, class_count)``.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(n, row) for n, row in enumerate(csv.reader(fh, delimiter=delimiter), 1) if row]
    except OSError as exc:
        raise ContainerError(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"dataset {path} is empty")
    width = len(rows[0][1])
    if width < 2:
        raise DatasetError(f"{path}:{rows[0][0]}: need a label and at least one feature")
    labels, feats = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DatasetError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            label = float(row[0])
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
        if label != int(label) or label < 0:
            raise DatasetError(f"{path}:{lineno}: label {row[0]!r} is not a nonnegative integer")
        if not all(np.isfinite(values)):
            raise DatasetError(f"{path}:{lineno}: non-finite feature")
        labels.append(int(label))
        feats.append(values)
    y = np.array(labels, dtype=np.int64)
    if class_count is not None and y.max() >= class_count:
        bad = int(np.argmax(y >= class_count))
        raise DatasetError(
            f"{path}:{rows[bad][0]}: label {y[bad]} out of range for {class_count} classes"
        )
    return np.array(feats, dtype=np.float64), y


def save_dataset(path, X, y, delimiter=","):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        for label, row in zip(y, X):
            writer.writerow([int(label), *(repr(float(v)) for v in row)])
