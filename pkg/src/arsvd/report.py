"""Compression log and report records, plus their JSON-lines text form."""

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ContainerError, ContractError

SUMMED_FIELDS = (
    "params_before",
    "params_after",
    "flops_before",
    "flops_after",
    "reconstruction_error",
)


@dataclass(frozen=True)
class LogRecord:
    layer_index: int
    m: int
    n: int
    k: int
    tau: float | None


@dataclass(frozen=True)
class LayerReport:
    layer_index: int
    method: str
    m: int
    n: int
    k: int
    tau: float | None
    params_before: int
    params_after: int
    flops_before: int
    flops_after: int
    reconstruction_error: float
    achieved_fraction: float | None
    inflation: bool
    kept_dense: bool = False


@dataclass
class CompressionReport:
    layers: list = field(default_factory=list)
    metrics: dict | None = None

    def totals(self):
        out = {name: sum(getattr(r, name) for r in self.layers) for name in SUMMED_FIELDS}
        out["layer_count"] = len(self.layers)
        out["inflated_layers"] = sum(r.inflation for r in self.layers)
        before = out["params_before"]
        out["param_reduction"] = 1.0 - out["params_after"] / before if before else 0.0
        return out

    @property
    def ranks(self):
        return [r.k for r in self.layers]

    def reduces_params(self):
        t = self.totals()
        return t["params_after"] < t["params_before"]


def report_lines(report):
    lines = [json.dumps({"record": "layer", **asdict(r)}) for r in report.layers]
    lines.append(json.dumps({"record": "totals", **report.totals()}))
    if report.metrics is not None:
        lines.append(json.dumps({"record": "metrics", **report.metrics}))
    return lines


def emit_report(report, path):
    """Write one JSON object per layer, then a totals object, then metrics if any."""
    text = "\n".join(report_lines(report)) + "\n"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ContainerError(f"cannot write report to {path}: {exc}") from exc


def read_report(path):
    """Parse a report file back into ``(CompressionReport, totals_dict)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = [line for line in fh.read().splitlines() if line.strip()]
    except OSError as exc:
        raise ContainerError(f"cannot read report {path}: {exc}") from exc
    names = {f.name for f in fields(LayerReport)}
    layers, totals, metrics = [], None, None
    for lineno, line in enumerate(raw, 1):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}:{lineno}: not a JSON record") from exc
        kind = rec.pop("record", None)
        if kind == "layer":
            layers.append(LayerReport(**{k: v for k, v in rec.items() if k in names}))
        elif kind == "totals":
            totals = rec
        elif kind == "metrics":
            metrics = rec
        else:
            raise ContractError(f"{path}:{lineno}: unknown record type {kind!r}")
    if totals is None:
        raise ContractError(f"{path}: missing totals record")
    return CompressionReport(layers, metrics), totals
