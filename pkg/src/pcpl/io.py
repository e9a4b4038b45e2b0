"""Interchange formats.

Binary for bulk arrays, JSON/text for anything a human edits:

* feature files (magic ``PCPL``): 16-byte header, then n*d float32 LE values
  row-major. Exactly that many bytes; readers promote to float64.
* model checkpoints (magic ``PCPM``): layer table, float64 LE parameters in
  declaration order, trailing CRC32. The last layer is the softmax head.
* labels: one ASCII base-10 integer per line.
* proportions: a JSON array of numbers.
* configs: a JSON object with AdaptConfig keys; unknown keys are rejected,
  missing keys fall back to the defaults.

All round-trips are lossless at their declared precision.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .adapt import AdaptConfig, AdaptReport
from .core import FeatureMatrix, ProportionSpec, ValidationError
from .model import Classifier, DenseLayer, activation_name, activation_tag

__all__ = [
    "FormatError",
    "FEATURE_MAGIC",
    "CHECKPOINT_MAGIC",
    "read_features",
    "write_features",
    "read_labels",
    "write_labels",
    "read_proportions",
    "write_proportions",
    "read_config",
    "read_checkpoint",
    "write_checkpoint",
    "write_report",
    "report_json",
]

FEATURE_MAGIC = b"PCPL"
CHECKPOINT_MAGIC = b"PCPM"
FEATURE_VERSION = 1
FEATURE_DTYPE_F32 = 1
CHECKPOINT_VERSION = 1

_FEATURE_HEADER = struct.Struct("<4sBBHII")  # magic, version, dtype, reserved, n, d
_LAYER_RECORD = struct.Struct("<IIB")  # rows, cols, activation tag


class FormatError(ValidationError):
    """A file does not conform to its declared format."""


def read_features(path) -> FeatureMatrix:
    """Read a PCPL feature file into a float64 FeatureMatrix."""
    raw = Path(path).read_bytes()
    if len(raw) < _FEATURE_HEADER.size:
        raise FormatError(f"{path}: file too short for a feature header ({len(raw)} bytes)")
    magic, version, dtype, reserved, n, d = _FEATURE_HEADER.unpack_from(raw, 0)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported feature-file version {version}")
    if dtype != FEATURE_DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype tag {dtype}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved header field is {reserved}, expected 0")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: header declares empty matrix n={n}, d={d}")
    expected = n * d * 4
    payload = raw[_FEATURE_HEADER.size :]
    if len(payload) != expected:
        kind = "truncated" if len(payload) < expected else "oversized"
        raise FormatError(
            f"{path}: {kind} payload at offset {_FEATURE_HEADER.size}: "
            f"expected {expected} bytes, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(n, d)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values.ravel()))[0])
        raise FormatError(
            f"{path}: non-finite value at offset {_FEATURE_HEADER.size + bad * 4}"
        )
    return FeatureMatrix(values)


def write_features(m: FeatureMatrix, path) -> None:
    """Write a feature matrix as float32; values must survive the narrowing."""
    with np.errstate(over="ignore"):
        narrowed = m.data.astype("<f4")
    if not np.all(np.isfinite(narrowed)):
        raise ValidationError("feature values overflow 32-bit floats")
    header = _FEATURE_HEADER.pack(
        FEATURE_MAGIC, FEATURE_VERSION, FEATURE_DTYPE_F32, 0, m.n, m.d
    )
    Path(path).write_bytes(header + narrowed.tobytes(order="C"))


def read_labels(path) -> np.ndarray:
    """One non-negative ASCII integer per line."""
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                value = int(text, 10)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a base-10 integer: {text!r}") from None
            if value < 0:
                raise FormatError(f"{path}:{lineno}: negative label {value}")
            out.append(value)
    return np.asarray(out, dtype=np.int64)


def write_labels(labels, path) -> None:
    arr = np.asarray(labels, dtype=np.int64).reshape(-1)
    Path(path).write_text("".join(f"{v}\n" for v in arr), encoding="ascii")


def read_proportions(path) -> ProportionSpec:
    """A JSON array of per-class fractions."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(data, list) or not all(isinstance(v, (int, float)) for v in data):
        raise FormatError(f"{path}: expected a JSON array of numbers")
    try:
        return ProportionSpec(np.asarray(data, dtype=np.float64))
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None


def write_proportions(p: ProportionSpec, path) -> None:
    Path(path).write_text(json.dumps([float(v) for v in p.p]) + "\n", encoding="utf-8")


_CONFIG_TYPES = {
    "max_epochs": int,
    "patience": int,
    "pretrain_lr": float,
    "adapt_lr": float,
    "batch_size": int,
    "recompute_centroids": bool,
    "source_fraction": float,
    "seed": int,
}


def read_config(path) -> AdaptConfig:
    """A JSON object with AdaptConfig keys; missing keys take the defaults."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    kwargs = {}
    for key, value in data.items():
        if key not in _CONFIG_TYPES:
            raise FormatError(f"{path}: unknown config key {key!r}")
        want = _CONFIG_TYPES[key]
        if want is bool:
            if not isinstance(value, bool):
                raise FormatError(f"{path}: key {key!r} must be a boolean")
            kwargs[key] = value
        elif want is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise FormatError(f"{path}: key {key!r} must be an integer")
            kwargs[key] = value
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise FormatError(f"{path}: key {key!r} must be a number")
            kwargs[key] = float(value)
    try:
        return AdaptConfig(**kwargs)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None


def write_checkpoint(model: Classifier, path) -> None:
    """Serialize all parameters with a trailing CRC32.

    Layer table lists extractor layers then the head (activation tag 0);
    floats follow in declaration order: each layer's weights row-major, then
    its bias.
    """
    layers = [(l.w, l.b, activation_tag(l.activation)) for l in model.layers]
    layers.append((model.head_w, model.head_b, 0))
    body = bytearray()
    body += struct.pack("<B", CHECKPOINT_VERSION)
    body += struct.pack("<I", len(layers))
    for w, b, tag in layers:
        body += _LAYER_RECORD.pack(w.shape[0], w.shape[1], tag)
    for w, b, _ in layers:
        body += w.astype("<f8").tobytes(order="C")
        body += b.astype("<f8").tobytes(order="C")
    crc = zlib.crc32(bytes(body)) & 0xFFFFFFFF
    Path(path).write_bytes(CHECKPOINT_MAGIC + bytes(body) + struct.pack("<I", crc))


def read_checkpoint(path) -> Classifier:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic at offset 0, expected {CHECKPOINT_MAGIC!r}")
    if len(raw) < 13:  # magic + version + count + crc
        raise FormatError(f"{path}: file too short for a checkpoint")
    body, crc_bytes = raw[4:-4], raw[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise FormatError(f"{path}: checksum mismatch, file is corrupt")
    offset = 0
    (version,) = struct.unpack_from("<B", body, offset)
    offset += 1
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    (count,) = struct.unpack_from("<I", body, offset)
    offset += 4
    if count < 1:
        raise FormatError(f"{path}: checkpoint declares no layers")
    shapes = []
    for _ in range(count):
        if offset + _LAYER_RECORD.size > len(body):
            raise FormatError(f"{path}: truncated layer table at offset {4 + offset}")
        rows, cols, tag = _LAYER_RECORD.unpack_from(body, offset)
        offset += _LAYER_RECORD.size
        if rows < 1 or cols < 1:
            raise FormatError(f"{path}: layer with empty shape {rows}x{cols}")
        shapes.append((rows, cols, tag))
    for i in range(1, count):
        if shapes[i][1] != shapes[i - 1][0]:
            raise FormatError(
                f"{path}: layer {i} expects {shapes[i][1]} inputs, previous layer outputs {shapes[i - 1][0]}"
            )
    need = sum(r * c + r for r, c, _ in shapes) * 8
    if len(body) - offset != need:
        raise FormatError(
            f"{path}: parameter payload at offset {4 + offset} has {len(body) - offset} bytes, expected {need}"
        )
    arrays = []
    for rows, cols, _ in shapes:
        w = np.frombuffer(body, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += rows * cols * 8
        b = np.frombuffer(body, dtype="<f8", count=rows, offset=offset)
        offset += rows * 8
        arrays.append((w.copy(), b.copy()))
    head_rows, head_cols, head_tag = shapes[-1]
    if head_tag != 0:
        raise FormatError(f"{path}: head layer must carry activation tag 0, found {head_tag}")
    layers = [
        DenseLayer(w, b, activation_name(tag))
        for (w, b), (_, _, tag) in zip(arrays[:-1], shapes[:-1])
    ]
    head_w, head_b = arrays[-1]
    try:
        return Classifier(layers, head_w, head_b)
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from None


def report_json(report: AdaptReport) -> str:
    """Canonical JSON for an adaptation report; byte-stable given equal inputs."""
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def write_report(report: AdaptReport, path) -> None:
    Path(path).write_text(report_json(report), encoding="utf-8")
