"""
Model checkpoints and the ``.hsckpt`` container.

A checkpoint is the only object that crosses from the source side to the
target side, so it holds weights, BN statistics and small per-feature
summaries only. The schema validator refuses anything else.

File layout (all integers little-endian):

    magic        8 bytes   b"HSCKPT\\x00\\x01"
    header_len   uint32
    header       UTF-8 JSON, keys sorted
    payload      float64 '<f8' tensors, concatenated in header order
    crc32        uint32 over every preceding byte
"""

import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..data import BinningScheme, Standardizer
from ..exceptions import CheckpointError, HeliosError, SourceFreeViolation
from ..logging import get_logger
from ..numerics import Parameter
from .architecture import ArchitectureSpec
from .network import SolarNet

logger = get_logger("helios.model.checkpoint")

FORMAT_VERSION = "1"
EXTENSION = ".hsckpt"
MAGIC = b"HSCKPT\x00\x01"

HEADER_KEYS = frozenset({
    "format_version", "spec", "tensors", "standardizer", "feature_names", "binning", "provenance",
})
TENSOR_KINDS = frozenset({"parameter", "running_mean", "running_var"})
STANDARDIZER_KEYS = frozenset({"feature_names", "mean", "std"})
BINNING_KEYS = frozenset({"n_classes", "edges", "domain_id"})
PROVENANCE_KEYS = frozenset({
    "domain_id", "source_domain_id", "target_domain_id", "seed", "epochs", "best_epoch",
    "scope", "mode", "init", "created_at", "helios_version",
})
_SCALARS = (str, int, float, bool, type(None))


@dataclass
class ModelCheckpoint:
    """Everything needed to rebuild a trained model, and nothing else.

    Attributes:
        spec: architecture
        parameters: name -> learnable tensor, in model order
        bn_running_stats: BN layer name ("bn1") -> (running mean, running var)
        standardizer: input statistics of the domain the model was fitted on
        feature_names: ordered model inputs
        binning: class edges of the training domain
        provenance: flat scalar metadata (domain ids, seed, epochs, scope)
    """
    spec: ArchitectureSpec
    parameters: Dict[str, np.ndarray]
    bn_running_stats: Dict[str, Tuple[np.ndarray, np.ndarray]]
    standardizer: Optional[Standardizer]
    feature_names: Tuple[str, ...]
    binning: BinningScheme
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        self.provenance = dict(self.provenance)
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            CheckpointError: If names or shapes disagree with the spec, or the
                metadata is inconsistent
            SourceFreeViolation: If provenance carries non-scalar values
        """
        expected = self.spec.parameter_shapes()
        if list(self.parameters) != list(expected):
            raise CheckpointError(f"parameter names {list(self.parameters)} do not match "
                                  f"spec {list(expected)}")
        for name, shape in expected.items():
            if np.shape(self.parameters[name]) != shape:
                raise CheckpointError(f"{name} has shape {np.shape(self.parameters[name])}, "
                                      f"spec expects {shape}")
        bn_layers = sorted({n.split(".")[0] for n in self.spec.buffer_shapes()})
        if sorted(self.bn_running_stats) != bn_layers:
            raise CheckpointError(f"BN statistics for {sorted(self.bn_running_stats)}, "
                                  f"expected {bn_layers}")
        for layer, (mean, var) in self.bn_running_stats.items():
            width = self.spec.buffer_shapes()[f"{layer}.running_mean"]
            if np.shape(mean) != width or np.shape(var) != width:
                raise CheckpointError(f"{layer} running statistics must have shape {width}")
        if len(self.feature_names) != self.spec.n_features:
            raise CheckpointError(f"{len(self.feature_names)} feature names for a model with "
                                  f"{self.spec.n_features} inputs")
        if self.binning.n_classes != self.spec.n_classes:
            raise CheckpointError(f"binning has {self.binning.n_classes} classes, model has "
                                  f"{self.spec.n_classes}")
        if self.standardizer is not None and self.standardizer.feature_names != self.feature_names:
            raise CheckpointError("standardizer feature names do not match the checkpoint")
        _check_provenance(self.provenance)

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    @property
    def domain_id(self) -> str:
        return str(self.provenance.get("domain_id", self.binning.domain_id))

    @classmethod
    def from_model(cls, model: SolarNet, feature_names: Sequence[str], binning: BinningScheme,
                   standardizer: Optional[Standardizer] = None,
                   provenance: Optional[Dict[str, Any]] = None) -> 'ModelCheckpoint':
        """Snapshot a live model (values are copied)."""
        state = model.state_dict()
        params = {name: state[name] for name in model.spec.parameter_shapes()}
        stats = {}
        for name in model.spec.buffer_shapes():
            layer = name.split(".")[0]
            stats[layer] = (state[f"{layer}.running_mean"], state[f"{layer}.running_var"])
        return cls(model.spec, params, stats, standardizer, tuple(feature_names), binning,
                   dict(provenance or {}))

    def to_model(self) -> SolarNet:
        """A fresh, fully trainable model holding copies of the checkpoint values."""
        params = {name: Parameter(name, value) for name, value in self.parameters.items()}
        buffers = {}
        for layer, (mean, var) in self.bn_running_stats.items():
            buffers[f"{layer}.running_mean"] = np.array(mean, dtype=np.float64)
            buffers[f"{layer}.running_var"] = np.array(var, dtype=np.float64)
        return SolarNet(self.spec, params, buffers)


def _check_provenance(provenance: Dict[str, Any]) -> None:
    unknown = sorted(set(provenance) - PROVENANCE_KEYS)
    if unknown:
        raise SourceFreeViolation(f"provenance fields not allowed in a checkpoint: {unknown}")
    for key, value in provenance.items():
        if not isinstance(value, _SCALARS):
            raise SourceFreeViolation(f"provenance field {key!r} must be a scalar, "
                                      f"got {type(value).__name__}")


def validate_checkpoint_schema(header: Dict[str, Any]) -> None:
    """
    Whitelist check of a decoded checkpoint header.

    Only parameters, BN statistics, per-feature summaries, class edges and
    scalar provenance are allowed; any other field or tensor is treated as a
    potential carrier of source samples.

    Raises:
        SourceFreeViolation: On any field, tensor or value outside the whitelist
    """
    extra = sorted(set(header) - HEADER_KEYS)
    if extra:
        raise SourceFreeViolation(f"checkpoint header has fields outside the schema: {extra}")
    spec = ArchitectureSpec.from_dict(header.get("spec", {}))
    allowed = dict(spec.parameter_shapes())
    allowed.update(spec.buffer_shapes())
    for entry in header.get("tensors", []):
        if set(entry) != {"name", "shape", "kind"}:
            raise SourceFreeViolation(f"tensor entry has unexpected fields: {sorted(entry)}")
        if entry["kind"] not in TENSOR_KINDS:
            raise SourceFreeViolation(f"tensor kind {entry['kind']!r} is not allowed")
        if entry["name"] not in allowed or tuple(entry["shape"]) != allowed[entry["name"]]:
            raise SourceFreeViolation(f"tensor {entry['name']!r} {entry['shape']} is not part "
                                      f"of the architecture")
    standardizer = header.get("standardizer")
    if standardizer is not None:
        if set(standardizer) - STANDARDIZER_KEYS:
            raise SourceFreeViolation("standardizer carries fields outside the schema")
        width = len(header.get("feature_names", []))
        if any(len(standardizer.get(k, [])) != width for k in ("mean", "std")):
            raise SourceFreeViolation("standardizer vectors must have one value per feature")
    if set(header.get("binning", {})) - BINNING_KEYS:
        raise SourceFreeViolation("binning carries fields outside the schema")
    if len(header.get("binning", {}).get("edges", [])) > spec.n_classes + 1:
        raise SourceFreeViolation("binning has more edges than classes allow")
    _check_provenance(header.get("provenance", {}))


def _tensor_entries(checkpoint: ModelCheckpoint):
    for name, value in checkpoint.parameters.items():
        yield name, "parameter", np.asarray(value)
    for layer, (mean, var) in checkpoint.bn_running_stats.items():
        yield f"{layer}.running_mean", "running_mean", np.asarray(mean)
        yield f"{layer}.running_var", "running_var", np.asarray(var)


def _pack(header: Dict[str, Any], payload: bytes) -> bytes:
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + payload
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_checkpoint(checkpoint: ModelCheckpoint, path: str) -> str:
    """
    Write ``checkpoint`` to ``path`` (the ``.hsckpt`` extension is appended if missing).

    Returns:
        The path written
    """
    if not path.endswith(EXTENSION):
        path += EXTENSION
    entries = list(_tensor_entries(checkpoint))
    header = {
        "format_version": FORMAT_VERSION,
        "spec": checkpoint.spec.to_dict(),
        "tensors": [{"name": n, "shape": list(a.shape), "kind": k} for n, k, a in entries],
        "standardizer": checkpoint.standardizer.to_dict() if checkpoint.standardizer else None,
        "feature_names": list(checkpoint.feature_names),
        "binning": checkpoint.binning.to_dict(),
        "provenance": checkpoint.provenance,
    }
    validate_checkpoint_schema(header)
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, _, a in entries)
    blob = _pack(header, payload)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(blob)
    logger.info("Saved checkpoint", extra={"path": path, "bytes": len(blob),
                                           "domain_id": checkpoint.domain_id})
    return path


def load_checkpoint(path: str) -> ModelCheckpoint:
    """
    Read and verify a ``.hsckpt`` file.

    Raises:
        CheckpointError: Missing file, bad magic, checksum mismatch (including
            truncation), unsupported format version or inconsistent payload
        SourceFreeViolation: Header fields outside the checkpoint schema
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    if len(blob) < len(MAGIC) + 8 or not blob.startswith(MAGIC):
        raise CheckpointError(f"{path} is not a helios checkpoint")
    body, (stored_crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError(f"checksum mismatch in {path} (file corrupted or truncated)")

    offset = len(MAGIC)
    (header_len,) = struct.unpack("<I", body[offset:offset + 4])
    offset += 4
    try:
        header = json.loads(body[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version!r} "
                              f"(expected {FORMAT_VERSION!r})")
    validate_checkpoint_schema(header)

    payload = body[offset + header_len:]
    arrays: Dict[str, np.ndarray] = {}
    cursor = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        if cursor + nbytes > len(payload):
            raise CheckpointError(f"payload too short for tensor {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(payload, dtype="<f8", count=nbytes // 8,
                                              offset=cursor).astype(np.float64).reshape(shape)
        cursor += nbytes
    if cursor != len(payload):
        raise CheckpointError(f"{len(payload) - cursor} unexpected trailing payload bytes")

    try:
        spec = ArchitectureSpec.from_dict(header["spec"])
        params = {name: arrays[name] for name in spec.parameter_shapes()}
        stats = {}
        for name in spec.buffer_shapes():
            layer = name.split(".")[0]
            stats[layer] = (arrays[f"{layer}.running_mean"], arrays[f"{layer}.running_var"])
        standardizer = (Standardizer.from_dict(header["standardizer"])
                        if header.get("standardizer") else None)
        checkpoint = ModelCheckpoint(
            spec=spec,
            parameters=params,
            bn_running_stats=stats,
            standardizer=standardizer,
            feature_names=tuple(header["feature_names"]),
            binning=BinningScheme.from_dict(header["binning"]),
            provenance=header.get("provenance", {}),
        )
    except (SourceFreeViolation, CheckpointError):
        raise
    except KeyError as e:
        raise CheckpointError(f"checkpoint is missing {e}")
    except (HeliosError, TypeError, ValueError) as e:
        raise CheckpointError(f"inconsistent checkpoint contents: {e}")
    logger.debug("Loaded checkpoint", extra={"path": path, "domain_id": checkpoint.domain_id})
    return checkpoint
