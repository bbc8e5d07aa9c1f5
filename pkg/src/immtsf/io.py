"""Dataset ingestion, serialization, and the deterministic text embedder.

Numeric data travels as long (tidy) CSV with header
``entity_id,timestamp,variable,value``; per-variable irregular timestamps
need no null padding that way. Text travels as JSON Lines, one record per
line with either a precomputed ``embedding`` vector or a raw ``text``
field that the hash embedder turns into one, so the whole suite runs with
no external model. Timestamps accept epoch seconds or ISO-8601 strings.

Parameter checkpoints are JSON documents mapping parameter name to shape
and row-major values; all writers emit sorted keys so byte-identical
reruns are possible.
"""

from __future__ import annotations

import csv
import glob as globlib
import hashlib
import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import AmbiguityError, InputError
from .mmf import MmfConfig
from .model import Pipeline
from .series import IrregularSeries, TextStream, VariableTrack, WindowSpec, epoch_seconds
from .ttf import TtfConfig

DAY = 86400.0
HOUR = 3600.0
WEEK = 604800.0

# Default context/horizon durations (seconds) for the named benchmark
# datasets; a manifest entry may override either value.
DEFAULT_WINDOWS = {
    "gdelt": (14 * DAY, 14 * DAY),
    "repohealth": (31 * DAY, 31 * DAY),
    "mimic": (24 * HOUR, 24 * HOUR),
    "fnspid": (31 * DAY, 31 * DAY),
    "clustertrace": (12 * HOUR, 12 * HOUR),
    "studentlife": (31 * DAY, 31 * DAY),
    "ilinet": (4 * WEEK, 4 * WEEK),
    "cesnet": (7 * DAY, 7 * DAY),
    "epa-air": (7 * DAY, 7 * DAY),
}

DEFAULT_EMBED_DIM = 768

NUMERIC_HEADER = ["entity_id", "timestamp", "variable", "value"]


# ---------------------------------------------------------------------------
# Hash embedder


def _token_hash(token: str, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")
    ).digest()
    return int.from_bytes(digest, "big")


def hash_embed(text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Token-level feature hashing with sign hashing, L2-normalized.

    Whitespace tokens, lowercased. Empty text yields the zero vector,
    which is unambiguous since every non-empty embedding has unit norm.
    """
    if dim < 1:
        raise InputError(f"embedding dimension must be >= 1, got {dim}")
    vec = np.zeros(dim)
    tokens = text.lower().split()
    for token in tokens:
        h = _token_hash(token, seed)
        bucket = (h >> 1) % dim
        sign = 1.0 if h & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


@dataclass(frozen=True)
class HashEmbedder:
    """Deterministic stand-in for a frozen text encoder."""

    dim: int
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"embedding dimension must be >= 1, got {self.dim}")

    def embed(self, text: str) -> np.ndarray:
        return hash_embed(text, self.dim, self.seed)

    __call__ = embed


# ---------------------------------------------------------------------------
# Numeric CSV


def load_numeric(path) -> list[IrregularSeries]:
    """Load tidy CSV into one series per entity.

    Entities are sorted by id and all share the file's full sorted
    variable list (a variable unobserved for an entity gets an empty
    track), so downstream window tensors agree across entities.
    """
    per_entity: dict[str, dict[str, list[tuple[float, float]]]] = {}
    variables: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != NUMERIC_HEADER:
            raise InputError(
                f"{path}: expected header {','.join(NUMERIC_HEADER)!r}, got {header!r}"
            )
        n_rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            entity, stamp, variable, value = row
            try:
                t = epoch_seconds(stamp)
                v = float(value)
            except (InputError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            per_entity.setdefault(entity, {}).setdefault(variable, []).append((t, v))
            variables.add(variable)
            n_rows += 1
    if n_rows == 0:
        warnings.warn(f"{path}: no data rows", stacklevel=2)
        return []

    ordered_vars = sorted(variables)
    out = []
    for entity in sorted(per_entity):
        tracks = []
        for name in ordered_vars:
            pairs = sorted(per_entity[entity].get(name, []))
            times = np.array([p[0] for p in pairs])
            for a, b in zip(times, times[1:]):
                if a == b:
                    raise AmbiguityError(
                        f"{path}: duplicate observation of {name!r} for entity "
                        f"{entity!r} at t={a}"
                    )
            tracks.append(
                VariableTrack(name, times, np.array([p[1] for p in pairs]))
            )
        out.append(IrregularSeries(entity, tuple(tracks)))
    return out


def save_numeric(series_list: list[IrregularSeries], path) -> None:
    """Write series back to tidy CSV; inverse of load_numeric."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NUMERIC_HEADER)
        for series in sorted(series_list, key=lambda s: s.entity_id):
            for var in series.variables:
                for t, v in zip(var.times, var.values):
                    writer.writerow([series.entity_id, repr(float(t)), var.name, repr(float(v))])


# ---------------------------------------------------------------------------
# Text JSONL


def load_text(path, expect_dim: int, embedder: HashEmbedder | None = None) -> list[TextStream]:
    """Load JSON Lines text records into one stream per entity.

    Each record carries an ``embedding`` (validated against expect_dim)
    or, when an embedder is supplied, a raw ``text`` field to embed.
    """
    if expect_dim < 1:
        raise InputError(f"expect_dim must be >= 1, got {expect_dim}")
    per_entity: dict[str, list[tuple[float, np.ndarray]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict) or "entity_id" not in record or "timestamp" not in record:
                raise InputError(f"{path}:{lineno}: need entity_id and timestamp fields")
            try:
                t = epoch_seconds(record["timestamp"])
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if "embedding" in record:
                emb = np.asarray(record["embedding"], dtype=np.float64)
                if emb.ndim != 1 or emb.size != expect_dim:
                    raise InputError(
                        f"{path}:{lineno}: embedding has {emb.size} dims, expected {expect_dim}"
                    )
            elif "text" in record:
                if embedder is None:
                    raise InputError(
                        f"{path}:{lineno}: record has only raw text and no fallback "
                        f"embedder is active"
                    )
                emb = embedder.embed(str(record["text"]))
                if emb.size != expect_dim:
                    raise InputError(
                        f"{path}:{lineno}: embedder dim {emb.size} != expected {expect_dim}"
                    )
            else:
                raise InputError(f"{path}:{lineno}: record has neither embedding nor text")
            per_entity.setdefault(str(record["entity_id"]), []).append((t, emb))

    out = []
    for entity in sorted(per_entity):
        pairs = sorted(per_entity[entity], key=lambda p: p[0])
        times = np.array([p[0] for p in pairs])
        embs = np.stack([p[1] for p in pairs])
        out.append(TextStream(entity, times, embs))
    return out


def save_text(streams: list[TextStream], path) -> None:
    """Write streams as JSON Lines with embeddings; inverse of load_text."""
    with open(path, "w", encoding="utf-8") as fh:
        for stream in sorted(streams, key=lambda s: s.entity_id):
            for t, emb in zip(stream.times, stream.embeddings):
                fh.write(
                    json.dumps(
                        {
                            "entity_id": stream.entity_id,
                            "timestamp": float(t),
                            "embedding": [float(x) for x in emb],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class DatasetManifest:
    """One dataset's files, window geometry, and embedding width."""

    name: str
    numeric_glob: str
    text_glob: str | None
    unit: str = "days"
    window: WindowSpec = None
    embed_dim: int = DEFAULT_EMBED_DIM
    base_dir: str = "."

    def __post_init__(self):
        if self.embed_dim < 1:
            raise InputError(f"{self.name}: embedding dimension must be >= 1")
        if self.window is None:
            key = self.name.lower()
            if key not in DEFAULT_WINDOWS:
                raise InputError(
                    f"{self.name}: no window durations given and no defaults known"
                )
            context, horizon = DEFAULT_WINDOWS[key]
            object.__setattr__(self, "window", WindowSpec(context, horizon))

    def numeric_paths(self) -> list[str]:
        return self._expand(self.numeric_glob, "numeric")

    def text_paths(self) -> list[str]:
        if self.text_glob is None:
            return []
        return self._expand(self.text_glob, "text")

    def _expand(self, pattern: str, label: str) -> list[str]:
        full = os.path.join(self.base_dir, pattern)
        paths = sorted(globlib.glob(full))
        if not paths:
            raise InputError(f"{self.name}: no {label} files match {full!r}")
        return paths


def _manifest_from_entry(entry: dict, base_dir: str) -> DatasetManifest:
    if "name" not in entry or "numeric" not in entry:
        raise InputError("manifest entry needs at least name and numeric fields")
    window = None
    if "context_duration" in entry or "horizon_duration" in entry:
        name = entry["name"].lower()
        defaults = DEFAULT_WINDOWS.get(name, (None, None))
        context = entry.get("context_duration", defaults[0])
        horizon = entry.get("horizon_duration", defaults[1])
        if context is None or horizon is None:
            raise InputError(
                f"{entry['name']}: both context_duration and horizon_duration "
                f"are required for datasets without defaults"
            )
        window = WindowSpec(context, horizon, entry.get("stride"))
    return DatasetManifest(
        name=entry["name"],
        numeric_glob=entry["numeric"],
        text_glob=entry.get("text"),
        unit=entry.get("unit", "days"),
        window=window,
        embed_dim=entry.get("embed_dim", DEFAULT_EMBED_DIM),
        base_dir=base_dir,
    )


def load_manifest(path) -> list[DatasetManifest]:
    """Read a manifest JSON (one dataset object or {"datasets": [...]})."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
    base_dir = os.path.dirname(os.path.abspath(path))
    entries = doc["datasets"] if isinstance(doc, dict) and "datasets" in doc else [doc]
    if not isinstance(entries, list) or not entries:
        raise InputError(f"{path}: manifest has no dataset entries")
    return [_manifest_from_entry(e, base_dir) for e in entries]


def load_dataset(manifest: DatasetManifest) -> list[tuple[IrregularSeries, TextStream]]:
    """Load and pair a manifest's series and text streams by entity id."""
    series: list[IrregularSeries] = []
    for p in manifest.numeric_paths():
        series.extend(load_numeric(p))
    streams: dict[str, TextStream] = {}
    if manifest.text_glob is not None:
        embedder = HashEmbedder(manifest.embed_dim)
        for p in manifest.text_paths():
            for stream in load_text(p, manifest.embed_dim, embedder):
                if stream.entity_id in streams:
                    raise InputError(
                        f"{manifest.name}: entity {stream.entity_id!r} appears in "
                        f"multiple text files"
                    )
                streams[stream.entity_id] = stream
    pairs = []
    for s in series:
        text = streams.get(
            s.entity_id,
            TextStream(s.entity_id, np.empty(0), np.empty((0, manifest.embed_dim))),
        )
        pairs.append((s, text))
    return pairs


# ---------------------------------------------------------------------------
# Checkpoints


def save_params(params: dict[str, np.ndarray], path) -> None:
    doc = {
        name: {"shape": list(arr.shape), "data": [float(x) for x in arr.reshape(-1)]}
        for name, arr in params.items()
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    out = {}
    for name, entry in doc.items():
        shape = tuple(entry["shape"])
        data = np.array(entry["data"], dtype=np.float64)
        expected = int(np.prod(shape)) if shape else 1
        if data.size != expected:
            raise InputError(
                f"{path}: parameter {name!r} has {data.size} values for shape {shape}"
            )
        out[name] = data.reshape(shape)
    return out


def save_pipeline(pipeline: Pipeline, path) -> None:
    """Serialize a trained pipeline (configs, stats, parameters) to JSON."""
    doc = {
        "resolution": pipeline.resolution,
        "variable_names": list(pipeline.variable_names),
        "embed_dim": pipeline.embed_dim,
        "use_text": pipeline.use_text,
        "ttf": {
            "variant": pipeline.ttf_config.variant,
            "sigma": pipeline.ttf_config.sigma,
            "time_dim": pipeline.ttf_config.time_dim,
        },
        "mmf": {
            "variant": pipeline.mmf_config.variant,
            "hidden": pipeline.mmf_config.hidden,
            "kappa": pipeline.mmf_config.kappa,
        },
        "offset": [float(x) for x in pipeline.offset],
        "scale": [float(x) for x in pipeline.scale],
        "params": {
            name: {"shape": list(arr.shape), "data": [float(x) for x in arr.reshape(-1)]}
            for name, arr in pipeline.params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_pipeline(path) -> Pipeline:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        params = {
            name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["params"].items()
        }
        return Pipeline(
            resolution=int(doc["resolution"]),
            variable_names=tuple(doc["variable_names"]),
            embed_dim=int(doc["embed_dim"]),
            ttf_config=TtfConfig(**doc["ttf"]),
            mmf_config=MmfConfig(**doc["mmf"]),
            params=params,
            offset=np.array(doc["offset"], dtype=np.float64),
            scale=np.array(doc["scale"], dtype=np.float64),
            use_text=bool(doc["use_text"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed pipeline checkpoint: {exc}") from None
