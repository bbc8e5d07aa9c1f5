"""Batch embedding of text JSONL into the embedding JSONL schema.

Input records look like {"entity_id": str, "timestamp": str|number,
"text": str}; output records carry the same entity_id and timestamp
(the timestamp value passes through unmodified) plus an "embedding" of
the requested dimension. Records that do not match the schema are
skipped with a logged line number, never silently dropped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import load_encoder
from .exceptions import InputError

log = logging.getLogger("py_embedder")

DEFAULT_DIM = 768
DEFAULT_MAX_TOKENS = 1024
DEFAULT_BATCH = 32


@dataclass(frozen=True)
class EmbedJob:
    input_path: str
    output_path: str
    encoder: str = "hash"
    target_dim: int = DEFAULT_DIM
    max_tokens: int = DEFAULT_MAX_TOKENS
    batch_size: int = DEFAULT_BATCH
    seed: int = 1

    def __post_init__(self):
        if self.target_dim < 1:
            raise InputError(f"target_dim must be >= 1, got {self.target_dim}")
        if self.max_tokens < 1:
            raise InputError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class EmbedResult:
    written: int
    skipped: int
    projection_path: str | None


def seeded_projection(in_dim: int, out_dim: int, seed: int) -> np.ndarray:
    """Fixed random projection with orthonormal columns (or rows when
    the output is wider than the input)."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((in_dim, out_dim))
    if in_dim >= out_dim:
        q, r = np.linalg.qr(a)
    else:
        q, r = np.linalg.qr(a.T)
        q, r = q.T, r.T
        return q * np.sign(np.diag(r))[:, None]
    return q * np.sign(np.diag(r))


def _parse_record(line: str, lineno: int, path):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        log.warning("%s:%d: invalid JSON (%s); skipped", path, lineno, exc.msg)
        return None
    if not isinstance(record, dict):
        log.warning("%s:%d: expected an object, got %s; skipped", path, lineno, type(record).__name__)
        return None
    for key in ("entity_id", "timestamp", "text"):
        if key not in record:
            log.warning("%s:%d: missing %r; skipped", path, lineno, key)
            return None
    if not isinstance(record["entity_id"], str):
        log.warning("%s:%d: entity_id must be a string; skipped", path, lineno)
        return None
    if not isinstance(record["timestamp"], (str, int, float)) or isinstance(record["timestamp"], bool):
        log.warning("%s:%d: timestamp must be a string or number; skipped", path, lineno)
        return None
    if not isinstance(record["text"], str):
        log.warning("%s:%d: text must be a string; skipped", path, lineno)
        return None
    return record


def embed_file(job: EmbedJob) -> EmbedResult:
    """Encode every valid record of the input file, preserving order."""
    path = Path(job.input_path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    encoder = load_encoder(job.encoder)

    records = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_record(line, lineno, path)
            if record is None:
                skipped += 1
            else:
                records.append(record)

    if encoder.dim != job.target_dim:
        projection = seeded_projection(encoder.dim, job.target_dim, job.seed)
        projection_path = f"{job.output_path}.projection.npy"
        np.save(projection_path, projection)
    else:
        projection = None
        projection_path = None

    with open(job.output_path, "w", encoding="utf-8", newline="") as out:
        for start in range(0, len(records), job.batch_size):
            batch = records[start : start + job.batch_size]
            pooled = encoder.encode_batch([r["text"] for r in batch], job.max_tokens)
            if projection is not None:
                # row by row: batched matmul picks shape-dependent BLAS
                # kernels whose last bits vary with the batch size
                pooled = np.vstack([row @ projection for row in pooled])
            for record, vector in zip(batch, pooled):
                out.write(
                    json.dumps(
                        {
                            "entity_id": record["entity_id"],
                            "timestamp": record["timestamp"],
                            "embedding": [float(x) for x in vector],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    return EmbedResult(written=len(records), skipped=skipped, projection_path=projection_path)
