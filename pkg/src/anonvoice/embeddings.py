"""Speaker-embedding vectors, similarity math, and dataset ingestion.

Embeddings are plain float64 numpy arrays. Datasets are immutable after
construction and safe to share across evaluation workers.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ZeroNormError

MALE = "m"
FEMALE = "f"
GENDERS = (MALE, FEMALE)

DEFAULT_DIMENSION = 256

_MAGIC = b"AVEC"
_BINARY_VERSION = 1


def as_embedding(values, dimension: int | None = None) -> np.ndarray:
    """Validate and convert to a float64 embedding vector."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DataError(f"embedding must be 1-dimensional, got shape {vec.shape}")
    if dimension is not None and vec.shape[0] != dimension:
        raise DataError(f"embedding has dimension {vec.shape[0]}, expected {dimension}")
    if not np.all(np.isfinite(vec)):
        raise DataError("embedding contains non-finite entries")
    return vec


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm; direction preserved."""
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroNormError("cannot normalize a zero-norm embedding")
    return vec / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; symmetric and scale-invariant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm input")
    score = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, score))


def centroid(vectors) -> np.ndarray:
    """Arithmetic per-coordinate mean (normalization is the caller's policy)."""
    vectors = list(vectors)
    if not vectors:
        raise DataError("centroid of an empty list is undefined")
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise DataError("centroid inputs must share one dimension")
    return matrix.mean(axis=0)


@dataclass(frozen=True, eq=False)
class SpeakerRecord:
    """One utterance embedding of one speaker."""

    speaker_id: str
    gender: str
    utterance_id: str
    embedding: np.ndarray

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise DataError(f"unknown gender tag {self.gender!r} (expected 'm' or 'f')")
        vec = as_embedding(self.embedding).copy()  # freeze a private copy
        vec.flags.writeable = False
        object.__setattr__(self, "embedding", vec)


class EmbeddingDataset:
    """Immutable collection of speaker records sharing one dimension."""

    def __init__(self, records):
        records = tuple(records)
        if not records:
            raise DataError("dataset must contain at least one record")
        dimension = records[0].embedding.shape[0]
        seen = set()
        for rec in records:
            if rec.embedding.shape[0] != dimension:
                raise DataError(
                    f"record ({rec.speaker_id}, {rec.utterance_id}) has dimension "
                    f"{rec.embedding.shape[0]}, expected {dimension}"
                )
            key = (rec.speaker_id, rec.utterance_id)
            if key in seen:
                raise DataError(f"duplicate (speaker, utterance) pair {key}")
            seen.add(key)
        self.records = records
        self.dimension = dimension
        by_speaker: dict[str, list[SpeakerRecord]] = {}
        genders: dict[str, str] = {}
        for rec in records:
            by_speaker.setdefault(rec.speaker_id, []).append(rec)
            if genders.setdefault(rec.speaker_id, rec.gender) != rec.gender:
                raise DataError(f"speaker {rec.speaker_id} appears with two gender tags")
        self._by_speaker = {sid: tuple(rs) for sid, rs in by_speaker.items()}
        self._gender_of = genders

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        if len(self.records) != len(other.records):
            return False
        for a, b in zip(self.records, other.records):
            if (a.speaker_id, a.gender, a.utterance_id) != (b.speaker_id, b.gender, b.utterance_id):
                return False
            if not np.array_equal(a.embedding, b.embedding):
                return False
        return True

    def speaker_ids(self) -> tuple[str, ...]:
        return tuple(self._by_speaker)

    def gender_of(self, speaker_id: str) -> str:
        return self._gender_of[speaker_id]

    def records_of(self, speaker_id: str) -> tuple[SpeakerRecord, ...]:
        return self._by_speaker[speaker_id]

    def gender_subset(self, gender: str) -> tuple[SpeakerRecord, ...]:
        if gender not in GENDERS:
            raise DataError(f"unknown gender tag {gender!r}")
        return tuple(r for r in self.records if r.gender == gender)

    def embeddings_matrix(self) -> np.ndarray:
        return np.asarray([r.embedding for r in self.records], dtype=np.float64)


def save_dataset(dataset: EmbeddingDataset, path, fmt: str | None = None):
    """Write a dataset; format inferred from the extension unless given."""
    path = Path(path)
    fmt = fmt or _infer_format(path)
    if fmt == "jsonl":
        _save_jsonl(dataset, path)
    elif fmt == "binary":
        _save_binary(dataset, path)
    else:
        raise DataError(f"unknown dataset format {fmt!r}")


def load_dataset(path, fmt: str | None = None) -> EmbeddingDataset:
    """Read a dataset; format inferred from the extension unless given."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    fmt = fmt or _infer_format(path)
    if fmt == "jsonl":
        return _load_jsonl(path)
    if fmt == "binary":
        return _load_binary(path)
    raise DataError(f"unknown dataset format {fmt!r}")


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".jsonl":
        return "jsonl"
    if suffix == ".avec":
        return "binary"
    raise DataError(f"cannot infer dataset format from extension {suffix!r}")


def _save_jsonl(dataset: EmbeddingDataset, path: Path):
    with open(path, "w", encoding="utf-8") as handle:
        for rec in dataset.records:
            handle.write(json.dumps({
                "speaker_id": rec.speaker_id,
                "gender": rec.gender,
                "utterance_id": rec.utterance_id,
                "embedding": rec.embedding.tolist(),
            }) + "\n")


def _load_jsonl(path: Path) -> EmbeddingDataset:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            try:
                records.append(SpeakerRecord(
                    speaker_id=str(obj["speaker_id"]),
                    gender=obj["gender"],
                    utterance_id=str(obj["utterance_id"]),
                    embedding=obj["embedding"],
                ))
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc}") from exc
    return EmbeddingDataset(records)


def _save_binary(dataset: EmbeddingDataset, path: Path):
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(bytes([_BINARY_VERSION]))
        handle.write(struct.pack("<I", dataset.dimension))
        for rec in dataset.records:
            sid = rec.speaker_id.encode("utf-8")
            uid = rec.utterance_id.encode("utf-8")
            handle.write(struct.pack("<I", len(sid)))
            handle.write(sid)
            handle.write(struct.pack("<I", len(uid)))
            handle.write(uid)
            handle.write(rec.gender.encode("ascii"))
            handle.write(rec.embedding.astype("<f8").tobytes())


def _load_binary(path: Path) -> EmbeddingDataset:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise DataError(f"{path}: bad magic bytes (not an embedding dataset)")
    if len(data) < 9:
        raise DataError(f"{path}: truncated header")
    version = data[4]
    if version != _BINARY_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    dimension = struct.unpack_from("<I", data, 5)[0]
    offset = 9
    records = []
    vec_bytes = dimension * 8
    while offset < len(data):
        try:
            sid_len = struct.unpack_from("<I", data, offset)[0]
            offset += 4
            sid = data[offset:offset + sid_len].decode("utf-8")
            offset += sid_len
            uid_len = struct.unpack_from("<I", data, offset)[0]
            offset += 4
            uid = data[offset:offset + uid_len].decode("utf-8")
            offset += uid_len
            gender = chr(data[offset])
            offset += 1
            if offset + vec_bytes > len(data):
                raise DataError(f"{path}: truncated record")
            vec = np.frombuffer(data, dtype="<f8", count=dimension, offset=offset).copy()
            offset += vec_bytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: corrupt record ({exc})") from exc
        records.append(SpeakerRecord(sid, gender, uid, vec))
    return EmbeddingDataset(records)
