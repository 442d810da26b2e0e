"""Synthetic stand-in for the audio stack.

Generates ground-truth speaker populations on the unit sphere and maps an
identity embedding plus an utterance index to an observed utterance
embedding. Spread parameters are expressed as the expected offset norm
(per-coordinate standard deviation sigma/sqrt(d)), so e.g. sigma=0.03 keeps
pairwise utterance cosines of one identity above 0.99 at d=256.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .embeddings import DEFAULT_DIMENSION, EmbeddingDataset, SpeakerRecord, l2_normalize, GENDERS
from .errors import ConfigError, ZeroNormError
from .randomness import RandomStream, stream_key, normals_from_uniforms, uniforms_from_words
from . import kernels


@dataclass(frozen=True, eq=False)
class SyntheticPopulation:
    """Ground truth behind a synthetic dataset."""

    speaker_ids: tuple
    genders: tuple
    identity_means: np.ndarray   # (n, d) unit rows
    between_spread: float
    within_spread: float
    dimension: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "dimension": self.dimension,
            "seed": self.seed,
            "between_spread": self.between_spread,
            "within_spread": self.within_spread,
            "speakers": [
                {"speaker_id": sid, "gender": g, "identity_mean": mean.tolist()}
                for sid, g, mean in zip(self.speaker_ids, self.genders, self.identity_means)
            ],
        }


def _gender_anchor(gender: str, dimension: int) -> np.ndarray:
    anchor = np.zeros(dimension)
    anchor[0 if gender == "m" else 1] = 1.0
    return anchor


def synth_population(n_speakers: int, utterances_per_speaker: int,
                     between_spread: float = 1.0, within_spread: float = 0.05,
                     dimension: int = DEFAULT_DIMENSION, seed: int = 0):
    """Create a synthetic population; returns (EmbeddingDataset, SyntheticPopulation).

    Genders alternate m/f. Identity means sit around two orthogonal gender
    anchor directions; utterance k of each speaker adds within-speaker noise.
    Fully deterministic from the seed.
    """
    if n_speakers < 2:
        raise ConfigError("population needs at least 2 speakers")
    if utterances_per_speaker < 1:
        raise ConfigError("population needs at least 1 utterance per speaker")
    if dimension < 2:
        raise ConfigError("population dimension must be at least 2")
    if between_spread <= 0 or within_spread < 0:
        raise ConfigError("spread parameters must be positive (within may be 0)")

    scale = 1.0 / np.sqrt(dimension)
    mean_stream = _seed_stream(seed, "population/means")
    speaker_ids = tuple(f"spk{i:04d}" for i in range(n_speakers))
    genders = tuple(GENDERS[i % 2] for i in range(n_speakers))
    means = np.empty((n_speakers, dimension))
    for i in range(n_speakers):
        offset = mean_stream.normals(dimension) * (between_spread * scale)
        means[i] = l2_normalize(_gender_anchor(genders[i], dimension) + offset)

    records = []
    for i, sid in enumerate(speaker_ids):
        noise = _batched_normals(
            _population_utterance_key(seed, i),
            list(range(utterances_per_speaker)), dimension)
        for k in range(utterances_per_speaker):
            if within_spread == 0.0:
                vec = means[i].copy()
            else:
                vec = l2_normalize(means[i] + noise[k] * (within_spread * scale))
            records.append(SpeakerRecord(sid, genders[i], f"u{k:03d}", vec))

    population = SyntheticPopulation(
        speaker_ids=speaker_ids,
        genders=genders,
        identity_means=means,
        between_spread=between_spread,
        within_spread=within_spread,
        dimension=dimension,
        seed=seed,
    )
    return EmbeddingDataset(records), population


@dataclass(frozen=True)
class SynthesisChannel:
    """Utterance-to-utterance variation of synthesized speech."""

    within_voice_spread: float
    seed: int = 0

    def __post_init__(self):
        if self.within_voice_spread < 0:
            raise ConfigError("channel spread must be >= 0")


def identity_digest(identity: np.ndarray) -> bytes:
    """Stable 32-byte digest of an identity embedding."""
    return hashlib.sha256(np.ascontiguousarray(identity, dtype="<f8").tobytes()).digest()


def synthesize_utterance(channel: SynthesisChannel, identity: np.ndarray,
                         utterance_index: int, base_seed: int | None = None) -> np.ndarray:
    """One observed utterance of an identity; deterministic in (seed, identity, index)."""
    return synthesize_utterances(channel, identity, [utterance_index], base_seed)[0]


def synthesize_utterances(channel: SynthesisChannel, identity: np.ndarray,
                          utterance_indices, base_seed: int | None = None) -> np.ndarray:
    """Batched synthesis: one row per requested utterance index.

    The noise stream of utterance k depends only on (base_seed, identity
    digest, k), so any batching produces identical rows.
    """
    identity = np.asarray(identity, dtype=np.float64)
    if float(np.linalg.norm(identity)) == 0.0:
        raise ZeroNormError("cannot synthesize from a zero-norm identity")
    indices = list(utterance_indices)
    dimension = identity.shape[0]
    if channel.within_voice_spread == 0.0:
        return np.tile(identity, (len(indices), 1))
    seed = channel.seed if base_seed is None else base_seed
    key = stream_key(f"altvoice/v1/channel/{seed}", identity_digest(identity))
    noise = _batched_normals(key, indices, dimension)
    scale = channel.within_voice_spread / np.sqrt(dimension)
    out = identity[None, :] + noise * scale
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroNormError("synthesized utterance degenerated to zero norm")
    return out / norms


def _seed_stream(seed: int, label: str, nonce: int = 0) -> RandomStream:
    key = stream_key(f"altvoice/v1/{label}", str(int(seed)).encode("ascii"))
    return RandomStream(key, nonce=nonce)


def _population_utterance_key(seed: int, speaker_index: int) -> bytes:
    return stream_key(
        f"altvoice/v1/population/utterances/{speaker_index}",
        str(int(seed)).encode("ascii"),
    )


def _batched_normals(key: bytes, nonces, dimension: int) -> np.ndarray:
    """(len(nonces), dimension) normals; row i matches RandomStream(key, nonces[i]).normals(d)."""
    n_uniform = 2 * ((dimension + 1) // 2)
    blocks_per_row = -(-n_uniform // 8)
    nonce_arr = np.repeat(np.asarray(nonces, dtype=np.uint64), blocks_per_row)
    counter_arr = np.tile(np.arange(blocks_per_row, dtype=np.uint64), len(nonces))
    key_words = np.frombuffer(key, dtype="<u4").copy()
    raw = kernels.chacha_blocks(key_words, nonce_arr, counter_arr)
    words = raw.reshape(len(nonces), blocks_per_row * 16).view(np.uint64)
    # n_uniform is even, so Box-Muller pairs never straddle rows
    flat = uniforms_from_words(np.ascontiguousarray(words[:, :n_uniform]).reshape(-1))
    return normals_from_uniforms(flat).reshape(len(nonces), n_uniform)[:, :dimension]
