"""Secret-seeded private voice identities.

Six generation methods map (fitted assets, method, gender, secret) to a
unit-norm embedding. Outputs never depend on any source voice, and the
same inputs always reproduce the same embedding exactly.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingDataset, l2_normalize, load_dataset, GENDERS
from .errors import ConfigError, DataError
from .randomness import Secret, derive_rng
from .stats import (
    GmmModel,
    PcaModel,
    gmm_fit,
    gmm_from_dict,
    gmm_sample,
    gmm_to_dict,
    pca_fit,
    pca_from_dict,
    pca_inverse,
    pca_to_dict,
    pca_transform,
)

GENERATOR_FILE_VERSION = 1
MEAN_POOL_SUBSET_SIZE = 10


class GenerationMethod(Enum):
    """The six private-identity generation techniques."""

    RANDOM = "random"
    PCA_RANDOM = "pca-random"
    MEAN_POOL_SUBSET = "mean-pool-subset"
    PCA_GMM = "pca-gmm"
    POOL_SELECTION = "pool-selection"
    TRAINING_SELECTION = "training-selection"

    @classmethod
    def from_name(cls, name: str) -> "GenerationMethod":
        for method in cls:
            if method.value == name:
                return method
        raise ConfigError(f"unknown generation method {name!r}")


GENDER_AWARE_METHODS = tuple(m for m in GenerationMethod if m is not GenerationMethod.RANDOM)


def method_context(method: GenerationMethod) -> str:
    """Domain-separation context for the derived stream of a method."""
    return "altvoice/v1/" + method.value


@dataclass(frozen=True, eq=False)
class GeneratedIdentity:
    """A derived private voice identity."""

    embedding: np.ndarray     # unit norm
    method: GenerationMethod
    gender_used: str | None
    secret_digest: bytes      # 32-byte hash of the secret

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "method": self.method.value,
            "gender": self.gender_used,
            "secret_digest": self.secret_digest.hex(),
            "embedding": self.embedding.tolist(),
        }


@dataclass(frozen=True)
class GeneratorConfig:
    """Model-fitting knobs for fit_generator."""

    retain: float = 0.95
    gmm_components: int = 20
    gmm_seed: int = 0
    gmm_max_iters: int = 200
    gmm_tol: float = 1e-6
    gmm_ridge: float = 1e-6
    gmm_restarts: int = 10


@dataclass(eq=False)
class IdentityGenerator:
    """Fitted per-gender assets plus the method dispatcher."""

    dimension: int
    pca: dict = field(default_factory=dict)         # gender -> PcaModel
    gmm: dict = field(default_factory=dict)         # gender -> GmmModel
    pools: dict = field(default_factory=dict)       # gender -> (n, d) utterance embeddings
    training: dict = field(default_factory=dict)    # gender -> (n, d) training-voice embeddings

    @property
    def training_size(self) -> int:
        return sum(arr.shape[0] for arr in self.training.values())

    def pool_size(self, gender: str) -> int:
        return self.pools[gender].shape[0] if gender in self.pools else 0


def _per_gender_matrix(dataset: EmbeddingDataset) -> dict:
    out = {}
    for gender in GENDERS:
        records = dataset.gender_subset(gender)
        if records:
            out[gender] = np.asarray([r.embedding for r in records])
    return out


def _gender_seed(base_seed: int, gender: str) -> int:
    digest = hashlib.sha256(f"{base_seed}/{gender}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def fit_generator(dev_dataset: EmbeddingDataset, training_voices: EmbeddingDataset | None,
                  config: GeneratorConfig = GeneratorConfig()) -> IdentityGenerator:
    """Fit per-gender PCA and GMM on the development pool and store the pools.

    Genders absent from the development set are skipped here; gender-aware
    generation for such a gender fails at generate() time, not at fit time.
    """
    generator = IdentityGenerator(dimension=dev_dataset.dimension)
    generator.pools = _per_gender_matrix(dev_dataset)
    if training_voices is not None:
        if training_voices.dimension != dev_dataset.dimension:
            raise DataError("training voices dimension differs from the development set")
        generator.training = _per_gender_matrix(training_voices)
    for gender, pool in generator.pools.items():
        pca = pca_fit(pool, retain=config.retain)
        components = config.gmm_components
        if pool.shape[0] < components:
            warnings.warn(
                f"gender {gender!r}: only {pool.shape[0]} samples; "
                f"reducing GMM components from {components}"
            )
            components = pool.shape[0]
        projections = pca_transform(pca, pool)
        generator.pca[gender] = pca
        generator.gmm[gender] = gmm_fit(
            projections,
            components,
            max_iters=config.gmm_max_iters,
            tol=config.gmm_tol,
            seed=_gender_seed(config.gmm_seed, gender),
            ridge=config.gmm_ridge,
            restarts=config.gmm_restarts,
        )
    return generator


def _require_gender(generator: IdentityGenerator, method: GenerationMethod, gender):
    if gender is None:
        raise ConfigError(f"method {method.value} requires a gender")
    if gender not in GENDERS:
        raise ConfigError(f"unknown gender tag {gender!r}")
    return gender


def generate(generator: IdentityGenerator, method: GenerationMethod,
             gender: str | None, secret: Secret) -> GeneratedIdentity:
    """Derive a private identity from (method, gender, secret).

    Gender is required for every method except RANDOM (where it is ignored).
    """
    if not isinstance(method, GenerationMethod):
        method = GenerationMethod.from_name(method)
    if not isinstance(secret, Secret):
        secret = Secret(secret)
    stream = derive_rng(secret, method_context(method))
    dimension = generator.dimension

    if method is GenerationMethod.RANDOM:
        vector = stream.normals(dimension)
        gender_used = None
    elif method is GenerationMethod.PCA_RANDOM:
        gender_used = _require_gender(generator, method, gender)
        pca = _fitted(generator.pca, gender_used, "PCA model")
        coords = pca.component_mean + pca.component_std * stream.normals(pca.n_components)
        vector = pca_inverse(pca, coords)
    elif method is GenerationMethod.MEAN_POOL_SUBSET:
        gender_used = _require_gender(generator, method, gender)
        pool = _fitted(generator.pools, gender_used, "embedding pool")
        if pool.shape[0] < MEAN_POOL_SUBSET_SIZE:
            raise DataError(
                f"pool for gender {gender_used!r} has {pool.shape[0]} entries; "
                f"mean-pool-subset needs at least {MEAN_POOL_SUBSET_SIZE}"
            )
        rows = stream.sample_distinct(pool.shape[0], MEAN_POOL_SUBSET_SIZE)
        vector = pool[np.asarray(rows)].mean(axis=0)
    elif method is GenerationMethod.PCA_GMM:
        gender_used = _require_gender(generator, method, gender)
        pca = _fitted(generator.pca, gender_used, "PCA model")
        gmm = _fitted(generator.gmm, gender_used, "GMM model")
        vector = pca_inverse(pca, gmm_sample(gmm, stream))
    elif method is GenerationMethod.POOL_SELECTION:
        gender_used = _require_gender(generator, method, gender)
        pool = _fitted(generator.pools, gender_used, "embedding pool")
        vector = pool[stream.randbelow(pool.shape[0])]
    elif method is GenerationMethod.TRAINING_SELECTION:
        gender_used = _require_gender(generator, method, gender)
        training = _fitted(generator.training, gender_used, "training-voice set")
        vector = training[stream.randbelow(training.shape[0])]
    else:  # pragma: no cover - enum is exhaustive
        raise ConfigError(f"unhandled method {method}")

    embedding = l2_normalize(vector)
    embedding.flags.writeable = False
    return GeneratedIdentity(
        embedding=embedding,
        method=method,
        gender_used=gender_used,
        secret_digest=secret.digest(),
    )


def _fitted(assets: dict, gender: str, what: str):
    if gender not in assets:
        raise DataError(f"no {what} fitted for gender {gender!r}")
    return assets[gender]


# -- serialization ------------------------------------------------------------

def _file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_generator(generator: IdentityGenerator, path, pool_dataset_path,
                   training_dataset_path=None):
    """Write fitted models plus content-hashed references to the pool datasets."""
    payload = {
        "format": "anonvoice-generator",
        "version": GENERATOR_FILE_VERSION,
        "dimension": generator.dimension,
        "genders": {
            gender: {
                "pca": pca_to_dict(generator.pca[gender]),
                "gmm": gmm_to_dict(generator.gmm[gender]),
            }
            for gender in sorted(generator.pca)
        },
        "pool_dataset": {
            "path": str(pool_dataset_path),
            "sha256": _file_sha256(pool_dataset_path),
        },
    }
    if training_dataset_path is not None:
        payload["training_dataset"] = {
            "path": str(training_dataset_path),
            "sha256": _file_sha256(training_dataset_path),
        }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _resolve_ref(ref: dict, base_dir: Path) -> Path:
    target = Path(ref["path"])
    if not target.is_absolute():
        target = base_dir / target
    if not target.exists():
        raise DataError(f"referenced dataset not found: {target}")
    actual = _file_sha256(target)
    if actual != ref["sha256"]:
        raise DataError(f"content hash mismatch for {target} (expected {ref['sha256']}, got {actual})")
    return target


def load_generator(path) -> IdentityGenerator:
    """Rebuild a generator from a models file and its referenced datasets."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"generator file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if payload.get("format") != "anonvoice-generator":
        raise DataError(f"{path}: not a generator file")
    if payload.get("version") != GENERATOR_FILE_VERSION:
        raise DataError(f"{path}: unsupported version {payload.get('version')}")

    generator = IdentityGenerator(dimension=int(payload["dimension"]))
    for gender, models in payload.get("genders", {}).items():
        generator.pca[gender] = pca_from_dict(models["pca"])
        generator.gmm[gender] = gmm_from_dict(models["gmm"])
    pool_path = _resolve_ref(payload["pool_dataset"], path.parent)
    generator.pools = _per_gender_matrix(load_dataset(pool_path))
    if "training_dataset" in payload:
        training_path = _resolve_ref(payload["training_dataset"], path.parent)
        generator.training = _per_gender_matrix(load_dataset(training_path))
    return generator
