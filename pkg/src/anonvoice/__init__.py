"""Secret-seeded voice identities in speaker-embedding space.

The package covers identity generation (six methods over per-gender PCA,
GMM and embedding-pool assets), text-independent recognition scoring with
ROC/EER/AUC, a synthetic voice channel, de-anonymization and impersonation
attack experiments, and word-level transcription metrics.
"""

__version__ = "0.1.0"

from .embeddings import (
    EmbeddingDataset,
    SpeakerRecord,
    centroid,
    cosine_similarity,
    l2_normalize,
    load_dataset,
    save_dataset,
)
from .errors import AnonvoiceError, ConfigError, DataError, NumericalError, ZeroNormError
from .identity import (
    GeneratedIdentity,
    GenerationMethod,
    GeneratorConfig,
    IdentityGenerator,
    fit_generator,
    generate,
    load_generator,
    save_generator,
)
from .randomness import RandomStream, Secret, derive_rng
from .recognition import (
    AtEER,
    AtFPR,
    IdentityTemplate,
    RocCurve,
    auc,
    eer,
    enroll,
    identify,
    roc_compute,
    score,
    threshold_at,
    verify,
)
from .channel import SynthesisChannel, SyntheticPopulation, synth_population, synthesize_utterance
from .attacks import (
    AttackReport,
    AuthAttackConfig,
    AuthStrategy,
    PrivacyAttackConfig,
    auth_attack,
    privacy_attack,
)
from .stats import GmmModel, PcaModel, gmm_fit, gmm_loglik, gmm_sample, pca_fit, pca_inverse, pca_transform
from .textmetrics import WordAlignment, align, corpus_metrics, tokenize, wer, wil

__all__ = [name for name in dir() if not name.startswith("_")]
