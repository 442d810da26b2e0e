"""Voice-diversity evaluation protocol.

For a population (natural or generated), enroll a template per identity
from the first `enroll` utterances, score the remaining utterances against
every template, and split the scores into target pairs (utterance belongs
to the template's identity) and non-target pairs (it does not).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SynthesisChannel, synthesize_utterances
from .embeddings import EmbeddingDataset, GENDERS
from .errors import ConfigError, DataError
from .identity import GenerationMethod, IdentityGenerator, generate
from .randomness import Secret, stream_from_seed
from .recognition import enroll

HISTOGRAM_BINS = 80
HISTOGRAM_RANGE = (-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Target and non-target cosine scores of one population."""

    targets: np.ndarray
    nontargets: np.ndarray


def _score_split(identity_labels, templates_matrix, template_labels, trial_rows):
    """Score every trial row against every template and split by ownership."""
    trial_matrix = np.asarray([row for _, row in trial_rows])
    norms = np.linalg.norm(trial_matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DataError("zero-norm trial utterance")
    scores = (trial_matrix / norms) @ templates_matrix.T
    trial_labels = np.asarray([label for label, _ in trial_rows])
    ownership = trial_labels[:, None] == np.asarray(template_labels)[None, :]
    return ScoreSet(targets=scores[ownership], nontargets=scores[~ownership])


def population_scores(dataset: EmbeddingDataset, enroll_count: int = 10) -> ScoreSet:
    """Score a natural population with the enroll/trial split per speaker."""
    template_labels = []
    template_rows = []
    trial_rows = []
    for sid in dataset.speaker_ids():
        records = dataset.records_of(sid)
        if len(records) <= enroll_count:
            raise DataError(
                f"speaker {sid} has {len(records)} utterances; need more than {enroll_count}"
            )
        template = enroll(sid, [r.embedding for r in records[:enroll_count]])
        template_labels.append(sid)
        template_rows.append(template.embedding)
        trial_rows.extend((sid, r.embedding) for r in records[enroll_count:])
    return _score_split(template_labels, np.asarray(template_rows), template_labels, trial_rows)


def generated_population(generator: IdentityGenerator, method: GenerationMethod,
                         channel: SynthesisChannel, n_identities: int,
                         n_utterances: int, seed: int):
    """Derive fresh private identities and synthesize their utterances.

    Returns (labels, genders, utterance matrix list). Genders alternate m/f
    for gender-aware methods and are None for RANDOM.
    """
    if n_identities < 2:
        raise ConfigError("diversity evaluation needs at least 2 identities")
    secret_stream = stream_from_seed(seed, f"diversity/secrets/{method.value}")
    labels = []
    genders = []
    utterances = []
    for i in range(n_identities):
        gender = None if method is GenerationMethod.RANDOM else GENDERS[i % 2]
        secret = Secret(secret_stream.randbytes(16))
        identity = generate(generator, method, gender, secret)
        labels.append(f"gen{i:04d}")
        genders.append(gender)
        utterances.append(
            synthesize_utterances(channel, identity.embedding, range(n_utterances)))
    return labels, genders, utterances


def generated_scores(generator: IdentityGenerator, method: GenerationMethod,
                     channel: SynthesisChannel, n_identities: int, n_utterances: int,
                     enroll_count: int, seed: int) -> ScoreSet:
    """Run the enroll/trial protocol over freshly generated private voices."""
    if enroll_count >= n_utterances:
        raise ConfigError("enroll count must be smaller than the utterance count")
    labels, _, utterances = generated_population(
        generator, method, channel, n_identities, n_utterances, seed)
    template_rows = []
    trial_rows = []
    for label, matrix in zip(labels, utterances):
        template_rows.append(enroll(label, matrix[:enroll_count]).embedding)
        trial_rows.extend((label, row) for row in matrix[enroll_count:])
    return _score_split(labels, np.asarray(template_rows), labels, trial_rows)


def histogram_counts(scores: np.ndarray, bins: int = HISTOGRAM_BINS,
                     value_range=HISTOGRAM_RANGE) -> np.ndarray:
    counts, _ = np.histogram(scores, bins=bins, range=value_range)
    return counts


def count_modes(scores: np.ndarray, bins: int = 40, floor_fraction: float = 0.1,
                valley_fraction: float = 0.6) -> int:
    """Two-peak heuristic on a fixed-range histogram.

    A mode is a smoothed local maximum above `floor_fraction` of the top
    peak, separated from the previously accepted mode by a valley below
    `valley_fraction` of the lower of the two peaks.
    """
    counts, _ = np.histogram(scores, bins=bins, range=HISTOGRAM_RANGE)
    smooth = np.convolve(counts.astype(np.float64), np.ones(3) / 3.0, mode="same")
    floor = floor_fraction * smooth.max()
    peaks = []
    for i in range(bins):
        left = smooth[i - 1] if i > 0 else -1.0
        right = smooth[i + 1] if i < bins - 1 else -1.0
        if smooth[i] >= floor and smooth[i] > left and smooth[i] >= right:
            peaks.append(i)
    if not peaks:
        return 0
    modes = [peaks[0]]
    for peak in peaks[1:]:
        valley = smooth[modes[-1]:peak + 1].min()
        lower = min(smooth[modes[-1]], smooth[peak])
        if valley < valley_fraction * lower:
            modes.append(peak)
        elif smooth[peak] > smooth[modes[-1]]:
            modes[-1] = peak
    return len(modes)
