"""De-anonymization and impersonation attack experiments.

Every round or trial derives its randomness from (attack seed, index), so
results are bit-reproducible and independent of execution order; parallel
and serial runs agree. Success rates carry Wilson 95% intervals.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import SynthesisChannel, synthesize_utterance, synthesize_utterances
from .diversity import population_scores
from .embeddings import EmbeddingDataset, GENDERS
from .errors import ConfigError, DataError
from .identity import GenerationMethod, IdentityGenerator, generate
from .randomness import Secret, stream_from_seed
from .recognition import AtEER, enroll, roc_compute, threshold_at

_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion."""
    if trials <= 0:
        raise ConfigError("wilson_interval needs at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def wilson_halfwidth(successes: int, trials: int) -> float:
    low, high = wilson_interval(successes, trials)
    return (high - low) / 2.0


def two_proportion_pvalue(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sided pooled z-test p-value for H0: p1 == p2."""
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    variance = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if variance == 0.0:
        return 1.0 if p1 == p2 else 0.0
    z = (p1 - p2) / math.sqrt(variance)
    return math.erfc(abs(z) / math.sqrt(2.0))


def resolve_workers(requested: int | None = None) -> int:
    """Worker count for trial loops, capped by ANONVOICE_THREADS."""
    workers = 1 if requested is None else max(1, int(requested))
    cap = os.environ.get("ANONVOICE_THREADS", "")
    if cap.strip():
        workers = min(workers, max(1, int(cap)))
    return workers


def _parallel_map(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


@dataclass(frozen=True, eq=False)
class AttackReport:
    """Outcome of one attack configuration."""

    attack: str
    success_rate: float
    ci_halfwidth: float
    n_trials: int
    n_successes: int
    config: dict
    threshold: float | None = None
    extras: dict = field(default_factory=dict)
    per_trial: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        out = {
            "schema_version": 1,
            "attack": self.attack,
            "success_rate": self.success_rate,
            "ci_halfwidth": self.ci_halfwidth,
            "n_trials": self.n_trials,
            "n_successes": self.n_successes,
            "config": self.config,
        }
        if self.threshold is not None:
            out["threshold"] = self.threshold
        if self.extras:
            out["extras"] = self.extras
        return out


class _Population:
    """Precomputed natural templates and held-out utterances."""

    def __init__(self, dataset: EmbeddingDataset, enroll_count: int, require_held_out: bool):
        self.enroll_count = enroll_count
        self.ids = sorted(dataset.speaker_ids())
        self.gender = {sid: dataset.gender_of(sid) for sid in self.ids}
        self.ids_by_gender = {g: [s for s in self.ids if self.gender[s] == g] for g in GENDERS}
        self.templates = {}
        self.held_out = {}
        for sid in self.ids:
            records = dataset.records_of(sid)
            if require_held_out and len(records) <= enroll_count:
                raise DataError(
                    f"speaker {sid} has {len(records)} utterances; "
                    f"need at least {enroll_count + 1}"
                )
            take = min(enroll_count, len(records))
            self.templates[sid] = enroll(sid, [r.embedding for r in records[:take]]).embedding
            self.held_out[sid] = np.asarray([r.embedding for r in records[take:]])

    def random_held_out(self, sid: str, stream) -> np.ndarray:
        pool = self.held_out[sid]
        return pool[stream.randbelow(pool.shape[0])]

    def random_other_same_gender(self, sid: str, stream) -> str:
        peers = self.ids_by_gender[self.gender[sid]]
        position = peers.index(sid)
        index = stream.randbelow(len(peers) - 1)
        return peers[index + 1 if index >= position else index]


def _identify(ids: list[str], templates: dict, probe: np.ndarray) -> str:
    matrix = np.asarray([templates[s] for s in ids])
    norm = float(np.linalg.norm(probe))
    scores = matrix @ (probe / norm)
    return ids[int(np.argmax(scores))]


# -- privacy (de-anonymization) attack ----------------------------------------

@dataclass(frozen=True)
class PrivacyAttackConfig:
    """Closed-set de-anonymization experiment parameters.

    method None runs the non-anonymized baseline (natural victim probe).
    With gender filtering on, candidates are drawn balanced per gender and
    the adversary only scores candidates of the victim's gender.
    """

    method: GenerationMethod | None
    n_candidates: int = 20
    n_rounds: int = 100
    gender_filtering: bool = True
    enroll_count: int = 10
    channel: SynthesisChannel = SynthesisChannel(0.03)
    seed: int = 0

    def __post_init__(self):
        if self.n_candidates < 2:
            raise ConfigError("privacy attack needs at least 2 candidates")
        if self.n_rounds < 1:
            raise ConfigError("privacy attack needs at least 1 round")
        if self.gender_filtering and self.n_candidates % 2:
            raise ConfigError("gender-filtered attack needs an even candidate count")

    def to_dict(self) -> dict:
        return {
            "method": self.method.value if self.method else "baseline",
            "n_candidates": self.n_candidates,
            "n_rounds": self.n_rounds,
            "gender_filtering": self.gender_filtering,
            "enroll_count": self.enroll_count,
            "channel_spread": self.channel.within_voice_spread,
            "channel_seed": self.channel.seed,
            "seed": self.seed,
        }


def privacy_attack(dataset: EmbeddingDataset, generator: IdentityGenerator | None,
                   config: PrivacyAttackConfig, workers: int | None = None) -> AttackReport:
    """Run the de-anonymization experiment and aggregate over rounds."""
    if config.method is not None and generator is None:
        raise ConfigError("anonymized privacy attack needs a fitted generator")
    population = _Population(dataset, config.enroll_count, require_held_out=config.method is None)
    if config.gender_filtering:
        per_gender = config.n_candidates // 2
        for gender in GENDERS:
            if len(population.ids_by_gender[gender]) < per_gender:
                raise DataError(
                    f"population has {len(population.ids_by_gender[gender])} "
                    f"{gender!r} speakers; need {per_gender}"
                )
    elif len(population.ids) < config.n_candidates:
        raise DataError(f"population has {len(population.ids)} speakers; "
                        f"need {config.n_candidates}")

    def run_round(index: int):
        stream = stream_from_seed(config.seed, f"attack/privacy/round/{index}")
        if config.gender_filtering:
            half = config.n_candidates // 2
            candidates = []
            for gender in GENDERS:
                ids = population.ids_by_gender[gender]
                candidates.extend(ids[i] for i in stream.sample_distinct(len(ids), half))
        else:
            candidates = [population.ids[i]
                          for i in stream.sample_distinct(len(population.ids), config.n_candidates)]
        victim = candidates[stream.randbelow(len(candidates))]
        if config.method is None:
            probe = population.random_held_out(victim, stream)
        else:
            gender = None if config.method is GenerationMethod.RANDOM else population.gender[victim]
            secret = Secret(stream.randbytes(16))
            private = generate(generator, config.method, gender, secret)
            probe = synthesize_utterance(config.channel, private.embedding, 0)
        if config.gender_filtering:
            considered = sorted(c for c in candidates
                                if population.gender[c] == population.gender[victim])
        else:
            considered = sorted(candidates)
        identified = _identify(considered, population.templates, probe)
        return victim, identified, tuple(considered)

    rounds = _parallel_map(run_round, config.n_rounds, resolve_workers(workers))
    successes = sum(1 for victim, identified, _ in rounds if victim == identified)
    return AttackReport(
        attack="privacy",
        success_rate=successes / config.n_rounds,
        ci_halfwidth=wilson_halfwidth(successes, config.n_rounds),
        n_trials=config.n_rounds,
        n_successes=successes,
        config=config.to_dict(),
        per_trial=tuple(
            {"round": i, "victim": v, "identified": ident, "success": v == ident,
             "considered": considered}
            for i, (v, ident, considered) in enumerate(rounds)
        ),
    )


# -- authentication (impersonation) attack ------------------------------------

class AuthStrategy(Enum):
    """Adversary strategies against the verifier."""

    BASELINE_NATURAL_REPLAY = "baseline-natural-replay"
    VICTIM_ORIGINAL_VOICE = "victim-original-voice"
    RANDOM_ANONYMOUS_VOICE = "random-anonymous-voice"

    @classmethod
    def from_name(cls, name: str) -> "AuthStrategy":
        for strategy in cls:
            if strategy.value == name:
                return strategy
        raise ConfigError(f"unknown attack strategy {name!r}")


@dataclass(frozen=True)
class AuthAttackConfig:
    """Impersonation experiment parameters.

    The acceptance threshold defaults to the policy operating point of the
    natural population's ROC (computed once per attack unless `threshold`
    is given explicitly).
    """

    strategy: AuthStrategy
    method: GenerationMethod | None = None
    n_trials: int = 10000
    enroll_count: int = 10
    policy: object = AtEER()
    threshold: float | None = None
    channel: SynthesisChannel = SynthesisChannel(0.03)
    seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("auth attack needs at least 1 trial")
        if self.strategy is not AuthStrategy.BASELINE_NATURAL_REPLAY and self.method is None:
            raise ConfigError(f"strategy {self.strategy.value} needs a generation method")

    def to_dict(self) -> dict:
        policy = "at_eer" if isinstance(self.policy, AtEER) else f"at_fpr_{self.policy.fpr}"
        return {
            "strategy": self.strategy.value,
            "method": self.method.value if self.method else "baseline",
            "n_trials": self.n_trials,
            "enroll_count": self.enroll_count,
            "policy": policy,
            "channel_spread": self.channel.within_voice_spread,
            "channel_seed": self.channel.seed,
            "seed": self.seed,
        }


def natural_threshold(dataset: EmbeddingDataset, enroll_count: int = 10,
                      policy=AtEER()) -> float:
    """Operating threshold from the natural population's ROC."""
    scores = population_scores(dataset, enroll_count)
    curve = roc_compute(scores.targets, scores.nontargets)
    return threshold_at(curve, policy)


def auth_attack(dataset: EmbeddingDataset, generator: IdentityGenerator | None,
                config: AuthAttackConfig, workers: int | None = None) -> AttackReport:
    """Run the impersonation experiment and aggregate over trials.

    For the victim-original-voice strategy the report's extras also carry
    the matched impostor false-accept rate (same anonymized template probed
    with a same-gender non-victim natural utterance).
    """
    if config.method is not None and generator is None:
        raise ConfigError("anonymized auth attack needs a fitted generator")
    threshold = config.threshold
    if threshold is None:
        threshold = natural_threshold(dataset, config.enroll_count, config.policy)
    population = _Population(dataset, config.enroll_count, require_held_out=True)

    baseline = AuthStrategy.BASELINE_NATURAL_REPLAY
    victim_voice = AuthStrategy.VICTIM_ORIGINAL_VOICE

    def run_trial(index: int):
        stream = stream_from_seed(config.seed, f"attack/auth/trial/{index}")
        victim = population.ids[stream.randbelow(len(population.ids))]
        if config.strategy is baseline:
            template = population.templates[victim]
            probe = population.random_held_out(victim, stream)
            return float(template @ probe / np.linalg.norm(probe)) >= threshold, None

        gender = None if config.method is GenerationMethod.RANDOM else population.gender[victim]
        secret = Secret(stream.randbytes(16))
        private = generate(generator, config.method, gender, secret)
        enrolls = synthesize_utterances(config.channel, private.embedding,
                                        range(config.enroll_count))
        template = enroll(victim, enrolls).embedding

        if config.strategy is victim_voice:
            probe = population.random_held_out(victim, stream)
            success = float(template @ probe / np.linalg.norm(probe)) >= threshold
            other = population.random_other_same_gender(victim, stream)
            impostor = population.random_held_out(other, stream)
            impostor_success = (
                float(template @ impostor / np.linalg.norm(impostor)) >= threshold)
            return success, impostor_success

        adversary_stream = stream_from_seed(config.seed, f"attack/auth/adversary/{index}")
        adversary_secret = Secret(adversary_stream.randbytes(16))
        adversary = generate(generator, config.method, gender, adversary_secret)
        probe = synthesize_utterance(config.channel, adversary.embedding, 0)
        return float(template @ probe) >= threshold, None

    outcomes = _parallel_map(run_trial, config.n_trials, resolve_workers(workers))
    successes = sum(1 for ok, _ in outcomes if ok)
    extras = {}
    if config.strategy is victim_voice:
        impostor_successes = sum(1 for _, imp in outcomes if imp)
        extras = {
            "impostor_successes": impostor_successes,
            "impostor_rate": impostor_successes / config.n_trials,
        }
    return AttackReport(
        attack="auth",
        success_rate=successes / config.n_trials,
        ci_halfwidth=wilson_halfwidth(successes, config.n_trials),
        n_trials=config.n_trials,
        n_successes=successes,
        config=config.to_dict(),
        threshold=float(threshold),
        extras=extras,
        per_trial=tuple({"trial": i, "success": ok} for i, (ok, _) in enumerate(outcomes)),
    )
