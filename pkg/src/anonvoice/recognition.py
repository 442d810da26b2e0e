"""Text-independent speaker verification and identification over embeddings.

Scoring is cosine similarity on the unit sphere; the ROC sweeps every
distinct empirical score as a threshold, with EER linearly interpolated
between adjacent points and AUC from the trapezoid rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import centroid, cosine_similarity, l2_normalize
from .errors import ConfigError, DataError


@dataclass(frozen=True, eq=False)
class IdentityTemplate:
    """Per-speaker enrollment embedding (unit norm)."""

    speaker_id: str
    embedding: np.ndarray
    enrollment_count: int


def enroll(speaker_id: str, utterances) -> IdentityTemplate:
    """Enroll a template: normalize each utterance, average, normalize again."""
    utterances = list(utterances)
    if not utterances:
        raise DataError("cannot enroll a template from zero utterances")
    normalized = [l2_normalize(u) for u in utterances]
    template = l2_normalize(centroid(normalized))
    template.flags.writeable = False
    return IdentityTemplate(speaker_id, template, len(utterances))


def score(template: IdentityTemplate, utterance: np.ndarray) -> float:
    """Cosine similarity between a template and an utterance embedding."""
    return cosine_similarity(template.embedding, utterance)


def verify(template: IdentityTemplate, utterance: np.ndarray, threshold: float) -> bool:
    """Accept iff the score reaches the threshold (ties accept)."""
    if not np.isfinite(threshold):
        raise ConfigError(f"threshold must be finite, got {threshold}")
    return score(template, utterance) >= threshold


def identify(templates, utterance: np.ndarray) -> str:
    """Closed-set identification: the highest-scoring template's speaker.

    Exact score ties resolve to the lexicographically smallest speaker id.
    """
    templates = sorted(templates, key=lambda t: t.speaker_id)
    if not templates:
        raise DataError("cannot identify against an empty template list")
    matrix = np.asarray([t.embedding for t in templates])
    probe = l2_normalize(np.asarray(utterance, dtype=np.float64))
    scores = matrix @ probe
    return templates[int(np.argmax(scores))].speaker_id


@dataclass(frozen=True)
class AtEER:
    """Operate at the equal error rate point."""


@dataclass(frozen=True)
class AtFPR:
    """Operate at the largest reachable FPR not exceeding `fpr` (typically 0.01 or 0.001)."""

    fpr: float

    def __post_init__(self):
        if not 0.0 < self.fpr < 1.0:
            raise ConfigError(f"AtFPR target must be in (0, 1), got {self.fpr}")


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Empirical ROC: thresholds descending, FPR/TPR non-decreasing."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    n_target: int
    n_nontarget: int

    def points(self):
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def roc_compute(target_scores, nontarget_scores) -> RocCurve:
    """Exact empirical ROC over all distinct scores.

    A true positive is a target pair accepted at the threshold; a false
    positive is a non-target pair accepted. The first point is a finite
    accept-nothing threshold (max score + 1) so endpoints (0,0) and (1,1)
    are always present.
    """
    targets = np.asarray(list(target_scores), dtype=np.float64)
    nontargets = np.asarray(list(nontarget_scores), dtype=np.float64)
    if targets.size == 0 or nontargets.size == 0:
        raise DataError("roc_compute needs non-empty target and non-target score sets")
    distinct = np.unique(np.concatenate([targets, nontargets]))[::-1]
    thresholds = np.concatenate([[distinct[0] + 1.0], distinct])
    targets_sorted = np.sort(targets)
    nontargets_sorted = np.sort(nontargets)
    tp = targets.size - np.searchsorted(targets_sorted, thresholds, side="left")
    fp = nontargets.size - np.searchsorted(nontargets_sorted, thresholds, side="left")
    return RocCurve(
        thresholds=thresholds,
        fpr=fp / nontargets.size,
        tpr=tp / targets.size,
        n_target=int(targets.size),
        n_nontarget=int(nontargets.size),
    )


def eer(curve: RocCurve) -> tuple[float, float]:
    """(rate, threshold) where FPR crosses 1-TPR, linearly interpolated."""
    gap = curve.fpr + curve.tpr - 1.0  # FPR - FNR, non-decreasing along the sweep
    idx = int(np.searchsorted(gap >= 0.0, True))
    if gap[idx] == 0.0:
        return float(curve.fpr[idx]), float(curve.thresholds[idx])
    left, right = idx - 1, idx
    alpha = (0.0 - gap[left]) / (gap[right] - gap[left])
    rate = curve.fpr[left] + alpha * (curve.fpr[right] - curve.fpr[left])
    threshold = curve.thresholds[left] + alpha * (curve.thresholds[right] - curve.thresholds[left])
    return float(rate), float(threshold)


def auc(curve: RocCurve) -> float:
    """Area under the ROC curve (trapezoid rule)."""
    return float(np.trapezoid(curve.tpr, curve.fpr))


def threshold_at(curve: RocCurve, policy) -> float:
    """Operating threshold for a policy (AtEER or AtFPR)."""
    if isinstance(policy, AtEER):
        return eer(curve)[1]
    if isinstance(policy, AtFPR):
        idx = int(np.searchsorted(curve.fpr, policy.fpr, side="right")) - 1
        return float(curve.thresholds[idx])
    raise ConfigError(f"unknown threshold policy {policy!r}")


DEFAULT_POLICIES = (("at_eer", AtEER()), ("at_fpr_0.01", AtFPR(0.01)), ("at_fpr_0.001", AtFPR(0.001)))


def roc_summary(curve: RocCurve, policies=DEFAULT_POLICIES) -> dict:
    """JSON-ready summary: EER, AUC, and per-policy thresholds."""
    rate, threshold = eer(curve)
    return {
        "schema_version": 1,
        "eer": rate,
        "eer_threshold": threshold,
        "auc": auc(curve),
        "thresholds": {name: threshold_at(curve, policy) for name, policy in policies},
        "n_target": curve.n_target,
        "n_nontarget": curve.n_nontarget,
    }


def roc_to_csv(curve: RocCurve, path):
    """Write the curve as CSV with header threshold,fpr,tpr."""
    lines = ["threshold,fpr,tpr"]
    for threshold, fpr, tpr in zip(curve.thresholds, curve.fpr, curve.tpr):
        lines.append(f"{float(threshold)!r},{float(fpr)!r},{float(tpr)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def json_dump_canonical(obj, path):
    """Deterministic JSON file: sorted keys, fixed layout, trailing newline."""
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")
