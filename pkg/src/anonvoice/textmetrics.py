"""Word-level alignment and the WER / WIL transcription metrics.

Alignment is a minimum edit distance over word tokens with unit costs;
among minimal alignments the backtrace prefers more hits, then fewer
substitutions, so counts are deterministic. WER = (S+D+I)/N_ref and
WIL = 1 - (H/N_ref)(H/N_hyp). Note WIL can exceed WER; both formulas are
the standard ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class WordAlignment:
    """Hit/substitution/deletion/insertion counts of one alignment."""

    hits: int
    substitutions: int
    deletions: int
    insertions: int

    @property
    def n_ref(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def n_hyp(self) -> int:
        return self.hits + self.substitutions + self.insertions

    @property
    def cost(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "WordAlignment") -> "WordAlignment":
        return WordAlignment(
            self.hits + other.hits,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop empties."""
    tokens = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        if start < end:
            tokens.append(raw[start:end])
    return tokens


def align(ref_tokens, hyp_tokens) -> WordAlignment:
    """Minimum word edit alignment between reference and hypothesis tokens.

    Cell values are (cost, -hits, substitutions) tuples compared
    lexicographically, which pins a unique optimal count profile.
    """
    ref = list(ref_tokens)
    hyp = list(hyp_tokens)
    rows, cols = len(ref) + 1, len(hyp) + 1
    table = [[None] * cols for _ in range(rows)]
    table[0][0] = (0, 0, 0)
    for i in range(1, rows):
        cost, neg_hits, subs = table[i - 1][0]
        table[i][0] = (cost + 1, neg_hits, subs)
    for j in range(1, cols):
        cost, neg_hits, subs = table[0][j - 1]
        table[0][j] = (cost + 1, neg_hits, subs)
    for i in range(1, rows):
        for j in range(1, cols):
            cost, neg_hits, subs = table[i - 1][j - 1]
            if ref[i - 1] == hyp[j - 1]:
                diagonal = (cost, neg_hits - 1, subs)
            else:
                diagonal = (cost + 1, neg_hits, subs + 1)
            cost, neg_hits, subs = table[i - 1][j]
            deletion = (cost + 1, neg_hits, subs)
            cost, neg_hits, subs = table[i][j - 1]
            insertion = (cost + 1, neg_hits, subs)
            table[i][j] = min(diagonal, deletion, insertion)
    cost, neg_hits, subs = table[-1][-1]
    hits = -neg_hits
    deletions = len(ref) - hits - subs
    insertions = len(hyp) - hits - subs
    return WordAlignment(hits, subs, deletions, insertions)


def wer(alignment: WordAlignment) -> float:
    """Word error rate (S+D+I)/N_ref; may exceed 1 with many insertions."""
    if alignment.n_ref == 0:
        raise DataError("WER undefined for an empty reference")
    return alignment.cost / alignment.n_ref


def wil(alignment: WordAlignment) -> float:
    """Word information lost 1 - (H/N_ref)(H/N_hyp); 1 by convention if a side is empty."""
    if alignment.n_ref == 0 or alignment.n_hyp == 0:
        return 1.0
    return 1.0 - (alignment.hits / alignment.n_ref) * (alignment.hits / alignment.n_hyp)


@dataclass(frozen=True)
class CorpusMetrics:
    """Pooled corpus WER/WIL with bootstrap percentile intervals."""

    wer: float
    wil: float
    wer_ci: tuple[float, float]
    wil_ci: tuple[float, float]
    counts: WordAlignment
    n_pairs: int
    n_bootstrap: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_pairs": self.n_pairs,
            "wer": self.wer,
            "wil": self.wil,
            "wer_ci": list(self.wer_ci),
            "wil_ci": list(self.wil_ci),
            "counts": {
                "hits": self.counts.hits,
                "substitutions": self.counts.substitutions,
                "deletions": self.counts.deletions,
                "insertions": self.counts.insertions,
            },
            "n_bootstrap": self.n_bootstrap,
            "seed": self.seed,
        }


def _pooled_metrics(alignments) -> tuple[float, float]:
    total = WordAlignment(0, 0, 0, 0)
    for a in alignments:
        total = total + a
    if total.n_ref == 0:
        return float("nan"), 1.0
    return wer(total), wil(total)


def corpus_metrics(pairs, n_bootstrap: int = 1000, seed: int = 0) -> CorpusMetrics:
    """Corpus WER/WIL from pooled counts with bootstrap-over-pairs CIs.

    `pairs` is a list of (reference_text, hypothesis_text). The bootstrap
    resamples pairs with replacement and reports the 2.5/97.5 percentile
    interval; resamples whose pooled reference is empty contribute NaN and
    are ignored by the percentiles.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError("corpus_metrics needs at least one (ref, hyp) pair")
    if n_bootstrap < 1:
        raise ConfigError("n_bootstrap must be >= 1")
    alignments = [align(tokenize(ref), tokenize(hyp)) for ref, hyp in pairs]
    total = WordAlignment(0, 0, 0, 0)
    for a in alignments:
        total = total + a
    if total.n_ref == 0:
        raise DataError("corpus reference is empty after tokenization")
    point_wer, point_wil = wer(total), wil(total)

    counts = np.asarray(
        [[a.hits, a.substitutions, a.deletions, a.insertions] for a in alignments],
        dtype=np.float64,
    )
    rng = np.random.default_rng(seed)
    samples_wer = np.empty(n_bootstrap)
    samples_wil = np.empty(n_bootstrap)
    n = len(alignments)
    for b in range(n_bootstrap):
        picked = counts[rng.integers(0, n, size=n)].sum(axis=0)
        hits, subs, dels, ins = picked
        n_ref = hits + subs + dels
        n_hyp = hits + subs + ins
        if n_ref == 0:
            samples_wer[b] = np.nan
            samples_wil[b] = 1.0 if n_hyp > 0 else np.nan
            continue
        samples_wer[b] = (subs + dels + ins) / n_ref
        samples_wil[b] = 1.0 if n_hyp == 0 else 1.0 - (hits / n_ref) * (hits / n_hyp)

    def interval(samples):
        low, high = np.nanpercentile(samples, [2.5, 97.5])
        return float(low), float(high)

    return CorpusMetrics(
        wer=point_wer,
        wil=point_wil,
        wer_ci=interval(samples_wer),
        wil_ci=interval(samples_wil),
        counts=total,
        n_pairs=n,
        n_bootstrap=n_bootstrap,
        seed=seed,
    )
