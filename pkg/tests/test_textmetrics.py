"""Tokenization, alignment, and WER/WIL metrics."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonvoice.errors import DataError
from anonvoice.textmetrics import WordAlignment, align, corpus_metrics, tokenize, wer, wil
from helpers import edit_distance_oracle

words = st.lists(st.sampled_from(["a", "b", "c", "dog", "cat"]), max_size=12)


def test_tokenize_cases():
    assert tokenize("The cat, sat.") == ["the", "cat", "sat"]
    assert tokenize("") == []
    assert tokenize("it's  fine") == ["it's", "fine"]
    assert tokenize("--- !?") == []
    assert tokenize("Hello_world") == ["hello_world"]
    assert tokenize("  (brackets) [everywhere]  ") == ["brackets", "everywhere"]


def test_align_identical():
    result = align(["a", "b", "c"], ["a", "b", "c"])
    assert (result.hits, result.substitutions, result.deletions, result.insertions) == (3, 0, 0, 0)


def test_align_deletion():
    result = align(["the", "cat", "sat"], ["the", "cat"])
    assert (result.hits, result.deletions) == (2, 1)
    assert result.substitutions == 0 and result.insertions == 0


def test_align_insertion_into_empty():
    result = align([], ["x"])
    assert (result.hits, result.substitutions, result.deletions, result.insertions) == (0, 0, 0, 1)


def test_align_prefers_hits_over_substitutions():
    # cost-2 alignments exist with 0 hits (2 subs); the backtrace must find the hit
    result = align(["a", "b"], ["b", "x"])
    assert result.hits == 1
    assert result.cost == 2


def test_align_count_consistency_and_oracle_500_cases():
    rng = np.random.default_rng(0)
    vocabulary = ["a", "b", "c", "d", "e"]
    for _ in range(500):
        ref = [vocabulary[i] for i in rng.integers(0, 5, size=rng.integers(0, 13))]
        hyp = [vocabulary[i] for i in rng.integers(0, 5, size=rng.integers(0, 13))]
        result = align(ref, hyp)
        assert result.cost == edit_distance_oracle(ref, hyp)
        assert result.n_ref == len(ref)
        assert result.n_hyp == len(hyp)


def test_wer_wil_hand_cases():
    perfect = align(["a", "b", "c"], ["a", "b", "c"])
    assert wer(perfect) == 0.0
    assert wil(perfect) == 0.0
    one_deletion = align(["the", "cat", "sat"], ["the", "cat"])
    assert wer(one_deletion) == pytest.approx(1.0 / 3.0)
    assert wil(one_deletion) == pytest.approx(1.0 / 3.0)
    total_loss = align(["a", "b"], ["c", "d"])
    assert wer(total_loss) == 1.0
    assert wil(total_loss) == 1.0


def test_wer_can_exceed_one_wil_cannot():
    heavy = align(["a"], ["a", "x", "y", "z"])
    assert wer(heavy) == 3.0
    assert 0.0 <= wil(heavy) <= 1.0


def test_wer_empty_reference_errors_wil_convention():
    empty_ref = align([], ["x"])
    with pytest.raises(DataError):
        wer(empty_ref)
    assert wil(empty_ref) == 1.0
    assert wil(align([], [])) == 1.0
    assert wil(align(["a"], [])) == 1.0


@given(words)
@settings(max_examples=100)
def test_wer_wil_zero_on_self(tokens):
    result = align(tokens, tokens)
    assert result.hits == len(tokens) and result.cost == 0
    if tokens:
        assert wer(result) == 0.0
    assert wil(result) == (1.0 if not tokens else 0.0)


@given(words, words)
@settings(max_examples=150)
def test_swapping_ref_hyp_swaps_deletions_insertions(ref, hyp):
    forward = align(ref, hyp)
    backward = align(hyp, ref)
    assert forward.cost == backward.cost
    assert forward.hits == backward.hits
    assert forward.substitutions == backward.substitutions
    assert forward.deletions == backward.insertions
    assert forward.insertions == backward.deletions
    assert 0.0 <= wil(forward) <= 1.0


def test_corpus_metrics_single_pair_degenerate_ci():
    metrics = corpus_metrics([("the cat sat", "the cat")], n_bootstrap=200, seed=0)
    assert metrics.wer == pytest.approx(1.0 / 3.0)
    assert metrics.wer_ci[0] == metrics.wer_ci[1] == metrics.wer
    assert metrics.wil_ci[0] == metrics.wil_ci[1] == metrics.wil


def test_corpus_metrics_identical_pairs_zero_width_ci():
    pairs = [("a b c", "a b x")] * 100
    metrics = corpus_metrics(pairs, n_bootstrap=300, seed=1)
    assert metrics.wer_ci[0] == pytest.approx(metrics.wer_ci[1])
    assert metrics.wer == pytest.approx(1.0 / 3.0)


def test_corpus_metrics_pools_counts_not_rates():
    # one long perfect file and one short bad file: pooled WER is count-weighted
    pairs = [("w " * 30, "w " * 30), ("a b", "x y")]
    metrics = corpus_metrics(pairs, n_bootstrap=100, seed=2)
    assert metrics.wer == pytest.approx(2.0 / 32.0)


def test_corpus_metrics_bootstrap_covers_construction():
    rng = np.random.default_rng(3)
    pairs = []
    for _ in range(200):
        n = int(rng.integers(4, 12))
        ref = ["w"] * n
        hyp = ["w" if rng.random() > 0.25 else "x" for _ in range(n)]
        pairs.append((" ".join(ref), " ".join(hyp)))
    metrics = corpus_metrics(pairs, n_bootstrap=400, seed=4)
    assert metrics.wer_ci[0] <= 0.25 <= metrics.wer_ci[1]
    assert metrics.wer == pytest.approx(0.25, abs=0.05)


def test_corpus_metrics_determinism_and_validation():
    pairs = [("a b c", "a c"), ("d e", "d e f")]
    a = corpus_metrics(pairs, n_bootstrap=100, seed=5)
    b = corpus_metrics(pairs, n_bootstrap=100, seed=5)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(DataError):
        corpus_metrics([])
    with pytest.raises(DataError):
        corpus_metrics([("...", "words here")])


def test_alignment_addition():
    total = WordAlignment(1, 2, 3, 4) + WordAlignment(10, 0, 0, 0)
    assert (total.hits, total.substitutions, total.deletions, total.insertions) == (11, 2, 3, 4)
