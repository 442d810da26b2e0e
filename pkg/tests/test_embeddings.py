"""Vector math and dataset ingestion."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonvoice.embeddings import (
    EmbeddingDataset,
    SpeakerRecord,
    as_embedding,
    centroid,
    cosine_similarity,
    l2_normalize,
    load_dataset,
    save_dataset,
)
from anonvoice.errors import DataError, ZeroNormError

finite_vectors = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=8
).filter(lambda v: sum(x * x for x in v) > 1e-12)


def test_l2_normalize_scaling_identity():
    assert np.allclose(l2_normalize(np.array([3.0, 4.0])), [0.6, 0.8])


def test_l2_normalize_unit_vector_unchanged():
    unit = np.array([1.0, 0.0, 0.0])
    assert np.allclose(l2_normalize(unit), unit, atol=1e-12)


def test_l2_normalize_zero_raises():
    with pytest.raises(ZeroNormError):
        l2_normalize(np.zeros(2))


@given(finite_vectors)
@settings(max_examples=100)
def test_l2_normalize_idempotent(values):
    vec = np.asarray(values)
    once = l2_normalize(vec)
    twice = l2_normalize(once)
    assert np.allclose(once, twice, atol=1e-12)
    assert abs(np.linalg.norm(once) - 1.0) < 1e-12


def test_cosine_identical_orthogonal_diagonal():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    value = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    assert abs(value - 1.0 / np.sqrt(2.0)) < 1e-9


def test_cosine_zero_norm_raises():
    with pytest.raises(ZeroNormError):
        cosine_similarity(np.zeros(2), np.array([1.0, 0.0]))


@given(finite_vectors, finite_vectors, st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=100)
def test_cosine_symmetry_and_scale_invariance(a_values, b_values, k):
    if len(a_values) != len(b_values):
        b_values = (b_values * len(a_values))[: len(a_values)]
        if sum(x * x for x in b_values) <= 1e-12:
            return
    a = np.asarray(a_values)
    b = np.asarray(b_values)
    assert cosine_similarity(a, b) == cosine_similarity(b, a)
    assert abs(cosine_similarity(a, k * a) - 1.0) < 1e-9
    assert abs(cosine_similarity(k * a, b) - cosine_similarity(a, b)) < 1e-9


def test_centroid_basic_and_singleton():
    assert np.allclose(centroid([np.array([1.0, 0.0]), np.array([0.0, 1.0])]), [0.5, 0.5])
    single = np.array([2.0, 3.0])
    assert np.array_equal(centroid([single]), single)
    with pytest.raises(DataError):
        centroid([])


def test_centroid_monte_carlo_concentration():
    rng = np.random.default_rng(0)
    mu = rng.normal(size=16)
    samples = mu + rng.normal(scale=0.1, size=(100, 16))
    assert np.all(np.abs(centroid(samples) - mu) < 0.05)


def test_as_embedding_validation():
    with pytest.raises(DataError):
        as_embedding([[1.0, 2.0]])
    with pytest.raises(DataError):
        as_embedding([1.0, np.nan])
    with pytest.raises(DataError):
        as_embedding([1.0, 2.0], dimension=3)


def test_record_rejects_unknown_gender():
    with pytest.raises(DataError):
        SpeakerRecord("s", "x", "u", np.ones(4))


def _toy_dataset(n_speakers=4, n_utts=3, d=6, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_speakers):
        for k in range(n_utts):
            records.append(SpeakerRecord(
                f"spk{i}", "m" if i % 2 == 0 else "f", f"u{k}", rng.normal(size=d)))
    return EmbeddingDataset(records)


def test_dataset_rejects_empty_duplicates_and_mismatch():
    with pytest.raises(DataError):
        EmbeddingDataset([])
    rec = SpeakerRecord("a", "m", "u0", np.ones(4))
    with pytest.raises(DataError):
        EmbeddingDataset([rec, SpeakerRecord("a", "m", "u0", np.zeros(4))])
    with pytest.raises(DataError):
        EmbeddingDataset([rec, SpeakerRecord("b", "f", "u0", np.ones(5))])


def test_dataset_gender_bookkeeping():
    dataset = _toy_dataset()
    assert len(dataset.gender_subset("m")) == 6
    assert len(dataset.gender_subset("f")) == 6
    assert dataset.gender_of("spk1") == "f"
    assert dataset.embeddings_matrix().shape == (12, 6)


@pytest.mark.parametrize("suffix", [".jsonl", ".avec"])
def test_dataset_round_trip(tmp_path, suffix):
    dataset = _toy_dataset(n_speakers=5, n_utts=2, d=7, seed=3)
    path = tmp_path / f"data{suffix}"
    save_dataset(dataset, path)
    loaded = load_dataset(path)
    assert loaded == dataset
    assert loaded.dimension == dataset.dimension
    for original, received in zip(dataset.records, loaded.records):
        assert np.array_equal(original.embedding, received.embedding)


def test_binary_header_layout(tmp_path):
    dataset = _toy_dataset(n_speakers=2, n_utts=1, d=2, seed=1)
    path = tmp_path / "d.avec"
    save_dataset(dataset, path)
    raw = path.read_bytes()
    assert raw[:4] == b"AVEC"
    assert raw[4] == 1
    assert int.from_bytes(raw[5:9], "little") == 2


def test_load_rejects_bad_magic_and_missing(tmp_path):
    bad = tmp_path / "x.avec"
    bad.write_bytes(b"NOPE" + bytes(10))
    with pytest.raises(DataError):
        load_dataset(bad)
    with pytest.raises(DataError):
        load_dataset(tmp_path / "missing.jsonl")


def test_load_jsonl_rejects_unknown_gender(tmp_path):
    path = tmp_path / "g.jsonl"
    path.write_text('{"speaker_id": "a", "gender": "x", "utterance_id": "u", "embedding": [1.0]}\n')
    with pytest.raises(DataError):
        load_dataset(path)


def test_unknown_extension(tmp_path):
    with pytest.raises(DataError):
        save_dataset(_toy_dataset(), tmp_path / "d.csv")
