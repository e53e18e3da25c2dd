import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logsift.ingest import LogRecord
from logsift.preprocess import TokenizedLog
from logsift.vectorize import (
    build_vocabulary,
    cosine_matrix,
    cosine_similarity,
    dense,
    stack,
    tfidf_vector,
    unit,
)

from .oracles import as_log_vector, tfidf_dense


def _tokenized(token_lists):
    return [
        TokenizedLog(
            record=LogRecord(line_id=i, content=" ".join(tokens), raw=" ".join(tokens)),
            tokens=list(tokens),
            masked_tokens=list(tokens),
        )
        for i, tokens in enumerate(token_lists)
    ]


def test_vocabulary_counts_documents_not_occurrences():
    logs = _tokenized([["a", "b"], ["a", "c"]])
    vocab = build_vocabulary(logs)
    assert vocab.total_logs == 2
    assert vocab.index == {"a": 0, "b": 1, "c": 2}
    assert vocab.doc_freq.tolist() == [2, 1, 1]


def test_vocabulary_duplicates_within_a_log_count_once():
    vocab = build_vocabulary(_tokenized([["x", "x", "x"]]))
    assert vocab.doc_freq.tolist() == [1]


def test_vocabulary_size_equals_distinct_tokens():
    token_lists = [["a", "b", "a"], ["c"], ["b", "d"], ["d", "d", "e"]]
    vocab = build_vocabulary(_tokenized(token_lists))
    flat = {tok for tokens in token_lists for tok in tokens}
    assert len(vocab.index) == len(flat)


def test_vocabulary_rejects_empty_corpus():
    with pytest.raises(ValueError):
        build_vocabulary([])


def test_tfidf_two_log_corpus():
    logs = _tokenized([["a", "b"], ["a", "c"]])
    vocab = build_vocabulary(logs)
    vec = dense(tfidf_vector(logs[0], vocab))
    # shared token has idf ln(2/2)=0; the rest carries (1/2)*(1/2)*ln 2
    assert vec[vocab.index["a"]] == 0.0
    assert vec[vocab.index["b"]] == pytest.approx(math.log(2) / 4, rel=1e-12)


def test_tfidf_single_log_corpus_is_zero():
    logs = _tokenized([["x", "y"]])
    vocab = build_vocabulary(logs)
    assert tfidf_vector(logs[0], vocab).norm == 0.0


def test_tfidf_repeated_token_weight():
    logs = _tokenized([["x", "x"], ["a", "b"], ["a", "c"], ["a", "d"]])
    vocab = build_vocabulary(logs)
    vec = dense(tfidf_vector(logs[0], vocab))
    assert vec[vocab.index["x"]] == pytest.approx(math.log(4) / 2, rel=1e-12)


def test_tfidf_unknown_token_rejected():
    logs = _tokenized([["a"], ["b"]])
    vocab = build_vocabulary(logs)
    stranger = _tokenized([["zzz"]])[0]
    with pytest.raises(ValueError):
        tfidf_vector(stranger, vocab)


def test_cosine_identical():
    v = as_log_vector([1.0, 2.0, 0.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0)


def test_cosine_disjoint_support():
    a = as_log_vector([1.0, 0.0, 0.0])
    b = as_log_vector([0.0, 2.0, 0.0])
    assert cosine_similarity(a, b) == 0.0


def test_cosine_known_angle():
    a = as_log_vector([1.0, 1.0])
    b = as_log_vector([1.0, 0.0])
    assert cosine_similarity(a, b) == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_cosine_zero_vector_rules():
    zero = as_log_vector([0.0, 0.0])
    some = as_log_vector([1.0, 0.0])
    assert cosine_similarity(zero, zero) == 1.0
    assert cosine_similarity(zero, some) == 0.0


def test_unit_normalizes():
    v = unit(as_log_vector([3.0, 4.0]))
    assert v.norm == pytest.approx(1.0)
    assert dense(v).tolist() == pytest.approx([0.6, 0.8])


def test_stack_matches_dense():
    vecs = [as_log_vector([1.0, 0.0, 2.0]), as_log_vector([0.0, 0.5, 0.0])]
    mat = stack(vecs).toarray()
    assert np.allclose(mat, np.stack([dense(v) for v in vecs]))


def test_cosine_matrix_agrees_with_pairwise():
    vecs = [
        as_log_vector([1.0, 1.0, 0.0]),
        as_log_vector([1.0, 0.0, 0.0]),
        as_log_vector([0.0, 0.0, 3.0]),
    ]
    mat = cosine_matrix(vecs)
    for i, a in enumerate(vecs):
        for j, b in enumerate(vecs):
            assert mat[i, j] == pytest.approx(cosine_similarity(a, b), abs=1e-12)
    assert np.allclose(np.diag(mat), 1.0)


token = st.text(alphabet="abcdefgh", min_size=1, max_size=3)
corpus_strategy = st.lists(
    st.lists(token, min_size=1, max_size=10), min_size=1, max_size=20
)


@given(corpus_strategy)
def test_tfidf_matches_direct_formula_oracle(token_lists):
    logs = _tokenized(token_lists)
    vocab = build_vocabulary(logs)
    expected = tfidf_dense(token_lists)
    for log, want in zip(logs, expected):
        got = dense(tfidf_vector(log, vocab))
        assert np.allclose(got, want, rtol=1e-12, atol=1e-15)


@given(corpus_strategy)
def test_cosine_is_symmetric_and_bounded(token_lists):
    logs = _tokenized(token_lists)
    vocab = build_vocabulary(logs)
    vecs = [tfidf_vector(log, vocab) for log in logs]
    mat = cosine_matrix(vecs)
    assert np.allclose(mat, mat.T)
    assert float(mat.min()) >= 0.0 and float(mat.max()) <= 1.0 + 1e-12
