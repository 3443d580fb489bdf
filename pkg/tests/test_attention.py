import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from promise_attention.attention import (
    AttentionQuery, DataBatch, KeyEntry, ProjectionWeights, attend, format_key, parse_key,
    project, scaled_scores, score_sets)
from promise_attention.errors import DimensionError, DomainError


def test_project_examples():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    Q, K, V = project(X, ProjectionWeights.identity(2))
    np.testing.assert_array_equal(Q, X)
    Q, _, _ = project(X, ProjectionWeights(np.zeros((2, 2)), np.eye(2), np.eye(2)))
    np.testing.assert_array_equal(Q, 0)
    Q, _, _ = project(X, ProjectionWeights([[2, 0], [0, 3]], np.eye(2), np.eye(2)))
    np.testing.assert_array_equal(Q, [[2, 0], [0, 3]])


def test_project_errors():
    with pytest.raises(DomainError):
        project(DataBatch(["a", "b"], [[1, "x"]]), ProjectionWeights.identity(2))
    with pytest.raises(DimensionError):
        project(np.ones((2, 3)), ProjectionWeights.identity(2))
    with pytest.raises(DimensionError):
        DataBatch(["a", "b"], [[1, 2], {"a"}]).matrix()
    with pytest.raises(DimensionError):
        ProjectionWeights(np.eye(2), np.eye(3), np.eye(2))


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.just(3)), elements=st.floats(-9, 9)),
       arrays(np.float64, st.tuples(st.integers(1, 5), st.just(3)), elements=st.floats(-9, 9)),
       arrays(np.float64, (3, 3), elements=st.floats(-2, 2)))
def test_project_identity_and_row_concat(X1, X2, W):
    ident = ProjectionWeights.identity(3)
    np.testing.assert_array_equal(project(X1, ident)[0], X1)
    w = ProjectionWeights(W, W, W)
    both = project(np.vstack([X1, X2]), w)[0]
    np.testing.assert_allclose(both, np.vstack([project(X1, w)[0], project(X2, w)[0]]))


def test_score_sets_examples():
    D = 9
    full = set("abcdefghi")
    assert score_sets(full, full, D) == pytest.approx(math.sqrt(D))
    assert score_sets({"a"}, {"b"}, D) == 0.0
    assert score_sets(set("ab"), set("abz"), 16) == 0.5
    with pytest.raises(DomainError):
        score_sets({"a"}, {"a"}, 0)


def test_score_sets_context_gate():
    q = AttentionQuery({"a"}, {"work"})
    assert score_sets(q, {"a"}, 4, key_context={"home"}) is None
    assert score_sets(q, {"a"}, 4, key_context={"home", "work"}) == 0.5
    assert score_sets(AttentionQuery({"a"}), {"a"}, 4, key_context=set()) == 0.5


BASIS16 = [f"f{i}" for i in range(16)]
labels16 = st.frozensets(st.sampled_from(BASIS16))


@given(labels16, labels16)
def test_score_sets_symmetric(q, k):
    assert score_sets(q, k, 16) == score_sets(k, q, 16)


@given(st.lists(st.booleans(), min_size=8, max_size=8), st.lists(st.booleans(), min_size=8, max_size=8))
def test_matrix_and_set_modes_agree_on_indicators(qrow, krow):
    cols = [f"c{i}" for i in range(8)]
    batch = DataBatch(cols, [[int(v) for v in qrow], [int(v) for v in krow]])
    qs, ks = batch.feature_sets()
    dot = scaled_scores(batch.matrix()[:1], batch.matrix()[1:])[0, 0]
    assert dot == pytest.approx(score_sets(qs, ks, 8))


def test_attend_singleton():
    store = [KeyEntry("k1", {"a", "b"}, "v1")]
    r = attend(store, AttentionQuery({"a", "b"}), "softmax", 1.0)
    assert [m.key for m in r] == ["k1"] and r[0].score == 1.0


@pytest.mark.parametrize("embedding", ["softmax", "inverted"])
@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_attend_two_keys(embedding, beta):
    basis = [f"f{i}" for i in range(9)]
    store = [KeyEntry("low", {"f0"}, "1"), KeyEntry("high", {"f0", "f1", "f2"}, "2")]
    r = attend(store, AttentionQuery({"f0", "f1", "f2"}), embedding, beta, basis)
    assert [m.key for m in r] == ["high", "low"]
    assert [m.raw_score for m in r] == pytest.approx([1.0, 1 / 3])
    assert r[0].score > r[1].score


def test_attend_context_disjoint_and_empty():
    store = [KeyEntry("k", {"a"}, "v", {"home"})]
    assert len(attend(store, AttentionQuery({"a"}, {"work"}))) == 0
    assert len(attend([], AttentionQuery({"a"}))) == 0


def test_attend_ties_by_key_and_rms():
    store = [KeyEntry("b", {"x"}, "3"), KeyEntry("a", {"x"}, "4"), KeyEntry("c", set(), "text")]
    r = attend(store, AttentionQuery({"x"}))
    assert [m.key for m in r] == ["a", "b", "c"]
    assert r.rms == pytest.approx(math.sqrt((9 + 16) / 2))


def test_attend_rejects_query_outside_basis():
    with pytest.raises(DomainError):
        attend([KeyEntry("k", {"a"}, "v")], AttentionQuery({"zz"}), basis={"a"})


store_st = st.lists(
    st.builds(KeyEntry, st.text("abcdef", min_size=1, max_size=3), labels16, st.just("v"),
              st.frozensets(st.sampled_from(["c1", "c2", "c3"]))),
    max_size=10, unique_by=lambda k: k.key)


@given(store_st, labels16, st.frozensets(st.sampled_from(["c1", "c2", "c3"])),
       st.sampled_from([0.1, 1.0, 10.0]))
def test_attend_ranking_invariant_to_embedding(store, accept, ctx, beta):
    q = AttentionQuery(accept, ctx)
    a = attend(store, q, "softmax", beta, BASIS16)
    b = attend(store, q, "inverted", 1.0, BASIS16)
    assert [m.key for m in a] == [m.key for m in b]
    for m in a:
        assert not ctx or m.context_overlap
    raws = [m.raw_score for m in a]
    assert raws == sorted(raws, reverse=True)


def test_key_record_round_trip():
    line = "KEY k7 f1,f2 ctx=home,work value=the quick brown fox"
    k = parse_key(line)
    assert k.value == "the quick brown fox" and k.context == {"home", "work"}
    assert format_key(k) == line
    assert format_key(parse_key("KEY k - ctx= value=")) == "KEY k - ctx= value="
