import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelsift.core import (
    CleanScores,
    KnowledgeOrigin,
    LabeledDataset,
    NoiseKnowledge,
    ShapeError,
    TransitionMatrix,
    integrate_knowledge,
    sources_of,
)


def test_integrate_cat_dog_example():
    # p(cat)=0.3 beats source p(dog)=0.2, so the sample stays clean
    probs = np.array([[0.3, 0.2, 0.5]])
    kn = NoiseKnowledge({0: {1}}, 3)
    scores = integrate_knowledge(probs, [0], kn)
    assert scores.prob_clean[0] == pytest.approx(0.3)
    assert scores.selected[0]


def test_integrate_empty_knowledge_is_identity_on_label_column():
    rng = np.random.default_rng(0)
    probs = rng.random((20, 4))
    labels = rng.integers(0, 4, size=20)
    scores = integrate_knowledge(probs, labels, NoiseKnowledge.empty(4))
    assert np.array_equal(scores.prob_clean, probs[np.arange(20), labels])


def test_integrate_exact_tie_marks_noisy():
    probs = np.array([[0.5, 0.5]])
    scores = integrate_knowledge(probs, [0], NoiseKnowledge({0: {1}}, 2))
    assert scores.prob_clean[0] == 0.0
    assert not scores.selected[0]


def test_integrate_shape_mismatch_rejected():
    with pytest.raises(ShapeError):
        integrate_knowledge(np.ones((3, 2)), [0, 1], NoiseKnowledge.empty(2))
    with pytest.raises(ShapeError):
        integrate_knowledge(np.ones((2, 3)), [0, 1], NoiseKnowledge.empty(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_integrate_never_increases_and_is_monotone(seed):
    rng = np.random.default_rng(seed)
    n, k = 30, 5
    probs = rng.random((n, k))
    labels = rng.integers(0, k, size=n)
    base = integrate_knowledge(probs, labels, NoiseKnowledge.empty(k))
    small = NoiseKnowledge({0: {1}}, k)
    grown = NoiseKnowledge({0: {1, 2}}, k)
    with_small = integrate_knowledge(probs, labels, small)
    with_grown = integrate_knowledge(probs, labels, grown)
    assert np.all(with_small.prob_clean <= base.prob_clean)
    # adding a source can only turn class-0 samples off, never on
    assert not np.any(with_grown.selected & ~with_small.selected)


def test_sources_of_lookup_and_errors():
    kn = NoiseKnowledge({2: {0, 1}}, 4)
    assert sources_of(kn, 2) == {0, 1}
    assert sources_of(kn, 0) == frozenset()
    with pytest.raises(IndexError):
        sources_of(kn, 4)


def test_knowledge_from_label_pairs():
    kn = NoiseKnowledge.from_label_pairs([(0, 3)], 4)
    assert sources_of(kn, 3) == {0}
    assert kn.origin is KnowledgeOrigin.FROM_LABEL_PAIRS


def test_knowledge_rejects_self_source_and_bad_indices():
    with pytest.raises(ValueError):
        NoiseKnowledge({1: {1}}, 3)
    with pytest.raises(ShapeError):
        NoiseKnowledge({1: {7}}, 3)
    with pytest.raises(ShapeError):
        NoiseKnowledge({9: {0}}, 3)


def test_empty_source_sets_normalize_to_empty_knowledge():
    kn = NoiseKnowledge({0: frozenset(), 1: frozenset()}, 3)
    assert kn.is_empty()


def test_dataset_validation_and_view():
    feats = np.zeros((4, 2))
    ds = LabeledDataset(feats, [0, 1, 1, 0], 2, true_labels=[0, 1, 0, 0])
    view = ds.detector_view()
    assert not hasattr(view, "true_labels")
    assert list(view.class_indices(1)) == [1, 2]
    with pytest.raises(ShapeError):
        LabeledDataset(feats, [0, 1, 2, 0], 2)
    with pytest.raises(ShapeError):
        LabeledDataset(feats, [0, 1, 1, 0], 2, true_labels=[0, 1])


def test_clean_scores_invariants():
    with pytest.raises(ValueError):
        CleanScores(np.array([1.2]), np.array([True]))
    with pytest.raises(ValueError):
        CleanScores(np.array([0.0]), np.array([True]))
    ok = CleanScores(np.array([0.4, 0.0]), np.array([True, False]))
    assert len(ok) == 2


def test_transition_matrix_row_stochastic():
    TransitionMatrix(np.array([[0.5, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        TransitionMatrix(np.array([[0.6, 0.5], [0.0, 1.0]]))
    with pytest.raises(ShapeError):
        TransitionMatrix(np.ones((2, 3)) / 3)
