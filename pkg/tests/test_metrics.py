import numpy as np
import pytest

from labelsift.core import CleanScores, LabeledDataset
from labelsift.metrics import (
    absorption,
    accuracy,
    confusion_matrix,
    mean_std,
    selection_metrics,
)
from labelsift.model import init_model


def _ds(noisy, true, k):
    n = len(noisy)
    return LabeledDataset(np.zeros((n, 2)), noisy, k, true_labels=true)


def _scores(selected):
    sel = np.asarray(selected, dtype=bool)
    return CleanScores(sel.astype(float), sel)


def test_selection_metrics_perfect():
    ds = _ds([0, 0, 1, 1], [0, 1, 1, 0], 2)
    clean = ds.noisy_labels == ds.true_labels
    report = selection_metrics(_scores(clean), ds)
    assert report.precision == 1.0 and report.recall == 1.0


def test_selection_metrics_select_everything():
    rng = np.random.default_rng(0)
    noisy = rng.integers(0, 3, 30)
    true = rng.integers(0, 3, 30)
    ds = _ds(noisy, true, 3)
    report = selection_metrics(_scores(np.ones(30, dtype=bool)), ds)
    assert report.recall == 1.0
    assert report.precision == pytest.approx(np.mean(noisy == true))


def test_selection_metrics_counted_example():
    # 20 samples, 10 clean; select 8 of which 6 clean -> precision .75 recall .6
    noisy = np.zeros(20, dtype=int)
    true = np.array([0] * 10 + [1] * 10)
    ds = _ds(noisy, true, 2)
    selected = np.zeros(20, dtype=bool)
    selected[:6] = True    # 6 clean
    selected[10:12] = True  # 2 noisy
    report = selection_metrics(_scores(selected), ds)
    assert report.precision == pytest.approx(0.75)
    assert report.recall == pytest.approx(0.6)


def test_selection_metrics_matches_set_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = 50
        noisy = rng.integers(0, 4, n)
        true = rng.integers(0, 4, n)
        sel = rng.random(n) < 0.4
        ds = _ds(noisy, true, 4)
        report = selection_metrics(_scores(sel), ds)
        clean_set = {i for i in range(n) if noisy[i] == true[i]}
        sel_set = {i for i in range(n) if sel[i]}
        inter = len(clean_set & sel_set)
        assert report.true_positive == inter
        if sel_set:
            assert report.precision == pytest.approx(inter / len(sel_set))
        if clean_set:
            assert report.recall == pytest.approx(inter / len(clean_set))


def test_selection_metrics_empty_selection_flagged():
    ds = _ds([0, 1], [0, 1], 2)
    report = selection_metrics(_scores([False, False]), ds)
    assert report.precision == 0.0
    assert report.flags


def test_selection_metrics_requires_true_labels():
    ds = LabeledDataset(np.zeros((2, 2)), [0, 1], 2)
    with pytest.raises(ValueError):
        selection_metrics(_scores([True, False]), ds)


def test_confusion_matrix_perfect_and_constant():
    k, d = 3, 4
    ds = LabeledDataset(np.eye(k, d) * 10, [0, 1, 2], k, true_labels=[0, 1, 2])
    model = init_model(k, d)
    model.weights[:] = np.eye(k, d)
    report = confusion_matrix(model, ds)
    assert np.array_equal(report.counts, np.eye(k, dtype=int))
    assert np.allclose(report.percent.sum(axis=1), 100.0, atol=0.01)

    constant = init_model(k, d)
    constant.bias[:] = np.array([10.0, 0.0, 0.0])
    report = confusion_matrix(constant, ds)
    assert report.counts[:, 0].sum() == 3
    assert report.counts[:, 1:].sum() == 0


def test_confusion_matrix_uniform_predictor_concentration():
    rng = np.random.default_rng(1)
    k, n_per = 4, 1000
    feats = rng.standard_normal((k * n_per, 3))
    true = np.repeat(np.arange(k), n_per)
    ds = LabeledDataset(feats, true, k, true_labels=true)
    model = init_model(k, 3)
    model.weights[:] = rng.standard_normal((k, 3)) * 3  # arbitrary unaligned classifier
    report = confusion_matrix(model, ds)
    assert np.all(report.counts.sum(axis=1) == n_per)
    assert np.allclose(report.percent.sum(axis=1), 100.0, atol=0.01)


def test_confusion_matrix_empty_class_flagged():
    ds = LabeledDataset(np.zeros((2, 2)), [0, 0], 3, true_labels=[0, 0])
    report = confusion_matrix(init_model(3, 2), ds)
    assert np.all(report.percent[1] == 0.0) and np.all(report.percent[2] == 0.0)
    assert len(report.flags) == 2


def test_absorption_values_and_validation():
    report = absorption(0.6579, 0.8054, metadata={"detector": "crust"})
    assert report.absorption == pytest.approx(0.1475, abs=1e-9)
    assert absorption(0.5, 0.5).absorption == 0.0
    with pytest.raises(ValueError):
        absorption(-0.1, 0.5)


def test_mean_std_sample_convention():
    mean, std = mean_std([0.8, 0.9, 1.0])
    assert mean == pytest.approx(0.9)
    assert std == pytest.approx(np.std([0.8, 0.9, 1.0], ddof=1))
    only_mean, zero = mean_std([0.7])
    assert only_mean == 0.7 and zero == 0.0


def test_accuracy_top1():
    k, d = 2, 2
    ds = LabeledDataset(np.array([[5.0, 0], [0, 5.0]]), [0, 1], k, true_labels=[0, 1])
    model = init_model(k, d)
    model.weights[:] = np.eye(2)
    assert accuracy(model, ds) == 1.0
