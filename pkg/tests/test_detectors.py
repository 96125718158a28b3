import numpy as np
import pytest

from labelsift.core import DatasetView, NoiseKnowledge
from labelsift.detectors import (
    DetectorArtifacts,
    DetectorConfig,
    DetectorInputError,
    DistState,
    crust_select,
    disc_select,
    fine_select,
    run_detector,
    sft_select,
    unicon_select,
)
from labelsift.model import (
    PredictionBank,
    init_model,
    per_sample_gradients,
    record_epoch,
    train_epoch,
)
from labelsift.synth import ClusterSpec, DominantNoisePlan, apply_dominant_noise, generate_clusters


def _bank_from_history(rows, n_classes=None):
    """Build a bank whose history matrix is the given list of epoch rows."""
    arrays = [np.asarray(r, dtype=np.int64) for r in rows]
    bank = PredictionBank(window=len(arrays) or 1)
    bank.history = arrays
    return bank


# ---------------------------------------------------------------- CRUST

def _identity_gradients(points):
    pts = np.asarray(points, dtype=np.float64)

    def fn(indices, target_class):
        return pts[indices]

    return fn


def test_crust_base_selects_planted_tight_cluster():
    rng = np.random.default_rng(0)
    tight = rng.normal(0.0, 0.01, (8, 3))
    outliers = np.array([[50.0, 0, 0], [0, -80.0, 0]])
    pts = np.concatenate([tight, outliers])
    view = DatasetView(pts, np.zeros(10, dtype=np.int64), 1)
    scores = crust_select(view, _identity_gradients(pts), fl_ratio=0.8)
    assert np.array_equal(np.flatnonzero(scores.selected), np.arange(8))


def test_crust_full_ratio_selects_everything_and_knowledge_only_removes():
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((12, 3))
    labels = np.array([0] * 6 + [1] * 6)
    view = DatasetView(pts, labels, 2)
    base = crust_select(view, _identity_gradients(pts), fl_ratio=1.0)
    assert base.selected.all()
    plus = crust_select(
        view, _identity_gradients(pts), fl_ratio=1.0, knowledge=NoiseKnowledge({0: {1}}, 2)
    )
    assert not np.any(plus.selected & ~base.selected)


def test_crust_empty_knowledge_identical_to_base():
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((20, 4))
    labels = rng.integers(0, 2, 20)
    view = DatasetView(pts, labels, 2)
    base = crust_select(view, _identity_gradients(pts), 0.5)
    plus = crust_select(view, _identity_gradients(pts), 0.5, NoiseKnowledge.empty(2))
    assert np.array_equal(base.prob_clean, plus.prob_clean)
    assert np.array_equal(base.selected, plus.selected)


def test_crust_knowledge_claims_planted_noise():
    # class 1 holds 6 samples whose gradients sit inside class 0's cluster;
    # gamma is set to the full source-plus-planted size so every intruder
    # gets claimed (the default gamma is deliberately conservative)
    rng = np.random.default_rng(3)
    source = rng.normal(0.0, 0.05, (10, 3)) + [5.0, 0, 0]
    own = rng.normal(0.0, 0.05, (8, 3)) + [0, 5.0, 0]
    planted = rng.normal(0.0, 0.05, (6, 3)) + [5.0, 0, 0]
    pts = np.concatenate([source, own, planted])
    labels = np.array([0] * 10 + [1] * 14)
    view = DatasetView(pts, labels, 2)
    knowledge = NoiseKnowledge({1: {0}}, 2)
    scores = crust_select(view, _identity_gradients(pts), 0.75, knowledge, gamma=16)
    # the planted block (indices 18..23) is claimed by the source cluster
    assert not scores.selected[18:].any()
    assert scores.selected[10:18].all()
    # class 0 has no sources recorded: treated noise-free
    assert scores.selected[:10].all()

    partial = crust_select(view, _identity_gradients(pts), 0.75, knowledge)
    # default gamma claims noisy samples only, never the class's own cluster
    assert partial.selected[10:18].all()
    assert partial.selected[18:].sum() > 0


def test_crust_skips_class_when_ratio_too_small():
    pts = np.random.default_rng(4).standard_normal((5, 2))
    labels = np.array([0, 0, 0, 1, 1])
    view = DatasetView(pts, labels, 2)
    scores = crust_select(view, _identity_gradients(pts), fl_ratio=0.1)
    assert not scores.selected.any()
    assert any("skipped" in f for f in scores.flags)


# ---------------------------------------------------------------- FINE

def test_fine_identical_features_all_selected():
    v = np.tile([1.0, 2.0, 3.0], (10, 1))
    view = DatasetView(v, np.zeros(10, dtype=np.int64), 1)
    scores = fine_select(view)
    assert scores.selected.all()


def test_fine_separates_engineered_clusters():
    rng = np.random.default_rng(5)
    aligned = np.tile([1.0, 0.0, 0.0], (60, 1)) + rng.normal(0, 0.05, (60, 3))
    stray = np.tile([0.0, 1.0, 0.0], (20, 1)) + rng.normal(0, 0.05, (20, 3))
    pts = np.concatenate([aligned, stray])
    view = DatasetView(pts, np.zeros(80, dtype=np.int64), 1)
    scores = fine_select(view)
    assert scores.selected[:60].all()
    assert not scores.selected[60:].any()


def test_fine_hard_negative_rescued_by_knowledge():
    # class 0: 60 clean along e0, 20 noisy along e1 (true class 1), plus one
    # hard clean sample at alignment 0.4 to e0 and 0.1 to e1; class 1 is the
    # noise source with its own tight cluster along e1
    rng = np.random.default_rng(6)
    clean = np.tile([1.0, 0.0, 0.0], (60, 1)) + rng.normal(0, 0.25, (60, 3))
    noisy = np.tile([0.0, 1.0, 0.0], (20, 1)) + rng.normal(0, 0.25, (20, 3))
    hard = np.array([[0.4, 0.1, np.sqrt(1.0 - 0.4**2 - 0.1**2)]])
    source = np.tile([0.0, 1.0, 0.0], (30, 1)) + rng.normal(0, 0.25, (30, 3))
    pts = np.concatenate([clean, noisy, hard, source])
    labels = np.array([0] * 81 + [1] * 30)
    view = DatasetView(pts, labels, 2)

    base = fine_select(view)
    plus = fine_select(view, knowledge=NoiseKnowledge({0: {1}}, 2))
    hard_idx = 80
    assert not base.selected[hard_idx]
    assert plus.selected[hard_idx]
    # knowledge also culls the planted noisy block
    assert not plus.selected[60:80].any()
    assert plus.selected[:60].all()


def test_fine_rejects_zero_norm_features():
    pts = np.zeros((4, 2))
    view = DatasetView(pts, np.zeros(4, dtype=np.int64), 1)
    with pytest.raises(ValueError):
        fine_select(view)


# ---------------------------------------------------------------- SFT

def test_sft_stable_history_is_clean():
    view = DatasetView(np.zeros((1, 2)), np.array([2]), 3)
    bank = _bank_from_history([[2], [2], [2]])
    assert sft_select(view, bank).selected[0]


def test_sft_fluctuation_into_source_noisy_under_both():
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 3)
    bank = _bank_from_history([[0], [1], [0]])
    knowledge = NoiseKnowledge({0: {1}}, 3)
    assert not sft_select(view, bank).selected[0]
    assert not sft_select(view, bank, knowledge).selected[0]


def test_sft_fluctuation_outside_sources_clean_under_plus_k():
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 3)
    bank = _bank_from_history([[0], [2], [2]])
    knowledge = NoiseKnowledge({0: {1}}, 3)
    assert not sft_select(view, bank).selected[0]
    assert sft_select(view, bank, knowledge).selected[0]


def test_sft_never_predicted_as_label_is_clean():
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 3)
    bank = _bank_from_history([[1], [2], [1]])
    assert sft_select(view, bank).selected[0]


def test_sft_order_matters():
    # a source prediction *before* the first correct one is not a fluctuation
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 3)
    bank = _bank_from_history([[1], [0], [0]])
    assert sft_select(view, bank).selected[0]
    assert sft_select(view, bank, NoiseKnowledge({0: {1}}, 3)).selected[0]


def test_sft_short_bank_all_clean_flagged():
    view = DatasetView(np.zeros((3, 2)), np.array([0, 1, 2]), 3)
    bank = _bank_from_history([[0, 1, 2]])
    scores = sft_select(view, bank)
    assert scores.selected.all()
    assert scores.flags


# ---------------------------------------------------------------- UNICON

def test_unicon_exact_prediction_selected():
    probs = np.array([[1.0, 0.0], [0.0, 1.0]])
    view = DatasetView(np.zeros((2, 2)), np.array([0, 0]), 2)
    scores = unicon_select(view, probs, cutoff_mode="fixed", cutoff_value=0.5)
    assert scores.selected[0] and not scores.selected[1]
    assert scores.prob_clean[0] == pytest.approx(1.0)


def test_unicon_uniform_pair_divergence_value():
    probs = np.array([[0.5, 0.5]])
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 2)
    scores = unicon_select(view, probs, cutoff_mode="fixed", cutoff_value=0.4)
    assert scores.prob_clean[0] == pytest.approx(1.0 - 0.3113, abs=1e-4)


def test_unicon_class_mean_cutoff_keeps_below_mean():
    probs = np.array([[0.9, 0.1], [0.6, 0.4], [0.2, 0.8]])
    view = DatasetView(np.zeros((3, 2)), np.array([0, 0, 0]), 2)
    scores = unicon_select(view, probs, cutoff_mode="class_mean")
    # divergences increase as p(label) drops; only those below the mean pass
    assert scores.selected[0]
    assert not scores.selected[2]


def test_unicon_knowledge_requires_beating_sources():
    # label 0, source 1: sample A leans to class 0, sample B leans to source
    probs = np.array([[0.6, 0.3, 0.1], [0.3, 0.6, 0.1]])
    view = DatasetView(np.zeros((2, 3)), np.array([0, 0]), 3)
    base = unicon_select(view, probs, cutoff_mode="fixed", cutoff_value=0.9)
    assert base.selected.all()
    plus = unicon_select(view, probs, cutoff_mode="fixed", cutoff_value=0.9,
                         knowledge=NoiseKnowledge({0: {1}}, 3))
    assert plus.selected[0]
    assert not plus.selected[1]


# ---------------------------------------------------------------- DISC

def test_disc_single_step_recurrence():
    # one step from tau(0)=0 with lambda=0.9: max conf 0.8 -> tau 0.08,
    # label confidence 0.5 beats it on both views
    conf = np.array([[0.5, 0.8]])
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 2)
    scores, state = disc_select(view, conf, conf, DistState.initial(1), lam=0.9)
    assert state.tau_weak[0] == pytest.approx(0.08)
    assert state.tau_strong[0] == pytest.approx(0.08)
    assert scores.selected[0]
    assert scores.prob_clean[0] == pytest.approx(0.5)


def test_disc_lambda_zero_never_selects_own_max():
    conf = np.array([[0.7, 0.2], [0.9, 0.05]])
    view = DatasetView(np.zeros((2, 2)), np.array([0, 0]), 2)
    scores, _ = disc_select(view, conf, conf, DistState.initial(2), lam=0.0)
    assert not scores.selected.any()


def test_disc_knowledge_can_lower_threshold_and_rescue():
    # argmax class 2 is not a source of label 0; restricting the max to the
    # label and its source flips the sample from rejected to selected
    conf = np.array([[0.5, 0.3, 0.95]])
    view = DatasetView(np.zeros((1, 3)), np.array([0]), 3)
    state = DistState(np.array([0.45]), np.array([0.45]))
    base, _ = disc_select(view, conf, conf, state, lam=0.8)
    assert not base.selected[0]
    plus, _ = disc_select(view, conf, conf, state, lam=0.8,
                          knowledge=NoiseKnowledge({0: {1}}, 3))
    assert plus.selected[0]


def test_disc_rejects_bad_lambda():
    conf = np.ones((1, 2)) / 2
    view = DatasetView(np.zeros((1, 2)), np.array([0]), 2)
    with pytest.raises(ValueError):
        disc_select(view, conf, conf, DistState.initial(1), lam=1.0)


# ------------------------------------------------------- knowledge semantics

def _pipeline(seed=0):
    spec = ClusterSpec(num_classes=4, dim=6, samples_per_class=60, separation=4.0, seed=seed)
    ds = generate_clusters(spec)
    noisy, knowledge = apply_dominant_noise(ds, DominantNoisePlan(0.5, 4), seed=seed + 1)
    view = noisy.detector_view()
    model = init_model(4, 6, learning_rate=0.3)
    bank = PredictionBank(3)
    for e in range(5):
        train_epoch(model, view.features, view.noisy_labels, np.ones(len(view)), seed=e)
        record_epoch(bank, model, view.features)
    return view, model, bank, knowledge


def _artifacts(view, model, bank):
    rng = np.random.default_rng(9)
    conf_w = bank.latest_probs
    conf_s = bank.latest_probs[:, ::-1].copy()  # any distribution-shaped stand-in
    return DetectorArtifacts(
        gradients_fn=lambda idx, c: per_sample_gradients(model, view.features[idx], c),
        bank=bank,
        latest_probs=bank.latest_probs,
        conf_weak=conf_w,
        conf_strong=conf_s,
        dist_state=DistState(rng.random(len(view)) * 0.5, rng.random(len(view)) * 0.5),
        features=view.features,
    )


@pytest.mark.parametrize("method", ["crust", "fine", "sft", "unicon", "disc"])
def test_no_knowledge_identity_bitwise(method):
    view, model, bank, _ = _pipeline()
    base_art = _artifacts(view, model, bank)
    plus_art = _artifacts(view, model, bank)
    base_cfg = DetectorConfig(method=method, knowledge_enabled=False)
    plus_cfg = DetectorConfig(method=method, knowledge_enabled=True)
    base = run_detector(base_cfg, view, base_art)
    plus = run_detector(plus_cfg, view, plus_art, NoiseKnowledge.empty(4))
    assert np.array_equal(base.prob_clean, plus.prob_clean)
    assert np.array_equal(base.selected, plus.selected)
    assert any("base behavior" in f for f in plus.flags)


@pytest.mark.parametrize("method", ["crust", "sft", "unicon"])
def test_knowledge_monotonicity(method):
    view, model, bank, _ = _pipeline(seed=3)
    cfg = DetectorConfig(method=method, knowledge_enabled=True)
    smaller = NoiseKnowledge({2: {0}, 3: {0}}, 4)
    larger = NoiseKnowledge({2: {0, 1}, 3: {0}}, 4)
    sel_small = run_detector(cfg, view, _artifacts(view, model, bank), smaller).selected
    sel_large = run_detector(cfg, view, _artifacts(view, model, bank), larger).selected
    grew = sel_large & ~sel_small
    assert not np.any(grew & (view.noisy_labels == 2))


def test_run_detector_missing_artifact_and_unknown_method():
    view, model, bank, _ = _pipeline(seed=5)
    cfg = DetectorConfig(method="crust")
    with pytest.raises(DetectorInputError, match="gradients_fn"):
        run_detector(cfg, view, DetectorArtifacts())
    with pytest.raises(ValueError, match="unknown detector method"):
        DetectorConfig(method="mystery")


def test_run_detector_dispatch_matches_direct_call():
    view, model, bank, _ = _pipeline(seed=7)
    art = _artifacts(view, model, bank)
    via_dispatch = run_detector(DetectorConfig(method="fine"), view, art)
    direct = fine_select(view, art.features, None)
    assert np.array_equal(via_dispatch.prob_clean, direct.prob_clean)


def test_run_detector_disc_threads_state():
    view, model, bank, _ = _pipeline(seed=8)
    art = _artifacts(view, model, bank)
    before = art.dist_state
    run_detector(DetectorConfig(method="disc"), view, art)
    assert art.dist_state is not before
