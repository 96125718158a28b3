"""Clean-sample detectors in base and knowledge-integrated form.

Five detector families share one calling convention: (dataset view, model
artifacts, optional noise-source knowledge) -> CleanScores. With empty
knowledge every detector runs its base selection bit-for-bit; with knowledge
present, a class whose recorded source set is empty is treated as
noise-free (its samples pass), and classes with sources get the cross-class
comparison of their family:

* coreset gradients: a sample claimed by a noise source's gradient cluster is
  noisy; unclaimed samples of the class are clean.
* eigen-alignment: the mixture split runs on alignment(label) minus the best
  source alignment instead of the raw alignment.
* fluctuation: only flips *into* a source class count as fluctuation events.
* divergence: the label divergence must also beat every source divergence.
* dual-view thresholds: the running threshold tracks the max confidence over
  the label and its sources only, instead of all classes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import CleanScores, DatasetView, NoiseKnowledge, ShapeError
from .kernels import (
    GaussianMixture1D,
    greedy_min_distance_subset,
    jsd_to_onehot,
    pairwise_distances,
    power_iteration,
)

METHODS = ("crust", "fine", "sft", "unicon", "disc")

GradientsFn = Callable[[np.ndarray, int], np.ndarray]


class DetectorInputError(ValueError):
    """A required model artifact is missing for the configured method."""


@dataclass(frozen=True)
class DetectorConfig:
    method: str
    fl_ratio: float = 0.5
    gmm_iters: int = 100
    gmm_tol: float = 1e-6
    jsd_cutoff_mode: str = "class_mean"
    jsd_cutoff_value: float | None = None
    dist_lambda: float = 0.9
    knowledge_enabled: bool = False
    crust_gamma: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown detector method {self.method!r}; expected one of {METHODS}")
        if not 0.0 < self.fl_ratio <= 1.0:
            raise ValueError("fl_ratio must lie in (0, 1]")
        if not 0.0 <= self.dist_lambda < 1.0:
            raise ValueError("dist_lambda must lie in [0, 1)")
        if self.jsd_cutoff_mode not in ("class_mean", "fixed"):
            raise ValueError("jsd_cutoff_mode must be 'class_mean' or 'fixed'")
        if self.jsd_cutoff_mode == "fixed" and self.jsd_cutoff_value is None:
            raise ValueError("fixed cutoff mode needs jsd_cutoff_value")


@dataclass(frozen=True)
class DistState:
    """Per-sample dual-view thresholds, threaded input -> output across epochs."""

    tau_weak: np.ndarray
    tau_strong: np.ndarray

    def __post_init__(self):
        tw = np.asarray(self.tau_weak, dtype=np.float64)
        ts = np.asarray(self.tau_strong, dtype=np.float64)
        if tw.shape != ts.shape or tw.ndim != 1:
            raise ShapeError("thresholds must be equal-length vectors")
        for name, arr in (("tau_weak", tw), ("tau_strong", ts)):
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ValueError(f"{name} values must lie in [0, 1]")
        object.__setattr__(self, "tau_weak", tw)
        object.__setattr__(self, "tau_strong", ts)

    @classmethod
    def initial(cls, n: int) -> "DistState":
        return cls(np.zeros(n), np.zeros(n))


def _no_knowledge(knowledge: NoiseKnowledge | None) -> bool:
    return knowledge is None or knowledge.is_empty()


def crust_select(
    view: DatasetView,
    gradients_fn: GradientsFn,
    fl_ratio: float,
    knowledge: NoiseKnowledge | None = None,
    gamma: int | None = None,
) -> CleanScores:
    """Coreset-style selection on per-sample gradient geometry.

    Base: per class c, greedily pick the ceil(fl_ratio * |X_c|) samples whose
    pairwise gradient distances (toward label c) have minimal sum.

    With knowledge: for each noise source s of c, run the same greedy search
    on X_c united with X_s using gradients toward s; class-c samples landing
    inside that cluster are claimed as noisy, and the clean set of c is
    whatever no source claims. A class with no recorded sources is treated as
    noise-free and passes entirely.
    """
    if not 0.0 < fl_ratio <= 1.0:
        raise ValueError("fl_ratio must lie in (0, 1]")
    n, k = len(view), view.num_classes
    prob = np.zeros(n)
    flags: list[str] = []

    if _no_knowledge(knowledge):
        for c in range(k):
            idx = view.class_indices(c)
            m = len(idx)
            if m == 0:
                continue
            if fl_ratio * m < 1.0:
                flags.append(f"crust: class {c} skipped (fl_ratio * {m} < 1)")
                continue
            dist = pairwise_distances(gradients_fn(idx, c))
            chosen = greedy_min_distance_subset(dist, math.ceil(fl_ratio * m))
            prob[idx[chosen]] = 1.0
        return CleanScores(prob, prob > 0.0, tuple(flags))

    for c in range(k):
        idx_c = view.class_indices(c)
        m_c = len(idx_c)
        if m_c == 0:
            continue
        srcs = sorted(knowledge.sources_of(c))
        if not srcs:
            prob[idx_c] = 1.0
            continue
        claimed = np.zeros(m_c, dtype=bool)
        for s in srcs:
            idx_s = view.class_indices(s)
            if len(idx_s) == 0:
                flags.append(f"crust: noise source {s} of class {c} has no samples")
                continue
            union = np.concatenate([idx_c, idx_s])
            dist = pairwise_distances(gradients_fn(union, s))
            size = gamma if gamma is not None else (
                math.ceil(fl_ratio * len(idx_s)) + math.ceil((1.0 - fl_ratio) * m_c)
            )
            size = max(1, min(int(size), len(union)))
            chosen = greedy_min_distance_subset(dist, size)
            claimed[chosen[chosen < m_c]] = True
        prob[idx_c[~claimed]] = 1.0
    return CleanScores(prob, prob > 0.0, tuple(flags))


def _gmm_split(scores: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, str | None]:
    """Posterior of the higher-mean component, with a median fallback when EM
    degenerates (component starved or variance collapsed)."""
    gmm = GaussianMixture1D(max_iter=max_iter, tol=tol).fit(scores)
    if gmm.degenerate_:
        sel = scores >= np.median(scores)
        return sel.astype(np.float64), "gmm degenerate; median-threshold split used"
    return gmm.posterior_high(scores), None


def fine_select(
    view: DatasetView,
    features: np.ndarray | None = None,
    knowledge: NoiseKnowledge | None = None,
    gmm_iters: int = 100,
    gmm_tol: float = 1e-6,
) -> CleanScores:
    """Eigen-alignment selection.

    Per class, the principal eigenvector of the feature gram matrix serves as
    the class representative; a sample's alignment is its cosine similarity to
    that vector. Base fits a two-component mixture on the label-class
    alignments and keeps the higher-mean component. With knowledge, the
    mixture is fitted on alignment(label) - max(alignment(source)) instead.
    """
    feats = np.asarray(view.features if features is None else features, dtype=np.float64)
    if len(feats) != len(view):
        raise ShapeError("features row count differs from dataset view")
    norms = np.linalg.norm(feats, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("feature norms must be positive")
    unit = feats / norms[:, None]

    k = view.num_classes
    axes = np.zeros((k, feats.shape[1]))
    flags: list[str] = []
    for c in range(k):
        idx = view.class_indices(c)
        if len(idx) == 0:
            flags.append(f"fine: class {c} has no samples; alignments default to 0")
            continue
        gram = feats[idx].T @ feats[idx]
        _, u = power_iteration(gram)
        if float(np.mean(unit[idx] @ u)) < 0.0:
            u = -u
        axes[c] = u
    alignments = unit @ axes.T  # (n, k) cosine similarities

    prob = np.zeros(len(view))
    with_knowledge = not _no_knowledge(knowledge)
    for c in range(k):
        idx = view.class_indices(c)
        if len(idx) == 0:
            continue
        if with_knowledge:
            srcs = sorted(knowledge.sources_of(c))
            if not srcs:
                prob[idx] = 1.0
                continue
            scores = alignments[idx, c] - alignments[np.ix_(idx, srcs)].max(axis=1)
        else:
            scores = alignments[idx, c]
        if len(idx) < 2:
            prob[idx] = 1.0
            flags.append(f"fine: class {c} has < 2 samples; kept without a mixture fit")
            continue
        post, flag = _gmm_split(scores, gmm_iters, gmm_tol)
        if flag:
            flags.append(f"fine: class {c}: {flag}")
        prob[idx] = post
    return CleanScores(prob, prob > 0.5, tuple(flags))


def sft_select(
    view: DatasetView,
    bank,
    knowledge: NoiseKnowledge | None = None,
) -> CleanScores:
    """Fluctuation-based selection over the prediction bank.

    A sample is noisy when some earlier epoch predicted its label and a later
    epoch predicted something else; with knowledge the later prediction must
    land in a recorded noise source of the label.
    """
    n = len(view)
    if bank is None or bank.epochs_recorded < 2:
        flags = ("sft: fewer than 2 recorded epochs; all samples treated clean",)
        return CleanScores(np.ones(n), np.ones(n, dtype=bool), flags)
    hist = bank.history_matrix()
    if hist.shape[1] != n:
        raise ShapeError("prediction bank size differs from dataset view")
    y = view.noisy_labels
    eq = hist == y[None, :]
    any_eq = eq.any(axis=0)
    first_eq = eq.argmax(axis=0)

    if _no_knowledge(knowledge):
        offending = ~eq
    else:
        src_mask = knowledge.source_mask()
        offending = src_mask[np.broadcast_to(y, hist.shape), hist]
    any_off = offending.any(axis=0)
    last_off = hist.shape[0] - 1 - offending[::-1].argmax(axis=0)
    noisy = any_eq & any_off & (last_off > first_eq)
    prob = np.where(noisy, 0.0, 1.0)
    return CleanScores(prob, prob > 0.0)


def unicon_select(
    view: DatasetView,
    latest_probs: np.ndarray,
    cutoff_mode: str = "class_mean",
    cutoff_value: float | None = None,
    knowledge: NoiseKnowledge | None = None,
) -> CleanScores:
    """Divergence-based selection.

    d_i = JSD(onehot(label), p_i) with base-2 logs, so d_i lives in [0, 1].
    Base keeps samples with d_i under the cutoff (per-class mean by default).
    With knowledge, d_i must additionally be smaller than the divergence to
    every recorded noise source of the label.
    """
    probs = np.asarray(latest_probs, dtype=np.float64)
    n, k = len(view), view.num_classes
    if probs.shape != (n, k):
        raise ShapeError(f"latest_probs must have shape ({n}, {k}), got {probs.shape}")
    y = view.noisy_labels
    d = jsd_to_onehot(probs[np.arange(n), y])

    if cutoff_mode == "fixed":
        if cutoff_value is None:
            raise ValueError("fixed cutoff mode needs a value")
        cutoffs = np.full(n, float(cutoff_value))
    elif cutoff_mode == "class_mean":
        cutoffs = np.empty(n)
        for c in range(k):
            rows = y == c
            if rows.any():
                cutoffs[rows] = d[rows].mean()
    else:
        raise ValueError(f"unknown cutoff mode {cutoff_mode!r}")

    selected = d < cutoffs
    if not _no_knowledge(knowledge):
        for c, srcs in knowledge.sources.items():
            rows = np.flatnonzero(y == c)
            if len(rows) == 0:
                continue
            rival = jsd_to_onehot(probs[np.ix_(rows, sorted(srcs))]).min(axis=1)
            selected[rows] &= d[rows] < rival
    prob = np.where(selected, 1.0 - d, 0.0)
    return CleanScores(prob, selected)


def disc_select(
    view: DatasetView,
    conf_weak: np.ndarray,
    conf_strong: np.ndarray,
    state: DistState,
    lam: float,
    knowledge: NoiseKnowledge | None = None,
) -> tuple[CleanScores, DistState]:
    """Dual-view dynamic-threshold selection.

    Each view's per-sample threshold is an exponential moving average of the
    maximum confidence; thresholds update first, then the label confidence
    must strictly exceed both updated thresholds. With knowledge the max runs
    over the label class and its recorded noise sources only, which can lower
    the threshold and rescue hard clean samples.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    n, k = len(view), view.num_classes
    cw = np.asarray(conf_weak, dtype=np.float64)
    cs = np.asarray(conf_strong, dtype=np.float64)
    if cw.shape != (n, k) or cs.shape != (n, k):
        raise ShapeError(f"confidence matrices must have shape ({n}, {k})")
    if len(state.tau_weak) != n:
        raise ShapeError("threshold state size differs from dataset view")
    y = view.noisy_labels

    if _no_knowledge(knowledge):
        max_w, max_s = cw.max(axis=1), cs.max(axis=1)
    else:
        allowed = knowledge.source_mask(include_self=True)[y]
        max_w = np.where(allowed, cw, -np.inf).max(axis=1)
        max_s = np.where(allowed, cs, -np.inf).max(axis=1)
    new_state = DistState(
        lam * state.tau_weak + (1.0 - lam) * max_w,
        lam * state.tau_strong + (1.0 - lam) * max_s,
    )
    label_w = cw[np.arange(n), y]
    label_s = cs[np.arange(n), y]
    selected = (label_w > new_state.tau_weak) & (label_s > new_state.tau_strong)
    prob = np.where(selected, np.minimum(label_w, label_s), 0.0)
    return CleanScores(prob, selected), new_state


@dataclass
class DetectorArtifacts:
    """Everything run_detector might need; methods check for their own pieces."""

    gradients_fn: GradientsFn | None = None
    bank: object | None = None
    latest_probs: np.ndarray | None = None
    conf_weak: np.ndarray | None = None
    conf_strong: np.ndarray | None = None
    dist_state: DistState | None = None
    features: np.ndarray | None = None
    extra_flags: list[str] = field(default_factory=list)


def run_detector(
    cfg: DetectorConfig,
    view: DatasetView,
    artifacts: DetectorArtifacts,
    knowledge: NoiseKnowledge | None = None,
) -> CleanScores:
    """Dispatch to the configured detector.

    knowledge_enabled=False forces empty knowledge. For the dual-view method
    the updated threshold state is written back into artifacts.dist_state so
    the harness can thread it across epochs.
    """
    flags: list[str] = []
    if not cfg.knowledge_enabled:
        knowledge = None
    elif _no_knowledge(knowledge):
        flags.append("knowledge enabled but no noise sources recorded; base behavior")

    def need(name: str):
        value = getattr(artifacts, name)
        if value is None:
            raise DetectorInputError(f"method {cfg.method!r} requires artifact {name!r}")
        return value

    if cfg.method == "crust":
        scores = crust_select(
            view, need("gradients_fn"), cfg.fl_ratio, knowledge, cfg.crust_gamma
        )
    elif cfg.method == "fine":
        scores = fine_select(
            view, artifacts.features, knowledge, cfg.gmm_iters, cfg.gmm_tol
        )
    elif cfg.method == "sft":
        scores = sft_select(view, need("bank"), knowledge)
    elif cfg.method == "unicon":
        scores = unicon_select(
            view, need("latest_probs"), cfg.jsd_cutoff_mode, cfg.jsd_cutoff_value, knowledge
        )
    elif cfg.method == "disc":
        scores, new_state = disc_select(
            view, need("conf_weak"), need("conf_strong"), need("dist_state"),
            cfg.dist_lambda, knowledge,
        )
        artifacts.dist_state = new_state
    else:  # pragma: no cover - DetectorConfig already rejects unknown methods
        raise ValueError(f"unknown method {cfg.method!r}")

    if flags:
        scores = CleanScores(scores.prob_clean, scores.selected, scores.flags + tuple(flags))
    return scores
