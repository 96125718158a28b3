"""Noise transition estimation and knowledge extraction.

The estimator factorizes the transition matrix through the model's predicted
class: one factor counts how predicted classes map to noisy labels, the other
averages the model's soft predictions per predicted class. Ground-truth
matrices come straight from the corruption plan's exact counts, and either
kind of matrix can be distilled into per-class noise-source knowledge.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (
    DatasetView,
    KnowledgeOrigin,
    NoiseKnowledge,
    ShapeError,
    TransitionMatrix,
)
from .synth import AsymmetricNoisePlan, DominantNoisePlan, dominant_composition, round_half_up


@dataclass(frozen=True)
class DualTEstimate:
    """Factorized transition estimate: t = rownorm(t_spade @ t_club)."""

    t_club: np.ndarray   # P(noisy label = j | predicted class = l), counted
    t_spade: np.ndarray  # mean soft prediction per predicted class
    t: TransitionMatrix
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("t_club", "t_spade"):
            mat = getattr(self, name)
            rows = mat.sum(axis=1)
            if np.any(np.abs(rows - 1.0) > 1e-9):
                raise ValueError(f"{name} rows must sum to 1 within 1e-9")


def estimate_dual_t(view: DatasetView, latest_probs: np.ndarray) -> DualTEstimate:
    """Estimate the transition matrix from noisy labels and model predictions.

    t_club[l, j] counts samples predicted l with noisy label j (a class never
    predicted falls back to a one-hot row). t_spade[i, l] averages the
    predicted probability of class l over samples predicted i, so a confident
    model makes it near-identity and the product collapses to the counted
    factor. Classes absent from either conditioning are flagged.
    """
    probs = np.asarray(latest_probs, dtype=np.float64)
    n, k = len(view), view.num_classes
    if probs.shape != (n, k):
        raise ShapeError(f"latest_probs must have shape ({n}, {k}), got {probs.shape}")
    preds = np.argmax(probs, axis=1)
    labels = view.noisy_labels

    flags: list[str] = []
    club = np.zeros((k, k))
    spade = np.zeros((k, k))
    for l in range(k):
        rows = preds == l
        count = int(rows.sum())
        if count == 0:
            club[l, l] = 1.0
            spade[l] = 1.0 / k
            flags.append(f"dual-t: class {l} never predicted; club row one-hot, spade row uniform")
            continue
        club[l] = np.bincount(labels[rows], minlength=k) / count
        spade[l] = probs[rows].mean(axis=0)
    absent = sorted(set(range(k)) - set(np.unique(labels).tolist()))
    for c in absent:
        flags.append(f"dual-t: class {c} absent from noisy labels")

    product = spade @ club
    t = product / product.sum(axis=1, keepdims=True)
    return DualTEstimate(club, spade, TransitionMatrix(t), tuple(flags))


def knowledge_from_transition(
    t: TransitionMatrix, threshold: float = 0.05, max_sources: int = 1
) -> NoiseKnowledge:
    """Read per-class noise sources off a transition matrix.

    For each class c, the off-diagonal donors leaking the most mass into c
    (column scan of P(noisy=j | true=i)) become its noise sources, keeping at
    most max_sources per class and ignoring mass below the threshold, which is
    treated as estimation noise. Ties break toward the smaller class index.
    """
    if threshold < 0.0:
        raise ValueError("threshold must be >= 0")
    k = t.num_classes
    sources: dict[int, frozenset[int]] = {}
    for c in range(k):
        column = t.t[:, c].copy()
        column[c] = -1.0
        donors = np.argsort(-column, kind="stable")[:max_sources]
        picked = frozenset(int(i) for i in donors if column[i] >= threshold)
        if picked:
            sources[c] = picked
    return NoiseKnowledge(sources, k, KnowledgeOrigin.FROM_TRANSITION_MATRIX)


def gt_transition(plan, samples_per_class: int) -> TransitionMatrix:
    """Exact transition matrix implied by a corruption plan's counts."""
    k = plan.num_classes
    t = np.eye(k)
    if isinstance(plan, DominantNoisePlan):
        comp = dominant_composition(samples_per_class, plan.noise_ratio, k // 2)
        used = comp.final_per_class + comp.noisy_per_recessive
        recessive = sorted(plan.recessive)
        for i, d in enumerate(sorted(plan.dominant)):
            t[d, d] = comp.final_per_class / used
            for j, r in enumerate(recessive):
                t[d, r] = comp.cells[j, i] / used
    elif isinstance(plan, AsymmetricNoisePlan):
        flips = round_half_up(plan.noise_ratio * samples_per_class)
        for a, b in plan.pairs:
            t[a, a] = (samples_per_class - flips) / samples_per_class
            t[a, b] = flips / samples_per_class
            t[b, b] = t[a, a]
            t[b, a] = t[a, b]
    else:
        raise ValueError(f"unsupported plan type {type(plan).__name__}")
    return TransitionMatrix(t)


def transition_to_json(t: TransitionMatrix) -> str:
    return json.dumps(
        {"k": t.num_classes, "t": [[float(v) for v in row] for row in t.t]},
        sort_keys=True,
    )


def transition_from_json(text: str) -> TransitionMatrix:
    doc = json.loads(text)
    mat = np.asarray(doc["t"], dtype=np.float64)
    if mat.shape != (doc["k"], doc["k"]):
        raise ShapeError("transition JSON shape disagrees with its 'k' field")
    return TransitionMatrix(mat)
