"""Shared domain types: datasets, noise-source knowledge, scores, transitions.

Everything here is an immutable snapshot after construction; the operations
are pure functions and safe to call concurrently.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


class ShapeError(ValueError):
    """Dimension mismatch between arrays, labels and class counts."""


class KnowledgeOrigin(enum.Enum):
    GROUND_TRUTH = "GroundTruth"
    FROM_TRANSITION_MATRIX = "FromTransitionMatrix"
    FROM_LABEL_PAIRS = "FromLabelPairs"
    PERTURBED = "Perturbed"


def _as_labels(labels, k: int, name: str) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        raise ShapeError(f"{name} contains indices outside [0, {k})")
    return arr


@dataclass(frozen=True)
class DatasetView:
    """What detectors are allowed to see: features and noisy labels only.

    True labels are deliberately absent so a detector cannot cheat even by
    accident; metrics and synthesis work on the full LabeledDataset instead.
    """

    features: np.ndarray
    noisy_labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if len(self.features) != len(self.noisy_labels):
            raise ShapeError(
                f"feature rows ({len(self.features)}) != labels ({len(self.noisy_labels)})"
            )

    def __len__(self) -> int:
        return len(self.noisy_labels)

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.noisy_labels == c)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with noisy labels and (optionally) hidden true labels."""

    features: np.ndarray
    noisy_labels: np.ndarray
    num_classes: int
    true_labels: np.ndarray | None = None

    def __post_init__(self):
        if self.num_classes < 2:
            raise ShapeError("num_classes must be >= 2")
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {feats.shape}")
        noisy = _as_labels(self.noisy_labels, self.num_classes, "noisy_labels")
        object.__setattr__(self, "noisy_labels", noisy)
        if len(feats) != len(noisy):
            raise ShapeError(f"feature rows ({len(feats)}) != labels ({len(noisy)})")
        if self.true_labels is not None:
            true = _as_labels(self.true_labels, self.num_classes, "true_labels")
            if len(true) != len(noisy):
                raise ShapeError("true_labels length differs from noisy_labels")
            object.__setattr__(self, "true_labels", true)

    def __len__(self) -> int:
        return len(self.noisy_labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def detector_view(self) -> DatasetView:
        """The restricted view handed to detectors (no true labels)."""
        return DatasetView(self.features, self.noisy_labels, self.num_classes)


@dataclass(frozen=True)
class NoiseKnowledge:
    """Per-class noise-source sets: sources[c] = classes whose samples are
    plausibly mislabeled as c.

    An empty mapping is valid and means "no knowledge"; detectors then
    degenerate to their base behavior. Classes with an empty source set are
    normalized away, so ``is_empty`` is the single no-knowledge test.
    """

    sources: Mapping[int, frozenset[int]]
    num_classes: int
    origin: KnowledgeOrigin = KnowledgeOrigin.GROUND_TRUTH

    def __post_init__(self):
        canonical: dict[int, frozenset[int]] = {}
        for c, srcs in self.sources.items():
            c = int(c)
            if not 0 <= c < self.num_classes:
                raise ShapeError(f"knowledge class {c} outside [0, {self.num_classes})")
            srcs = frozenset(int(s) for s in srcs)
            if not srcs:
                continue
            if c in srcs:
                raise ValueError(f"class {c} cannot be its own noise source")
            bad = [s for s in srcs if not 0 <= s < self.num_classes]
            if bad:
                raise ShapeError(f"noise sources {bad} outside [0, {self.num_classes})")
            canonical[c] = srcs
        object.__setattr__(self, "sources", canonical)

    @classmethod
    def empty(cls, num_classes: int) -> "NoiseKnowledge":
        return cls({}, num_classes)

    @classmethod
    def from_label_pairs(
        cls, pairs: Iterable[tuple[int, int]], num_classes: int
    ) -> "NoiseKnowledge":
        """Build from (i, j) pairs meaning "class-i samples get mislabeled j"."""
        sources: dict[int, set[int]] = {}
        for i, j in pairs:
            sources.setdefault(int(j), set()).add(int(i))
        return cls(
            {c: frozenset(s) for c, s in sources.items()},
            num_classes,
            KnowledgeOrigin.FROM_LABEL_PAIRS,
        )

    def sources_of(self, c: int) -> frozenset[int]:
        if not 0 <= c < self.num_classes:
            raise IndexError(f"class {c} outside [0, {self.num_classes})")
        return self.sources.get(int(c), frozenset())

    def is_empty(self) -> bool:
        return not self.sources

    def source_mask(self, include_self: bool = False) -> np.ndarray:
        """k x k boolean matrix: mask[c, j] == (j is a noise source of c)."""
        k = self.num_classes
        mask = np.zeros((k, k), dtype=bool)
        for c, srcs in self.sources.items():
            mask[c, list(srcs)] = True
        if include_self:
            mask[np.arange(k), np.arange(k)] = True
        return mask


def sources_of(knowledge: NoiseKnowledge, c: int) -> frozenset[int]:
    """Noise sources recorded for class c (empty set if none)."""
    return knowledge.sources_of(c)


@dataclass(frozen=True)
class CleanScores:
    """Per-sample probability-of-clean values plus the derived selection mask."""

    prob_clean: np.ndarray
    selected: np.ndarray
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        prob = np.asarray(self.prob_clean, dtype=np.float64)
        sel = np.asarray(self.selected, dtype=bool)
        if prob.shape != sel.shape or prob.ndim != 1:
            raise ShapeError("prob_clean and selected must be equal-length vectors")
        if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
            raise ValueError("prob_clean values must lie in [0, 1]")
        if np.any(sel & (prob <= 0.0)):
            raise ValueError("selected samples must have prob_clean > 0")
        object.__setattr__(self, "prob_clean", prob)
        object.__setattr__(self, "selected", sel)

    def __len__(self) -> int:
        return len(self.prob_clean)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic k x k estimate of P(noisy=j | true=i)."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ShapeError(f"transition matrix must be square, got {t.shape}")
        if t.min() < -1e-12 or t.max() > 1.0 + 1e-12:
            raise ValueError("transition entries must lie in [0, 1]")
        rows = t.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-9):
            raise ValueError(f"rows must sum to 1 within 1e-9, got {rows}")
        object.__setattr__(self, "t", t)

    @property
    def num_classes(self) -> int:
        return self.t.shape[0]


def integrate_knowledge(
    prob_of_class: np.ndarray,
    noisy_labels: np.ndarray,
    knowledge: NoiseKnowledge,
) -> CleanScores:
    """Zero out a sample's clean probability when any noise source beats it.

    For sample i with label c, prob_clean[i] keeps prob_of_class[i, c] only if
    it is strictly greater than every p(c_n | x_i) over the recorded noise
    sources of c; a tie or loss marks the sample noisy. Classes without
    recorded sources pass through unchanged. Scores must be comparable within
    a row and lie in [0, 1] since the output is a probability-of-clean.
    """
    probs = np.asarray(prob_of_class, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeError(f"prob_of_class must be 2-D, got shape {probs.shape}")
    k = knowledge.num_classes
    if probs.shape[1] != k:
        raise ShapeError(f"prob_of_class has {probs.shape[1]} columns, expected {k}")
    labels = _as_labels(noisy_labels, k, "noisy_labels")
    if len(labels) != len(probs):
        raise ShapeError("noisy_labels length differs from prob_of_class rows")

    clean = probs[np.arange(len(labels)), labels].copy()
    for c, srcs in knowledge.sources.items():
        rows = labels == c
        if not rows.any():
            continue
        rival = probs[np.ix_(rows, sorted(srcs))].max(axis=1)
        keep = clean[rows] > rival
        clean[rows] = np.where(keep, clean[rows], 0.0)
    return CleanScores(clean, clean > 0.0)
