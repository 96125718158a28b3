"""Synthetic clustered datasets, label-noise injection, knowledge perturbation.

All operations are pure and deterministic given (inputs, seed): different
seeds permute which samples are relabeled, never the counts.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .core import KnowledgeOrigin, LabeledDataset, NoiseKnowledge, ShapeError

_GEOMETRY_STREAM = 0xC1
_DRAW_STREAM = 0xD0


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ClusterSpec:
    """Recipe for a clustered Gaussian dataset standing in for image features."""

    num_classes: int
    dim: int
    samples_per_class: int
    separation: float
    confusable_pairs: tuple[tuple[int, int], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.separation <= 0:
            raise ValueError("separation must be > 0")
        pairs = tuple((int(a), int(b)) for a, b in self.confusable_pairs)
        seen: set[int] = set()
        for a, b in pairs:
            if a == b or not (0 <= a < self.num_classes and 0 <= b < self.num_classes):
                raise ValueError(f"invalid confusable pair ({a}, {b})")
            if a in seen or b in seen:
                raise ValueError("confusable pairs must not share classes")
            seen.update((a, b))
        object.__setattr__(self, "confusable_pairs", pairs)


@dataclass(frozen=True)
class DominantNoisePlan:
    """One-directional contamination: true-dominant samples get relabeled into
    the recessive classes, so recessive labels carry all the noise and every
    dominant class is a noise source for every recessive class."""

    noise_ratio: float
    num_classes: int
    dominant: tuple[int, ...] = ()
    recessive: tuple[int, ...] = ()

    kind: str = field(default="dominant", init=False)

    def __post_init__(self):
        k = self.num_classes
        if k % 2 != 0:
            raise ValueError("dominant noise needs an even class count (equal halves)")
        if not 0.0 < self.noise_ratio < 1.0:
            raise ValueError("noise_ratio must lie in (0, 1)")
        dom = tuple(int(c) for c in self.dominant) or tuple(range(k // 2))
        rec = tuple(int(c) for c in self.recessive) or tuple(range(k // 2, k))
        if len(dom) != k // 2 or sorted(dom + rec) != list(range(k)):
            raise ValueError("dominant and recessive must partition classes into equal halves")
        object.__setattr__(self, "dominant", dom)
        object.__setattr__(self, "recessive", rec)


@dataclass(frozen=True)
class AsymmetricNoisePlan:
    """Pairwise symmetric flips: P(A -> B) = P(B -> A) within each pair."""

    noise_ratio: float
    num_classes: int
    pairs: tuple[tuple[int, int], ...]

    kind: str = field(default="asymmetric", init=False)

    def __post_init__(self):
        if not 0.0 <= self.noise_ratio <= 0.5:
            raise ValueError(
                "asymmetric noise supports ratios up to 0.5; beyond that the "
                "minority class carries no usable signal"
            )
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        seen: set[int] = set()
        for a, b in pairs:
            if a == b or not (0 <= a < self.num_classes and 0 <= b < self.num_classes):
                raise ValueError(f"invalid pair ({a}, {b})")
            if a in seen or b in seen:
                raise ValueError("noise pairs must be disjoint")
            seen.update((a, b))
        object.__setattr__(self, "pairs", pairs)


NoisePlan = DominantNoisePlan | AsymmetricNoisePlan


def _class_means(spec: ClusterSpec) -> np.ndarray:
    """Means on mutually orthogonal directions, exactly `separation` apart;
    confusable pairs get placed at separation/2 instead."""
    k, d = spec.num_classes, spec.dim
    if d < k:
        raise ValueError(f"dim ({d}) must be >= num_classes ({k}) for exact mean placement")
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _GEOMETRY_STREAM]))
    basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
    means = (spec.separation / math.sqrt(2.0)) * basis.T
    for a, b in spec.confusable_pairs:
        delta = means[b] - means[a]
        means[b] = means[a] + (spec.separation / 2.0) * delta / np.linalg.norm(delta)
    return means


def generate_clusters(
    spec: ClusterSpec, split: str = "train", samples_per_class: int | None = None
) -> LabeledDataset:
    """Isotropic unit-variance Gaussian cluster per class; labels start clean.

    The class geometry depends only on spec.seed, while the sample draws also
    depend on `split`, so a "test" split shares means with the training data
    without sharing any samples.
    """
    per_class = spec.samples_per_class if samples_per_class is None else samples_per_class
    if per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    means = _class_means(spec)
    rng = np.random.default_rng(
        np.random.SeedSequence([spec.seed, _DRAW_STREAM, zlib.crc32(split.encode())])
    )
    feats = np.concatenate(
        [means[c] + rng.standard_normal((per_class, spec.dim)) for c in range(spec.num_classes)]
    )
    labels = np.repeat(np.arange(spec.num_classes), per_class)
    return LabeledDataset(feats, labels, spec.num_classes, true_labels=labels.copy())


@dataclass(frozen=True)
class DominantComposition:
    """Exact per-class sample accounting for a dominant-noise corruption."""

    final_per_class: int            # balanced class size after mixing
    noisy_per_recessive: int        # mislabeled (truly dominant) samples per recessive label
    clean_per_recessive: int        # = round(samples_per_class * (1 - r) / 2)
    drawn_per_dominant: int         # = round(samples_per_class * (1 + r) / 2)
    cells: np.ndarray               # cells[j, i]: donations from dominant #i to recessive #j


def dominant_composition(samples_per_class: int, noise_ratio: float, half: int) -> DominantComposition:
    """Counts implied by the budget and ratio; seed-independent by design.

    Donations spread as evenly as possible over donors via a circulant
    remainder pattern, so every dominant class contributes exactly
    noisy_per_recessive samples in total.
    """
    final = round_half_up(samples_per_class / 2.0)
    noisy = round_half_up(noise_ratio * final)
    clean = final - noisy
    drawn = final + noisy
    if drawn > samples_per_class:
        raise ValueError("dominant classes cannot supply the requested noise volume")
    base, rem = divmod(noisy, half)
    cells = np.full((half, half), base, dtype=np.int64)
    for j in range(half):
        for i in range(half):
            if (i - j) % half < rem:
                cells[j, i] += 1
    return DominantComposition(final, noisy, clean, drawn, cells)


def _require_clean_balanced(ds: LabeledDataset) -> int:
    if ds.true_labels is None or np.any(ds.true_labels != ds.noisy_labels):
        raise ValueError("noise injection expects a clean dataset (noisy == true)")
    counts = np.bincount(ds.noisy_labels, minlength=ds.num_classes)
    if len(set(counts.tolist())) != 1:
        raise ValueError("noise injection expects equal per-class counts")
    return int(counts[0])


def apply_dominant_noise(
    ds: LabeledDataset, plan: DominantNoisePlan, seed: int
) -> tuple[LabeledDataset, NoiseKnowledge]:
    """Subsample and relabel so each recessive label ends up with exactly
    noise_ratio of its (balanced) final size mislabeled from dominant classes,
    while dominant labels stay entirely clean."""
    if plan.kind != "dominant":
        raise ValueError("plan must be a DominantNoisePlan")
    if plan.num_classes != ds.num_classes:
        raise ShapeError("plan and dataset disagree on class count")
    per_class = _require_clean_balanced(ds)
    half = ds.num_classes // 2
    comp = dominant_composition(per_class, plan.noise_ratio, half)

    rng = np.random.default_rng(seed)
    keep = np.zeros(len(ds), dtype=bool)
    new_labels = ds.noisy_labels.copy()
    recessive = sorted(plan.recessive)
    for i, d in enumerate(sorted(plan.dominant)):
        perm = rng.permutation(np.flatnonzero(ds.noisy_labels == d))
        keep[perm[: comp.final_per_class]] = True
        cursor = comp.final_per_class
        for j, r in enumerate(recessive):
            take = int(comp.cells[j, i])
            donated = perm[cursor : cursor + take]
            keep[donated] = True
            new_labels[donated] = r
            cursor += take
    for r in recessive:
        perm = rng.permutation(np.flatnonzero(ds.noisy_labels == r))
        keep[perm[: comp.clean_per_recessive]] = True

    kept = np.flatnonzero(keep)
    noisy = LabeledDataset(
        ds.features[kept], new_labels[kept], ds.num_classes, ds.true_labels[kept]
    )
    knowledge = NoiseKnowledge(
        {r: frozenset(plan.dominant) for r in recessive},
        ds.num_classes,
        KnowledgeOrigin.GROUND_TRUTH,
    )
    return noisy, knowledge


def apply_asymmetric_noise(
    ds: LabeledDataset, pairs, ratio: float, seed: int
) -> tuple[LabeledDataset, NoiseKnowledge]:
    """Flip round(ratio * |A|) labels A -> B and symmetrically B -> A within
    each pair; classes outside the pairs are untouched."""
    plan = AsymmetricNoisePlan(ratio, ds.num_classes, tuple(pairs))
    _require_clean_balanced(ds)
    rng = np.random.default_rng(seed)
    new_labels = ds.noisy_labels.copy()
    sources: dict[int, frozenset[int]] = {}
    for a, b in plan.pairs:
        for src, dst in ((a, b), (b, a)):
            idx = np.flatnonzero(ds.noisy_labels == src)
            flips = round_half_up(ratio * len(idx))
            chosen = rng.permutation(idx)[:flips]
            new_labels[chosen] = dst
        sources[a] = frozenset({b})
        sources[b] = frozenset({a})
    noisy = LabeledDataset(
        ds.features, new_labels, ds.num_classes, ds.true_labels.copy()
    )
    return noisy, NoiseKnowledge(sources, ds.num_classes, KnowledgeOrigin.GROUND_TRUTH)


def apply_noise(ds: LabeledDataset, plan: NoisePlan, seed: int):
    if plan.kind == "dominant":
        return apply_dominant_noise(ds, plan, seed)
    return apply_asymmetric_noise(ds, plan.pairs, plan.noise_ratio, seed)


def perturb_knowledge(
    knowledge: NoiseKnowledge, missing_frac: float, noisy_frac: float, seed: int
) -> NoiseKnowledge:
    """Degrade knowledge for robustness studies.

    Per class with s recorded sources: drop ceil(missing_frac * s) uniformly
    at random, then swap ceil(noisy_frac * s) of the survivors (capped at what
    remains) for classes that are neither the class itself nor any of its true
    sources. Counts use ceil so any nonzero fraction bites even at small s.
    """
    if not (0.0 <= missing_frac <= 1.0 and 0.0 <= noisy_frac <= 1.0):
        raise ValueError("fractions must lie in [0, 1]")
    if missing_frac + noisy_frac > 1.0:
        raise ValueError("missing_frac + noisy_frac must not exceed 1")
    rng = np.random.default_rng(seed)
    k = knowledge.num_classes
    perturbed: dict[int, frozenset[int]] = {}
    for c in sorted(knowledge.sources):
        true_sources = sorted(knowledge.sources[c])
        s = len(true_sources)
        n_missing = math.ceil(missing_frac * s)
        survivors = list(true_sources)
        if n_missing:
            drop = set(rng.choice(len(survivors), size=n_missing, replace=False).tolist())
            survivors = [v for i, v in enumerate(survivors) if i not in drop]
        n_noisy = min(math.ceil(noisy_frac * s), len(survivors))
        if n_noisy:
            pool = sorted(set(range(k)) - {c} - set(true_sources))
            if len(pool) < n_noisy:
                raise ValueError(
                    f"class {c}: no spare non-source classes to draw {n_noisy} replacements"
                )
            out = set(rng.choice(len(survivors), size=n_noisy, replace=False).tolist())
            survivors = [v for i, v in enumerate(survivors) if i not in out]
            fakes = rng.choice(len(pool), size=n_noisy, replace=False)
            survivors.extend(pool[i] for i in fakes.tolist())
        if survivors:
            perturbed[c] = frozenset(survivors)
    return NoiseKnowledge(perturbed, k, KnowledgeOrigin.PERTURBED)
