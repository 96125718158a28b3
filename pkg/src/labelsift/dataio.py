"""File formats: dataset CSV, knowledge JSON, selection CSV, stable JSON.

Floats are written with 17 significant digits so every file round-trips
losslessly; CSV uses commas, LF line endings, a mandatory header row, and no
quoting (no field ever contains a comma).
"""
from __future__ import annotations

import io
import json

import numpy as np

from .core import KnowledgeOrigin, LabeledDataset, NoiseKnowledge, CleanScores


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def dataset_to_csv(ds: LabeledDataset) -> str:
    d = ds.dim
    out = io.StringIO()
    out.write("id,noisy_label,true_label," + ",".join(f"f{i}" for i in range(d)) + "\n")
    true = ds.true_labels if ds.true_labels is not None else ds.noisy_labels
    for i in range(len(ds)):
        feats = ",".join(fmt_float(v) for v in ds.features[i])
        out.write(f"{i},{ds.noisy_labels[i]},{true[i]},{feats}\n")
    return out.getvalue()


def dataset_from_csv(text: str, num_classes: int | None = None) -> LabeledDataset:
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    if header[:3] != ["id", "noisy_label", "true_label"]:
        raise ValueError("dataset CSV header must start with id,noisy_label,true_label")
    d = len(header) - 3
    rows = [line.split(",") for line in lines[1:]]
    noisy = np.array([int(r[1]) for r in rows], dtype=np.int64)
    true = np.array([int(r[2]) for r in rows], dtype=np.int64)
    feats = np.array([[float(v) for v in r[3 : 3 + d]] for r in rows], dtype=np.float64)
    if num_classes is None:
        num_classes = int(max(noisy.max(), true.max())) + 1
    return LabeledDataset(feats, noisy, num_classes, true)


def knowledge_to_json(knowledge: NoiseKnowledge) -> str:
    return json.dumps(
        {
            "sources": {str(c): sorted(s) for c, s in sorted(knowledge.sources.items())},
            "origin": knowledge.origin.value,
            "num_classes": knowledge.num_classes,
        },
        sort_keys=True,
    )


def knowledge_from_json(text: str) -> NoiseKnowledge:
    doc = json.loads(text)
    return NoiseKnowledge(
        {int(c): frozenset(v) for c, v in doc["sources"].items()},
        int(doc["num_classes"]),
        KnowledgeOrigin(doc["origin"]),
    )


def scores_to_csv(scores: CleanScores) -> str:
    out = io.StringIO()
    out.write("id,prob_clean,selected\n")
    for i in range(len(scores)):
        out.write(f"{i},{fmt_float(scores.prob_clean[i])},{int(scores.selected[i])}\n")
    return out.getvalue()


def _normalize_floats(obj):
    if isinstance(obj, float):
        return float(fmt_float(obj))
    if isinstance(obj, dict):
        return {k: _normalize_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(fmt_float(float(obj)))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _normalize_floats(obj.tolist())
    return obj


def stable_json(obj) -> str:
    """Deterministic JSON: sorted keys, numpy scalars unwrapped, lossless floats."""
    return json.dumps(_normalize_floats(obj), sort_keys=True, indent=2) + "\n"
