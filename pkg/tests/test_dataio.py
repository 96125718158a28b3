import json

import numpy as np

from labelsift.core import KnowledgeOrigin, NoiseKnowledge
from labelsift.dataio import (
    dataset_from_csv,
    dataset_to_csv,
    knowledge_from_json,
    knowledge_to_json,
    scores_to_csv,
    stable_json,
)
from labelsift.core import CleanScores
from labelsift.synth import ClusterSpec, generate_clusters


def test_dataset_csv_round_trip_lossless():
    spec = ClusterSpec(num_classes=3, dim=4, samples_per_class=20, separation=3.0, seed=0)
    ds = generate_clusters(spec)
    text = dataset_to_csv(ds)
    header = text.splitlines()[0]
    assert header == "id,noisy_label,true_label,f0,f1,f2,f3"
    again = dataset_from_csv(text)
    assert np.array_equal(again.features, ds.features)  # bitwise, via 17 digits
    assert np.array_equal(again.noisy_labels, ds.noisy_labels)
    assert np.array_equal(again.true_labels, ds.true_labels)


def test_knowledge_json_round_trip():
    kn = NoiseKnowledge({5: {0, 1, 2}, 7: {3}}, 8, KnowledgeOrigin.FROM_TRANSITION_MATRIX)
    text = knowledge_to_json(kn)
    doc = json.loads(text)
    assert doc["origin"] == "FromTransitionMatrix"
    assert doc["sources"]["5"] == [0, 1, 2]
    again = knowledge_from_json(text)
    assert again.sources == kn.sources
    assert again.origin is kn.origin


def test_scores_csv_shape():
    scores = CleanScores(np.array([0.25, 0.0]), np.array([True, False]))
    lines = scores_to_csv(scores).splitlines()
    assert lines[0] == "id,prob_clean,selected"
    assert lines[1] == "0,0.25,1"
    assert lines[2] == "1,0,0"


def test_stable_json_deterministic_and_numpy_safe():
    doc = {"b": np.float64(0.1), "a": [np.int64(3), 0.2], "c": np.arange(3)}
    one = stable_json(doc)
    two = stable_json({"c": np.arange(3), "a": [np.int64(3), 0.2], "b": np.float64(0.1)})
    assert one == two
    parsed = json.loads(one)
    assert parsed["a"] == [3, 0.2]
    assert parsed["c"] == [0, 1, 2]
