"""labelsift: clean-sample selection under label noise, with optional
noise-source knowledge integration, plus the synthesis and evaluation
machinery to benchmark it at desk scale."""

from .core import (
    CleanScores,
    DatasetView,
    KnowledgeOrigin,
    LabeledDataset,
    NoiseKnowledge,
    ShapeError,
    TransitionMatrix,
    integrate_knowledge,
    sources_of,
)
from .detectors import (
    DetectorArtifacts,
    DetectorConfig,
    DistState,
    crust_select,
    disc_select,
    fine_select,
    run_detector,
    sft_select,
    unicon_select,
)
from .synth import (
    AsymmetricNoisePlan,
    ClusterSpec,
    DominantNoisePlan,
    apply_asymmetric_noise,
    apply_dominant_noise,
    apply_noise,
    generate_clusters,
    perturb_knowledge,
)
from .transition import estimate_dual_t, gt_transition, knowledge_from_transition

__version__ = "0.1.0"

__all__ = [
    "AsymmetricNoisePlan",
    "CleanScores",
    "ClusterSpec",
    "DatasetView",
    "DetectorArtifacts",
    "DetectorConfig",
    "DistState",
    "DominantNoisePlan",
    "KnowledgeOrigin",
    "LabeledDataset",
    "NoiseKnowledge",
    "ShapeError",
    "TransitionMatrix",
    "apply_asymmetric_noise",
    "apply_dominant_noise",
    "apply_noise",
    "crust_select",
    "disc_select",
    "estimate_dual_t",
    "fine_select",
    "generate_clusters",
    "gt_transition",
    "integrate_knowledge",
    "knowledge_from_transition",
    "perturb_knowledge",
    "run_detector",
    "sft_select",
    "sources_of",
    "unicon_select",
]
