"""Exercise quality scoring from 33-landmark keypoint sequences.

The pipeline: keypoint clips (kp-seq files) are augmented by horizontal
flips and small rotations, applied either to video frames or directly to
the joints so both routes agree; exercise-specific scalar features are
extracted per frame; a small stacked LSTM regresses a 0..50 quality score;
cross-validation keeps augmented variants out of every validation fold.
"""

from .core import (
    CANONICAL_TOPOLOGY,
    LANDMARK_NAMES,
    N_LANDMARKS,
    SCORE_MAX,
    LandmarkSequence,
    LandmarkTopology,
    Manifest,
    ManifestEntry,
    Provenance,
    QualityScore,
    Sample,
    load_manifest,
    mirror_swap,
    save_manifest,
    validate_sample,
)
from .kpseq import KP_SEQ_FORMAT, load_keypoints, save_keypoints

__version__ = "0.1.0"

FORMAT_VERSIONS = {
    "kp-seq": KP_SEQ_FORMAT,
    "landmark-topology": "landmark-topology/1",
    "checkpoint": "lstm-ckpt/1",
}

__all__ = [
    "CANONICAL_TOPOLOGY",
    "LANDMARK_NAMES",
    "N_LANDMARKS",
    "SCORE_MAX",
    "FORMAT_VERSIONS",
    "LandmarkSequence",
    "LandmarkTopology",
    "Manifest",
    "ManifestEntry",
    "Provenance",
    "QualityScore",
    "Sample",
    "load_manifest",
    "load_keypoints",
    "mirror_swap",
    "save_manifest",
    "save_keypoints",
    "validate_sample",
    "__version__",
]
