"""Pose-extraction adapter: turns video frames into kp-seq keypoint files.

The adapter wraps a pose backend (a pretrained model when available, a
synthetic color-marker detector for demos and tests) and writes its output
in the kp-seq/1 format the scoring pipeline consumes. The two sides share
nothing but that file format and the 33-landmark topology fixture.
"""

import json
from importlib import resources

__version__ = "0.1.0"


def load_topology() -> dict:
    """The bundled 33-landmark topology: names, mirror pairs, marker palette."""
    with resources.files("poseadapter.data").joinpath("landmark_topology.json").open() as fh:
        return json.load(fh)


_TOPOLOGY = load_topology()
LANDMARK_NAMES = tuple(_TOPOLOGY["landmark_names"])
N_LANDMARKS = len(LANDMARK_NAMES)
