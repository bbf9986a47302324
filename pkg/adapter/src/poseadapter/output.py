"""Writes extracted landmark sequences as kp-seq/1 files.

The layout mirrors the scoring pipeline's writer: one header block, the
canonical landmark name table, then frames with nine-digit fixed-point
coordinates so the output is byte-deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import LANDMARK_NAMES, N_LANDMARKS

KP_SEQ_FORMAT = "kp-seq/1"


def write_kpseq(frames: np.ndarray, path: str | Path, *, sample_id: str, subject_id: str,
                exercise: int, fps: float, frame_size: tuple[int, int]) -> None:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[1:] != (N_LANDMARKS, 4):
        raise ValueError(f"expected frames shaped (T, {N_LANDMARKS}, 4), got {frames.shape}")
    if frames.shape[0] < 2:
        raise ValueError(f"a kp-seq file needs at least 2 frames, got {frames.shape[0]}")
    if not np.isfinite(frames).all():
        raise ValueError("non-finite values in extracted landmarks")
    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")

    head = {
        "format": KP_SEQ_FORMAT,
        "sample_id": sample_id,
        "subject_id": subject_id,
        "exercise": int(exercise),
        "fps": float(fps),
        "frame_size": [int(frame_size[0]), int(frame_size[1])],
        "landmark_names": list(LANDMARK_NAMES),
    }
    parts = [f"  {json.dumps(key)}: {json.dumps(value)}" for key, value in head.items()]
    frame_lines = []
    for frame in frames:
        pts = ",".join("[" + ",".join(f"{v:.9f}" for v in point) + "]" for point in frame)
        frame_lines.append("    [" + pts + "]")
    parts.append('  "frames": [\n' + ",\n".join(frame_lines) + "\n  ]")
    Path(path).write_text("{\n" + ",\n".join(parts) + "\n}\n")
