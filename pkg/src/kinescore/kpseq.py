"""Reading and writing kp-seq files.

kp-seq is a small JSON container for one keypoint clip: identity fields,
fps and frame size, the landmark name table, an optional quality label and
provenance, then the frames. Coordinates are serialized as decimals with
nine fractional digits, so values survive a round trip to within 1e-9 and
the writer is byte-deterministic (same sample, same bytes).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    LANDMARK_NAMES,
    N_LANDMARKS,
    LandmarkSequence,
    Provenance,
    QualityScore,
    Sample,
    validate_sample,
)

KP_SEQ_FORMAT = "kp-seq/1"


class KeypointFileError(Exception):
    """Base class for kp-seq read/write failures."""


class KeypointParseError(KeypointFileError):
    """The file is not well-formed JSON or has the wrong shape of data."""


class KeypointSchemaError(KeypointFileError):
    """The file parses but does not follow the kp-seq/1 schema."""


class KeypointInvariantError(KeypointFileError):
    """The file follows the schema but the sample violates an invariant."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def _fmt(value: float) -> str:
    return f"{value:.9f}"


def save_keypoints(sample: Sample, path: str | Path) -> None:
    """Write a sample as a kp-seq file. Invalid samples are refused."""
    violations = validate_sample(sample)
    if violations:
        raise KeypointInvariantError(violations)

    seq = sample.sequence
    head = {
        "format": KP_SEQ_FORMAT,
        "sample_id": sample.sample_id,
        "subject_id": sample.subject_id,
        "exercise": sample.exercise,
        "fps": seq.fps,
        "frame_size": list(seq.frame_size),
        "landmark_names": list(LANDMARK_NAMES),
    }
    if sample.score is not None:
        head["label"] = {"quality_raw": sample.score.raw}
    if not sample.provenance.is_original:
        head["provenance"] = {"parent_id": sample.provenance.parent_id, "op": sample.provenance.op}

    parts = []
    for key, value in head.items():
        parts.append(f"  {json.dumps(key)}: {json.dumps(value)}")
    frame_lines = []
    for frame in seq.frames:
        pts = ",".join("[" + ",".join(_fmt(v) for v in point) + "]" for point in frame)
        frame_lines.append("    [" + pts + "]")
    parts.append('  "frames": [\n' + ",\n".join(frame_lines) + "\n  ]")
    text = "{\n" + ",\n".join(parts) + "\n}\n"
    Path(path).write_text(text)


def load_keypoints(path: str | Path) -> Sample:
    """Read a kp-seq file and return a fully validated sample."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise KeypointFileError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise KeypointParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise KeypointParseError(f"{path}: expected a JSON object at top level")

    tag = doc.get("format")
    if tag != KP_SEQ_FORMAT:
        raise KeypointSchemaError(f"{path}: format tag {tag!r}, expected {KP_SEQ_FORMAT!r}")
    missing = [k for k in ("sample_id", "subject_id", "exercise", "fps", "frame_size", "landmark_names", "frames") if k not in doc]
    if missing:
        raise KeypointSchemaError(f"{path}: missing keys: {', '.join(missing)}")

    names = doc["landmark_names"]
    if list(names) != list(LANDMARK_NAMES):
        raise KeypointSchemaError(f"{path}: landmark_names do not match the canonical 33-point order")

    raw_frames = doc["frames"]
    if not isinstance(raw_frames, list):
        raise KeypointParseError(f"{path}: frames must be a list")
    for t, frame in enumerate(raw_frames):
        if not isinstance(frame, list) or len(frame) != N_LANDMARKS:
            got = len(frame) if isinstance(frame, list) else type(frame).__name__
            raise KeypointSchemaError(f"{path}: frame {t}: point count {got} != {N_LANDMARKS}")
        for j, point in enumerate(frame):
            if not isinstance(point, list) or len(point) != 4:
                raise KeypointSchemaError(f"{path}: frame {t}, landmark {LANDMARK_NAMES[j]}: expected 4 values")
    try:
        frames = np.asarray(raw_frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise KeypointParseError(f"{path}: non-numeric frame data: {exc}") from exc

    try:
        fs = doc["frame_size"]
        frame_size = (int(fs[0]), int(fs[1]))
        seq = LandmarkSequence(frames=frames, fps=float(doc["fps"]), frame_size=frame_size)
    except (TypeError, ValueError, IndexError) as exc:
        raise KeypointSchemaError(f"{path}: bad fps or frame_size: {exc}") from exc

    score = None
    if "label" in doc and doc["label"] is not None:
        label = doc["label"]
        if not isinstance(label, dict) or "quality_raw" not in label:
            raise KeypointSchemaError(f"{path}: label must be an object with quality_raw")
        score = QualityScore.from_raw(float(label["quality_raw"]))

    provenance = Provenance.original()
    if "provenance" in doc and doc["provenance"] is not None:
        prov = doc["provenance"]
        if not isinstance(prov, dict):
            raise KeypointSchemaError(f"{path}: provenance must be an object")
        provenance = Provenance(prov.get("parent_id"), prov.get("op"))

    sample = Sample(
        sample_id=str(doc["sample_id"]),
        subject_id=str(doc["subject_id"]),
        exercise=int(doc["exercise"]),
        sequence=seq,
        score=score,
        provenance=provenance,
    )
    violations = validate_sample(sample)
    if violations:
        raise KeypointInvariantError([f"{path}: {msg}" for msg in violations])
    return sample
