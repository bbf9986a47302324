import numpy as np
import pytest

from kinescore.core import (
    LANDMARK_NAMES,
    LandmarkSequence,
    Provenance,
    QualityScore,
    Sample,
)

FRAME_SIZE = (640, 480)

# Hand-placed T-pose, symmetric about the vertical centerline (u + u' = 640
# for every mirror pair). Arms are straight and horizontal at shoulder
# height, hips sit directly below the shoulders, legs are vertical. That
# pins exact feature values: elbow and knee angles 180, shoulder abduction
# 90, trunk tilt 0. Every pair of points is at least 14 px apart so the
# marker renderer/detector can resolve all 33 discs.
TPOSE_PX = {
    "nose": (320, 96),
    "left_eye_inner": (336, 78),
    "left_eye": (352, 78),
    "left_eye_outer": (368, 78),
    "right_eye_inner": (304, 78),
    "right_eye": (288, 78),
    "right_eye_outer": (272, 78),
    "left_ear": (384, 96),
    "right_ear": (256, 96),
    "mouth_left": (336, 114),
    "mouth_right": (304, 114),
    "left_shoulder": (375, 180),
    "right_shoulder": (265, 180),
    "left_elbow": (445, 180),
    "right_elbow": (195, 180),
    "left_wrist": (515, 180),
    "right_wrist": (125, 180),
    "left_pinky": (540, 168),
    "right_pinky": (100, 168),
    "left_index": (548, 180),
    "right_index": (92, 180),
    "left_thumb": (540, 192),
    "right_thumb": (100, 192),
    "left_hip": (375, 300),
    "right_hip": (265, 300),
    "left_knee": (375, 380),
    "right_knee": (265, 380),
    "left_ankle": (375, 455),
    "right_ankle": (265, 455),
    "left_heel": (380, 470),
    "right_heel": (260, 470),
    "left_foot_index": (405, 470),
    "right_foot_index": (235, 470),
}


def tpose_frame() -> np.ndarray:
    w, h = FRAME_SIZE
    frame = np.zeros((33, 4), dtype=np.float64)
    for i, name in enumerate(LANDMARK_NAMES):
        u, v = TPOSE_PX[name]
        frame[i] = (u / w, v / h, 0.0, 1.0)
    return frame


def make_sample(frames, sample_id="s0", subject_id="subj0", exercise=1,
                score_raw=25.0, fps=30.0, frame_size=FRAME_SIZE,
                provenance=None) -> Sample:
    frames = np.asarray(frames, dtype=np.float64)
    return Sample(
        sample_id=sample_id,
        subject_id=subject_id,
        exercise=exercise,
        sequence=LandmarkSequence(frames=frames, fps=fps, frame_size=frame_size),
        score=None if score_raw is None else QualityScore.from_raw(score_raw),
        provenance=provenance or Provenance.original(),
    )


def tpose_sample(n_frames=5, **kwargs) -> Sample:
    return make_sample(np.stack([tpose_frame()] * n_frames), **kwargs)


def separated_random_frame(rng, frame_size=FRAME_SIZE, margin=48.0, min_sep=11.0) -> np.ndarray:
    """33 random landmarks, pairwise at least min_sep px apart, away from edges."""
    w, h = frame_size
    pts = []
    while len(pts) < 33:
        u = rng.uniform(margin, w - margin)
        v = rng.uniform(margin, h - margin)
        if all((u - a) ** 2 + (v - b) ** 2 >= min_sep ** 2 for a, b in pts):
            pts.append((u, v))
    frame = np.zeros((33, 4), dtype=np.float64)
    for i, (u, v) in enumerate(pts):
        frame[i] = (u / w, v / h, 0.0, 1.0)
    return frame


@pytest.fixture(scope="session")
def synth_manifest_dir(tmp_path_factory):
    """A small on-disk synthetic dataset shared by IO-heavy tests."""
    from kinescore.cli import main

    out = tmp_path_factory.mktemp("dataset")
    rc = main(["synth", "--exercise", "1", "--count", "10", "--noise-px", "3",
               "--frames", "40", "--seed", "77", "--out-dir", str(out)])
    assert rc == 0
    return out
