"""Deterministic synthetic exercise clips with known quality labels.

Each generator animates a stylized standing figure through one of the five
supported exercises. Execution quality is controlled by ``amplitude`` (how
fully the movement is performed) and ``noise_px`` (per-frame Gaussian
jitter in pixels, mimicking pose-estimator error). The label follows
directly from those two knobs, so learned models can be sanity-checked
against ground truth that is correct by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CANONICAL_TOPOLOGY, SCORE_MAX, LandmarkSequence, QualityScore, Sample

_IDX = {name: i for i, name in enumerate(CANONICAL_TOPOLOGY.names)}

# Upright frontal base pose in normalized coordinates (y down). The person
# faces the camera, so their left side sits at larger x.
BASE_POSE = {
    "nose": (0.500, 0.170),
    "left_eye_inner": (0.516, 0.150),
    "left_eye": (0.532, 0.150),
    "left_eye_outer": (0.548, 0.150),
    "right_eye_inner": (0.484, 0.150),
    "right_eye": (0.468, 0.150),
    "right_eye_outer": (0.452, 0.150),
    "left_ear": (0.566, 0.162),
    "right_ear": (0.434, 0.162),
    "mouth_left": (0.522, 0.196),
    "mouth_right": (0.478, 0.196),
    "left_shoulder": (0.588, 0.300),
    "right_shoulder": (0.412, 0.300),
    "left_elbow": (0.612, 0.420),
    "right_elbow": (0.388, 0.420),
    "left_wrist": (0.630, 0.540),
    "right_wrist": (0.370, 0.540),
    "left_pinky": (0.650, 0.578),
    "right_pinky": (0.350, 0.578),
    "left_index": (0.634, 0.594),
    "right_index": (0.366, 0.594),
    "left_thumb": (0.618, 0.566),
    "right_thumb": (0.382, 0.566),
    "left_hip": (0.552, 0.560),
    "right_hip": (0.448, 0.560),
    "left_knee": (0.556, 0.730),
    "right_knee": (0.444, 0.730),
    "left_ankle": (0.560, 0.890),
    "right_ankle": (0.440, 0.890),
    "left_heel": (0.566, 0.916),
    "right_heel": (0.434, 0.916),
    "left_foot_index": (0.590, 0.932),
    "right_foot_index": (0.410, 0.932),
}

_HEAD = ("nose", "left_eye_inner", "left_eye", "left_eye_outer", "right_eye_inner",
         "right_eye", "right_eye_outer", "left_ear", "right_ear", "mouth_left", "mouth_right")
_ARM = ("shoulder", "elbow", "wrist", "pinky", "index", "thumb")
_UPPER_BODY = _HEAD + tuple(f"{s}_{p}" for s in ("left", "right") for p in _ARM)

_UPPER_ARM_PX = 58.0
_FOREARM_PX = 58.0


@dataclass(frozen=True)
class SyntheticMotionSpec:
    """Full description of one synthetic clip; equal specs give equal samples."""

    exercise: int
    amplitude: float
    tempo_hz: float = 0.5
    noise_px: float = 0.0
    n_frames: int = 100
    seed: int = 0
    fps: float = 30.0
    frame_size: tuple[int, int] = (640, 480)

    def __post_init__(self):
        if self.exercise not in (1, 2, 3, 4, 5):
            raise ValueError(f"exercise must be 1..5, got {self.exercise}")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError(f"amplitude must be in [0, 1], got {self.amplitude}")
        if self.tempo_hz <= 0 or self.n_frames < 2 or self.fps <= 0 or self.noise_px < 0:
            raise ValueError("tempo_hz and fps must be positive, n_frames >= 2, noise_px >= 0")


def synthetic_score(amplitude: float, noise_px: float) -> QualityScore:
    """Ground-truth label: full amplitude scores 50, jitter subtracts up to half."""
    raw = SCORE_MAX * (amplitude - min(0.5, noise_px / 20.0))
    return QualityScore.from_raw(min(max(raw, 0.0), SCORE_MAX))


def _base_px(frame_size) -> np.ndarray:
    w, h = frame_size
    pts = np.array([BASE_POSE[name] for name in CANONICAL_TOPOLOGY.names])
    return pts * np.array([w, h], dtype=np.float64)


def _rotate_about(points: np.ndarray, center: np.ndarray, angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    d = points - center
    return center + d @ np.array([[c, s], [-s, c]])


def _arm_pose(shoulder: np.ndarray, side: float, elevation: float, bend: float) -> dict[str, np.ndarray]:
    """Arm landmarks for a laterally raised arm; elevation 0 hangs straight down."""
    ud = np.array([side * math.sin(elevation), math.cos(elevation)])
    elbow = shoulder + _UPPER_ARM_PX * ud
    fd = np.array([side * math.sin(elevation - bend), math.cos(elevation - bend)])
    wrist = elbow + _FOREARM_PX * fd
    along = fd
    perp = np.array([-fd[1], fd[0]]) * side
    return {
        "elbow": elbow,
        "wrist": wrist,
        "pinky": wrist + 14.0 * along + 7.0 * perp,
        "index": wrist + 22.0 * along - 4.0 * perp,
        "thumb": wrist + 8.0 * along - 10.0 * perp,
    }


def _pose_ex1(base: np.ndarray, phase: float, amplitude: float) -> np.ndarray:
    """Both arms raised laterally from hanging to overhead and back."""
    pts = base.copy()
    lift = 0.5 * (1.0 - math.cos(phase))  # 0 -> 1 -> 0 over one cycle
    elevation = amplitude * math.radians(150.0) * lift
    bend = math.radians(20.0) * (1.0 - 0.8 * amplitude * lift)
    for name, side in (("left", 1.0), ("right", -1.0)):
        arm = _arm_pose(pts[_IDX[f"{name}_shoulder"]], side, elevation, bend)
        for part, p in arm.items():
            pts[_IDX[f"{name}_{part}"]] = p
    return pts

def _pose_ex2(base: np.ndarray, phase: float, amplitude: float) -> np.ndarray:
    """Trunk tilts laterally about the mid-hip, alternating sides."""
    pts = base.copy()
    angle = amplitude * math.radians(28.0) * math.sin(phase)
    midhip = 0.5 * (pts[_IDX["left_hip"]] + pts[_IDX["right_hip"]])
    sel = [_IDX[n] for n in _UPPER_BODY]
    pts[sel] = _rotate_about(pts[sel], midhip, angle)
    return pts

def _pose_ex3(base: np.ndarray, phase: float, amplitude: float) -> np.ndarray:
    """Trunk rotation: shoulder girdle swings about the vertical axis."""
    pts = base.copy()
    turn = amplitude * math.radians(60.0) * math.sin(phase)
    cx = 0.5 * (pts[_IDX["left_shoulder"], 0] + pts[_IDX["right_shoulder"], 0])
    scale = math.cos(turn)
    for name in ("left", "right"):
        sh = _IDX[f"{name}_shoulder"]
        dx = (pts[sh, 0] - cx) * (scale - 1.0)
        for part in _ARM:
            pts[_IDX[f"{name}_{part}"], 0] += dx
    head = [_IDX[n] for n in _HEAD]
    pts[head, 0] = cx + (pts[head, 0] - cx) * math.cos(0.5 * turn)
    for hip in ("left_hip", "right_hip"):
        pts[_IDX[hip], 0] = cx + (pts[_IDX[hip], 0] - cx) * math.cos(0.2 * turn)
    return pts

def _pose_ex4(base: np.ndarray, phase: float, amplitude: float) -> np.ndarray:
    """Pelvis rotation: hips yaw and sway laterally while the torso stays put."""
    pts = base.copy()
    turn = amplitude * math.radians(50.0) * math.sin(phase)
    sway = amplitude * 14.0 * math.cos(phase)
    cx = 0.5 * (pts[_IDX["left_hip"], 0] + pts[_IDX["right_hip"], 0])
    for name in ("left", "right"):
        for part in ("hip", "knee"):
            j = _IDX[f"{name}_{part}"]
            k = math.cos(turn) if part == "hip" else math.cos(0.5 * turn)
            pts[j, 0] = cx + (pts[j, 0] - cx) * k + sway * (1.0 if part == "hip" else 0.5)
    return pts

def _pose_ex5(base: np.ndarray, phase: float, amplitude: float) -> np.ndarray:
    """Squat: everything above the knees descends, knees push outward."""
    pts = base.copy()
    depth = 0.5 * (1.0 - math.cos(phase))
    drop = amplitude * 95.0 * depth
    spread = amplitude * 22.0 * depth
    above = [_IDX[n] for n in _UPPER_BODY] + [_IDX["left_hip"], _IDX["right_hip"]]
    pts[above, 1] += drop
    pts[_IDX["left_knee"], 0] += spread
    pts[_IDX["right_knee"], 0] -= spread
    pts[_IDX["left_knee"], 1] += 0.25 * drop
    pts[_IDX["right_knee"], 1] += 0.25 * drop
    return pts


_POSE_FNS = {1: _pose_ex1, 2: _pose_ex2, 3: _pose_ex3, 4: _pose_ex4, 5: _pose_ex5}


def synth_generate(spec: SyntheticMotionSpec, sample_id: str | None = None,
                   subject_id: str | None = None) -> Sample:
    """Generate one labeled synthetic sample. Pure function of its arguments."""
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    phase0 = rng.uniform(0.0, 2.0 * math.pi)
    w, h = spec.frame_size
    base = _base_px(spec.frame_size)
    pose_fn = _POSE_FNS[spec.exercise]

    frames = np.zeros((spec.n_frames, len(base), 4), dtype=np.float64)
    for t in range(spec.n_frames):
        phase = phase0 + 2.0 * math.pi * spec.tempo_hz * t / spec.fps
        pts = pose_fn(base, phase, spec.amplitude)
        frames[t, :, 0] = pts[:, 0] / w
        frames[t, :, 1] = pts[:, 1] / h
    if spec.noise_px > 0:
        jitter = rng.normal(0.0, spec.noise_px, size=(spec.n_frames, len(base), 2))
        frames[:, :, 0] += jitter[:, :, 0] / w
        frames[:, :, 1] += jitter[:, :, 1] / h
    np.clip(frames[:, :, 0], 0.0, 1.0, out=frames[:, :, 0])
    np.clip(frames[:, :, 1], 0.0, 1.0, out=frames[:, :, 1])
    frames[:, :, 3] = 1.0

    if sample_id is None:
        sample_id = f"synth-e{spec.exercise}-s{spec.seed}"
    if subject_id is None:
        subject_id = f"subj-{spec.seed}"
    return Sample(
        sample_id=sample_id,
        subject_id=subject_id,
        exercise=spec.exercise,
        sequence=LandmarkSequence(frames=frames, fps=spec.fps, frame_size=spec.frame_size),
        score=synthetic_score(spec.amplitude, spec.noise_px),
    )
