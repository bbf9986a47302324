"""Exercise-specific scalar features computed per frame.

All geometry runs on aspect-corrected pixel coordinates (x*W, y*H), shifted
so the pelvis (mid-hip) is the origin and divided by torso length (mid-hip
to mid-shoulder), so distances are unitless body-relative ratios. Angles
come out in degrees. The registry below maps each exercise to its feature
list; it is plain data, so alternative sets can be added without touching
the extraction loop. Depth (z) is deliberately unused by the default sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CANONICAL_TOPOLOGY, TORSO_LIMB_INDICES, LandmarkSequence, Sample

T_MAX_FRAMES = 300
VISIBILITY_THRESHOLD = 0.5
GEOMETRY_EPS = 1e-6


class FeatureExtractionError(ValueError):
    """Raised when a sequence cannot produce a valid feature matrix."""


class DegenerateGeometryError(ValueError):
    """Raised when a feature's geometry collapses (zero-length segment)."""


def _idx(name: str) -> int:
    return CANONICAL_TOPOLOGY.index(name)


_L_SHOULDER, _R_SHOULDER = _idx("left_shoulder"), _idx("right_shoulder")
_L_ELBOW, _R_ELBOW = _idx("left_elbow"), _idx("right_elbow")
_L_WRIST, _R_WRIST = _idx("left_wrist"), _idx("right_wrist")
_L_HIP, _R_HIP = _idx("left_hip"), _idx("right_hip")
_L_KNEE, _R_KNEE = _idx("left_knee"), _idx("right_knee")
_L_ANKLE, _R_ANKLE = _idx("left_ankle"), _idx("right_ankle")


def joint_angle(a, b, c) -> float:
    """Angle at vertex b between segments b->a and b->c, in degrees [0, 180].

    Points are 2D aspect-corrected coordinates. A segment shorter than 1e-6
    raises :class:`DegenerateGeometryError`.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    u = a - b
    v = c - b
    nu = math.hypot(*u)
    nv = math.hypot(*v)
    if nu <= GEOMETRY_EPS or nv <= GEOMETRY_EPS:
        raise DegenerateGeometryError(f"segment length {min(nu, nv):g} at angle vertex")
    cosang = float(np.dot(u, v)) / (nu * nv)
    return math.degrees(math.acos(min(1.0, max(-1.0, cosang))))


def preprocess_sequence(seq: LandmarkSequence) -> LandmarkSequence:
    """Clean a sequence for feature extraction.

    In order: low-visibility landmarks are filled by linear interpolation in
    time from the nearest visible frames (held constant at the ends); the
    sequence is downsampled by a uniform stride to at most 300 frames; frames
    where more than half of the 12 torso and limb landmarks are invisible are
    dropped. Raises if fewer than 2 frames survive.
    """
    if len(seq) < 2:
        raise FeatureExtractionError(f"need at least 2 frames, got {len(seq)}")
    frames = seq.frames.copy()
    t_all = np.arange(frames.shape[0], dtype=np.float64)
    visible = frames[:, :, 3] >= VISIBILITY_THRESHOLD
    for j in range(frames.shape[1]):
        vis_j = visible[:, j]
        if vis_j.all() or not vis_j.any():
            continue
        t_vis = t_all[vis_j]
        for ch in range(3):
            filled = np.interp(t_all, t_vis, frames[vis_j, j, ch])
            frames[~vis_j, j, ch] = filled[~vis_j]

    n = frames.shape[0]
    if n > T_MAX_FRAMES:
        stride = math.ceil(n / T_MAX_FRAMES)
        frames = frames[::stride]
        visible = visible[::stride]

    limb_visible = visible[:, list(TORSO_LIMB_INDICES)]
    keep = limb_visible.sum(axis=1) >= limb_visible.shape[1] / 2.0
    frames = frames[keep]
    if frames.shape[0] < 2:
        raise FeatureExtractionError(
            f"{frames.shape[0]} usable frames after preprocessing, need at least 2"
        )
    return seq.with_frames(frames)


class _SequenceGeometry:
    """Per-sequence precomputation shared by all feature formulas."""

    def __init__(self, seq: LandmarkSequence):
        w, h = seq.frame_size
        px = seq.frames[:, :, :2] * np.array([w, h], dtype=np.float64)
        self.midhip = 0.5 * (px[:, _L_HIP] + px[:, _R_HIP])
        self.midshoulder = 0.5 * (px[:, _L_SHOULDER] + px[:, _R_SHOULDER])
        self.torso = np.linalg.norm(self.midshoulder - self.midhip, axis=1)
        # pelvis-centered, torso-normalized coordinates; guarded per frame
        safe = np.where(self.torso > GEOMETRY_EPS, self.torso, 1.0)
        self.points = (px - self.midhip[:, None, :]) / safe[:, None, None]
        self.frame_height = float(h)
        hip_height = self.frame_height - self.midhip[:, 1]
        self.hip_height_p95 = float(np.percentile(hip_height, 95))
        self.hip_height = hip_height
        self.mean_midhip_x = float(self.midhip[:, 0].mean())

    def check_torso(self, t: int) -> None:
        if self.torso[t] <= GEOMETRY_EPS:
            raise DegenerateGeometryError(f"torso length {self.torso[t]:g} at frame {t}")


def _f_angle3(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    a, b, c = lm
    return joint_angle(g.points[t, a], g.points[t, b], g.points[t, c])


def _f_pair_dist(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    g.check_torso(t)
    a, b = lm
    return float(np.linalg.norm(g.points[t, a] - g.points[t, b]))


def _f_wrist_height(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    """Mean height of the wrists above the shoulder line, torso units (y is down)."""
    g.check_torso(t)
    shoulder_y = 0.5 * (g.points[t, _L_SHOULDER, 1] + g.points[t, _R_SHOULDER, 1])
    heights = [shoulder_y - g.points[t, w, 1] for w in lm]
    return float(np.mean(heights))


def _f_trunk_tilt(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    """Signed angle of the pelvis->shoulder axis vs image vertical, degrees.

    Positive when the shoulders lean toward larger x (image right).
    """
    d = g.midshoulder[t] - g.midhip[t]
    if math.hypot(*d) <= GEOMETRY_EPS:
        raise DegenerateGeometryError(f"trunk axis collapsed at frame {t}")
    return math.degrees(math.atan2(d[0], -d[1]))


def _f_trunk_tilt_abs(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    return abs(_f_trunk_tilt(g, t, lm))


def _f_line_angle(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    """Angle of the segment between two landmarks vs horizontal, in (-90, 90]."""
    a, b = lm
    d = g.points[t, a] - g.points[t, b]
    if math.hypot(*d) <= GEOMETRY_EPS:
        raise DegenerateGeometryError(f"zero-length segment at frame {t}")
    ang = math.degrees(math.atan2(d[1], d[0]))
    if ang > 90.0:
        ang -= 180.0
    elif ang <= -90.0:
        ang += 180.0
    return ang


def _f_width_ratio(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    """Projected horizontal extent of a landmark pair, torso units."""
    g.check_torso(t)
    a, b = lm
    return abs(float(g.points[t, a, 0] - g.points[t, b, 0]))


def _f_lateral_offset(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    g.check_torso(t)
    return float((g.midshoulder[t, 0] - g.midhip[t, 0]) / g.torso[t])


def _f_hip_sway(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    g.check_torso(t)
    return float((g.midhip[t, 0] - g.mean_midhip_x) / g.torso[t])


def _f_hip_height_ratio(g: _SequenceGeometry, t: int, lm: tuple[int, ...]) -> float:
    """Current mid-hip height over the 95th-percentile height (standing proxy)."""
    if g.hip_height_p95 <= GEOMETRY_EPS:
        raise DegenerateGeometryError("95th-percentile hip height is zero")
    return float(g.hip_height[t] / g.hip_height_p95)


_FORMULAS = {
    "angle3": _f_angle3,
    "pair_dist": _f_pair_dist,
    "wrist_height": _f_wrist_height,
    "trunk_tilt_signed": _f_trunk_tilt,
    "trunk_tilt_abs": _f_trunk_tilt_abs,
    "line_angle_vs_horizontal": _f_line_angle,
    "width_ratio": _f_width_ratio,
    "lateral_offset": _f_lateral_offset,
    "hip_sway": _f_hip_sway,
    "hip_height_ratio": _f_hip_height_ratio,
}


@dataclass(frozen=True)
class FeatureDef:
    """One registry row: feature name, formula id, landmark arguments."""

    name: str
    formula: str
    landmarks: tuple[int, ...]

    def __post_init__(self):
        if self.formula not in _FORMULAS:
            raise ValueError(f"unknown formula {self.formula!r}")

    def evaluate(self, geometry: _SequenceGeometry, t: int) -> float:
        return _FORMULAS[self.formula](geometry, t, self.landmarks)


FEATURE_REGISTRY: dict[int, tuple[FeatureDef, ...]] = {
    1: (  # both arms lifted laterally
        FeatureDef("elbow_angle_left", "angle3", (_L_SHOULDER, _L_ELBOW, _L_WRIST)),
        FeatureDef("elbow_angle_right", "angle3", (_R_SHOULDER, _R_ELBOW, _R_WRIST)),
        FeatureDef("shoulder_abduction_left", "angle3", (_L_HIP, _L_SHOULDER, _L_ELBOW)),
        FeatureDef("shoulder_abduction_right", "angle3", (_R_HIP, _R_SHOULDER, _R_ELBOW)),
        FeatureDef("wrist_distance", "pair_dist", (_L_WRIST, _R_WRIST)),
        FeatureDef("wrist_height", "wrist_height", (_L_WRIST, _R_WRIST)),
    ),
    2: (  # lateral trunk tilt with extended arms
        FeatureDef("trunk_tilt", "trunk_tilt_signed", (_L_SHOULDER, _R_SHOULDER, _L_HIP, _R_HIP)),
        FeatureDef("elbow_angle_left", "angle3", (_L_SHOULDER, _L_ELBOW, _L_WRIST)),
        FeatureDef("elbow_angle_right", "angle3", (_R_SHOULDER, _R_ELBOW, _R_WRIST)),
        FeatureDef("shoulder_line_angle", "line_angle_vs_horizontal", (_L_SHOULDER, _R_SHOULDER)),
    ),
    3: (  # trunk rotation
        FeatureDef("shoulder_width_ratio", "width_ratio", (_L_SHOULDER, _R_SHOULDER)),
        FeatureDef("hip_width_ratio", "width_ratio", (_L_HIP, _R_HIP)),
        FeatureDef("shoulder_hip_offset", "lateral_offset", (_L_SHOULDER, _R_SHOULDER, _L_HIP, _R_HIP)),
        FeatureDef("wrist_distance", "pair_dist", (_L_WRIST, _R_WRIST)),
    ),
    4: (  # pelvis rotation in the transverse plane
        FeatureDef("hip_width_ratio", "width_ratio", (_L_HIP, _R_HIP)),
        FeatureDef("hip_sway", "hip_sway", (_L_HIP, _R_HIP)),
        FeatureDef("shoulder_width_ratio", "width_ratio", (_L_SHOULDER, _R_SHOULDER)),
    ),
    5: (  # squat
        FeatureDef("knee_angle_left", "angle3", (_L_HIP, _L_KNEE, _L_ANKLE)),
        FeatureDef("knee_angle_right", "angle3", (_R_HIP, _R_KNEE, _R_ANKLE)),
        FeatureDef("hip_height_ratio", "hip_height_ratio", (_L_HIP, _R_HIP)),
        FeatureDef("trunk_inclination", "trunk_tilt_abs", (_L_SHOULDER, _R_SHOULDER, _L_HIP, _R_HIP)),
    ),
}


@dataclass(frozen=True)
class FeatureSpec:
    """Which features a given exercise uses; dim drives the model input width."""

    exercise: int
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.feature_names)) != len(self.feature_names) or not self.feature_names:
            raise ValueError("feature names must be unique and non-empty")

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    @classmethod
    def for_exercise(cls, exercise: int) -> "FeatureSpec":
        if exercise not in FEATURE_REGISTRY:
            raise FeatureExtractionError(f"no feature registry for exercise {exercise!r}")
        return cls(exercise, tuple(d.name for d in FEATURE_REGISTRY[exercise]))


@dataclass(frozen=True)
class FeatureSequence:
    """Feature matrix for one sample: (frames, spec.dim) float64."""

    vectors: np.ndarray
    spec: FeatureSpec

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        if vectors.ndim != 2 or vectors.shape[1] != self.spec.dim:
            raise ValueError(f"feature matrix shape {vectors.shape} does not match dim {self.spec.dim}")
        if not np.isfinite(vectors).all():
            raise ValueError("feature matrix contains non-finite values")

    def __len__(self) -> int:
        return self.vectors.shape[0]


def extract_features(sample: Sample, spec: FeatureSpec | None = None) -> FeatureSequence:
    """Preprocess a sample and evaluate its exercise's feature registry per frame.

    A frame where some feature hits degenerate geometry inherits that
    feature's value from the previous frame; leading frames with no previous
    value are skipped entirely.
    """
    if spec is None:
        spec = FeatureSpec.for_exercise(sample.exercise)
    if spec.exercise != sample.exercise:
        raise FeatureExtractionError(
            f"sample is exercise {sample.exercise}, spec is for exercise {spec.exercise}"
        )
    defs = FEATURE_REGISTRY[spec.exercise]
    if tuple(d.name for d in defs) != spec.feature_names:
        raise FeatureExtractionError("spec feature names do not match the registry")

    seq = preprocess_sequence(sample.sequence)
    geometry = _SequenceGeometry(seq)
    rows: list[list[float]] = []
    for t in range(len(seq)):
        row: list[float | None] = []
        for d in defs:
            try:
                row.append(d.evaluate(geometry, t))
            except DegenerateGeometryError:
                row.append(None)
        if any(v is None for v in row):
            if not rows:
                continue  # no previous values to hold yet
            prev = rows[-1]
            row = [prev[i] if v is None else v for i, v in enumerate(row)]
        rows.append([float(v) for v in row])
    if len(rows) < 2:
        raise FeatureExtractionError(f"{len(rows)} feature frames after extraction, need at least 2")
    return FeatureSequence(vectors=np.array(rows, dtype=np.float64), spec=spec)


def describe_registry() -> str:
    """Plain-text table of every registered feature, for report headers."""
    lines = ["exercise  feature                    formula                    landmarks"]
    for exercise in sorted(FEATURE_REGISTRY):
        for d in FEATURE_REGISTRY[exercise]:
            names = ",".join(CANONICAL_TOPOLOGY.names[i] for i in d.landmarks)
            lines.append(f"{exercise:<9} {d.name:<26} {d.formula:<26} {names}")
    return "\n".join(lines) + "\n"
