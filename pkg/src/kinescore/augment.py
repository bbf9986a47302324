"""Flip/rotate augmentation, applied consistently to frames or to joints.

An op can run in two spaces. In image space the video frames are
transformed and a pose backend re-extracts landmarks, which is what adds
value on real footage (the estimator re-samples its own noise). In joint
space the same geometric map is applied to the keypoints directly, which
is cheap and exact. Rotations use the frame center ((W-1)/2, (H-1)/2) in
both spaces, so the two routes land on the same geometry.

Horizontal flips carry a labeling subtlety. An anatomical pose extractor
looking at flipped footage sees a mirrored person and reports the mirrored
laterality (the subject's left arm comes back labeled right), which is
exactly what the joint-space flip (mirror_swap) produces. A backend that
identifies landmarks by marker identity instead of by anatomy keeps the
original labels, so for those backends the pipeline applies the mirror
relabeling after extraction. Backends declare which kind they are via the
``labels_follow_anatomy`` attribute.

Angles are counterclockwise in standard image coordinates; because y
points down, that looks clockwise on screen.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    CANONICAL_TOPOLOGY,
    LandmarkSequence,
    Provenance,
    Sample,
    mirror_swap,
    mirror_swap_sequence,
)
from .kpseq import load_keypoints
from .markers import detect_markers, render_markers, write_ppm

MAX_ROTATION_DEG = 10.0


class AugmentationError(ValueError):
    """Raised for invalid ops, presets, or augmentation requests."""


class ChainAugmentationError(AugmentationError):
    """Raised when augmenting a sample that is already an augmented variant."""


@dataclass(frozen=True)
class AugmentationOp:
    """One transform: a horizontal flip, or a rotation by a small angle."""

    kind: str  # "hflip" or "rotate"
    theta_deg: float = 0.0

    def __post_init__(self):
        if self.kind == "hflip":
            if self.theta_deg != 0.0:
                raise AugmentationError("hflip takes no angle")
        elif self.kind == "rotate":
            if self.theta_deg == 0.0:
                raise AugmentationError("rotate by 0 degrees is the identity; use no op instead")
            if not abs(self.theta_deg) <= MAX_ROTATION_DEG:
                raise AugmentationError(
                    f"|theta| must be <= {MAX_ROTATION_DEG:g} degrees to keep the "
                    f"movement recognizable, got {self.theta_deg}"
                )
        else:
            raise AugmentationError(f"unknown op kind {self.kind!r}")

    @property
    def descriptor(self) -> str:
        """Stable short name used in sample ids, manifests, and provenance."""
        if self.kind == "hflip":
            return "hflip"
        return f"rot{self.theta_deg:+g}"

    @classmethod
    def hflip(cls) -> "AugmentationOp":
        return cls("hflip")

    @classmethod
    def rotate(cls, theta_deg: float) -> "AugmentationOp":
        return cls("rotate", float(theta_deg))


@dataclass(frozen=True)
class AugmentationPreset:
    """A named list of ops; each op yields one variant per source sample."""

    name: str
    ops: tuple[AugmentationOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if not self.ops:
            raise AugmentationError(f"preset {self.name!r} has no ops")
        descriptors = [op.descriptor for op in self.ops]
        if len(set(descriptors)) != len(descriptors):
            raise AugmentationError(f"preset {self.name!r} repeats an op")

    def __len__(self) -> int:
        return len(self.ops)


PRESETS = {
    "a1": AugmentationPreset(
        "a1",
        (AugmentationOp.hflip(), AugmentationOp.rotate(-1), AugmentationOp.rotate(1)),
    ),
    "a7": AugmentationPreset(
        "a7",
        (
            AugmentationOp.hflip(),
            AugmentationOp.rotate(-1),
            AugmentationOp.rotate(-2),
            AugmentationOp.rotate(-3),
            AugmentationOp.rotate(1),
            AugmentationOp.rotate(2),
            AugmentationOp.rotate(3),
        ),
    ),
}


def get_preset(name: str) -> AugmentationPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise AugmentationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def rotate_points_px(points: np.ndarray, theta_deg: float, frame_size: tuple[int, int]) -> np.ndarray:
    """Rotate normalized (x, y) points about the frame center, in pixel coordinates.

    Accepts any (..., 2) array of normalized coordinates. No angle guard;
    op validation happens on :class:`AugmentationOp`.
    """
    points = np.asarray(points, dtype=np.float64)
    w, h = frame_size
    cu, cv = (w - 1) / 2.0, (h - 1) / 2.0
    theta = math.radians(theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    du = points[..., 0] * w - cu
    dv = points[..., 1] * h - cv
    out = np.empty_like(points)
    out[..., 0] = (c * du - s * dv + cu) / w
    out[..., 1] = (s * du + c * dv + cv) / h
    return out


def transform_joints(frame: np.ndarray, op: AugmentationOp, frame_size: tuple[int, int]) -> np.ndarray:
    """Apply an op to one (33, 4) frame of normalized landmarks."""
    frame = np.asarray(frame, dtype=np.float64)
    if op.kind == "hflip":
        return mirror_swap(frame)
    out = frame.copy()
    out[:, :2] = rotate_points_px(frame[:, :2], op.theta_deg, frame_size)
    return out


def transform_joints_sequence(seq: LandmarkSequence, op: AugmentationOp) -> LandmarkSequence:
    """Apply an op to every frame of a sequence. z and visibility pass through."""
    if op.kind == "hflip":
        return mirror_swap_sequence(seq)
    out = seq.frames.copy()
    out[:, :, :2] = rotate_points_px(seq.frames[:, :, :2], op.theta_deg, seq.frame_size)
    return seq.with_frames(out)


def _rotate_image(image: np.ndarray, theta_deg: float) -> np.ndarray:
    h, w = image.shape[:2]
    cu, cv = (w - 1) / 2.0, (h - 1) / 2.0
    theta = math.radians(theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    du = jj - cu
    dv = ii - cv
    # inverse map: where does each destination pixel come from
    su = c * du + s * dv + cu
    sv = -s * du + c * dv + cv
    u0 = np.floor(su).astype(np.int64)
    v0 = np.floor(sv).astype(np.int64)
    fu = su - u0
    fv = sv - v0
    src = image.astype(np.float64)
    out = np.zeros((h, w, 3), dtype=np.float64)
    for dv_i, du_i, wgt in (
        (0, 0, (1 - fu) * (1 - fv)),
        (0, 1, fu * (1 - fv)),
        (1, 0, (1 - fu) * fv),
        (1, 1, fu * fv),
    ):
        uu = u0 + du_i
        vv = v0 + dv_i
        valid = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        uc = np.clip(uu, 0, w - 1)
        vc = np.clip(vv, 0, h - 1)
        out += (wgt * valid)[:, :, None] * src[vc, uc]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def transform_image(image: np.ndarray, op: AugmentationOp) -> np.ndarray:
    """Apply an op to one (H, W, 3) uint8 frame. Output has the same shape."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {image.shape}")
    if op.kind == "hflip":
        return image[:, ::-1].copy()
    return _rotate_image(image, op.theta_deg)


class MarkerFrameSource:
    """Frame source that renders a sample's landmarks as marker discs."""

    def __call__(self, sample: Sample) -> np.ndarray:
        seq = sample.sequence
        return np.stack([render_markers(f, seq.frame_size) for f in seq.frames])


class MarkerPoseBackend:
    """Pose backend that reads marker discs back out of rendered frames.

    Marker colors track landmark identity, not anatomy, so flipped frames
    come back with the original labels and the pipeline relabels laterality.
    """

    labels_follow_anatomy = False

    def __call__(self, images: np.ndarray, fps: float, frame_size: tuple[int, int]) -> np.ndarray:
        return np.stack([detect_markers(img) for img in images])


class CommandPoseBackend:
    """Pose backend that shells out to an external extractor.

    The command line is ``<prefix> --frames <dir> --out <file>``; the
    extractor must write a kp-seq file covering every frame in order.
    anatomical_labels says whether the extractor labels landmarks by the
    anatomy it sees (a video pose model) or by fixed marker identity (the
    marker-disc adapter, the default).
    """

    def __init__(self, prefix: str | list[str], anatomical_labels: bool = False):
        self.prefix = shlex.split(prefix) if isinstance(prefix, str) else list(prefix)
        if not self.prefix:
            raise AugmentationError("empty pose command")
        self.labels_follow_anatomy = anatomical_labels

    def __call__(self, images: np.ndarray, fps: float, frame_size: tuple[int, int]) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="kinescore-pose-") as tmp:
            tmp_path = Path(tmp)
            for t, img in enumerate(images):
                write_ppm(img, tmp_path / f"frame_{t:06d}.ppm")
            out_file = tmp_path / "pose.kpseq.json"
            cmd = self.prefix + ["--frames", str(tmp_path), "--out", str(out_file)]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise AugmentationError(
                    f"pose command failed with exit {proc.returncode}: "
                    f"{' '.join(cmd)}\n{proc.stderr.strip()}"
                )
            sample = load_keypoints(out_file)
            return np.asarray(sample.sequence.frames)


def _image_space_variant(sample: Sample, op: AugmentationOp, frames: np.ndarray, pose_backend) -> LandmarkSequence:
    seq = sample.sequence
    transformed = np.stack([transform_image(img, op) for img in frames])
    landmarks = pose_backend(transformed, seq.fps, seq.frame_size)
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if landmarks.shape != seq.frames.shape:
        raise AugmentationError(
            f"pose backend returned shape {landmarks.shape}, expected {seq.frames.shape}"
        )
    if op.kind == "hflip" and not getattr(pose_backend, "labels_follow_anatomy", True):
        landmarks = landmarks[:, CANONICAL_TOPOLOGY.swap_permutation, :]
    return seq.with_frames(landmarks)


def augment_sample(
    sample: Sample,
    preset: AugmentationPreset,
    space: str = "joints",
    frame_source=None,
    pose_backend=None,
) -> list[Sample]:
    """Produce one augmented variant per op in the preset.

    The returned list does not include the source sample. Variants keep the
    subject, exercise, label, fps, frame size and frame count of the source;
    ids are ``<parent_id>__<op>``. Only original samples may be augmented,
    which keeps provenance a single hop and cross-validation leakage checks
    simple.
    """
    if not sample.provenance.is_original:
        raise ChainAugmentationError(
            f"sample {sample.sample_id!r} is already augmented (parent "
            f"{sample.provenance.parent_id!r}); augment the original instead"
        )
    if space not in ("joints", "image"):
        raise AugmentationError(f"space must be 'joints' or 'image', got {space!r}")

    frames = None
    if space == "image":
        if frame_source is None or pose_backend is None:
            raise AugmentationError("image-space augmentation needs a frame_source and a pose_backend")
        frames = np.asarray(frame_source(sample))
        if frames.shape[0] != len(sample.sequence):
            raise AugmentationError(
                f"frame source returned {frames.shape[0]} frames for "
                f"{len(sample.sequence)} keypoint frames"
            )

    variants = []
    for op in preset.ops:
        if space == "joints":
            seq = transform_joints_sequence(sample.sequence, op)
        else:
            seq = _image_space_variant(sample, op, frames, pose_backend)
        variants.append(
            Sample(
                sample_id=f"{sample.sample_id}__{op.descriptor}",
                subject_id=sample.subject_id,
                exercise=sample.exercise,
                sequence=seq,
                score=sample.score,
                provenance=Provenance.augmented(sample.sample_id, op.descriptor),
            )
        )
    return variants
