"""Core data model: skeleton topology, keypoint sequences, samples, manifests.

Coordinates follow the usual pose-estimator convention: x and y are
normalized to [0, 1] relative to frame width and height, the y axis points
down, z is an unscaled relative depth, and visibility is a confidence in
[0, 1]. A frame is a (33, 4) float64 array with columns (x, y, z, visibility).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

N_LANDMARKS = 33
FRAME_COLUMNS = ("x", "y", "z", "visibility")
SCORE_MAX = 50.0
EXERCISE_IDS = (1, 2, 3, 4, 5)
COHORTS = ("healthy", "patient", "synthetic")

MANIFEST_BASE_HEADER = ("sample_id", "subject_id", "exercise", "keypoints", "score", "cohort")
MANIFEST_PROVENANCE_HEADER = MANIFEST_BASE_HEADER + ("parent_id", "op")


class TopologyError(ValueError):
    """Raised for a malformed landmark topology definition."""


@dataclass(frozen=True)
class LandmarkTopology:
    """Names and left/right mirror pairing of the 33-point skeleton."""

    names: tuple[str, ...]
    mirror_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.names) != N_LANDMARKS:
            raise TopologyError(f"expected {N_LANDMARKS} landmark names, got {len(self.names)}")
        if len(set(self.names)) != N_LANDMARKS:
            raise TopologyError("landmark names are not unique")
        seen: set[int] = set()
        for a, b in self.mirror_pairs:
            if not (0 <= a < N_LANDMARKS and 0 <= b < N_LANDMARKS) or a == b:
                raise TopologyError(f"bad mirror pair ({a}, {b})")
            if a in seen or b in seen:
                raise TopologyError(f"landmark appears in more than one mirror pair: ({a}, {b})")
            seen.update((a, b))
        for i, name in enumerate(self.names):
            lateral = "left" in name or "right" in name
            if lateral and i not in seen:
                raise TopologyError(f"lateral landmark {name!r} missing from mirror pairs")
            if not lateral and i in seen:
                raise TopologyError(f"midline landmark {name!r} listed in mirror pairs")

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def swap_permutation(self) -> np.ndarray:
        """Index array that exchanges each left/right pair (midline fixed)."""
        perm = np.arange(N_LANDMARKS)
        for a, b in self.mirror_pairs:
            perm[a], perm[b] = b, a
        return perm

    @classmethod
    def from_dict(cls, doc: dict) -> "LandmarkTopology":
        return cls(
            names=tuple(doc["landmark_names"]),
            mirror_pairs=tuple((int(a), int(b)) for a, b in doc["mirror_pairs"]),
        )


def _load_topology_data() -> dict:
    path = resources.files(__package__).joinpath("data/topology_33.json")
    return json.loads(path.read_text())


_TOPOLOGY_DOC = _load_topology_data()
CANONICAL_TOPOLOGY = LandmarkTopology.from_dict(_TOPOLOGY_DOC)
LANDMARK_NAMES = CANONICAL_TOPOLOGY.names

# Torso and limb landmarks used by the frame-quality rule in preprocessing:
# shoulders, elbows, wrists, hips, knees, ankles.
TORSO_LIMB_INDICES = tuple(
    CANONICAL_TOPOLOGY.index(f"{side}_{part}")
    for part in ("shoulder", "elbow", "wrist", "hip", "knee", "ankle")
    for side in ("left", "right")
)


@dataclass(frozen=True)
class LandmarkSequence:
    """A fixed-rate keypoint clip: (T, 33, 4) array plus fps and frame size."""

    frames: np.ndarray
    fps: float
    frame_size: tuple[int, int]  # (width, height) in pixels

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 4:
            raise ValueError(f"frames must be (T, points, 4), got shape {frames.shape}")
        if frames.shape[0] < 2:
            raise ValueError(f"a sequence needs at least 2 frames, got {frames.shape[0]}")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        size = (int(self.frame_size[0]), int(self.frame_size[1]))
        if size[0] <= 0 or size[1] <= 0:
            raise ValueError(f"frame_size must be positive, got {size}")
        object.__setattr__(self, "frame_size", size)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def with_frames(self, frames: np.ndarray) -> "LandmarkSequence":
        return replace(self, frames=frames)


@dataclass(frozen=True)
class QualityScore:
    """Clinical quality label on the raw 0..50 scale and its 0..1 normalization."""

    raw: float
    normalized: float

    def __post_init__(self):
        if not (0.0 <= self.raw <= SCORE_MAX):
            raise ValueError(f"raw score must be in [0, {SCORE_MAX:g}], got {self.raw}")
        if abs(self.normalized - self.raw / SCORE_MAX) > 1e-12:
            raise ValueError(
                f"normalized ({self.normalized}) inconsistent with raw ({self.raw})"
            )

    @classmethod
    def from_raw(cls, raw: float) -> "QualityScore":
        raw = float(raw)
        return cls(raw=raw, normalized=raw / SCORE_MAX)

    @classmethod
    def from_normalized(cls, normalized: float) -> "QualityScore":
        normalized = float(normalized)
        return cls(raw=normalized * SCORE_MAX, normalized=normalized)


@dataclass(frozen=True)
class Provenance:
    """Where a sample came from: an original recording or a derived variant."""

    parent_id: str | None = None
    op: str | None = None

    @classmethod
    def original(cls) -> "Provenance":
        return cls(None, None)

    @classmethod
    def augmented(cls, parent_id: str, op: str) -> "Provenance":
        return cls(parent_id, op)

    @property
    def is_original(self) -> bool:
        return self.parent_id is None and self.op is None


@dataclass(frozen=True)
class Sample:
    """One labeled (or unlabeled) exercise repetition."""

    sample_id: str
    subject_id: str
    exercise: int
    sequence: LandmarkSequence
    score: QualityScore | None = None
    provenance: Provenance = field(default_factory=Provenance.original)


def mirror_swap(frame: np.ndarray, topology: LandmarkTopology = CANONICAL_TOPOLOGY) -> np.ndarray:
    """Mirror one frame about the vertical axis: x -> 1 - x, left/right labels exchanged.

    y, z and visibility travel with the exchanged landmark. The returned
    array is new; the input is untouched.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (N_LANDMARKS, 4):
        raise ValueError(f"expected frame shape ({N_LANDMARKS}, 4), got {frame.shape}")
    out = frame[topology.swap_permutation].copy()
    out[:, 0] = 1.0 - out[:, 0]
    return out


def mirror_swap_sequence(seq: LandmarkSequence, topology: LandmarkTopology = CANONICAL_TOPOLOGY) -> LandmarkSequence:
    """Vectorized :func:`mirror_swap` over every frame of a sequence."""
    out = seq.frames[:, topology.swap_permutation].copy()
    out[:, :, 0] = 1.0 - out[:, :, 0]
    return seq.with_frames(out)


def validate_sample(sample: Sample, parent: Sample | None = None) -> list[str]:
    """Check every structural invariant for a sample; return human-readable violations.

    An empty list means the sample is well formed. When ``parent`` is given,
    provenance consistency (linkage and label preservation) is checked too.
    """
    v: list[str] = []
    if not sample.sample_id:
        v.append("sample_id is empty")
    if not sample.subject_id:
        v.append("subject_id is empty")
    if sample.exercise not in EXERCISE_IDS:
        v.append(f"exercise {sample.exercise!r} not in {EXERCISE_IDS}")

    seq = sample.sequence
    frames = seq.frames
    if frames.ndim != 3 or frames.shape[1:] != (N_LANDMARKS, 4):
        v.append(f"frames: expected shape (T, {N_LANDMARKS}, 4), got {frames.shape}")
        if frames.ndim == 3 and frames.shape[2] == 4:
            v.append(f"frame 0: point count {frames.shape[1]} != {N_LANDMARKS}")
        return v  # shape is wrong; per-landmark checks below would misfire
    if frames.shape[0] < 2:
        v.append(f"sequence has {frames.shape[0]} frames, need at least 2")
    if not (seq.fps > 0):
        v.append(f"fps must be positive, got {seq.fps}")
    w, h = seq.frame_size
    if w <= 0 or h <= 0:
        v.append(f"frame_size must be positive, got {seq.frame_size}")

    bad_xy = ~np.isfinite(frames[:, :, :2])
    if bad_xy.any():
        t, j, _ = np.argwhere(bad_xy)[0]
        v.append(f"frame {t}, landmark {LANDMARK_NAMES[j]}: non-finite coordinate")
    if not np.isfinite(frames[:, :, 2]).all():
        t, j = np.argwhere(~np.isfinite(frames[:, :, 2]))[0]
        v.append(f"frame {t}, landmark {LANDMARK_NAMES[j]}: non-finite depth")
    vis = frames[:, :, 3]
    bad_vis = ~(np.isfinite(vis) & (vis >= 0.0) & (vis <= 1.0))
    if bad_vis.any():
        t, j = np.argwhere(bad_vis)[0]
        v.append(f"frame {t}, landmark {LANDMARK_NAMES[j]}: visibility outside [0, 1]")

    if sample.score is not None:
        raw, norm = sample.score.raw, sample.score.normalized
        if not (np.isfinite(raw) and 0.0 <= raw <= SCORE_MAX):
            v.append(f"score {raw!r} outside [0, {SCORE_MAX:g}]")
        elif abs(norm - raw / SCORE_MAX) > 1e-12:
            v.append(f"normalized score {norm!r} inconsistent with raw {raw!r}")

    prov = sample.provenance
    if (prov.parent_id is None) != (prov.op is None):
        v.append("provenance must set both parent_id and op, or neither")
    if prov.parent_id is not None and prov.parent_id == sample.sample_id:
        v.append("sample lists itself as its provenance parent")

    if parent is not None:
        if prov.is_original:
            v.append("parent given but sample provenance marks it as original")
        elif prov.parent_id != parent.sample_id:
            v.append(f"provenance parent {prov.parent_id!r} != {parent.sample_id!r}")
        if not parent.provenance.is_original:
            v.append("provenance parent is itself an augmented sample")
        if parent.subject_id != sample.subject_id:
            v.append("subject_id differs from provenance parent")
        if parent.exercise != sample.exercise:
            v.append("exercise differs from provenance parent")
        if (parent.score is None) != (sample.score is None):
            v.append("label presence differs from provenance parent")
        elif sample.score is not None and parent.score is not None:
            if sample.score.raw != parent.score.raw:
                v.append(
                    f"label drift under augmentation: {sample.score.raw!r} != parent {parent.score.raw!r}"
                )
    return v


@dataclass(frozen=True)
class ManifestEntry:
    """One dataset row: identity, label, cohort, and the kp-seq file it points at."""

    sample_id: str
    subject_id: str
    exercise: int
    keypoints: str  # path relative to the manifest file
    score_raw: float
    cohort: str
    parent_id: str | None = None
    op: str | None = None

    @property
    def is_original(self) -> bool:
        return self.parent_id is None


class ManifestError(ValueError):
    """Raised for structural problems in a dataset manifest."""


@dataclass(frozen=True)
class Manifest:
    """An ordered set of manifest entries with unique sample ids."""

    entries: tuple[ManifestEntry, ...]
    root: Path = Path(".")

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "root", Path(self.root))
        seen: set[str] = set()
        ids = {e.sample_id for e in self.entries}
        for e in self.entries:
            if e.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {e.sample_id!r}")
            seen.add(e.sample_id)
            if e.exercise not in EXERCISE_IDS:
                raise ManifestError(f"{e.sample_id}: exercise {e.exercise!r} not in {EXERCISE_IDS}")
            if e.cohort not in COHORTS:
                raise ManifestError(f"{e.sample_id}: cohort {e.cohort!r} not in {COHORTS}")
            if not (np.isfinite(e.score_raw) and 0.0 <= e.score_raw <= SCORE_MAX):
                raise ManifestError(f"{e.sample_id}: score {e.score_raw!r} outside [0, {SCORE_MAX:g}]")
            if (e.parent_id is None) != (e.op is None):
                raise ManifestError(f"{e.sample_id}: parent_id and op must be set together")
            if e.parent_id is not None and e.parent_id not in ids:
                raise ManifestError(f"{e.sample_id}: parent {e.parent_id!r} not in manifest")

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.keypoints

    def originals(self) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.is_original)

    def for_exercise(self, exercise: int) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.exercise == exercise)


def load_manifest(path: str | Path) -> Manifest:
    """Read a manifest CSV. Accepts the base header or the provenance-extended one."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if header not in (MANIFEST_BASE_HEADER, MANIFEST_PROVENANCE_HEADER):
            raise ManifestError(f"{path}: unrecognized header {header!r}")
        extended = header == MANIFEST_PROVENANCE_HEADER
        entries = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ManifestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                exercise = int(row[2])
                score = float(row[4])
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            parent_id = row[6] or None if extended else None
            op = row[7] or None if extended else None
            entries.append(
                ManifestEntry(
                    sample_id=row[0],
                    subject_id=row[1],
                    exercise=exercise,
                    keypoints=row[3],
                    score_raw=score,
                    cohort=row[5],
                    parent_id=parent_id,
                    op=op,
                )
            )
    return Manifest(entries=tuple(entries), root=path.parent)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest CSV; the provenance columns appear only when used."""
    path = Path(path)
    extended = any(e.parent_id is not None for e in manifest.entries)
    header = MANIFEST_PROVENANCE_HEADER if extended else MANIFEST_BASE_HEADER
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for e in manifest.entries:
            row = [e.sample_id, e.subject_id, str(e.exercise), e.keypoints, repr(e.score_raw), e.cohort]
            if extended:
                row += [e.parent_id or "", e.op or ""]
            writer.writerow(row)
