"""Color-marker pose backend and the PPM plumbing it needs.

This is the demo backend: each landmark owns one palette color, frames are
plain P6 PPM images, and detection takes the intensity-weighted centroid of
the pixels nearest each palette color. It exists so the adapter can be
exercised end to end without a pretrained model or video decoder.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import N_LANDMARKS, load_topology

MARKER_RADIUS_PX = 3.0
MATCH_DISTANCE = 60.0
MIN_PIXELS = 3

_PALETTE = np.array(load_topology()["marker_palette"], dtype=np.float64)


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary (P6, maxval 255) PPM into an (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {fields[0]!r})")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after the header
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    return pixels.reshape(height, width, 3).copy()


def write_ppm(image: np.ndarray, path: str | Path) -> None:
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def detect_landmarks(image: np.ndarray) -> np.ndarray:
    """Classify pixels by nearest palette color, centroid each marker.

    Returns a (33, 4) array of (x, y, z, visibility) with coordinates
    normalized to [0, 1]. Markers with fewer than three matched pixels are
    reported invisible with zeroed coordinates; z is always 0.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {image.shape}")
    h, w = image.shape[:2]
    flat = image.reshape(-1, 3).astype(np.float64)
    candidate = np.flatnonzero(flat.sum(axis=1) > 0)
    out = np.zeros((N_LANDMARKS, 4), dtype=np.float64)
    if candidate.size == 0:
        return out
    pixels = flat[candidate]
    d2 = ((pixels[:, None, :] - _PALETTE[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    matched = d2[np.arange(len(pixels)), nearest] <= MATCH_DISTANCE**2
    rows = candidate // w
    cols = candidate % w
    weight = pixels.sum(axis=1) / 3.0
    for idx in range(N_LANDMARKS):
        sel = matched & (nearest == idx)
        if sel.sum() < MIN_PIXELS:
            continue
        wsel = weight[sel]
        total = wsel.sum()
        out[idx] = ((cols[sel] * wsel).sum() / total / w,
                    (rows[sel] * wsel).sum() / total / h, 0.0, 1.0)
    return out


def render_landmarks(frame: np.ndarray, frame_size: tuple[int, int]) -> np.ndarray:
    """Draw one palette-colored disc per visible landmark on black."""
    frame = np.asarray(frame, dtype=np.float64)
    w, h = int(frame_size[0]), int(frame_size[1])
    image = np.zeros((h, w, 3), dtype=np.uint8)
    r = MARKER_RADIUS_PX
    for idx in range(N_LANDMARKS):
        x, y, _, vis = frame[idx]
        if vis <= 0.0:
            continue
        u, v = x * w, y * h
        c0, c1 = max(int(np.ceil(u - r)), 0), min(int(np.floor(u + r)), w - 1)
        r0, r1 = max(int(np.ceil(v - r)), 0), min(int(np.floor(v + r)), h - 1)
        if c0 > c1 or r0 > r1:
            continue
        cols = np.arange(c0, c1 + 1)
        rows = np.arange(r0, r1 + 1)
        inside = (cols[None, :] - u) ** 2 + (rows[:, None] - v) ** 2 <= r * r
        image[r0 : r1 + 1, c0 : c1 + 1][inside] = _PALETTE[idx].astype(np.uint8)
    return image


# Pose used by the bundled demo clip, in normalized coordinates of a
# 640x480 frame. The right arm raises a little from frame to frame so the
# clip is not static.
_DEMO_POSE_PX = {
    "nose": (320, 96), "left_eye_inner": (336, 78), "left_eye": (352, 78),
    "left_eye_outer": (368, 78), "right_eye_inner": (304, 78), "right_eye": (288, 78),
    "right_eye_outer": (272, 78), "left_ear": (384, 96), "right_ear": (256, 96),
    "mouth_left": (336, 114), "mouth_right": (304, 114),
    "left_shoulder": (375, 180), "right_shoulder": (265, 180),
    "left_elbow": (445, 180), "right_elbow": (195, 180),
    "left_wrist": (515, 180), "right_wrist": (125, 180),
    "left_pinky": (540, 168), "right_pinky": (100, 168),
    "left_index": (548, 180), "right_index": (92, 180),
    "left_thumb": (540, 192), "right_thumb": (100, 192),
    "left_hip": (375, 300), "right_hip": (265, 300),
    "left_knee": (375, 380), "right_knee": (265, 380),
    "left_ankle": (375, 455), "right_ankle": (265, 455),
    "left_heel": (380, 470), "right_heel": (260, 470),
    "left_foot_index": (405, 470), "right_foot_index": (235, 470),
}


def demo_frame(t: int, n_frames: int, frame_size: tuple[int, int]) -> np.ndarray:
    """Landmark frame t of the demo clip: a standing figure raising one arm."""
    from . import LANDMARK_NAMES

    w, h = frame_size
    out = np.zeros((N_LANDMARKS, 4), dtype=np.float64)
    lift = 60.0 * t / max(n_frames - 1, 1)
    for idx, name in enumerate(LANDMARK_NAMES):
        u, v = _DEMO_POSE_PX[name]
        if name in ("right_elbow", "right_wrist", "right_pinky", "right_index", "right_thumb"):
            v = v - lift
        out[idx] = (u / w, v / h, 0.0, 1.0)
    return out


def write_demo_clip(out_dir: str | Path, n_frames: int = 10,
                    frame_size: tuple[int, int] = (640, 480)) -> list[Path]:
    """Write the demo clip as frame_%06d.ppm files; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(n_frames):
        image = render_landmarks(demo_frame(t, n_frames, frame_size), frame_size)
        path = out_dir / f"frame_{t:06d}.ppm"
        write_ppm(image, path)
        paths.append(path)
    return paths
