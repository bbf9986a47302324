"""Synthetic marker frames: render landmarks as colored discs, detect them back.

Each of the 33 landmarks owns a fixed RGB color. Rendering paints a filled
disc of radius 3 px per landmark on black; detection classifies non-black
pixels by nearest palette color (within a fixed distance budget) and takes
an intensity-weighted centroid per color. The palette was chosen so that
bilinear resampling against the black background can never turn one
marker's pixels into a match for another marker: for every ordered color
pair (C, C') and every blend factor s in [0, 1], s*C stays either outside
the match budget of C' or closer to C than to C'.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import N_LANDMARKS, _TOPOLOGY_DOC

MARKER_PALETTE = np.array(_TOPOLOGY_DOC["marker_palette"], dtype=np.uint8)
MARKER_RADIUS_PX = 3.0
MATCH_DISTANCE = 60.0  # max RGB distance for a pixel to count as a marker
MIN_PIXELS = 3  # discs smaller than this (clipped at borders) are not visible


def render_markers(frame: np.ndarray, frame_size: tuple[int, int]) -> np.ndarray:
    """Draw one disc per landmark on a black (H, W, 3) uint8 canvas.

    Disc i is centered at (x*W, y*H) in pixel coordinates and drawn in
    landmark order, so a higher index wins where discs overlap. Landmarks
    with visibility 0 are skipped.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (N_LANDMARKS, 4):
        raise ValueError(f"expected frame shape ({N_LANDMARKS}, 4), got {frame.shape}")
    w, h = int(frame_size[0]), int(frame_size[1])
    image = np.zeros((h, w, 3), dtype=np.uint8)
    r = MARKER_RADIUS_PX
    for idx in range(N_LANDMARKS):
        x, y, _, vis = frame[idx]
        if vis <= 0.0:
            continue
        u, v = x * w, y * h
        c0 = max(int(np.ceil(u - r)), 0)
        c1 = min(int(np.floor(u + r)), w - 1)
        r0 = max(int(np.ceil(v - r)), 0)
        r1 = min(int(np.floor(v + r)), h - 1)
        if c0 > c1 or r0 > r1:
            continue
        cols = np.arange(c0, c1 + 1)
        rows = np.arange(r0, r1 + 1)
        inside = (cols[None, :] - u) ** 2 + (rows[:, None] - v) ** 2 <= r * r
        image[r0 : r1 + 1, c0 : c1 + 1][inside] = MARKER_PALETTE[idx]
    return image


def detect_markers(image: np.ndarray) -> np.ndarray:
    """Recover a (33, 4) landmark frame from a rendered marker image.

    Pixels are assigned to the nearest palette color when within the match
    budget; each landmark becomes the intensity-weighted centroid of its
    pixels, normalized back to [0, 1]. Landmarks with fewer than three
    matched pixels get visibility 0 (and zeroed coordinates). z is 0.
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
    palette = MARKER_PALETTE.astype(np.float64)
    d2 = ((pixels[:, None, :] - palette[None, :, :]) ** 2).sum(axis=2)
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
        u = (cols[sel] * wsel).sum() / total
        v = (rows[sel] * wsel).sum() / total
        out[idx] = (u / w, v / h, 0.0, 1.0)
    return out


def write_ppm(image: np.ndarray, path: str | Path) -> None:
    """Write an (H, W, 3) uint8 image as binary PPM (P6, maxval 255)."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {image.shape}")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary PPM (P6, maxval 255) into an (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {fields[0]!r})")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=h * w * 3, offset=pos)
    if pixels.size != h * w * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(h, w, 3).copy()
