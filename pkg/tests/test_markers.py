import numpy as np
import pytest

from kinescore.core import LANDMARK_NAMES
from kinescore.markers import (
    MARKER_PALETTE,
    MATCH_DISTANCE,
    detect_markers,
    read_ppm,
    render_markers,
    write_ppm,
)

from conftest import FRAME_SIZE, separated_random_frame, tpose_frame


def test_palette_shape_and_separation():
    palette = np.asarray(MARKER_PALETTE, dtype=np.float64)
    assert palette.shape == (33, 3)
    diffs = palette[:, None, :] - palette[None, :, :]
    dist = np.sqrt((diffs ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    # colors are mutually farther apart than the match radius, and bright
    # enough that any blend with black stays closest to its own color
    assert dist.min() > MATCH_DISTANCE
    norms = np.sqrt((palette ** 2).sum(axis=1))
    assert norms.min() > 3 * MATCH_DISTANCE


def test_palette_blend_with_black_never_crosses_over():
    """Bilinear interpolation against the black background scales a color
    toward zero. No scaled color may be classified as a different landmark."""
    palette = np.asarray(MARKER_PALETTE, dtype=np.float64)
    for s in np.linspace(0.0, 1.0, 201):
        blended = s * palette  # (33, 3)
        diffs = blended[:, None, :] - palette[None, :, :]
        dist = np.sqrt((diffs ** 2).sum(axis=2))  # blend i vs palette j
        within = dist <= MATCH_DISTANCE
        own = dist[np.arange(33), np.arange(33)]
        for i in range(33):
            for j in range(33):
                if i != j and within[i, j]:
                    assert own[i] < dist[i, j]


def test_render_single_disc_centered():
    frame = np.zeros((33, 4))
    frame[0] = (0.5, 0.5, 0.0, 1.0)
    img = render_markers(frame, (100, 100))
    assert img.shape == (100, 100, 3)
    assert tuple(img[50, 50]) == tuple(MARKER_PALETTE[0])
    assert img[0, 0].tolist() == [0, 0, 0]


def test_render_clips_at_corner():
    frame = np.zeros((33, 4))
    frame[7] = (0.0, 0.0, 0.0, 1.0)
    img = render_markers(frame, (100, 100))
    assert tuple(img[0, 0]) == tuple(MARKER_PALETTE[7])
    # quarter disc: nothing negative to draw, no wraparound to far edge
    assert img[99, 99].tolist() == [0, 0, 0]


def test_render_skips_invisible():
    frame = np.zeros((33, 4))
    frame[3] = (0.5, 0.5, 0.0, 0.0)
    img = render_markers(frame, (64, 64))
    assert img.sum() == 0


def test_overlap_resolved_by_index_priority():
    frame = np.zeros((33, 4))
    frame[10] = (0.5, 0.5, 0.0, 1.0)
    frame[20] = (0.5, 0.5, 0.0, 1.0)  # same spot, higher index wins
    img = render_markers(frame, (100, 100))
    assert tuple(img[50, 50]) == tuple(MARKER_PALETTE[20])


def test_tpose_roundtrip_within_half_pixel():
    frame = tpose_frame()
    w, h = FRAME_SIZE
    detected = detect_markers(render_markers(frame, FRAME_SIZE))
    assert (detected[:, 3] == 1.0).all()
    err = np.hypot((detected[:, 0] - frame[:, 0]) * w, (detected[:, 1] - frame[:, 1]) * h)
    assert err.max() <= 0.5


def test_random_roundtrip_within_half_pixel():
    rng = np.random.default_rng(101)
    w, h = FRAME_SIZE
    worst = 0.0
    for _ in range(100):
        frame = separated_random_frame(rng, margin=8.0)
        detected = detect_markers(render_markers(frame, FRAME_SIZE))
        assert (detected[:, 3] == 1.0).all()
        err = np.hypot((detected[:, 0] - frame[:, 0]) * w, (detected[:, 1] - frame[:, 1]) * h)
        worst = max(worst, err.max())
    assert worst <= 0.5


def test_all_black_image_all_invisible():
    detected = detect_markers(np.zeros((120, 160, 3), dtype=np.uint8))
    assert (detected[:, 3] == 0.0).all()
    assert (detected[:, :2] == 0.0).all()


def test_missing_marker_gets_zero_visibility():
    frame = tpose_frame()
    nose = LANDMARK_NAMES.index("nose")
    frame[nose, 3] = 0.0  # not rendered
    detected = detect_markers(render_markers(frame, FRAME_SIZE))
    assert detected[nose, 3] == 0.0
    others = [i for i in range(33) if i != nose]
    assert (detected[others, 3] == 1.0).all()


def test_ppm_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    img = rng.integers(0, 256, size=(33, 47, 3), dtype=np.uint8)
    path = tmp_path / "frame_000000.ppm"
    write_ppm(img, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P6")
    np.testing.assert_array_equal(read_ppm(path), img)


def test_ppm_reader_tolerates_comments(tmp_path):
    img = np.full((2, 3, 3), 7, dtype=np.uint8)
    path = tmp_path / "c.ppm"
    body = img.tobytes()
    path.write_bytes(b"P6\n# a comment\n3 2\n# another\n255\n" + body)
    np.testing.assert_array_equal(read_ppm(path), img)


def test_ppm_rejects_wrong_magic(tmp_path):
    path = tmp_path / "x.ppm"
    path.write_bytes(b"P5\n3 2\n255\n" + bytes(6))
    with pytest.raises(ValueError):
        read_ppm(path)
