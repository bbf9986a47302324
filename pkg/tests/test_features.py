import numpy as np
import pytest

from kinescore.augment import AugmentationOp, get_preset, transform_joints_sequence
from kinescore.core import LANDMARK_NAMES, LandmarkSequence, TORSO_LIMB_INDICES
from kinescore.features import (
    DegenerateGeometryError,
    FEATURE_REGISTRY,
    FeatureExtractionError,
    FeatureSpec,
    describe_registry,
    extract_features,
    joint_angle,
    preprocess_sequence,
)
from kinescore.synth import SyntheticMotionSpec, synth_generate

from conftest import FRAME_SIZE, make_sample, tpose_frame, tpose_sample


def _name_index(names, name):
    return list(names).index(name)


def test_joint_angle_basic_cases():
    assert joint_angle((0, 1), (0, 0), (1, 0)) == pytest.approx(90.0, abs=1e-12)
    assert joint_angle((0, 1), (0, 0), (0, -1)) == pytest.approx(180.0, abs=1e-12)
    assert joint_angle((1, 0), (0, 0), (1, 1)) == pytest.approx(45.0, abs=1e-12)


def test_joint_angle_degenerate_segment():
    with pytest.raises(DegenerateGeometryError):
        joint_angle((0, 0), (0, 0), (1, 0))
    with pytest.raises(DegenerateGeometryError):
        joint_angle((1, 0), (0, 0), (5e-7, 5e-7))


def test_joint_angle_rotation_and_flip_invariant():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b, c = rng.normal(size=(3, 2)) * 10
        base = joint_angle(a, b, c)
        theta = rng.uniform(-np.pi, np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        center = rng.normal(size=2)
        ar, br, cr = [(p - center) @ rot.T + center for p in (a, b, c)]
        assert joint_angle(ar, br, cr) == pytest.approx(base, abs=1e-9)
        flip = np.array([-1.0, 1.0])
        assert joint_angle(a * flip, b * flip, c * flip) == pytest.approx(base, abs=1e-9)


def test_registry_dims():
    dims = {ex: len(defs) for ex, defs in FEATURE_REGISTRY.items()}
    assert dims == {1: 6, 2: 4, 3: 4, 4: 3, 5: 4}
    for ex in range(1, 6):
        assert FeatureSpec.for_exercise(ex).dim == dims[ex]


def test_feature_spec_unknown_exercise():
    with pytest.raises(FeatureExtractionError):
        FeatureSpec.for_exercise(9)


def test_tpose_exercise1_pinned_values():
    fs = extract_features(tpose_sample(exercise=1))
    names = fs.spec.feature_names
    row = fs.vectors[0]
    assert np.allclose(fs.vectors, row)  # static pose, constant features
    assert row[_name_index(names, "elbow_angle_left")] == pytest.approx(180.0, abs=1e-9)
    assert row[_name_index(names, "elbow_angle_right")] == pytest.approx(180.0, abs=1e-9)
    assert row[_name_index(names, "shoulder_abduction_left")] == pytest.approx(90.0, abs=1e-9)
    assert row[_name_index(names, "shoulder_abduction_right")] == pytest.approx(90.0, abs=1e-9)
    # wrists at u=515 and 125, torso 120 px: 390/120
    assert row[_name_index(names, "wrist_distance")] == pytest.approx(3.25, abs=1e-9)
    assert row[_name_index(names, "wrist_height")] == pytest.approx(0.0, abs=1e-9)


def test_tpose_exercise2_pinned_values():
    fs = extract_features(tpose_sample(exercise=2))
    names = fs.spec.feature_names
    row = fs.vectors[0]
    assert row[_name_index(names, "trunk_tilt")] == pytest.approx(0.0, abs=1e-9)
    assert row[_name_index(names, "shoulder_line_angle")] == pytest.approx(0.0, abs=1e-9)
    assert row[_name_index(names, "elbow_angle_left")] == pytest.approx(180.0, abs=1e-9)


def test_tpose_exercise3_to_5_pinned_values():
    fs3 = extract_features(tpose_sample(exercise=3))
    n3 = fs3.spec.feature_names
    assert fs3.vectors[0][_name_index(n3, "shoulder_width_ratio")] == pytest.approx(110 / 120, abs=1e-9)
    assert fs3.vectors[0][_name_index(n3, "hip_width_ratio")] == pytest.approx(110 / 120, abs=1e-9)
    assert fs3.vectors[0][_name_index(n3, "shoulder_hip_offset")] == pytest.approx(0.0, abs=1e-9)

    fs4 = extract_features(tpose_sample(exercise=4))
    n4 = fs4.spec.feature_names
    assert fs4.vectors[0][_name_index(n4, "hip_sway")] == pytest.approx(0.0, abs=1e-9)

    fs5 = extract_features(tpose_sample(exercise=5))
    n5 = fs5.spec.feature_names
    assert fs5.vectors[0][_name_index(n5, "knee_angle_left")] == pytest.approx(180.0, abs=1e-9)
    assert fs5.vectors[0][_name_index(n5, "knee_angle_right")] == pytest.approx(180.0, abs=1e-9)
    assert fs5.vectors[0][_name_index(n5, "hip_height_ratio")] == pytest.approx(1.0, abs=1e-9)
    assert fs5.vectors[0][_name_index(n5, "trunk_inclination")] == pytest.approx(0.0, abs=1e-9)


def test_trunk_tilt_tracks_rotation_exactly():
    sample = tpose_sample(exercise=2)
    rotated = transform_joints_sequence(sample.sequence, AugmentationOp.rotate(1))
    fs = extract_features(make_sample(rotated.frames, exercise=2))
    tilt = fs.vectors[0][_name_index(fs.spec.feature_names, "trunk_tilt")]
    assert tilt == pytest.approx(1.0, abs=1e-9)


def test_flip_exchanges_left_right_channels():
    # bend the left arm so left and right differ, then flip
    frame = tpose_frame()
    lw = LANDMARK_NAMES.index("left_wrist")
    frame[lw, 0] = 445 / 640  # wrist above the elbow: left elbow now 90 deg
    frame[lw, 1] = 110 / 480
    sample = make_sample(np.stack([frame] * 3), exercise=1)
    flipped = make_sample(
        transform_joints_sequence(sample.sequence, AugmentationOp.hflip()).frames,
        exercise=1,
    )
    a = extract_features(sample)
    b = extract_features(flipped)
    names = a.spec.feature_names
    for left, right in (
        ("elbow_angle_left", "elbow_angle_right"),
        ("shoulder_abduction_left", "shoulder_abduction_right"),
    ):
        li, ri = _name_index(names, left), _name_index(names, right)
        assert b.vectors[0][li] == pytest.approx(a.vectors[0][ri], abs=1e-9)
        assert b.vectors[0][ri] == pytest.approx(a.vectors[0][li], abs=1e-9)
    # symmetric aggregates unchanged
    for agg in ("wrist_distance", "wrist_height"):
        i = _name_index(names, agg)
        assert b.vectors[0][i] == pytest.approx(a.vectors[0][i], abs=1e-9)


def test_rigid_features_invariant_under_small_rotation():
    sample = synth_generate(SyntheticMotionSpec(exercise=1, amplitude=0.8, n_frames=30, seed=6))
    variant = augmented = transform_joints_sequence(sample.sequence, AugmentationOp.rotate(1))
    a = extract_features(sample)
    b = extract_features(make_sample(variant.frames, exercise=1))
    names = a.spec.feature_names
    rigid = ("elbow_angle_left", "elbow_angle_right", "shoulder_abduction_left",
             "shoulder_abduction_right", "wrist_distance")
    for name in rigid:
        i = _name_index(names, name)
        np.testing.assert_allclose(b.vectors[:, i], a.vectors[:, i], atol=1e-9)
    # the y-projection feature moves with orientation, but only by O(theta)
    i = _name_index(names, "wrist_height")
    assert np.abs(b.vectors[:, i] - a.vectors[:, i]).max() < 0.08


def test_amplitude_orders_mean_wrist_height():
    lo = synth_generate(SyntheticMotionSpec(exercise=1, amplitude=0.3, n_frames=60, seed=9))
    hi = synth_generate(SyntheticMotionSpec(exercise=1, amplitude=1.0, n_frames=60, seed=9))
    names = FeatureSpec.for_exercise(1).feature_names
    i = _name_index(names, "wrist_height")
    mean_lo = extract_features(lo).vectors[:, i].mean()
    mean_hi = extract_features(hi).vectors[:, i].mean()
    assert mean_hi > mean_lo


@pytest.mark.parametrize("exercise", [1, 2, 3, 4, 5])
def test_feature_matrix_shape_and_finiteness(exercise):
    sample = synth_generate(SyntheticMotionSpec(
        exercise=exercise, amplitude=0.7, noise_px=3.0, n_frames=45, seed=20 + exercise))
    fs = extract_features(sample)
    assert fs.vectors.shape == (45, FeatureSpec.for_exercise(exercise).dim)
    assert np.isfinite(fs.vectors).all()


def test_preprocess_noop_for_clean_sequence():
    sample = tpose_sample(n_frames=100)
    out = preprocess_sequence(sample.sequence)
    np.testing.assert_array_equal(out.frames, sample.sequence.frames)


def test_preprocess_strides_long_sequences():
    rng = np.random.default_rng(0)
    frames = np.stack([tpose_frame()] * 900)
    frames[:, :, :2] += rng.normal(0, 1e-4, size=(900, 33, 2))
    seq = LandmarkSequence(frames=frames, fps=30.0, frame_size=FRAME_SIZE)
    out = preprocess_sequence(seq)
    assert len(out) == 300
    np.testing.assert_array_equal(out.frames, frames[::3])
    # 301 frames also exceeds the cap: stride 2 keeps 151
    seq2 = LandmarkSequence(frames=frames[:301], fps=30.0, frame_size=FRAME_SIZE)
    assert len(preprocess_sequence(seq2)) == 151


def test_preprocess_interpolates_midpoint():
    frames = np.stack([tpose_frame()] * 10)
    lw = LANDMARK_NAMES.index("left_wrist")
    frames[4, lw, 0] = 0.60
    frames[6, lw, 0] = 0.70
    frames[5, lw, 0] = 0.99  # bogus coordinate that must be replaced
    frames[5, lw, 3] = 0.2
    out = preprocess_sequence(LandmarkSequence(frames=frames, fps=30.0, frame_size=FRAME_SIZE))
    assert out.frames[5, lw, 0] == pytest.approx(0.65, abs=1e-12)
    assert len(out) == 10


def test_preprocess_holds_edges():
    frames = np.stack([tpose_frame()] * 6)
    nose = LANDMARK_NAMES.index("nose")
    frames[2:, nose, 1] = 0.3
    frames[0, nose, 3] = 0.0
    frames[1, nose, 3] = 0.0
    frames[0, nose, 1] = 0.9
    frames[1, nose, 1] = 0.9
    out = preprocess_sequence(LandmarkSequence(frames=frames, fps=30.0, frame_size=FRAME_SIZE))
    assert out.frames[0, nose, 1] == pytest.approx(0.3)
    assert out.frames[1, nose, 1] == pytest.approx(0.3)


def test_preprocess_drops_mostly_invisible_frames():
    frames = np.stack([tpose_frame()] * 8)
    limb = list(TORSO_LIMB_INDICES)
    assert len(limb) == 12
    frames[3, limb[:7], 3] = 0.1  # 7 of 12 invisible: drop
    frames[5, limb[:6], 3] = 0.1  # exactly half invisible: keep
    out = preprocess_sequence(LandmarkSequence(frames=frames, fps=30.0, frame_size=FRAME_SIZE))
    assert len(out) == 7


def test_preprocess_error_when_nothing_survives():
    frames = np.stack([tpose_frame()] * 4)
    frames[:, :, 3] = 0.0
    with pytest.raises(FeatureExtractionError):
        preprocess_sequence(LandmarkSequence(frames=frames, fps=30.0, frame_size=FRAME_SIZE))


def test_degenerate_frame_holds_previous_value():
    frames = np.stack([tpose_frame()] * 4)
    ls = LANDMARK_NAMES.index("left_shoulder")
    le = LANDMARK_NAMES.index("left_elbow")
    frames[2, le, :2] = frames[2, ls, :2]  # elbow collapses onto shoulder
    fs = extract_features(make_sample(frames, exercise=1))
    names = fs.spec.feature_names
    i = _name_index(names, "elbow_angle_left")
    assert fs.vectors[2, i] == fs.vectors[1, i]
    j = _name_index(names, "wrist_distance")
    assert fs.vectors[2, j] == pytest.approx(3.25, abs=1e-9)  # unaffected entry computed normally


def test_degenerate_leading_frames_skipped():
    frames = np.stack([tpose_frame()] * 5)
    ls = LANDMARK_NAMES.index("left_shoulder")
    le = LANDMARK_NAMES.index("left_elbow")
    frames[0, le, :2] = frames[0, ls, :2]
    fs = extract_features(make_sample(frames, exercise=1))
    assert fs.vectors.shape[0] == 4


def test_describe_registry_lists_everything():
    text = describe_registry()
    assert text.splitlines()[0].split() == ["exercise", "feature", "formula", "landmarks"]
    for defs in FEATURE_REGISTRY.values():
        for d in defs:
            assert d.name in text
            assert d.formula in text
