import numpy as np
import pytest

from kinescore.core import validate_sample
from kinescore.synth import SyntheticMotionSpec, synth_generate, synthetic_score


def test_score_formula_trivial_cases():
    assert synthetic_score(1.0, 0.0).raw == 50.0
    assert synthetic_score(0.5, 0.0).raw == 25.0
    assert synthetic_score(0.0, 0.0).raw == 0.0
    # quality_raw = 50 * (0.8 - 0.2) = 30
    assert synthetic_score(0.8, 4.0).raw == pytest.approx(30.0)
    # noise penalty caps at 0.5
    assert synthetic_score(1.0, 10.0).raw == 25.0
    assert synthetic_score(1.0, 40.0).raw == 25.0
    # clamp at zero for weak noisy motion
    assert synthetic_score(0.1, 20.0).raw == 0.0


def test_score_monotone_in_amplitude():
    for noise in (0.0, 2.0, 6.0):
        scores = [synthetic_score(a, noise).raw for a in np.linspace(0.0, 1.0, 21)]
        assert all(b >= a for a, b in zip(scores, scores[1:]))


def test_generate_is_pure_in_spec():
    spec = SyntheticMotionSpec(exercise=3, amplitude=0.7, noise_px=2.5, n_frames=40, seed=88)
    a = synth_generate(spec)
    b = synth_generate(spec)
    np.testing.assert_array_equal(a.sequence.frames, b.sequence.frames)
    assert a.sample_id == b.sample_id
    assert a.score.raw == b.score.raw


def test_different_seeds_differ():
    base = dict(exercise=1, amplitude=0.7, noise_px=2.0, n_frames=30)
    a = synth_generate(SyntheticMotionSpec(seed=1, **base))
    b = synth_generate(SyntheticMotionSpec(seed=2, **base))
    assert not np.array_equal(a.sequence.frames, b.sequence.frames)


@pytest.mark.parametrize("exercise", [1, 2, 3, 4, 5])
def test_all_exercises_generate_valid_samples(exercise):
    spec = SyntheticMotionSpec(exercise=exercise, amplitude=0.9, noise_px=3.0,
                               n_frames=50, seed=exercise)
    sample = synth_generate(spec)
    assert validate_sample(sample) == []
    assert sample.exercise == exercise
    assert len(sample.sequence) == 50
    frames = sample.sequence.frames
    assert frames[:, :, 0].min() >= 0.0 and frames[:, :, 0].max() <= 1.0
    assert frames[:, :, 1].min() >= 0.0 and frames[:, :, 1].max() <= 1.0
    assert (frames[:, :, 3] == 1.0).all()


def test_amplitude_zero_is_static_without_noise():
    spec = SyntheticMotionSpec(exercise=1, amplitude=0.0, noise_px=0.0, n_frames=10, seed=0)
    frames = synth_generate(spec).sequence.frames
    np.testing.assert_array_equal(frames, np.broadcast_to(frames[0], frames.shape))


def test_motion_amplitude_scales_displacement():
    small = synth_generate(SyntheticMotionSpec(exercise=1, amplitude=0.2, n_frames=60, seed=5))
    large = synth_generate(SyntheticMotionSpec(exercise=1, amplitude=1.0, n_frames=60, seed=5))

    def wrist_travel(sample):
        ys = sample.sequence.frames[:, 15, 1]  # left wrist vertical track
        return ys.max() - ys.min()

    assert wrist_travel(large) > 2 * wrist_travel(small)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticMotionSpec(exercise=6, amplitude=0.5)
    with pytest.raises(ValueError):
        SyntheticMotionSpec(exercise=1, amplitude=1.5)
    with pytest.raises(ValueError):
        SyntheticMotionSpec(exercise=1, amplitude=0.5, n_frames=1)
    with pytest.raises(ValueError):
        SyntheticMotionSpec(exercise=1, amplitude=0.5, noise_px=-1.0)


def test_default_ids_are_stable():
    spec = SyntheticMotionSpec(exercise=2, amplitude=0.4, seed=12)
    sample = synth_generate(spec)
    assert sample.sample_id == "synth-e2-s12"
    assert sample.subject_id == "subj-12"
    named = synth_generate(spec, sample_id="abc", subject_id="who")
    assert named.sample_id == "abc"
    assert named.subject_id == "who"
