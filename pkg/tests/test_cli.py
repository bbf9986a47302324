import filecmp
import json
import subprocess
import sys

import pytest

from kinescore import FORMAT_VERSIONS, __version__
from kinescore.cli import OUT_ROOT_ENV, main
from kinescore.core import load_manifest
from kinescore.kpseq import load_keypoints

FAST_CV = ["--epochs", "6", "--hidden", "4", "--layers", "2", "--seed", "0"]


def run_cli(*args):
    return main(list(args))


def test_version_json(capsys):
    assert run_cli("--version") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kinescore"] == __version__
    assert doc["formats"] == FORMAT_VERSIONS
    assert "kp-seq" in doc["formats"]


def test_no_command_is_usage_error(capsys):
    assert run_cli() == 2
    assert run_cli("frobnicate") == 2
    err = capsys.readouterr().err
    assert "frobnicate" in err


def test_missing_required_flag(capsys):
    assert run_cli("synth") == 2
    assert "--out-dir" in capsys.readouterr().err


def test_synth_writes_dataset(tmp_path, capsys):
    out = tmp_path / "data"
    code = run_cli("synth", "--exercise", "2", "--count", "6", "--frames", "30",
                   "--seed", "5", "--out-dir", str(out))
    assert code == 0
    assert f"wrote 6 samples to {out}" in capsys.readouterr().out
    manifest = load_manifest(out / "manifest.csv")
    assert len(manifest) == 6
    assert all(e.exercise == 2 and e.is_original for e in manifest.entries)
    files = sorted((out / "keypoints").glob("*.kpseq.json"))
    assert len(files) == 6
    sample = load_keypoints(files[0])
    assert len(sample.sequence) == 30


def test_synth_deterministic(tmp_path):
    for name in ("one", "two"):
        run_cli("synth", "--count", "4", "--frames", "20", "--seed", "9",
                "--out-dir", str(tmp_path / name))
    match, mismatch, errors = filecmp.cmpfiles(
        tmp_path / "one", tmp_path / "two", ["manifest.csv"], shallow=False)
    assert match == ["manifest.csv"] and not mismatch and not errors
    for f in sorted((tmp_path / "one" / "keypoints").iterdir()):
        twin = tmp_path / "two" / "keypoints" / f.name
        assert twin.read_bytes() == f.read_bytes()


def test_synth_amplitude_range_spreads_scores(tmp_path):
    out = tmp_path / "spread"
    assert run_cli("synth", "--count", "8", "--frames", "30", "--amplitude-range", "0.2:1.0",
                   "--noise-px", "0", "--out-dir", str(out)) == 0
    scores = [e.score_raw for e in load_manifest(out / "manifest.csv").entries]
    assert max(scores) - min(scores) >= 30.0


def test_synth_bad_amplitude_range(tmp_path, capsys):
    assert run_cli("synth", "--amplitude-range", "1.0:0.2", "--out-dir", str(tmp_path / "x")) == 2
    assert run_cli("synth", "--amplitude-range", "0.5", "--out-dir", str(tmp_path / "y")) == 2
    assert "amplitude" in capsys.readouterr().err


@pytest.fixture()
def small_dataset(tmp_path):
    out = tmp_path / "data"
    run_cli("synth", "--exercise", "1", "--count", "5", "--frames", "30",
            "--noise-px", "2", "--seed", "3", "--out-dir", str(out))
    return out


def test_augment_preset_counts(small_dataset, tmp_path, capsys):
    out = tmp_path / "aug"
    code = run_cli("augment", "--manifest", str(small_dataset / "manifest.csv"),
                   "--preset", "a1", "--out-dir", str(out))
    assert code == 0
    assert "wrote 15 augmented samples (a1)" in capsys.readouterr().out
    manifest = load_manifest(out / "manifest.csv")
    assert len(manifest) == 20  # originals re-emitted alongside the variants
    assert len(manifest.originals()) == 5
    new = [e for e in manifest.entries if not e.is_original]
    assert len(new) == 15
    ops = {e.op for e in new}
    assert ops == {"hflip", "rot-1", "rot+1"}
    for e in manifest.entries:
        assert manifest.resolve(e).exists()


def test_augment_custom_ops(small_dataset, tmp_path, capsys):
    out = tmp_path / "aug"
    assert run_cli("augment", "--manifest", str(small_dataset / "manifest.csv"),
                   "--ops", "hflip,rot-2", "--out-dir", str(out)) == 0
    assert "wrote 10 augmented samples (custom)" in capsys.readouterr().out
    manifest = load_manifest(out / "manifest.csv")
    assert {e.op for e in manifest.entries if not e.is_original} == {"hflip", "rot-2"}


def test_augment_image_space_needs_pose_cmd(small_dataset, tmp_path, capsys):
    code = run_cli("augment", "--manifest", str(small_dataset / "manifest.csv"),
                   "--preset", "a1", "--space", "image", "--out-dir", str(tmp_path / "aug"))
    assert code == 2
    assert "--pose-cmd" in capsys.readouterr().err


def test_augment_requires_some_ops(small_dataset, tmp_path, capsys):
    code = run_cli("augment", "--manifest", str(small_dataset / "manifest.csv"),
                   "--out-dir", str(tmp_path / "aug"))
    assert code == 2


def test_unknown_preset_lists_choices(small_dataset, tmp_path, capsys):
    code = run_cli("cv", "--manifest", str(small_dataset / "manifest.csv"),
                   "--preset", "a9", "--out-dir", str(tmp_path / "cv"))
    assert code == 2
    err = capsys.readouterr().err
    assert "a1" in err and "a7" in err


def test_features_describe(capsys):
    assert run_cli("features", "--describe") == 0
    out = capsys.readouterr().out
    assert "elbow_angle_left" in out
    assert "hip_height_ratio" in out


def test_features_needs_inputs(capsys):
    assert run_cli("features") == 2
    assert "--describe" in capsys.readouterr().err


def test_features_writes_csvs(small_dataset, tmp_path, capsys):
    out = tmp_path / "feat"
    assert run_cli("features", "--manifest", str(small_dataset / "manifest.csv"),
                   "--exercise", "1", "--out-dir", str(out)) == 0
    files = sorted(out.glob("*.features.csv"))
    assert len(files) == 5
    header = files[0].read_text().splitlines()[0].split(",")
    assert header[:2] == ["elbow_angle_left", "elbow_angle_right"]
    assert len(files[0].read_text().splitlines()) == 1 + 30


def test_cv_writes_reports(synth_manifest_dir, tmp_path, capsys):
    out = tmp_path / "cv"
    code = run_cli("cv", "--manifest", str(synth_manifest_dir / "manifest.csv"),
                   "--exercise", "1", "--out-dir", str(out), *FAST_CV)
    assert code == 0
    stdout = capsys.readouterr().out.strip().splitlines()
    assert stdout[-1].startswith("spearman none ")
    float(stdout[-1].split()[-1])
    for name in ("cv_predictions.csv", "cv_summary.csv", "scatter_none.svg", "scatter_none.csv"):
        assert (out / name).exists()


def test_cv_runs_are_byte_identical(synth_manifest_dir, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli("cv", "--manifest", str(synth_manifest_dir / "manifest.csv"),
                       "--out-dir", str(out), *FAST_CV) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    assert not mismatch and not errors


def test_cv_rejects_augmented_manifest(small_dataset, tmp_path, capsys):
    aug = tmp_path / "aug"
    run_cli("augment", "--manifest", str(small_dataset / "manifest.csv"),
            "--preset", "a1", "--out-dir", str(aug))
    code = run_cli("cv", "--manifest", str(aug / "manifest.csv"),
                   "--out-dir", str(tmp_path / "cv"), *FAST_CV)
    assert code == 1
    assert "augmented" in capsys.readouterr().err


def test_train_writes_artifacts(small_dataset, tmp_path, capsys):
    out = tmp_path / "model"
    code = run_cli("train", "--manifest", str(small_dataset / "manifest.csv"),
                   "--exercise", "1", "--preset", "a1", "--epochs", "4",
                   "--hidden", "4", "--layers", "2", "--out-dir", str(out))
    assert code == 0
    assert "trained on 20 sequences" in capsys.readouterr().out  # 5 originals x (1 + 3 variants)
    assert (out / "model.ckpt").exists()
    loss_lines = (out / "loss_history.csv").read_text().splitlines()
    assert loss_lines[0] == "epoch,mean_mae"
    assert len(loss_lines) == 1 + 4
    scaler_lines = (out / "input_scaler.csv").read_text().splitlines()
    assert scaler_lines[0] == "feature,mean,std"
    assert len(scaler_lines) == 1 + 6


def test_plot_reproduces_cv_scatter(synth_manifest_dir, tmp_path):
    out = tmp_path / "cv"
    run_cli("cv", "--manifest", str(synth_manifest_dir / "manifest.csv"),
            "--out-dir", str(out), *FAST_CV)
    redrawn = tmp_path / "again.svg"
    assert run_cli("plot", "--predictions", str(out / "cv_predictions.csv"),
                   "--out", str(redrawn)) == 0
    assert redrawn.read_bytes() == (out / "scatter_none.svg").read_bytes()


def test_validate_accepts_good_and_flags_bad(small_dataset, tmp_path, capsys):
    files = sorted((small_dataset / "keypoints").glob("*.kpseq.json"))
    assert run_cli("validate", "--keypoints", str(files[0])) == 0
    assert capsys.readouterr().out.strip().endswith("ok")

    bad = tmp_path / "bad.kpseq.json"
    doc = json.loads(files[0].read_text())
    doc["frames"][0][4][0] = None
    bad.write_text(json.dumps(doc))
    assert run_cli("validate", "--keypoints", str(bad)) == 1
    assert run_cli("validate", "--manifest", str(small_dataset / "manifest.csv")) == 0
    assert run_cli("validate") == 2


def test_config_file_overlay(small_dataset, tmp_path):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        "# training profile\n"
        "manifest = {m}\n"
        "exercise = 1\n"
        "epochs = 3\n"
        "hidden = 4\n"
        "layers = 2\n".format(m=small_dataset / "manifest.csv")
    )
    out1 = tmp_path / "m1"
    assert run_cli("train", "--config", str(cfg), "--out-dir", str(out1)) == 0
    assert len((out1 / "loss_history.csv").read_text().splitlines()) == 1 + 3
    # a flag on the command line beats the same key in the file
    out2 = tmp_path / "m2"
    assert run_cli("train", "--config", str(cfg), "--epochs", "5", "--out-dir", str(out2)) == 0
    assert len((out2 / "loss_history.csv").read_text().splitlines()) == 1 + 5


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epoochs = 3\n")
    assert run_cli("train", "--config", str(cfg), "--manifest", "x", "--out-dir", "y") == 2
    err = capsys.readouterr().err
    assert "epoochs" in err and "bad.cfg" in err


def test_out_root_env_resolves_relative_paths(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUT_ROOT_ENV, str(tmp_path))
    assert run_cli("synth", "--count", "4", "--frames", "20", "--out-dir", "runs/demo") == 0
    assert (tmp_path / "runs" / "demo" / "manifest.csv").exists()


def test_module_entrypoint():
    out = subprocess.run([sys.executable, "-m", "kinescore", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["kinescore"] == __version__


def test_missing_manifest_file_is_runtime_error(tmp_path, capsys):
    code = run_cli("cv", "--manifest", str(tmp_path / "nope.csv"),
                   "--out-dir", str(tmp_path / "cv"))
    assert code == 1
    assert "error" in capsys.readouterr().err
