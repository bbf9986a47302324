"""Command-line interface.

Subcommands cover the whole pipeline: synth (labeled synthetic datasets),
augment (materialized flip/rotate variants), features (extraction and the
registry table), train (fit one model), cv / ablate (cross-validated
evaluation and preset comparison), plot (re-render a scatter from its CSV),
validate (check kp-seq files or manifests).

Every option can also come from a ``--config`` file of ``key = value``
lines; a command-line flag beats the file, which beats the built-in
default. Relative output paths resolve under $KINESCORE_OUT_ROOT when that
is set. Exit codes: 0 success, 1 runtime failure, 2 usage error. All
randomness flows from --seed; nothing reads the clock.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import FORMAT_VERSIONS, __version__
from .augment import (
    AugmentationError,
    AugmentationOp,
    AugmentationPreset,
    CommandPoseBackend,
    MarkerFrameSource,
    MarkerPoseBackend,
    PRESETS,
    augment_sample,
    get_preset,
)
from .core import (
    Manifest,
    ManifestEntry,
    ManifestError,
    load_manifest,
    save_manifest,
    validate_sample,
)
from .evalcv import (
    CvError,
    CvReport,
    emit_scatter,
    make_folds,
    run_ablation,
    run_cv,
    spearman,
    write_ablation_csv,
    write_report_csvs,
    FOLD_STRATEGIES,
)
from .features import (
    FeatureExtractionError,
    FeatureSpec,
    describe_registry,
    extract_features,
)
from .kpseq import KeypointFileError, load_keypoints, save_keypoints
from .lstm import (
    DivergenceError,
    LstmConfig,
    TrainConfig,
    save_checkpoint,
    train,
    write_loss_history,
)
from .synth import SyntheticMotionSpec, synth_generate

OUT_ROOT_ENV = "KINESCORE_OUT_ROOT"


class UsageError(Exception):
    """Bad flags or flag combinations; exits with code 2."""


def _out_path(raw: str) -> Path:
    path = Path(raw)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _parse_amplitude_range(text: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = text.split(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise UsageError(f"--amplitude-range must look like 0.2:1.0, got {text!r}") from None
    if not (0.0 <= lo <= hi <= 1.0):
        raise UsageError(f"amplitude range must satisfy 0 <= lo <= hi <= 1, got {text!r}")
    return lo, hi


def _parse_ops(text: str) -> AugmentationPreset:
    ops = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "hflip":
            ops.append(AugmentationOp.hflip())
        elif token.startswith("rot"):
            try:
                ops.append(AugmentationOp.rotate(float(token[3:])))
            except (ValueError, AugmentationError) as exc:
                raise UsageError(f"bad op {token!r}: {exc}") from None
        else:
            raise UsageError(f"bad op {token!r}: expected 'hflip' or 'rot<degrees>'")
    try:
        return AugmentationPreset(name="custom", ops=tuple(ops))
    except AugmentationError as exc:
        raise UsageError(str(exc)) from None


def _resolve_preset(preset_name: str | None, ops: str | None) -> AugmentationPreset | None:
    """--ops beats --preset; 'none' and no flags both mean no augmentation."""
    if ops:
        return _parse_ops(ops)
    if preset_name is None or preset_name == "none":
        return None
    try:
        return get_preset(preset_name)
    except AugmentationError:
        raise UsageError(
            f"unknown preset {preset_name!r}; valid presets: none, {', '.join(sorted(PRESETS))}"
        ) from None


def _pose_pipeline(space: str, pose_cmd: str | None):
    if space == "image":
        backend = CommandPoseBackend(pose_cmd) if pose_cmd else MarkerPoseBackend()
        return MarkerFrameSource(), backend
    return None, None


def _train_config(ns) -> TrainConfig:
    return TrainConfig(
        epochs=ns.epochs,
        batch_size=ns.batch_size,
        learning_rate=ns.lr,
        seed=ns.seed,
    )


def _model_config(ns, dim: int) -> LstmConfig:
    return LstmConfig(
        input_dim=dim,
        hidden_dim=ns.hidden,
        num_layers=ns.layers,
        dropout_p=ns.dropout,
    )


# ---------------------------------------------------------------- synth

def cmd_synth(ns) -> int:
    lo, hi = _parse_amplitude_range(ns.amplitude_range)
    out_dir = _out_path(ns.out_dir)
    kp_dir = out_dir / "keypoints"
    kp_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for i in range(ns.count):
        amplitude = lo if ns.count == 1 else lo + (hi - lo) * i / (ns.count - 1)
        spec = SyntheticMotionSpec(
            exercise=ns.exercise,
            amplitude=amplitude,
            tempo_hz=ns.tempo_hz,
            noise_px=ns.noise_px,
            n_frames=ns.frames,
            seed=ns.seed + i,
            fps=ns.fps,
        )
        sample = synth_generate(
            spec,
            sample_id=f"synth-e{ns.exercise}-{i:03d}",
            subject_id=f"subj-{i:03d}",
        )
        rel = f"keypoints/{sample.sample_id}.kpseq.json"
        save_keypoints(sample, out_dir / rel)
        entries.append(
            ManifestEntry(
                sample_id=sample.sample_id,
                subject_id=sample.subject_id,
                exercise=sample.exercise,
                keypoints=rel,
                score_raw=sample.score.raw,
                cohort="synthetic",
            )
        )
    manifest = Manifest(entries=tuple(entries), root=out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    print(f"wrote {len(entries)} samples to {out_dir}")
    return 0


# ---------------------------------------------------------------- augment

def cmd_augment(ns) -> int:
    preset = _resolve_preset(ns.preset, ns.ops)
    if preset is None:
        raise UsageError("augment needs --preset a1|a7 or --ops")
    if ns.space == "image" and not ns.pose_cmd:
        raise UsageError("--space image requires --pose-cmd (an extractor command prefix)")
    manifest = load_manifest(ns.manifest)
    out_dir = _out_path(ns.out_dir)
    kp_dir = out_dir / "keypoints"
    kp_dir.mkdir(parents=True, exist_ok=True)
    frame_source, pose_backend = _pose_pipeline(ns.space, ns.pose_cmd)

    entries = []
    n_new = 0
    for entry in manifest.entries:
        sample = load_keypoints(manifest.resolve(entry))
        rel = f"keypoints/{sample.sample_id}.kpseq.json"
        save_keypoints(sample, out_dir / rel)  # re-emit so out-dir is self-contained
        entries.append(dataclasses.replace(entry, keypoints=rel))
        variants = augment_sample(sample, preset, space=ns.space,
                                  frame_source=frame_source, pose_backend=pose_backend)
        for variant in variants:
            vrel = f"keypoints/{variant.sample_id}.kpseq.json"
            save_keypoints(variant, out_dir / vrel)
            entries.append(
                ManifestEntry(
                    sample_id=variant.sample_id,
                    subject_id=variant.subject_id,
                    exercise=variant.exercise,
                    keypoints=vrel,
                    score_raw=variant.score.raw,
                    cohort=entry.cohort,
                    parent_id=variant.provenance.parent_id,
                    op=variant.provenance.op,
                )
            )
            n_new += 1
    save_manifest(Manifest(entries=tuple(entries), root=out_dir), out_dir / "manifest.csv")
    print(f"wrote {n_new} augmented samples ({preset.name}) to {out_dir}")
    return 0


# ---------------------------------------------------------------- features

def cmd_features(ns) -> int:
    if ns.describe:
        print(describe_registry(), end="")
        return 0
    if not ns.manifest or ns.exercise is None or not ns.out_dir:
        raise UsageError("features needs --manifest, --exercise and --out-dir (or --describe)")
    manifest = load_manifest(ns.manifest)
    out_dir = _out_path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = FeatureSpec.for_exercise(ns.exercise)
    count = 0
    for entry in manifest.for_exercise(ns.exercise):
        sample = load_keypoints(manifest.resolve(entry))
        fs = extract_features(sample, spec)
        lines = [",".join(spec.feature_names)]
        lines += [",".join(f"{v:.9f}" for v in row) for row in fs.vectors]
        (out_dir / f"{entry.sample_id}.features.csv").write_text("\n".join(lines) + "\n")
        count += 1
    print(f"wrote features for {count} samples to {out_dir}")
    return 0


# ---------------------------------------------------------------- train

def cmd_train(ns) -> int:
    manifest = load_manifest(ns.manifest)
    preset = _resolve_preset(ns.preset, ns.ops)
    out_dir = _out_path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    from .evalcv import load_samples

    samples = load_samples(manifest, ns.exercise)
    if not samples:
        raise CvError(f"no samples for exercise {ns.exercise}")
    frame_source, pose_backend = _pose_pipeline(ns.space, ns.pose_cmd)
    pool = list(samples)
    if preset is not None:
        for sample in samples:
            if sample.provenance.is_original:
                pool += augment_sample(sample, preset, space=ns.space,
                                       frame_source=frame_source, pose_backend=pose_backend)

    spec = FeatureSpec.for_exercise(ns.exercise)
    feats = [extract_features(s, spec).vectors for s in pool]
    rows = np.concatenate(feats)
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std > 1e-8, std, 1.0)
    dataset = [((f - mean) / std, s.score.normalized) for f, s in zip(feats, pool)]

    config = _model_config(ns, spec.dim)
    params, history = train(dataset, config, _train_config(ns))
    save_checkpoint(params, config, out_dir / "model.ckpt")
    write_loss_history(history, out_dir / "loss_history.csv")
    scaler_lines = ["feature,mean,std"]
    scaler_lines += [
        f"{name},{m:.9f},{s:.9f}" for name, m, s in zip(spec.feature_names, mean, std)
    ]
    (out_dir / "input_scaler.csv").write_text("\n".join(scaler_lines) + "\n")
    print(f"trained on {len(dataset)} sequences; final mean MAE {history[-1]:.6f}")
    return 0


# ---------------------------------------------------------------- cv / ablate

def _cv_setup(ns, manifest: Manifest):
    train_config = _train_config(ns)
    spec = FeatureSpec.for_exercise(ns.exercise)
    model_config = _model_config(ns, spec.dim)
    fold_plan = make_folds(manifest, k=ns.folds, strategy=ns.strategy,
                           seed=ns.seed, exercise=ns.exercise)
    return spec, model_config, train_config, fold_plan


def cmd_cv(ns) -> int:
    manifest = load_manifest(ns.manifest)
    preset = _resolve_preset(ns.preset, ns.ops)
    out_dir = _out_path(ns.out_dir)
    spec, model_config, train_config, fold_plan = _cv_setup(ns, manifest)
    report = run_cv(manifest, ns.exercise, preset=preset, space=ns.space,
                    feature_spec=spec, model_config=model_config, train_config=train_config,
                    fold_plan=fold_plan, pose_cmd=ns.pose_cmd, jobs=ns.jobs)
    write_report_csvs(report, out_dir)
    emit_scatter(report, out_dir / f"scatter_{report.preset_name}.svg")
    print(f"spearman {report.preset_name} {report.pooled_spearman:.6f}")
    return 0


def cmd_ablate(ns) -> int:
    manifest = load_manifest(ns.manifest)
    names = [n.strip() for n in ns.presets.split(",") if n.strip()]
    if not names or len(set(names)) != len(names):
        raise UsageError(f"--presets must be a comma list of distinct names, got {ns.presets!r}")
    presets = {name: _resolve_preset(name, None) for name in names}
    out_dir = _out_path(ns.out_dir)
    spec, model_config, train_config, fold_plan = _cv_setup(ns, manifest)
    result = run_ablation(manifest, ns.exercise, presets, space=ns.space,
                          feature_spec=spec, model_config=model_config,
                          train_config=train_config, fold_plan=fold_plan,
                          pose_cmd=ns.pose_cmd, jobs=ns.jobs)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_ablation_csv(result, out_dir / "ablation.csv")
    for report in result.reports:
        sub = out_dir / report.preset_name
        write_report_csvs(report, sub)
        emit_scatter(report, sub / f"scatter_{report.preset_name}.svg")
    for report in result.reports:
        print(f"spearman {report.preset_name} {report.pooled_spearman:.6f}")
    return 0


# ---------------------------------------------------------------- plot

def cmd_plot(ns) -> int:
    src = Path(ns.predictions)
    fingerprint = ""
    pairs: list[tuple[float, float]] = []
    folds: list[int] = []
    ids: list[str] = []
    with open(src) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                fingerprint = line[1:].strip()
                continue
            if line.startswith("fold,"):
                continue
            fold, sid, target, pred = line.split(",")
            folds.append(int(fold))
            ids.append(sid)
            pairs.append((float(target), float(pred)))
    if len(pairs) < 2:
        raise CvError(f"{src}: not enough prediction rows to plot")
    exercise = 0
    preset_name = "unknown"
    for field in fingerprint.split(";"):
        if field.startswith("exercise="):
            exercise = int(field.split("=", 1)[1])
        elif field.startswith("preset="):
            preset_name = field.split("=", 1)[1]
    from .evalcv import FoldResult

    by_fold: dict[int, list[int]] = {}
    for i, f in enumerate(folds):
        by_fold.setdefault(f, []).append(i)
    fold_results = []
    for f in sorted(by_fold):
        idx = by_fold[f]
        ts = [pairs[i][0] for i in idx]
        ps = [pairs[i][1] for i in idx]
        fold_results.append(FoldResult(
            fold=f,
            sample_ids=tuple(ids[i] for i in idx),
            targets_raw=tuple(ts),
            predictions_raw=tuple(ps),
            spearman=spearman(ts, ps),
        ))
    report = CvReport(
        exercise=exercise,
        preset_name=preset_name,
        folds=tuple(fold_results),
        pooled_spearman=spearman([t for t, _ in pairs], [p for _, p in pairs]),
        fingerprint=fingerprint,
    )
    out = _out_path(ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_scatter(report, out)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------- validate

def cmd_validate(ns) -> int:
    if not ns.keypoints and not ns.manifest:
        raise UsageError("validate needs --keypoints FILE... or --manifest FILE")
    failures = 0

    def check(path, parent=None):
        nonlocal failures
        try:
            sample = load_keypoints(path)
        except KeypointFileError as exc:
            print(f"{path}: {exc}")
            failures += 1
            return None
        violations = validate_sample(sample, parent=parent)
        if violations:
            for v in violations:
                print(f"{path}: {v}")
            failures += 1
        else:
            print(f"{path}: ok")
        return sample

    for path in ns.keypoints or []:
        check(path)
    if ns.manifest:
        manifest = load_manifest(ns.manifest)
        loaded = {}
        for entry in manifest.entries:
            loaded[entry.sample_id] = check(manifest.resolve(entry))
        for entry in manifest.entries:
            if entry.parent_id is not None:
                sample = loaded.get(entry.sample_id)
                parent = loaded.get(entry.parent_id)
                if sample is None or parent is None:
                    continue
                for v in validate_sample(sample, parent=parent):
                    print(f"{entry.sample_id}: {v}")
                    failures += 1
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------- parser

def _add_common_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, help="training epochs (default 300)")
    p.add_argument("--batch-size", type=int, help="sequences per Adam step (default 8)")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 0.01)")
    p.add_argument("--hidden", type=int, help="LSTM units per layer (default 16)")
    p.add_argument("--layers", type=int, help="stacked LSTM layers (default 4)")
    p.add_argument("--dropout", type=float, help="between-layer dropout probability (default 0.17)")


def _add_aug_flags(p: argparse.ArgumentParser, with_none: bool) -> None:
    choices = ["none", "a1", "a7"] if with_none else ["a1", "a7"]
    p.add_argument("--preset", choices=choices, help="augmentation preset")
    p.add_argument("--ops", help="custom op list, e.g. hflip,rot-2,rot+2 (overrides --preset)")
    p.add_argument("--space", choices=["joints", "image"], help="where ops are applied (default joints)")
    p.add_argument("--pose-cmd", help="extractor command prefix for image space "
                                      "(invoked as: CMD --frames DIR --out FILE)")


class _VersionAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        print(json.dumps({"kinescore": __version__, "formats": FORMAT_VERSIONS}, sort_keys=True))
        parser.exit(0)


_DEFAULTS = {
    "synth": dict(exercise=1, count=10, amplitude_range="0.25:1.0", noise_px=0.0,
                  tempo_hz=0.5, frames=100, fps=30.0, seed=0, out_dir=None),
    "augment": dict(manifest=None, preset=None, ops=None, space="joints", pose_cmd=None,
                    out_dir=None, seed=0),
    "features": dict(manifest=None, exercise=None, out_dir=None, describe=False),
    "train": dict(manifest=None, exercise=1, preset=None, ops=None, space="joints",
                  pose_cmd=None, out_dir=None, seed=0, epochs=300, batch_size=8, lr=0.01,
                  hidden=16, layers=4, dropout=0.17),
    "cv": dict(manifest=None, exercise=1, preset="none", ops=None, space="joints",
               pose_cmd=None, out_dir=None, seed=0, folds=5,
               strategy="stratified_by_score_quintile", epochs=300, batch_size=8, lr=0.01,
               hidden=16, layers=4, dropout=0.17, jobs=1),
    "ablate": dict(manifest=None, exercise=1, presets="none,a1,a7", space="joints",
                   pose_cmd=None, out_dir=None, seed=0, folds=5,
                   strategy="stratified_by_score_quintile", epochs=300, batch_size=8, lr=0.01,
                   hidden=16, layers=4, dropout=0.17, jobs=1),
    "plot": dict(predictions=None, out=None),
    "validate": dict(keypoints=None, manifest=None),
}

_REQUIRED = {
    "synth": ("out_dir",),
    "augment": ("manifest", "out_dir"),
    "features": (),
    "train": ("manifest", "out_dir"),
    "cv": ("manifest", "out_dir"),
    "ablate": ("manifest", "out_dir"),
    "plot": ("predictions", "out"),
    "validate": (),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinescore",
        description="Exercise quality scoring from keypoint sequences.",
    )
    parser.add_argument("--version", action=_VersionAction, nargs=0,
                        help="print version and schema versions as JSON")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def new_sub(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="key = value overlay file; flags beat the file")
        return p

    p = new_sub("synth", "generate a labeled synthetic dataset")
    p.add_argument("--exercise", type=int, choices=[1, 2, 3, 4, 5])
    p.add_argument("--count", type=int, help="number of samples")
    p.add_argument("--amplitude-range", help="lo:hi movement amplitude, e.g. 0.2:1.0")
    p.add_argument("--noise-px", type=float, help="Gaussian keypoint jitter in pixels")
    p.add_argument("--tempo-hz", type=float, help="movement cycle frequency")
    p.add_argument("--frames", type=int, help="frames per sample")
    p.add_argument("--fps", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")

    p = new_sub("augment", "materialize augmented variants of a dataset")
    p.add_argument("--manifest")
    _add_aug_flags(p, with_none=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")

    p = new_sub("features", "extract feature CSVs or describe the registry")
    p.add_argument("--manifest")
    p.add_argument("--exercise", type=int, choices=[1, 2, 3, 4, 5])
    p.add_argument("--out-dir")
    p.add_argument("--describe", action="store_true", help="print the feature registry table")

    p = new_sub("train", "train one model on a whole manifest")
    p.add_argument("--manifest")
    p.add_argument("--exercise", type=int, choices=[1, 2, 3, 4, 5])
    _add_aug_flags(p, with_none=True)
    p.add_argument("--seed", type=int)
    _add_common_model_flags(p)
    p.add_argument("--out-dir")

    p = new_sub("cv", "cross-validated evaluation of one preset")
    p.add_argument("--manifest")
    p.add_argument("--exercise", type=int, choices=[1, 2, 3, 4, 5])
    _add_aug_flags(p, with_none=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--strategy", choices=list(FOLD_STRATEGIES))
    _add_common_model_flags(p)
    p.add_argument("--jobs", type=int, help="parallel fold workers (default 1)")
    p.add_argument("--out-dir")

    p = new_sub("ablate", "compare presets under one shared fold plan")
    p.add_argument("--manifest")
    p.add_argument("--exercise", type=int, choices=[1, 2, 3, 4, 5])
    p.add_argument("--presets", help="comma list from {none,a1,a7} (default none,a1,a7)")
    p.add_argument("--space", choices=["joints", "image"])
    p.add_argument("--pose-cmd")
    p.add_argument("--seed", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--strategy", choices=list(FOLD_STRATEGIES))
    _add_common_model_flags(p)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out-dir")

    p = new_sub("plot", "re-render a scatter SVG from a cv_predictions.csv")
    p.add_argument("--predictions", help="cv_predictions.csv produced by cv/ablate")
    p.add_argument("--out", help="output SVG path")

    p = new_sub("validate", "validate kp-seq files or a whole manifest")
    p.add_argument("--keypoints", nargs="+", help="kp-seq files to check")
    p.add_argument("--manifest", help="manifest whose entries are all checked")

    return parser


def _load_config_file(path: str, command: str) -> dict:
    values = {}
    defaults = _DEFAULTS[command]
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key not in defaults:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} for command {command!r}")
        default = defaults[key]
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}:{lineno}: boolean expected for {key!r}, got {raw!r}")
            values[key] = raw.lower() in ("true", "1", "yes")
        elif isinstance(default, int) and not isinstance(default, bool):
            values[key] = int(raw)
        elif isinstance(default, float):
            values[key] = float(raw)
        else:
            values[key] = raw
    return values


_HANDLERS = {
    "synth": cmd_synth,
    "augment": cmd_augment,
    "features": cmd_features,
    "train": cmd_train,
    "cv": cmd_cv,
    "ablate": cmd_ablate,
    "plot": cmd_plot,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_help()
        return 2
    given = vars(ns)
    resolved = dict(_DEFAULTS[ns.command])
    try:
        if "config" in given and given["config"]:
            resolved.update(_load_config_file(given["config"], ns.command))
        resolved.update({k: v for k, v in given.items() if k not in ("command", "config")})
        for key in _REQUIRED[ns.command]:
            if resolved.get(key) in (None, ""):
                flag = "--" + key.replace("_", "-")
                raise UsageError(f"{ns.command} requires {flag}")
        merged = argparse.Namespace(**resolved)
        return _HANDLERS[ns.command](merged)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeypointFileError, ManifestError, AugmentationError, FeatureExtractionError,
            CvError, DivergenceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
