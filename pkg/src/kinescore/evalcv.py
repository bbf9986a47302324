"""Spearman correlation, leakage-safe cross-validation, ablation, reports.

Cross-validation folds are planned over original samples only. Augmented
variants enter a fold's training set exactly when their parent does, and a
report refuses to exist if any variant id shows up in validation. Running
the ablation presets against one shared fold plan and seed makes the
difference between rows attributable to augmentation alone.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    AugmentationPreset,
    CommandPoseBackend,
    MarkerFrameSource,
    MarkerPoseBackend,
    augment_sample,
)
from .core import Manifest, Sample
from .features import FeatureSpec, extract_features
from .kpseq import load_keypoints
from .lstm import LstmConfig, TrainConfig, predict, train


class UndefinedCorrelationError(ValueError):
    """Raised when Spearman is requested for a constant sequence."""


class LeakageError(ValueError):
    """Raised when augmented sample ids leak into a validation set."""


class CvError(RuntimeError):
    """Raised for cross-validation setup or execution failures."""


def _average_ranks(values: list[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0  # average of 1-based positions i..j
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman's rank correlation: Pearson on average (tie-shared) ranks."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least 2 values")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise UndefinedCorrelationError("all values identical in one argument")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sxx = syy = 0.0
    for a, b in zip(rx, ry):
        da = a - mx
        db = b - my
        cov += da * db
        sxx += da * da
        syy += db * db
    return cov / (sxx * syy) ** 0.5


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every original sample id to one of k folds."""

    k: int
    assignments: dict[str, int]
    strategy: str
    seed: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        used = set(self.assignments.values())
        if not used <= set(range(self.k)):
            raise ValueError(f"fold indices out of range 0..{self.k - 1}: {sorted(used)}")

    def validation_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(s for s, f in self.assignments.items() if f == fold)

    def train_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(s for s, f in self.assignments.items() if f != fold)


FOLD_STRATEGIES = ("stratified_by_score_quintile", "random")


def make_folds(manifest: Manifest, k: int = 5, strategy: str = "stratified_by_score_quintile",
               seed: int = 0, exercise: int | None = None) -> FoldPlan:
    """Deterministic fold plan over the manifest's original samples.

    The stratified strategy sorts by score, cuts the list into quintile
    groups, and deals each group round-robin (seeded shuffle within the
    group, fold pointer carried across groups so overall sizes stay even).
    """
    if strategy not in FOLD_STRATEGIES:
        raise ValueError(f"strategy must be one of {FOLD_STRATEGIES}, got {strategy!r}")
    entries = [e for e in manifest.originals() if exercise is None or e.exercise == exercise]
    if len(entries) < k:
        raise CvError(f"need at least {k} original samples, have {len(entries)}")
    rng = np.random.default_rng(np.random.PCG64(seed))
    assignments: dict[str, int] = {}

    if strategy == "random":
        ids = sorted(e.sample_id for e in entries)
        order = rng.permutation(len(ids))
        for pos, idx in enumerate(order):
            assignments[ids[idx]] = pos % k
    else:
        by_score = sorted(entries, key=lambda e: (e.score_raw, e.sample_id))
        groups = np.array_split(np.arange(len(by_score)), 5)
        pointer = 0
        for group in groups:
            group = list(group)
            rng.shuffle(group)
            for idx in group:
                assignments[by_score[idx].sample_id] = pointer % k
                pointer += 1
    return FoldPlan(k=k, assignments=assignments, strategy=strategy, seed=seed)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    sample_ids: tuple[str, ...]
    targets_raw: tuple[float, ...]
    predictions_raw: tuple[float, ...]
    spearman: float


@dataclass(frozen=True)
class CvReport:
    """Per-fold and pooled predictions plus the config fingerprint."""

    exercise: int
    preset_name: str
    folds: tuple[FoldResult, ...]
    pooled_spearman: float
    fingerprint: str

    @classmethod
    def build(cls, exercise: int, preset_name: str, folds, fingerprint: str,
              original_ids: set[str], augmented_ids: set[str]) -> "CvReport":
        """Validate the leakage and partition invariants, then assemble."""
        folds = tuple(folds)
        seen: set[str] = set()
        for fr in folds:
            ids = set(fr.sample_ids)
            leaked = ids & set(augmented_ids)
            if leaked:
                raise LeakageError(
                    f"fold {fr.fold}: augmented sample ids in validation: {sorted(leaked)}"
                )
            unknown = ids - set(original_ids)
            if unknown:
                raise LeakageError(f"fold {fr.fold}: unknown sample ids in validation: {sorted(unknown)}")
            dup = ids & seen
            if dup:
                raise LeakageError(f"fold {fr.fold}: sample ids in more than one validation set: {sorted(dup)}")
            seen |= ids
        missing = set(original_ids) - seen
        if missing:
            raise LeakageError(f"original samples missing from validation: {sorted(missing)}")
        targets = [t for fr in folds for t in fr.targets_raw]
        preds = [p for fr in folds for p in fr.predictions_raw]
        pooled = spearman(targets, preds)
        return cls(exercise=exercise, preset_name=preset_name, folds=folds,
                   pooled_spearman=pooled, fingerprint=fingerprint)

    def pooled_pairs(self) -> tuple[tuple[int, str, float, float], ...]:
        return tuple(
            (fr.fold, sid, t, p)
            for fr in self.folds
            for sid, t, p in zip(fr.sample_ids, fr.targets_raw, fr.predictions_raw)
        )


def load_samples(manifest: Manifest, exercise: int) -> list[Sample]:
    """Load and cross-check every manifest sample for one exercise."""
    samples = []
    for entry in manifest.for_exercise(exercise):
        sample = load_keypoints(manifest.resolve(entry))
        if sample.sample_id != entry.sample_id:
            raise CvError(
                f"{entry.keypoints}: file sample_id {sample.sample_id!r} != manifest {entry.sample_id!r}"
            )
        if sample.exercise != entry.exercise:
            raise CvError(f"{entry.sample_id}: exercise mismatch between file and manifest")
        if sample.score is None or sample.score.raw != entry.score_raw:
            raise CvError(f"{entry.sample_id}: label mismatch between file and manifest")
        samples.append(sample)
    return samples


def _derived_seed(base_seed: int, fold: int) -> int:
    return int(np.random.SeedSequence((base_seed, fold)).generate_state(1)[0])


def _standardize(train_rows: np.ndarray):
    mean = train_rows.mean(axis=0)
    std = train_rows.std(axis=0)
    std = np.where(std > 1e-8, std, 1.0)
    return mean, std


def _fingerprint(exercise, preset_name, space, spec, model_config, train_config, fold_plan) -> str:
    return (
        f"kinescore={__version__};exercise={exercise};preset={preset_name};space={space};"
        f"features={','.join(spec.feature_names)};"
        f"model={model_config.num_layers}x{model_config.hidden_dim},dropout={model_config.dropout_p:g};"
        f"train=lr{train_config.learning_rate:g},batch{train_config.batch_size},"
        f"epochs{train_config.epochs},seed{train_config.seed};"
        f"folds=k{fold_plan.k},{fold_plan.strategy},seed{fold_plan.seed}"
    )


def run_cv(manifest: Manifest, exercise: int, preset: AugmentationPreset | None = None,
           space: str = "joints", feature_spec: FeatureSpec | None = None,
           model_config: LstmConfig | None = None, train_config: TrainConfig | None = None,
           fold_plan: FoldPlan | None = None, pose_cmd: str | None = None,
           jobs: int = 1) -> CvReport:
    """Five-fold cross-validation with train-only augmentation.

    Each fold trains a fresh model on the train-fold originals plus their
    augmented variants (when a preset is given) and predicts the held-out
    originals. Features are standardized per fold with statistics fit on
    that fold's training rows only, so no validation information reaches
    training. Predictions are reported on the raw 0..50 scale.

    jobs > 1 trains folds on a thread pool. Fold seeds are derived
    independently, so results match the sequential run exactly.
    """
    entries = manifest.for_exercise(exercise)
    if any(not e.is_original for e in entries):
        raise CvError(
            "manifest contains augmented samples; run cv on the originals manifest "
            "(augmentation happens inside cv via the preset)"
        )
    samples = load_samples(manifest, exercise)
    if not samples:
        raise CvError(f"no samples for exercise {exercise}")

    spec = feature_spec or FeatureSpec.for_exercise(exercise)
    model_config = model_config or LstmConfig(input_dim=spec.dim)
    train_config = train_config or TrainConfig()
    if model_config.input_dim != spec.dim:
        raise CvError(f"model input_dim {model_config.input_dim} != feature dim {spec.dim}")
    fold_plan = fold_plan or make_folds(manifest, k=5, seed=train_config.seed, exercise=exercise)
    missing = {s.sample_id for s in samples} ^ set(fold_plan.assignments)
    if missing:
        raise CvError(f"fold plan does not cover the manifest samples exactly: {sorted(missing)}")

    by_id = {s.sample_id: s for s in samples}
    variants_of: dict[str, list[Sample]] = {sid: [] for sid in by_id}
    augmented_ids: set[str] = set()
    if preset is not None:
        if space == "image":
            frame_source = MarkerFrameSource()
            pose_backend = CommandPoseBackend(pose_cmd) if pose_cmd else MarkerPoseBackend()
        else:
            frame_source = pose_backend = None
        for sid, sample in by_id.items():
            variants = augment_sample(sample, preset, space=space,
                                      frame_source=frame_source, pose_backend=pose_backend)
            variants_of[sid] = variants
            augmented_ids.update(v.sample_id for v in variants)

    feats: dict[str, np.ndarray] = {}
    targets: dict[str, float] = {}
    for sample in list(by_id.values()) + [v for vs in variants_of.values() for v in vs]:
        feats[sample.sample_id] = extract_features(sample, spec).vectors
        targets[sample.sample_id] = sample.score.normalized

    preset_name = preset.name if preset is not None else "none"
    fingerprint = _fingerprint(exercise, preset_name, space, spec, model_config, train_config, fold_plan)

    def run_fold(fold: int) -> FoldResult:
        val_ids = sorted(fold_plan.validation_ids(fold))
        train_orig = sorted(fold_plan.train_ids(fold))
        train_ids = [sid for o in train_orig for sid in [o] + [v.sample_id for v in variants_of[o]]]
        try:
            mean, std = _standardize(np.concatenate([feats[sid] for sid in train_ids]))
            dataset = [((feats[sid] - mean) / std, targets[sid]) for sid in train_ids]
            fold_tc = dataclasses.replace(train_config, seed=_derived_seed(train_config.seed, fold))
            params, _ = train(dataset, model_config, fold_tc)
            preds = [predict(params, model_config, (feats[sid] - mean) / std).raw for sid in val_ids]
        except Exception as exc:
            raise CvError(f"fold {fold}: {exc}") from exc
        targs = [by_id[sid].score.raw for sid in val_ids]
        return FoldResult(
            fold=fold,
            sample_ids=tuple(val_ids),
            targets_raw=tuple(targs),
            predictions_raw=tuple(preds),
            spearman=spearman(targs, preds),
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, fold_plan.k)) as pool:
            fold_results = list(pool.map(run_fold, range(fold_plan.k)))
    else:
        fold_results = [run_fold(fold) for fold in range(fold_plan.k)]
    return CvReport.build(exercise, preset_name, fold_results, fingerprint,
                          original_ids=set(by_id), augmented_ids=augmented_ids)


@dataclass(frozen=True)
class AblationResult:
    reports: tuple[CvReport, ...]

    def rows(self) -> list[tuple[str, float, str]]:
        """(preset, pooled spearman, percent change vs the no-augmentation row)."""
        baseline = next((r.pooled_spearman for r in self.reports if r.preset_name == "none"), None)
        out = []
        for r in self.reports:
            if baseline is None or r.preset_name == "none" or baseline == 0:
                change = ""
            else:
                change = f"{(r.pooled_spearman - baseline) / abs(baseline) * 100.0:+.1f}%"
            out.append((r.preset_name, r.pooled_spearman, change))
        return out


def run_ablation(manifest: Manifest, exercise: int, presets, space: str = "joints",
                 feature_spec: FeatureSpec | None = None, model_config: LstmConfig | None = None,
                 train_config: TrainConfig | None = None, fold_plan: FoldPlan | None = None,
                 pose_cmd: str | None = None, jobs: int = 1) -> AblationResult:
    """Run run_cv once per preset against one shared fold plan and seed.

    presets maps a display name to an AugmentationPreset or None for the
    no-augmentation arm.
    """
    train_config = train_config or TrainConfig()
    fold_plan = fold_plan or make_folds(manifest, k=5, seed=train_config.seed, exercise=exercise)
    reports = []
    for name, preset in presets.items():
        report = run_cv(manifest, exercise, preset=preset, space=space, feature_spec=feature_spec,
                        model_config=model_config, train_config=train_config,
                        fold_plan=fold_plan, pose_cmd=pose_cmd, jobs=jobs)
        if report.preset_name != name:
            report = dataclasses.replace(report, preset_name=name)
        reports.append(report)
    return AblationResult(reports=tuple(reports))


def write_report_csvs(report: CvReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write cv_predictions.csv and cv_summary.csv; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pred_path = out_dir / "cv_predictions.csv"
    lines = [f"# {report.fingerprint}", "fold,sample_id,target_raw,prediction_raw"]
    for fold, sid, target, pred in report.pooled_pairs():
        lines.append(f"{fold},{sid},{target:.6f},{pred:.6f}")
    pred_path.write_text("\n".join(lines) + "\n")

    summary_path = out_dir / "cv_summary.csv"
    lines = [f"# {report.fingerprint}", "preset,fold,spearman"]
    for fr in report.folds:
        lines.append(f"{report.preset_name},{fr.fold},{fr.spearman:.6f}")
    lines.append(f"{report.preset_name},pooled,{report.pooled_spearman:.6f}")
    summary_path.write_text("\n".join(lines) + "\n")
    return pred_path, summary_path


def write_ablation_csv(result: AblationResult, path: str | Path) -> Path:
    path = Path(path)
    lines = ["preset,pooled_spearman,pct_change_vs_none"]
    for name, rho, change in result.rows():
        lines.append(f"{name},{rho:.6f},{change}")
    path.write_text("\n".join(lines) + "\n")
    return path


_SVG_SIZE = 480
_SVG_MARGIN = 56


def _svg_xy(target: float, pred: float) -> tuple[float, float]:
    span = _SVG_SIZE - 2 * _SVG_MARGIN
    x = _SVG_MARGIN + target / 50.0 * span
    y = _SVG_SIZE - _SVG_MARGIN - pred / 50.0 * span
    return x, y


def emit_scatter(report: CvReport, svg_path: str | Path, csv_path: str | Path | None = None) -> Path:
    """Write the pooled (target, prediction) pairs as CSV plus an SVG scatter.

    The SVG is rendered directly (fixed header, sorted points, fixed float
    formatting), so re-emission is byte-identical. Axes run 0..50 with the
    identity line drawn across.
    """
    svg_path = Path(svg_path)
    if csv_path is None:
        csv_path = svg_path.with_suffix(".csv")
    csv_path = Path(csv_path)

    pairs = [(t, p) for _, _, t, p in report.pooled_pairs()]
    lines = [f"# {report.fingerprint}", "target_raw,prediction_raw"]
    lines += [f"{t:.6f},{p:.6f}" for t, p in pairs]
    csv_path.write_text("\n".join(lines) + "\n")

    s = _SVG_SIZE
    m = _SVG_MARGIN
    x0, y0 = _svg_xy(0.0, 0.0)
    x1, y1 = _svg_xy(50.0, 50.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
        f'<rect x="0" y="0" width="{s}" height="{s}" fill="white"/>',
        f'<text x="{s / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="13">'
        f"exercise {report.exercise}, preset {report.preset_name}, "
        f"pooled spearman {report.pooled_spearman:.3f}</text>",
        f'<line x1="{m}" y1="{s - m}" x2="{s - m}" y2="{s - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{s - m}" stroke="black"/>',
    ]
    for tick in range(0, 51, 10):
        tx, _ = _svg_xy(float(tick), 0.0)
        _, ty = _svg_xy(0.0, float(tick))
        parts.append(f'<line x1="{tx:.2f}" y1="{s - m}" x2="{tx:.2f}" y2="{s - m + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{tx:.2f}" y="{s - m + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{tick}</text>'
        )
        parts.append(f'<line x1="{m - 5}" y1="{ty:.2f}" x2="{m}" y2="{ty:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{m - 8}" y="{ty + 4:.2f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{tick}</text>'
        )
    parts.append(
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
        'stroke="#888888" stroke-dasharray="4,3"/>'
    )
    parts.append(
        f'<text x="{s / 2:.1f}" y="{s - 12}" text-anchor="middle" font-family="sans-serif" '
        'font-size="12">clinician score</text>'
    )
    parts.append(
        f'<text x="16" y="{s / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {s / 2:.1f})">predicted score</text>'
    )
    for t, p in sorted(pairs):
        x, y = _svg_xy(t, p)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#3572b0" fill-opacity="0.75"/>')
    parts.append("</svg>")
    svg_path.write_text("\n".join(parts) + "\n")
    return svg_path
