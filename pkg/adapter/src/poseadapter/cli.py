"""Command line interface.

    poseadapter extract --frames DIR --fps 30 --out clip.kpseq.json
    poseadapter extract --video clip.mp4 --out clip.kpseq.json
    poseadapter demo-clip --out-dir demo/ [--frames 10]

extract converts a frame directory (frame_%06d.ppm or other raster files)
or a video into one kp-seq/1 file. Frame directories need an explicit
--fps; videos carry their own. Exit codes: 0 ok, 1 unreadable input,
2 usage error, 3 pose backend unavailable.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .backends import (
    BACKEND_NAMES,
    AdapterInputError,
    BackendUnavailableError,
    resolve_backend,
)
from .markers import write_demo_clip
from .output import write_kpseq

FRAME_SUFFIXES = (".ppm", ".png", ".jpg", ".jpeg", ".bmp")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    """Resolved extraction settings: one input, one output, one backend."""

    frames_dir: Path | None
    video: Path | None
    out: Path
    fps: float | None
    stride: int
    backend: str
    model_complexity: int
    min_confidence: float

    def __post_init__(self):
        if (self.frames_dir is None) == (self.video is None):
            raise UsageError("give exactly one of --frames or --video")
        if self.stride < 1:
            raise UsageError(f"--stride must be >= 1, got {self.stride}")
        if self.frames_dir is not None and self.fps is None:
            raise UsageError("--fps is required when extracting from a frame directory")
        if self.fps is not None and not self.fps > 0:
            raise UsageError(f"--fps must be positive, got {self.fps}")


def _config(ns) -> AdapterConfig:
    return AdapterConfig(
        frames_dir=Path(ns.frames) if ns.frames else None,
        video=Path(ns.video) if ns.video else None,
        out=Path(ns.out),
        fps=ns.fps,
        stride=ns.stride,
        backend=ns.backend,
        model_complexity=ns.model_complexity,
        min_confidence=ns.min_confidence,
    )


def _frame_files(frames_dir: Path) -> list[Path]:
    if not frames_dir.is_dir():
        raise AdapterInputError(f"{frames_dir}: not a directory")
    files = sorted(p for p in frames_dir.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not files:
        raise AdapterInputError(f"{frames_dir}: no frame files ({', '.join(FRAME_SUFFIXES)})")
    return files


def _default_sample_id(out: Path) -> str:
    name = out.name
    for suffix in (".kpseq.json", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return out.stem


def cmd_extract(ns) -> int:
    config = _config(ns)
    backend = resolve_backend(config.backend, config.model_complexity, config.min_confidence)

    rows: list[np.ndarray] = []
    if config.frames_dir is not None:
        files = _frame_files(config.frames_dir)[:: config.stride]
        fps = config.fps
        frame_size = None
        for path in files:
            image = backend.decode(path)
            if frame_size is None:
                frame_size = (image.shape[1], image.shape[0])
            elif (image.shape[1], image.shape[0]) != frame_size:
                raise AdapterInputError(
                    f"{path}: frame size {image.shape[1]}x{image.shape[0]} differs from "
                    f"{frame_size[0]}x{frame_size[1]}"
                )
            rows.append(backend.landmarks(image))
    else:
        video_fps, frames = backend.video_frames(config.video)
        fps = config.fps or video_fps
        frame_size = None
        for t, image in enumerate(frames):
            if t % config.stride:
                continue
            if frame_size is None:
                frame_size = (image.shape[1], image.shape[0])
            rows.append(backend.landmarks(image))
        if frame_size is None:
            raise AdapterInputError(f"{config.video}: no decodable frames")

    if len(rows) < 2:
        raise AdapterInputError(f"need at least 2 frames after striding, got {len(rows)}")

    config.out.parent.mkdir(parents=True, exist_ok=True)
    write_kpseq(
        np.stack(rows), config.out,
        sample_id=ns.sample_id or _default_sample_id(config.out),
        subject_id=ns.subject_id, exercise=ns.exercise,
        fps=fps, frame_size=frame_size,
    )
    print(f"wrote {len(rows)} frames ({backend.name} backend) to {config.out}")
    return 0


def cmd_demo_clip(ns) -> int:
    if ns.frames < 2:
        raise UsageError(f"--frames must be >= 2, got {ns.frames}")
    paths = write_demo_clip(ns.out_dir, n_frames=ns.frames)
    print(f"wrote {len(paths)} demo frames to {ns.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poseadapter",
        description="Extract 33-landmark keypoint sequences into kp-seq files.",
    )
    parser.add_argument("--version", action="version", version=f"poseadapter {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("extract", help="convert frames or video to one kp-seq file")
    p.add_argument("--frames", help="directory of frame images (needs --fps)")
    p.add_argument("--video", help="video file (fps from metadata unless --fps)")
    p.add_argument("--out", required=True, help="output kp-seq path")
    p.add_argument("--fps", type=float)
    p.add_argument("--stride", type=int, default=1, help="keep every Nth frame")
    p.add_argument("--backend", choices=list(BACKEND_NAMES), default="auto")
    p.add_argument("--model-complexity", type=int, default=1, choices=[0, 1, 2],
                   help="passed through to the pretrained model")
    p.add_argument("--min-confidence", type=float, default=0.5,
                   help="detection/tracking confidence threshold")
    p.add_argument("--sample-id", help="default: output file name")
    p.add_argument("--subject-id", default="unknown")
    p.add_argument("--exercise", type=int, default=1, choices=[1, 2, 3, 4, 5])

    p = sub.add_parser("demo-clip", help="write the bundled synthetic marker clip")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", type=int, default=10)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if ns.command == "extract":
            return cmd_extract(ns)
        return cmd_demo_clip(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BackendUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (AdapterInputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
