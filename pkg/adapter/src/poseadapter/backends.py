"""Pose backends: a pretrained-model wrapper and the marker demo detector.

Every backend answers two questions: how to decode one frame file into an
RGB array, and where the 33 landmarks are in that array. The heavy backend
is imported lazily so the adapter stays usable (and testable) on machines
without it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import N_LANDMARKS
from .markers import detect_landmarks, read_ppm

BACKEND_NAMES = ("auto", "mediapipe", "markers")


class BackendUnavailableError(RuntimeError):
    """The requested pose backend cannot be loaded on this machine."""


class AdapterInputError(RuntimeError):
    """The input file or directory cannot be read as frames."""


class MarkerBackend:
    """Detects the synthetic color markers; frame directories only."""

    name = "markers"

    def decode(self, path: Path) -> np.ndarray:
        if path.suffix.lower() != ".ppm":
            raise AdapterInputError(
                f"{path}: the markers backend reads P6 PPM frames only; "
                "use the mediapipe backend for other formats"
            )
        try:
            return read_ppm(path)
        except ValueError as exc:
            raise AdapterInputError(str(exc)) from exc

    def landmarks(self, image: np.ndarray) -> np.ndarray:
        return detect_landmarks(image)

    def video_frames(self, path: Path):
        raise AdapterInputError(
            f"{path}: the markers backend cannot decode video; "
            "extract frames first or use the mediapipe backend"
        )


class MediaPipeBackend:
    """Wraps the pretrained pose model; needs the mediapipe package."""

    name = "mediapipe"

    def __init__(self, model_complexity: int = 1, min_confidence: float = 0.5):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise BackendUnavailableError(
                "the mediapipe backend is not installed; run: pip install mediapipe"
            ) from exc
        self._mp = mp
        self._pose = mp.solutions.pose.Pose(
            static_image_mode=False,
            model_complexity=model_complexity,
            min_detection_confidence=min_confidence,
            min_tracking_confidence=min_confidence,
        )

    def decode(self, path: Path) -> np.ndarray:
        try:
            import cv2
        except ImportError as exc:
            raise BackendUnavailableError(
                "decoding raster frames needs opencv; run: pip install opencv-python"
            ) from exc
        bgr = cv2.imread(str(path))
        if bgr is None:
            raise AdapterInputError(f"{path}: not a readable image")
        return bgr[:, :, ::-1]

    def landmarks(self, image: np.ndarray) -> np.ndarray:
        result = self._pose.process(np.ascontiguousarray(image))
        out = np.zeros((N_LANDMARKS, 4), dtype=np.float64)
        if result.pose_landmarks is None:
            return out  # nobody in frame: all landmarks invisible
        for idx, lm in enumerate(result.pose_landmarks.landmark[:N_LANDMARKS]):
            out[idx] = (lm.x, lm.y, lm.z, lm.visibility)
        return out

    def video_frames(self, path: Path):
        try:
            import cv2
        except ImportError as exc:
            raise BackendUnavailableError(
                "video decoding needs opencv; run: pip install opencv-python"
            ) from exc
        cap = cv2.VideoCapture(str(path))
        if not cap.isOpened():
            raise AdapterInputError(f"{path}: not a readable video")
        fps = cap.get(cv2.CAP_PROP_FPS) or 30.0

        def frames():
            while True:
                ok, bgr = cap.read()
                if not ok:
                    break
                yield bgr[:, :, ::-1]
            cap.release()

        return fps, frames()


def resolve_backend(name: str, model_complexity: int = 1, min_confidence: float = 0.5):
    """Instantiate a backend by name; auto prefers the pretrained model."""
    if name == "markers":
        return MarkerBackend()
    if name == "mediapipe":
        return MediaPipeBackend(model_complexity, min_confidence)
    if name == "auto":
        try:
            return MediaPipeBackend(model_complexity, min_confidence)
        except BackendUnavailableError:
            return MarkerBackend()
    raise ValueError(f"unknown backend {name!r}; choose from {BACKEND_NAMES}")
