"""Selects the LSTM layer kernels: compiled extension if importable, numpy otherwise.

Set KINESCORE_KERNEL=pure or =compiled to force a backend; the default
(auto) prefers the extension and falls back silently.
"""

from __future__ import annotations

import os


def get_backend(name: str):
    """Return the kernel module for 'pure' or 'compiled'."""
    if name == "pure":
        from . import _kernels_pure

        return _kernels_pure
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _select() -> tuple:
    choice = os.environ.get("KINESCORE_KERNEL", "auto")
    if choice == "auto":
        try:
            return get_backend("compiled"), "compiled"
        except ImportError:
            return get_backend("pure"), "pure"
    return get_backend(choice), choice


_BACKEND, BACKEND_NAME = _select()

lstm_layer_forward = _BACKEND.lstm_layer_forward
lstm_layer_backward = _BACKEND.lstm_layer_backward
