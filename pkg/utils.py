"""Utility functions shared by the solvers"""
from __future__ import annotations

import logging
import os
import time
from typing import Optional, Union

import numpy as np

from config import INTEGRALITY_TOL, LOG_ENV_VAR

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def configure_logging(level: Optional[Union[str, int]] = None) -> int:
    """
    Install one stream handler on the root logger.

    Args:
        level: Level name or number; falls back to OED_LOG, then WARNING

    Returns:
        The numeric level applied
    """
    if level is None:
        level = os.environ.get(LOG_ENV_VAR, "warning")
    if isinstance(level, str):
        level = _LEVELS.get(level.strip().lower(), logging.WARNING)
    root = logging.getLogger()
    if not any(getattr(h, "_oed_handler", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._oed_handler = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(level)
    return level


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def is_integral(x: np.ndarray, tol: float = INTEGRALITY_TOL) -> bool:
    """True when every entry is within tol of an integer."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.abs(x - np.round(x)) <= tol))


def most_fractional_index(x: np.ndarray, tol: float = INTEGRALITY_TOL) -> Optional[int]:
    """
    Index of the most fractional entry, ties broken by the smallest index.

    Returns:
        None when x is integral within tol
    """
    x = np.asarray(x, dtype=float)
    frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
    frac[frac <= tol] = 0.0
    if not np.any(frac > 0):
        return None
    # argmax returns the first maximal index
    return int(np.argmax(frac))


class Deadline:
    """Wall-clock budget measured with perf_counter."""

    def __init__(self, seconds: float = float("inf")):
        self.start = time.perf_counter()
        self.seconds = seconds

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def expired(self) -> bool:
        return self.elapsed() >= self.seconds
