"""Gaussian temporal masks, their aggregation into a frame distribution, and
plain top-N extraction.

Frame ``t`` of a ``T``-frame video sits at normalized time ``t / (T - 1)``, so
the first and last frames map to 0 and 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when array lengths or sizes are inconsistent."""


@dataclass(frozen=True)
class GaussianParams:
    center: float
    width: float

    def __post_init__(self):
        if not np.isfinite(self.center) or not 0.0 <= self.center <= 1.0:
            raise ValueError(f"center must lie in [0, 1], got {self.center}")
        if not np.isfinite(self.width) or self.width <= 0.0:
            raise ValueError(f"width must be positive, got {self.width}")


@dataclass(frozen=True)
class KeyframeSelection:
    indices: tuple[int, ...]
    objective_value: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


def time_grid(T: int) -> np.ndarray:
    if T < 2:
        raise DimensionError(f"need at least 2 frames, got T={T}")
    return np.arange(T, dtype=np.float64) / (T - 1)


def gaussian_mask(params: GaussianParams, T: int) -> np.ndarray:
    """Unit-amplitude Gaussian evaluated on the normalized frame grid."""
    x = time_grid(T)
    return np.exp(-((x - params.center) ** 2) / (2.0 * params.width**2))


def normalize_sum(masks: Sequence[np.ndarray]) -> np.ndarray:
    """Sum masks elementwise and min-max scale the result into [0, 1].

    A constant sum has no spread to scale, so every frame is treated as
    maximal and the all-ones vector is returned.
    """
    if len(masks) == 0:
        raise ValueError("normalize_sum needs at least one mask")
    lengths = {len(m) for m in masks}
    if len(lengths) != 1:
        raise DimensionError(f"masks have different lengths: {sorted(lengths)}")
    s = np.sum(np.asarray(masks, dtype=np.float64), axis=0)
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.ones_like(s)
    return (s - lo) / (hi - lo)


def top_n(p: Sequence[float], N: int) -> KeyframeSelection:
    """Indices of the ``N`` largest values, lowest index first on ties."""
    p = np.asarray(p, dtype=np.float64)
    if N < 1 or N > len(p):
        raise DimensionError(f"cannot select N={N} of T={len(p)} frames")
    order = np.argsort(-p, kind="stable")[:N]
    idx = np.sort(order)
    return KeyframeSelection(tuple(idx.tolist()), float(p[idx].sum()))
