"""Persistence landscapes and persistence images.

Both work on oriented points (birth <= death); superlevel-type points are
mirrored first.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .errors import ParameterError
from .persistence import PersistenceDiagram

__all__ = [
    "landscape",
    "ImageGrid",
    "fit_image_grid",
    "persistence_image",
    "LANDSCAPE_K_GRID",
    "LANDSCAPE_BIN_GRID",
    "IMAGE_RESOLUTION_GRID",
    "IMAGE_BANDWIDTH_GRID",
]

LANDSCAPE_K_GRID = (3, 4, 5, 6, 7, 8)
LANDSCAPE_BIN_GRID = (50, 100, 200, 300)
IMAGE_RESOLUTION_GRID = (20, 30)
IMAGE_BANDWIDTH_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


def _oriented(d) -> np.ndarray:
    if isinstance(d, PersistenceDiagram):
        return d.oriented()
    p = np.asarray(d, dtype=float).reshape(-1, 2)
    return np.column_stack([p.min(axis=1), p.max(axis=1)])


def landscape(d, k_max: int, bins: int, range: Tuple[float, float]) -> np.ndarray:
    """The first ``k_max`` landscape functions sampled at ``bins`` points of ``range``.

    ``lambda_k(t)`` is the k-th largest ``max(0, min(t - b, d - t))`` over the
    points; it is zero where fewer than k points are alive. Output layout is
    ``[lambda_1(t_0..t_{bins-1}), lambda_2(...), ...]``.
    """
    lo, hi = map(float, range)
    if not lo < hi:
        raise ParameterError("landscape range needs lo < hi")
    if k_max < 1 or bins < 1:
        raise ParameterError("k_max and bins must be positive")
    pts = _oriented(d)
    t = np.linspace(lo, hi, bins)
    out = np.zeros((k_max, bins))
    if len(pts):
        tents = np.minimum(t[None, :] - pts[:, :1], pts[:, 1:] - t[None, :])
        tents = -np.sort(-np.maximum(tents, 0.0), axis=0)
        k = min(k_max, len(pts))
        out[:k] = tents[:k]
    return out.ravel()


@dataclass(frozen=True)
class ImageGrid:
    """Pixel layout and weighting of a persistence image.

    ``birth_range`` and ``pers_range`` bound the (birth, persistence) plane;
    ``weight_scale`` divides the raw weight (max death or max persistence of
    the training diagrams).
    """

    birth_range: Tuple[float, float]
    pers_range: Tuple[float, float]
    resolution: Tuple[int, int] = (20, 20)
    bandwidth: float = 1.0
    weight: str = "death"
    weight_scale: float = 1.0

    def descriptor(self) -> dict:
        return {"method": "persistence_image", **asdict(self)}


def _weights(pts: np.ndarray, mode: str, scale: float) -> np.ndarray:
    if mode == "death":
        w = np.maximum(pts[:, 1], 0.0)
    elif mode == "persistence":
        w = pts[:, 1] - pts[:, 0]
    elif mode == "uniform":
        w = np.ones(len(pts))
    else:
        raise ParameterError(f"unknown weight mode {mode!r}")
    return w / scale if scale > 0 else w


def fit_image_grid(diagrams: Iterable, resolution=(20, 20), bandwidth: float = 1.0,
                   weight: str = "death", pad: float = 3.0) -> ImageGrid:
    """Grid spanning the training diagrams' (birth, persistence) points, padded by ``pad`` bandwidths."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    pts = [_oriented(d) for d in diagrams]
    pts = np.concatenate(pts) if pts else np.zeros((0, 2))
    if len(pts) == 0:
        pts = np.zeros((1, 2))
    birth, pers = pts[:, 0], pts[:, 1] - pts[:, 0]
    margin = pad * bandwidth
    if weight == "death":
        scale = float(np.maximum(pts[:, 1], 0).max())
    elif weight == "persistence":
        scale = float(pers.max())
    else:
        scale = 1.0
    return ImageGrid(
        birth_range=(float(birth.min() - margin), float(birth.max() + margin)),
        pers_range=(float(pers.min() - margin), float(pers.max() + margin)),
        resolution=tuple(int(r) for r in resolution),
        bandwidth=float(bandwidth),
        weight=weight,
        weight_scale=scale if scale > 0 else 1.0,
    )


def persistence_image(d, grid: Optional[ImageGrid] = None, resolution=(20, 20), bandwidth: float = 1.0,
                      weight: str = "death") -> np.ndarray:
    """Persistence image of ``d``, flattened row-major over (birth, persistence) pixels.

    Each point contributes a Gaussian of standard deviation ``bandwidth``
    centred at ``(birth, death - birth)`` scaled by its weight; a pixel holds
    the exact Gaussian mass over its rectangle. Without ``grid`` the layout
    is fit on ``d`` alone.
    """
    if grid is None:
        grid = fit_image_grid([d], resolution, bandwidth, weight)
    rx, ry = grid.resolution
    pts = _oriented(d)
    if len(pts) == 0:
        return np.zeros(rx * ry)
    s = grid.bandwidth
    xe = np.linspace(*grid.birth_range, rx + 1)
    ye = np.linspace(*grid.pers_range, ry + 1)
    cx = np.diff(ndtr((xe[None, :] - pts[:, :1]) / s), axis=1)
    cy = np.diff(ndtr((ye[None, :] - (pts[:, 1:] - pts[:, :1])) / s), axis=1)
    w = _weights(pts, grid.weight, grid.weight_scale)
    return (cx.T @ (w[:, None] * cy)).ravel()
