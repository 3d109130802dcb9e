"""Conditioning fields built from the initial strain-energy distribution.

Both filters map a raw, non-negative element energy field onto ``[0, 0.4]``:

* gamma: clip at the 99th percentile, min-max normalize, raise to
  ``1 - volfrac``, scale by 0.4.
* log: floor zeros at ``1e-12 * max``, take logs, min-max normalize, scale by 0.4.

A constant input carries no information and maps to all zeros.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .fem import GridDomain

FIELD_MAX = 0.4
LOG_FLOOR = 1e-12
FILTERS = ("none", "gamma", "log")


@dataclass(frozen=True)
class ConditioningField:
    values: np.ndarray
    filter: str
    grid: GridDomain | None = None

    def as_image(self) -> np.ndarray:
        """(nely, nelx) array with row 0 at the top of the domain."""
        if self.grid is None:
            raise ParameterError("field has no grid attached")
        return self.values.reshape(self.grid.nelx, self.grid.nely).T


def _check_energy(E) -> np.ndarray:
    E = np.asarray(E, dtype=float).ravel()
    if E.size == 0:
        raise ParameterError("empty strain-energy field")
    if not np.all(np.isfinite(E)):
        raise ParameterError("strain-energy field contains non-finite values")
    if np.any(E < 0):
        raise ParameterError("strain-energy field contains negative values")
    return E


def percentile_99(E) -> float:
    """99th percentile with linear interpolation between order statistics."""
    E = np.asarray(E, dtype=float).ravel()
    if E.size == 0 or not np.all(np.isfinite(E)):
        raise ParameterError("percentile needs a non-empty finite input")
    return float(np.percentile(E, 99.0, method="linear"))


def _normalize(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def gamma_filter(E, v_star: float, grid: GridDomain | None = None) -> ConditioningField:
    if not 0 < v_star < 1:
        raise ParameterError(f"target volume fraction must lie in (0, 1), got {v_star}")
    E = _check_energy(E)
    clipped = np.minimum(E, percentile_99(E))
    values = FIELD_MAX * _normalize(clipped) ** (1.0 - v_star)
    return ConditioningField(values, "gamma", grid)


def log_filter(E, grid: GridDomain | None = None) -> ConditioningField:
    E = _check_energy(E)
    top = E.max()
    if top == 0:
        return ConditioningField(np.zeros_like(E), "log", grid)
    # log(E / max) differs from log(E) by a constant, which the normalization removes;
    # dividing first keeps power-of-two rescalings exact.
    logs = np.log(np.maximum(E / top, LOG_FLOOR))
    return ConditioningField(FIELD_MAX * _normalize(logs), "log", grid)


def make_field(E, filter: str, v_star: float, grid: GridDomain | None = None) -> ConditioningField:
    """Dispatch on the filter name; ``"none"`` gives the all-zero field."""
    if filter == "gamma":
        return gamma_filter(E, v_star, grid)
    if filter == "log":
        return log_filter(E, grid)
    if filter == "none":
        return ConditioningField(np.zeros(np.asarray(E).size), "none", grid)
    raise ParameterError(f"unknown filter {filter!r}; expected one of {FILTERS}")


def sample_lattice(img: np.ndarray, gx, gy) -> np.ndarray:
    # img is (nely, nelx); gx, gy are positions in units of element centers
    # (center of column i sits at gx = i). Outside the center lattice the
    # coordinate is clamped to the nearest center.
    ny, nx = img.shape
    gx = np.clip(np.asarray(gx, dtype=float), 0, nx - 1)
    gy = np.clip(np.asarray(gy, dtype=float), 0, ny - 1)
    i0 = np.minimum(np.floor(gx).astype(int), max(nx - 2, 0))
    j0 = np.minimum(np.floor(gy).astype(int), max(ny - 2, 0))
    i1 = np.minimum(i0 + 1, nx - 1)
    j1 = np.minimum(j0 + 1, ny - 1)
    tx = gx - i0
    ty = gy - j0
    return ((1 - tx) * (1 - ty) * img[j0, i0] + tx * (1 - ty) * img[j0, i1]
            + (1 - tx) * ty * img[j1, i0] + tx * ty * img[j1, i1])


def sample_bilinear(field: ConditioningField, x, y):
    """Bilinear interpolation of element-center values at normalized coordinates.

    Coordinates follow the network convention: the domain is centered at the
    origin, the longest edge spans ``[-0.5, 0.5]`` and y points up.
    Accepts scalars or arrays.
    """
    grid = field.grid
    if grid is None:
        raise ParameterError("field has no grid attached")
    scale = max(grid.nelx, grid.nely)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hx, hy = grid.nelx / (2 * scale), grid.nely / (2 * scale)
    tol = 1e-12
    if np.any(np.abs(x) > hx + tol) or np.any(np.abs(y) > hy + tol):
        raise ParameterError("sample point outside the domain")
    gx = x * scale + grid.nelx / 2 - 0.5
    gy = grid.nely / 2 - y * scale - 0.5
    out = sample_lattice(field.as_image(), gx, gy)
    return float(out) if out.ndim == 0 else out


def write_field_csv(path, field: ConditioningField) -> None:
    """Write the field as a row-major float grid, one image row per line, top row first."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in field.as_image():
            writer.writerow([repr(float(v)) for v in row])
