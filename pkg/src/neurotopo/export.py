"""Writers for density rasters: binary PGM (P5) and plain float CSV."""
from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .fem import GridDomain


def density_image(rho: np.ndarray, domain: GridDomain) -> np.ndarray:
    """Element densities as a (nely, nelx) image, row 0 at the top."""
    return np.asarray(rho, dtype=float).reshape(domain.nelx, domain.nely).T


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit graymap; density 1 is black and density 0 is white."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    pixels = np.round(255.0 * (1.0 - img)).astype(np.uint8)
    h, w = pixels.shape
    with open(Path(path), "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a P5 file written by :func:`write_pgm` back into uint8 pixels."""
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path} is not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError("only 8-bit graymaps are supported")
    return np.frombuffer(data[m.end(): m.end() + w * h], dtype=np.uint8).reshape(h, w)


def write_grid_csv(path, image: np.ndarray) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(image, dtype=float):
            writer.writerow([repr(float(v)) for v in row])
