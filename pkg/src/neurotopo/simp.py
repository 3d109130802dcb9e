"""Density-based SIMP with a sensitivity filter and optimality-criteria updates.

This follows the classic 88-line compliance code: solve, compute ``dc``,
filter it with a linear hat kernel of radius ``rmin``, then update the
densities with the OC rule under move limits, bisecting the Lagrange
multiplier until the volume matches the target.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import NumericError, OptimizationAborted, ParameterError
from .fem import GridDomain, assemble_and_solve, compliance_sensitivity
from .optimize import ConvergenceHistory
from .problems import ProblemSpec

RHO_MIN = 1e-3
VOLUME_TOL = 1e-6
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class SIMPConfig:
    rmin: float = 1.5
    move: float = 0.2
    eta: float = 0.5
    max_iter: int = 400
    tol: float = 0.01

    def __post_init__(self):
        if not 0 < self.move <= 1:
            raise ParameterError(f"move limit must lie in (0, 1], got {self.move}")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")


@lru_cache(maxsize=16)
def filter_matrix(nelx: int, nely: int, rmin: float) -> sp.csr_matrix:
    """Sparse weights ``H[e, i] = max(0, rmin - dist(e, i))`` between element centers."""
    r = int(np.ceil(rmin)) - 1
    rows, cols, vals = [], [], []
    for i1 in range(nelx):
        for j1 in range(nely):
            e1 = i1 * nely + j1
            for i2 in range(max(i1 - r, 0), min(i1 + r + 1, nelx)):
                for j2 in range(max(j1 - r, 0), min(j1 + r + 1, nely)):
                    w = rmin - np.hypot(i1 - i2, j1 - j2)
                    if w > 0:
                        rows.append(e1)
                        cols.append(i2 * nely + j2)
                        vals.append(w)
    n = nelx * nely
    H = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if H.nnz == 0:
        H = sp.identity(n, format="csr")
    return H


def sensitivity_filter(dc: np.ndarray, rho: np.ndarray, rmin: float, domain: GridDomain) -> np.ndarray:
    """``dc_hat_e = sum_i H_ei rho_i dc_i / (max(rho_e, 1e-3) sum_i H_ei)``.

    For ``rmin <= 1`` the kernel reduces to the element itself and the input is
    returned unchanged.
    """
    dc = np.asarray(dc, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if rmin <= 1:
        return dc.copy()
    H = filter_matrix(domain.nelx, domain.nely, float(rmin))
    Hs = np.asarray(H.sum(axis=1)).ravel()
    return (H @ (rho * dc)) / Hs / np.maximum(RHO_MIN, rho)


def oc_update(rho: np.ndarray, dc: np.ndarray, volfrac: float, cfg: SIMPConfig | None = None,
              active: np.ndarray | None = None) -> np.ndarray:
    """Optimality-criteria step with move limits.

    The multiplier is bisected on ``[0, 1e9]`` until the mean active density is
    within 1e-6 of ``volfrac``. Passive entries (``active == False``) stay at
    ``RHO_MIN``.
    """
    cfg = cfg or SIMPConfig()
    rho = np.asarray(rho, dtype=float)
    dc = np.asarray(dc, dtype=float)
    if np.any(dc > 0):
        raise ParameterError("OC update needs non-positive sensitivities")
    if active is None:
        active = np.ones(rho.shape, dtype=bool)
    lo_bound = np.maximum(RHO_MIN, rho - cfg.move)
    hi_bound = np.minimum(1.0, rho + cfg.move)
    ratio = (-dc) ** cfg.eta

    l1, l2 = 0.0, 1e9
    for _ in range(MAX_BISECTIONS):
        lmid = 0.5 * (l1 + l2)
        new = np.clip(rho * ratio / lmid**cfg.eta, lo_bound, hi_bound)
        new[~active] = RHO_MIN
        vol = new[active].mean()
        if abs(vol - volfrac) <= VOLUME_TOL:
            return new
        if vol > volfrac:
            l1 = lmid
        else:
            l2 = lmid
    raise NumericError(f"OC bisection did not reach the volume target (off by {vol - volfrac:.2e})")


def run_simp(problem: ProblemSpec, cfg: SIMPConfig | None = None) -> ConvergenceHistory:
    """Iterate solve, filter and OC until the largest density change drops below ``cfg.tol``."""
    cfg = cfg or SIMPConfig()
    t0 = time.perf_counter()
    d, active = problem.domain, problem.active
    rho = np.full(d.n_elements, float(problem.volfrac))
    rho[~active] = RHO_MIN
    hist = ConvergenceHistory()
    for it in range(cfg.max_iter):
        try:
            sol = assemble_and_solve(d, problem.bc, rho, problem.material)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            raise OptimizationAborted(f"iteration {it}: {exc}", hist) from exc
        hist.append(it, sol.compliance, rho[active].mean(), sol.compliance, 0.0)
        hist.density = rho
        if problem.volfrac >= 1:
            break
        dc = compliance_sensitivity(sol, rho, problem.material)
        dc = sensitivity_filter(dc, rho, cfg.rmin, d)
        new = oc_update(rho, np.minimum(dc, 0.0), problem.volfrac, cfg, active)
        change = np.max(np.abs(new - rho))
        rho = new
        if change < cfg.tol:
            break
    hist.wall_time = time.perf_counter() - t0
    return hist
