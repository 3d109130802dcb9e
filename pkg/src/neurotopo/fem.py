"""Linear-elastic finite element analysis on a regular grid of Q4 elements.

Numbering conventions
---------------------
The domain is ``nelx`` by ``nely`` unit-square elements. Nodes are numbered
column by column, top to bottom::

    node(i, j) = i * (nely + 1) + j      i = 0..nelx (column), j = 0..nely (row, 0 = top)

Each node carries two DOFs, ``2 * node`` (x) and ``2 * node + 1`` (y). The
physical y axis points up, so a downward load is a negative y force.

Elements are numbered column-major the same way::

    elem(i, j) = i * nely + j            i = 0..nelx-1, j = 0..nely-1

so ``rho.reshape(nelx, nely).T`` gives an image with row 0 at the top. The
local DOF order of an element is counter-clockwise starting at the lower-left
node: LL, LR, UR, UL.

Strain energy per element is ``E(rho_e) * u_e^T k0 u_e`` without the usual
factor 1/2, so that the element energies sum to the compliance ``f^T u``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .errors import NumericError, ParameterError, SolverError


@dataclass(frozen=True)
class GridDomain:
    nelx: int
    nely: int

    def __post_init__(self):
        if int(self.nelx) < 1 or int(self.nely) < 1:
            raise ParameterError(f"grid must be at least 1x1, got {self.nelx}x{self.nely}")

    @property
    def n_elements(self) -> int:
        return self.nelx * self.nely

    @property
    def n_nodes(self) -> int:
        return (self.nelx + 1) * (self.nely + 1)

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    def node(self, i: int, j: int) -> int:
        """Node index at column ``i`` and row ``j`` (row 0 is the top edge)."""
        if not (0 <= i <= self.nelx and 0 <= j <= self.nely):
            raise ParameterError(f"node ({i}, {j}) outside {self.nelx}x{self.nely} grid")
        return i * (self.nely + 1) + j

    def element(self, i: int, j: int) -> int:
        return i * self.nely + j


@dataclass(frozen=True)
class BoundarySpec:
    """Fixed DOFs and point loads (DOF index -> force)."""

    fixed_dofs: tuple
    loads: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "fixed_dofs", tuple(sorted({int(d) for d in self.fixed_dofs})))
        object.__setattr__(self, "loads", {int(k): float(v) for k, v in dict(self.loads).items()})

    def validate(self, domain: GridDomain) -> None:
        if not self.fixed_dofs:
            raise ParameterError("at least one DOF must be fixed")
        ndof = domain.n_dofs
        bad = [d for d in self.fixed_dofs if not 0 <= d < ndof]
        bad += [d for d in self.loads if not 0 <= d < ndof]
        if bad:
            raise ParameterError(f"DOF indices out of range [0, {ndof}): {bad[:5]}")

    def load_vector(self, domain: GridDomain) -> np.ndarray:
        f = np.zeros(domain.n_dofs)
        fixed = set(self.fixed_dofs)
        for dof, value in self.loads.items():
            if dof in fixed:
                warnings.warn(f"load on fixed DOF {dof} ignored", stacklevel=3)
                continue
            f[dof] += value
        return f


@dataclass(frozen=True)
class MaterialModel:
    E0: float = 1.0
    Emin: float = 1e-9
    nu: float = 0.3
    penal: float = 3.0

    def __post_init__(self):
        if not 0 < self.Emin < self.E0:
            raise ParameterError("need 0 < Emin < E0")
        if not 0 <= self.nu < 0.5:
            raise ParameterError(f"Poisson ratio must lie in [0, 0.5), got {self.nu}")
        if self.penal < 1:
            raise ParameterError(f"penalty exponent must be >= 1, got {self.penal}")

    def stiffness(self, rho: np.ndarray) -> np.ndarray:
        """SIMP interpolation ``Emin + rho^p (E0 - Emin)``."""
        return self.Emin + rho**self.penal * (self.E0 - self.Emin)


@dataclass(frozen=True)
class FieldSolution:
    domain: GridDomain
    u: np.ndarray
    strain_energy: np.ndarray
    compliance: float


def element_stiffness(nu: float = 0.3) -> np.ndarray:
    """Closed-form 8x8 plane-stress stiffness of a unit square with E = 1."""
    if not 0 <= nu < 0.5:
        raise ParameterError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    k = np.array([
        1 / 2 - nu / 6, 1 / 8 + nu / 8, -1 / 4 - nu / 12, -1 / 8 + 3 * nu / 8,
        -1 / 4 + nu / 12, -1 / 8 - nu / 8, nu / 6, 1 / 8 - 3 * nu / 8,
    ])
    idx = np.array([
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ])
    return k[idx] / (1 - nu**2)


@lru_cache(maxsize=32)
def element_dofs(nelx: int, nely: int) -> np.ndarray:
    """(n, 8) global DOF indices of every element in local LL, LR, UR, UL order."""
    elx, ely = np.meshgrid(np.arange(nelx), np.arange(nely), indexing="ij")
    n1 = ((nely + 1) * elx + ely).ravel()        # upper-left node
    n2 = ((nely + 1) * (elx + 1) + ely).ravel()  # upper-right node
    edof = np.column_stack([
        2 * n1 + 2, 2 * n1 + 3, 2 * n2 + 2, 2 * n2 + 3,
        2 * n2, 2 * n2 + 1, 2 * n1, 2 * n1 + 1,
    ])
    edof.flags.writeable = False
    return edof


@lru_cache(maxsize=32)
def _banded_pattern(nelx: int, nely: int, fixed: tuple):
    # Upper-banded layout of the reduced (free-DOF) stiffness matrix, built once
    # per grid/support combination. ``slot`` maps each kept element-matrix entry
    # to its flat position in the (bandwidth + 1, m) LAPACK band array.
    ndof = 2 * (nelx + 1) * (nely + 1)
    edof = element_dofs(nelx, nely)
    free = np.setdiff1d(np.arange(ndof), np.asarray(fixed, dtype=int))
    remap = -np.ones(ndof, dtype=np.int64)
    remap[free] = np.arange(free.size)
    rows = remap[np.repeat(edof, 8, axis=1)].ravel()
    cols = remap[np.tile(edof, (1, 8))].ravel()
    keep = (rows >= 0) & (rows <= cols)
    bw = int(np.max(cols[keep] - rows[keep])) if np.any(keep) else 0
    m = free.size
    slot = (bw + rows[keep] - cols[keep]) * m + cols[keep]
    return free, keep, slot, bw


def _factorize(young, k0, pattern):
    free, keep, slot, bw = pattern
    m = free.size
    values = (young[:, None] * k0.ravel()[None, :]).ravel()[keep]
    ab = np.bincount(slot, weights=values, minlength=(bw + 1) * m).reshape(bw + 1, m)
    try:
        chol = cholesky_banded(ab, lower=False, check_finite=False)
    except LinAlgError as exc:
        raise SolverError(f"stiffness matrix is not positive definite: {exc}") from exc
    piv = chol[-1] ** 2
    if piv.min() <= 1e-14 * piv.max():
        raise SolverError("stiffness matrix is numerically singular (insufficient supports?)")
    return chol


def assemble_and_solve(
    domain: GridDomain,
    bc: BoundarySpec,
    rho: np.ndarray,
    mat: MaterialModel | None = None,
) -> FieldSolution:
    """Solve ``K(rho) u = f`` and return displacements, element energies and compliance.

    The reduced system on the free DOFs is factorized with a banded Cholesky
    decomposition; column-major node numbering keeps the half-bandwidth at
    ``2 * nely + 5``.
    """
    mat = mat or MaterialModel()
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (domain.n_elements,):
        raise ParameterError(f"rho has shape {rho.shape}, expected ({domain.n_elements},)")
    bc.validate(domain)
    f = bc.load_vector(domain)

    k0 = element_stiffness(mat.nu)
    edof = element_dofs(domain.nelx, domain.nely)
    young = mat.stiffness(rho)
    u = np.zeros(domain.n_dofs)

    pattern = _banded_pattern(domain.nelx, domain.nely, bc.fixed_dofs)
    free = pattern[0]
    if free.size and np.any(f[free]):
        chol = _factorize(young, k0, pattern)
        u[free] = cho_solve_banded((chol, False), f[free], check_finite=False)
        if not np.all(np.isfinite(u)):
            raise NumericError("non-finite displacement")

    ue = u[edof]
    energy = young * np.sum((ue @ k0) * ue, axis=1)
    # compliance is the sum of element energies rather than f.u: the two agree
    # only up to the solver residual, and the energy sum is what the
    # conditioning field and the sensitivities are built from
    compliance = float(energy.sum())
    if not np.isfinite(compliance):
        raise NumericError("non-finite compliance")
    return FieldSolution(domain=domain, u=u, strain_energy=energy, compliance=compliance)


def strain_energy_field(solution: FieldSolution) -> np.ndarray:
    """Per-element strain energy; sums to the compliance."""
    return solution.strain_energy.copy()


def unit_energy(solution: FieldSolution, nu: float = 0.3) -> np.ndarray:
    """``u_e^T k0 u_e`` for every element, i.e. the energy at unit stiffness."""
    d = solution.domain
    ue = solution.u[element_dofs(d.nelx, d.nely)]
    return np.sum((ue @ element_stiffness(nu)) * ue, axis=1)


def compliance_sensitivity(
    solution: FieldSolution, rho: np.ndarray, mat: MaterialModel | None = None
) -> np.ndarray:
    """dc/drho_e = -p rho_e^(p-1) (E0 - Emin) u_e^T k0 u_e (always <= 0)."""
    mat = mat or MaterialModel()
    rho = np.asarray(rho, dtype=float)
    return -mat.penal * rho ** (mat.penal - 1) * (mat.E0 - mat.Emin) * unit_energy(solution, mat.nu)
