"""Problem statements, the config schema and a small library of presets.

Config schema (YAML or JSON mapping)::

    preset: beam                 # optional, expanded first; other keys override it
    preset_args: {nelx: 80}      # optional keyword arguments for the preset
    nelx: 40
    nely: 20
    volfrac: 0.3
    supports:                    # node rectangles, inclusive, (column, row), row 0 = top
      - {nodes: [0, 0, 0, 20], dofs: xy}
    loads:
      - {node: [40, 10], fx: 0.0, fy: -1.0}
    passive:                     # element rectangles, inclusive, (column, row)
      - [20, 5, 29, 14]
    material: {E0: 1.0, Emin: 1.0e-9, nu: 0.3, penal: 3.0}

``dofs`` is one of ``x``, ``y`` or ``xy``. Forces are dimensionless; y points up,
so ``fy: -1`` is a downward unit load.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ParameterError
from .fem import BoundarySpec, GridDomain, MaterialModel


@dataclass(frozen=True)
class ProblemSpec:
    domain: GridDomain
    bc: BoundarySpec
    volfrac: float
    passive: np.ndarray | None = None
    material: MaterialModel = field(default_factory=MaterialModel)
    name: str = "custom"

    def __post_init__(self):
        if self.passive is not None:
            mask = np.asarray(self.passive, dtype=bool)
            if mask.shape != (self.domain.n_elements,):
                raise ParameterError(f"passive mask has shape {mask.shape}, expected ({self.domain.n_elements},)")
            if mask.all():
                raise ParameterError("passive mask leaves no active element")
            object.__setattr__(self, "passive", mask)
        self.bc.validate(self.domain)

    @property
    def active(self) -> np.ndarray:
        if self.passive is None:
            return np.ones(self.domain.n_elements, dtype=bool)
        return ~self.passive

    def with_volfrac(self, volfrac: float) -> "ProblemSpec":
        return ProblemSpec(self.domain, self.bc, volfrac, self.passive, self.material, self.name)


def normalized_centers(domain: GridDomain, upsample: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (x, y) of sub-cell centers, in element (column-major) order.

    The domain is centered at the origin with the longest edge spanning
    [-0.5, 0.5]; y points up. With ``upsample=f`` each element is split into
    ``f x f`` sub-cells and the result is ordered column-major over the
    refined ``(f*nelx, f*nely)`` grid.
    """
    f = int(upsample)
    scale = max(domain.nelx, domain.nely)
    cols = (np.arange(f * domain.nelx) + 0.5) / f
    rows = (np.arange(f * domain.nely) + 0.5) / f
    x = (cols - domain.nelx / 2) / scale
    y = (domain.nely / 2 - rows) / scale
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return xx.ravel(), yy.ravel()


# --- config parsing -------------------------------------------------------

_DOF_OFFSETS = {"x": (0,), "y": (1,), "xy": (0, 1)}


def _rect(values, what):
    try:
        i0, j0, i1, j1 = (int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{what} must be four integers [i0, j0, i1, j1]") from exc
    return min(i0, i1), min(j0, j1), max(i0, i1), max(j0, j1)


def problem_from_config(cfg: dict) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from a (preset-resolved) config mapping."""
    cfg = resolve_config(cfg)
    try:
        domain = GridDomain(int(cfg["nelx"]), int(cfg["nely"]))
        volfrac = float(cfg["volfrac"])
    except KeyError as exc:
        raise ParameterError(f"config is missing required key {exc}") from exc
    if not 0 < volfrac <= 1:
        raise ParameterError(f"volfrac must lie in (0, 1], got {volfrac}")

    fixed = set()
    for sup in cfg.get("supports", []):
        i0, j0, i1, j1 = _rect(sup.get("nodes"), "support nodes")
        dofs = sup.get("dofs", "xy")
        if dofs not in _DOF_OFFSETS:
            raise ParameterError(f"support dofs must be one of x, y, xy; got {dofs!r}")
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                n = domain.node(i, j)
                fixed.update(2 * n + k for k in _DOF_OFFSETS[dofs])

    loads: dict[int, float] = {}
    for ld in cfg.get("loads", []):
        try:
            i, j = (int(v) for v in ld["node"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError("each load needs node: [column, row]") from exc
        n = domain.node(i, j)
        for k, key in enumerate(("fx", "fy")):
            v = float(ld.get(key, 0.0))
            if v:
                loads[2 * n + k] = loads.get(2 * n + k, 0.0) + v

    passive = None
    if cfg.get("passive"):
        passive = np.zeros(domain.n_elements, dtype=bool)
        for rect in cfg["passive"]:
            i0, j0, i1, j1 = _rect(rect, "passive rectangle")
            if not (0 <= i0 and i1 < domain.nelx and 0 <= j0 and j1 < domain.nely):
                raise ParameterError(f"passive rectangle {rect} outside the grid")
            for i in range(i0, i1 + 1):
                passive[i * domain.nely + j0: i * domain.nely + j1 + 1] = True

    material = MaterialModel(**cfg.get("material", {}))
    return ProblemSpec(domain, BoundarySpec(tuple(fixed), loads), volfrac, passive,
                       material, name=str(cfg.get("name", cfg.get("preset", "custom"))))


def resolve_config(cfg: dict) -> dict:
    """Expand ``preset`` into explicit keys; explicit keys win."""
    cfg = copy.deepcopy(dict(cfg))
    name = cfg.pop("preset", None)
    args = cfg.pop("preset_args", {}) or {}
    if name is None:
        return cfg
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    base = PRESETS[name](**args)
    base.update(cfg)
    base.setdefault("name", name)
    return base


def load_config(path) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterError(f"config {path} must be a mapping")
    return data


# --- presets --------------------------------------------------------------

def beam(nelx=40, nely=20, volfrac=0.3):
    """Cantilever: left edge clamped, unit downward load at the middle of the right edge."""
    return {
        "nelx": nelx, "nely": nely, "volfrac": volfrac,
        "supports": [{"nodes": [0, 0, 0, nely], "dofs": "xy"}],
        "loads": [{"node": [nelx, nely // 2], "fy": -1.0}],
    }


def parametric_load_nodes(nelx=40, nely=20):
    """The 50 candidate load nodes of the parametric family.

    Approximate reconstruction: a 10 x 5 lattice of nodes covering the lower
    right quarter of the domain, from near the center out to the bottom-right
    corner.
    """
    cols = np.linspace(nelx // 2 + 2, nelx, 10).round().astype(int)
    rows = np.linspace(nely // 2 + 2, nely, 5).round().astype(int)
    return [(int(i), int(j)) for j in rows for i in cols]


def parametric(load=0, volfrac=0.3, nelx=40, nely=20):
    """Member ``load`` (0..49) of the parametric family: left edge clamped,
    unit downward load at one of :func:`parametric_load_nodes`."""
    nodes = parametric_load_nodes(nelx, nely)
    if not 0 <= load < len(nodes):
        raise ParameterError(f"parametric load index must lie in [0, {len(nodes)}), got {load}")
    return {
        "nelx": nelx, "nely": nely, "volfrac": volfrac,
        "supports": [{"nodes": [0, 0, 0, nely], "dofs": "xy"}],
        "loads": [{"node": list(nodes[load]), "fy": -1.0}],
    }


# The square cases below are approximate reconstructions of the usual 60x60
# benchmark layouts: support extents and obstacle rectangles are read off
# figures, then scaled with the grid size.

def _s(v, size):
    return int(round(v * size / 60))


def case1(size=60, volfrac=0.2):
    """Bridge-like square: bottom corners pinned, downward load at the top center."""
    return {
        "nelx": size, "nely": size, "volfrac": volfrac,
        "supports": [{"nodes": [0, size, _s(2, size), size], "dofs": "xy"},
                     {"nodes": [size - _s(2, size), size, size, size], "dofs": "xy"}],
        "loads": [{"node": [size // 2, 0], "fy": -1.0}],
    }


def case2(size=60, volfrac=0.2):
    """L-bracket: top-right quadrant passive, top edge clamped, tip load on the right."""
    h = size // 2
    return {
        "nelx": size, "nely": size, "volfrac": volfrac,
        "supports": [{"nodes": [0, 0, h, 0], "dofs": "xy"}],
        "loads": [{"node": [size, h + _s(4, size)], "fy": -1.0}],
        "passive": [[h, 0, size - 1, h - 1]],
    }


def case3(size=60, volfrac=0.2):
    """Case 1 supports and load with a central rectangular obstacle."""
    cfg = case1(size, volfrac)
    cfg["passive"] = [[_s(22, size), _s(26, size), _s(37, size), _s(41, size)]]
    return cfg


def case4(size=60, volfrac=0.2):
    """Cantilever with two obstacles between the clamped edge and the corner load."""
    return {
        "nelx": size, "nely": size, "volfrac": volfrac,
        "supports": [{"nodes": [0, 0, 0, size], "dofs": "xy"}],
        "loads": [{"node": [size, size], "fy": -1.0}],
        "passive": [[_s(15, size), _s(10, size), _s(24, size), _s(24, size)],
                    [_s(35, size), _s(36, size), _s(44, size), _s(50, size)]],
    }


PRESETS = {
    "beam": beam,
    "parametric": parametric,
    "case1": case1,
    "case2": case2,
    "case3": case3,
    "case4": case4,
    "case1_120": lambda volfrac=0.2: case1(120, volfrac),
    "case1_180": lambda volfrac=0.2: case1(180, volfrac),
}
