"""Online training of the density network against the FE compliance.

Each epoch evaluates the network at every element center, solves the FE
problem on the resulting densities and takes one Adam step on::

    L = c / c0 + alpha * (rho_bar / volfrac - 1)^2

``c0`` is the compliance of the uniform design ``rho = volfrac``; ``alpha``
grows linearly from ``alpha0`` by ``alpha_increment`` per epoch up to
``alpha_max``. Passive elements are pinned to ``rho_min`` and excluded from
``rho_bar``.
"""
from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .condfield import FILTERS, ConditioningField, sample_lattice, make_field
from .errors import OptimizationAborted, ParameterError
from .fem import FieldSolution, assemble_and_solve, compliance_sensitivity
from .network import AdamState, NetworkParams, activations, adam_step, backward, forward, init_params
from .problems import ProblemSpec, normalized_centers

RHO_MIN = 1e-3
HISTORY_HEADER = ("epoch", "compliance", "vol_frac", "loss", "alpha")


@dataclass(frozen=True)
class OptimizationConfig:
    epochs: int = 1000
    filter: str = "none"
    seed: int = 0
    n_kernels: int = 128
    lr: float = 0.002
    alpha0: float = 1.0
    alpha_max: float = 100.0
    alpha_increment: float = 0.25

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.filter not in FILTERS:
            raise ParameterError(f"unknown filter {self.filter!r}; expected one of {FILTERS}")
        if self.n_kernels < 1:
            raise ParameterError("n_kernels must be >= 1")
        if self.lr <= 0:
            raise ParameterError("learning rate must be positive")


@dataclass(frozen=True)
class LossTerms:
    c: float
    c0: float
    rho_bar: float
    alpha: float
    volfrac: float

    @property
    def L(self) -> float:
        return loss(self)


@dataclass
class ConvergenceHistory:
    epoch: list = field(default_factory=list)
    compliance: list = field(default_factory=list)
    vol_frac: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    density: np.ndarray | None = None
    params: NetworkParams | None = None
    field: ConditioningField | None = None
    wall_time: float = 0.0

    def __len__(self):
        return len(self.epoch)

    def append(self, epoch, c, vol, L, alpha):
        self.epoch.append(int(epoch))
        self.compliance.append(float(c))
        self.vol_frac.append(float(vol))
        self.loss.append(float(L))
        self.alpha.append(float(alpha))

    @property
    def final_compliance(self) -> float:
        return self.compliance[-1]

    def rows(self):
        return zip(self.epoch, self.compliance, self.vol_frac, self.loss, self.alpha)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_HEADER)
            for e, c, v, L, a in self.rows():
                w.writerow([e, repr(c), repr(v), repr(L), repr(a)])

    @classmethod
    def from_csv(cls, path) -> "ConvergenceHistory":
        hist = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for r in reader:
                hist.append(int(r["epoch"]), float(r["compliance"]), float(r["vol_frac"]),
                            float(r["loss"]), float(r["alpha"]))
        return hist


def alpha_at(epoch: int, config: OptimizationConfig) -> float:
    return min(config.alpha_max, config.alpha0 + config.alpha_increment * epoch)


def loss(terms: LossTerms) -> float:
    if terms.c0 <= 0:
        raise ParameterError(f"reference compliance must be positive, got {terms.c0}")
    return terms.c / terms.c0 + terms.alpha * (terms.rho_bar / terms.volfrac - 1.0) ** 2


def loss_density_gradient(terms: LossTerms, dc_drho: np.ndarray, active: np.ndarray) -> np.ndarray:
    """dL/drho for every element; passive entries are zero."""
    if terms.c0 <= 0:
        raise ParameterError(f"reference compliance must be positive, got {terms.c0}")
    active = np.asarray(active, dtype=bool)
    n_active = int(active.sum())
    vol_term = terms.alpha * 2.0 * (terms.rho_bar / terms.volfrac - 1.0) / (terms.volfrac * n_active)
    return np.where(active, dc_drho / terms.c0 + vol_term, 0.0)


def initial_reference(problem: ProblemSpec) -> tuple[float, np.ndarray]:
    """Compliance and raw element energies of the uniform design rho = volfrac."""
    rho = np.full(problem.domain.n_elements, float(problem.volfrac))
    if problem.passive is not None:
        rho[problem.passive] = RHO_MIN
    sol = assemble_and_solve(problem.domain, problem.bc, rho, problem.material)
    return sol.compliance, sol.strain_energy.copy()


def conditioning_field(problem: ProblemSpec, filter: str, raw_energy=None) -> ConditioningField:
    if raw_energy is None:
        _, raw_energy = initial_reference(problem)
    return make_field(raw_energy, filter, problem.volfrac, problem.domain)


class Pipeline:
    """Fixed inputs of one run: coordinates, conditioning column, ``c0`` and the active mask.

    ``evaluate`` maps network parameters to the loss terms, the FE solution and
    the parameter gradients, which is all an epoch needs.
    """

    def __init__(self, problem: ProblemSpec, filter: str = "none"):
        self.problem = problem
        c0, raw = initial_reference(problem)
        if c0 <= 0:
            raise ParameterError("problem has zero reference compliance (no effective load)")
        self.c0 = c0
        self.field = make_field(raw, filter, problem.volfrac, problem.domain)
        x, y = normalized_centers(problem.domain)
        self.X = np.column_stack([x, y, self.field.values])
        self.active = problem.active
        self.n_active = int(self.active.sum())

    def density(self, params: NetworkParams, cache=None) -> np.ndarray:
        rho = (cache or activations(params, self.X))[2]
        if self.problem.passive is not None:
            rho = np.where(self.active, rho, RHO_MIN)
        return rho

    def evaluate(self, params: NetworkParams, alpha: float, need_grad: bool = True):
        p = self.problem
        cache = activations(params, self.X)
        rho = self.density(params, cache)
        sol = assemble_and_solve(p.domain, p.bc, rho, p.material)
        rho_bar = float(np.mean(rho[self.active]))
        terms = LossTerms(sol.compliance, self.c0, rho_bar, alpha, p.volfrac)
        if not need_grad:
            return terms, sol, rho, None
        dc = compliance_sensitivity(sol, rho, p.material)
        g = loss_density_gradient(terms, dc, self.active)
        return terms, sol, rho, backward(params, self.X, g, cache)


def run_optimization(problem: ProblemSpec, config: OptimizationConfig | None = None,
                     params: NetworkParams | None = None) -> ConvergenceHistory:
    """Train for exactly ``config.epochs`` epochs and return the per-epoch history.

    Epoch ``t`` records the design evaluated before its Adam step, so the first
    row is the all-0.5 initial network and ``history.density`` matches the last row.
    """
    config = config or OptimizationConfig()
    if not 0 < problem.volfrac < 1:
        raise ParameterError(f"target volume fraction must lie in (0, 1), got {problem.volfrac}")
    t_start = time.perf_counter()
    pipe = Pipeline(problem, config.filter)
    params = params or init_params(config.n_kernels, config.seed)
    state = AdamState.for_params(params, lr=config.lr)
    hist = ConvergenceHistory(field=pipe.field)

    for epoch in range(config.epochs):
        alpha = alpha_at(epoch, config)
        last = epoch == config.epochs - 1
        try:
            terms, _, rho, grads = pipe.evaluate(params, alpha, need_grad=not last)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            hist.params, hist.wall_time = params, time.perf_counter() - t_start
            raise OptimizationAborted(f"epoch {epoch}: {exc}", hist) from exc
        hist.append(epoch, terms.c, terms.rho_bar, terms.L, alpha)
        hist.density = rho
        if not last:
            params, state = adam_step(params, grads, state)

    hist.params = params
    hist.wall_time = time.perf_counter() - t_start
    err = abs(hist.vol_frac[-1] - problem.volfrac) / problem.volfrac
    if config.epochs > 1 and err > 0.01:
        warnings.warn(f"final volume fraction {hist.vol_frac[-1]:.4f} is {100 * err:.2f}% "
                      f"off the target {problem.volfrac}", stacklevel=2)
    return hist


def render_density(params: NetworkParams, problem: ProblemSpec, upsample: int = 1,
                   field: ConditioningField | None = None) -> np.ndarray:
    """Evaluate the network on an ``upsample``-times finer raster.

    Returns a ``(upsample * nely, upsample * nelx)`` array with row 0 at the
    top. Conditioning values between element centers are bilinearly
    interpolated; ``field=None`` means an unconditioned network.
    """
    f = int(upsample)
    if f < 1:
        raise ParameterError(f"upsample factor must be >= 1, got {upsample}")
    d = problem.domain
    x, y = normalized_centers(d, f)
    if field is None or field.filter == "none":
        e = np.zeros_like(x)
    else:
        # sub-cell centers in units of the element-center lattice
        gx = (np.arange(f * d.nelx) + 0.5) / f - 0.5
        gy = (np.arange(f * d.nely) + 0.5) / f - 0.5
        gxx, gyy = np.meshgrid(gx, gy, indexing="ij")
        e = sample_lattice(field.as_image(), gxx.ravel(), gyy.ravel())
    rho = forward(params, np.column_stack([x, y, e]))
    if problem.passive is not None:
        parent = problem.passive.reshape(d.nelx, d.nely).repeat(f, axis=0).repeat(f, axis=1).ravel()
        rho = np.where(parent, RHO_MIN, rho)
    return rho.reshape(f * d.nelx, f * d.nely).T
