"""Parametric sweeps over load positions and volume fractions.

A sweep spec (YAML or JSON) looks like::

    problem: {preset: parametric}   # base problem config, see problems.py
    loads: [0, 5, 10]               # values substituted for preset_args.load
    volfracs: [0.2, 0.3, 0.4, 0.5]
    filters: [none, gamma, log]
    seeds: [0, 1]
    epochs: 400
    simp: true                      # also run the SIMP baseline per (load, volfrac)
    n_kernels: 128
    lr: 0.002

Every (load, volfrac, seed) cell runs each filter arm with the same seed;
the ``none`` arm is the baseline that speedups are measured against and is
always run, but only reported as a record when listed in ``filters``.

Two speedups are recorded. ``speedup`` compares raw compliance against the
baseline's final value. Every network starts at a uniform density of 0.5, so
when the target volume is below 0.5 the early designs are over budget and
stiffer than anything feasible; at low targets this alone can make the raw
comparison succeed at epoch 0, for the baseline against itself as well.
``feasible_speedup`` only counts epochs whose volume fraction is within
``volume_tol`` (1%) of the target.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .condfield import FILTERS
from .errors import ParameterError
from .optimize import ConvergenceHistory, OptimizationConfig, run_optimization
from .problems import load_config, problem_from_config
from .simp import SIMPConfig, run_simp

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("load", "volfrac", "seed", "filter", "final_compliance", "final_vol_frac",
                  "baseline_compliance", "speedup", "first_epoch_below", "feasible_speedup",
                  "simp_compliance", "error")


@dataclass(frozen=True)
class SweepSpec:
    problem: dict
    loads: tuple
    volfracs: tuple
    filters: tuple = ("none", "gamma", "log")
    seeds: tuple = (0, 1, 2)
    epochs: int = 400
    simp: bool = False
    n_kernels: int = 128
    lr: float = 0.002

    def __post_init__(self):
        for name in ("loads", "volfracs", "filters", "seeds"):
            value = tuple(getattr(self, name))
            if not value:
                raise ParameterError(f"sweep {name} must be non-empty")
            object.__setattr__(self, name, value)
        bad = [f for f in self.filters if f not in FILTERS]
        if bad:
            raise ParameterError(f"unknown filters {bad}; expected a subset of {FILTERS}")
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        for load, vf in itertools.product(self.loads, self.volfracs):
            problem_from_config(self.cell_config(load, vf))

    def cell_config(self, load, volfrac) -> dict:
        cfg = dict(self.problem)
        if "preset" in cfg:
            cfg["preset_args"] = {**cfg.get("preset_args", {}), "load": load}
        cfg["volfrac"] = volfrac
        return cfg

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        if "problem" not in known:
            known["problem"] = {"preset": "parametric"}
        if "loads" not in known or "volfracs" not in known:
            raise ParameterError("sweep spec needs 'loads' and 'volfracs'")
        return cls(**known)

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        return cls.from_dict(load_config(path))


@dataclass
class CellRecord:
    load: object
    volfrac: float
    seed: int
    filter: str
    final_compliance: float = float("nan")
    final_vol_frac: float = float("nan")
    baseline_compliance: float = float("nan")
    speedup: float = float("nan")
    first_epoch_below: int | None = None
    feasible_speedup: float = float("nan")
    simp_compliance: float = float("nan")
    error: str = ""
    history: ConvergenceHistory | None = field(default=None, repr=False)

    @property
    def no_improvement(self) -> bool:
        return self.first_epoch_below is None


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list

    @property
    def failures(self):
        return [r for r in self.records if r.error]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for r in self.records:
                w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def convergence_speedup(hist_cf: ConvergenceHistory, hist_base: ConvergenceHistory,
                        volfrac: float | None = None, volume_tol: float = 0.01) -> tuple[float, int | None]:
    """Percent of the epoch budget saved before the conditioned run undercuts the baseline.

    ``t*`` is the first epoch at which ``hist_cf`` compliance is strictly below
    the final compliance of ``hist_base``; the speedup is ``100 (T - t*) / T``.
    Returns ``(0.0, None)`` when no such epoch exists. With ``volfrac`` given,
    only epochs whose volume fraction lies within ``volume_tol`` (relative) of
    it are eligible.
    """
    T = len(hist_base)
    if T == 0 or len(hist_cf) == 0:
        raise ParameterError("histories must be non-empty")
    if len(hist_cf) != T:
        raise ParameterError(f"epoch budgets differ: {len(hist_cf)} vs {T}")
    hit = np.asarray(hist_cf.compliance) < hist_base.compliance[-1]
    if volfrac is not None:
        hit &= np.abs(np.asarray(hist_cf.vol_frac) / volfrac - 1.0) <= volume_tol
    below = np.nonzero(hit)[0]
    if below.size == 0:
        return 0.0, None
    t_star = int(below[0])
    return 100.0 * (T - t_star) / T, t_star


def _run_cell(spec: SweepSpec, load, volfrac, seed) -> list:
    problem = problem_from_config(spec.cell_config(load, volfrac))
    arms = list(spec.filters) if "none" in spec.filters else ["none", *spec.filters]
    hists, errors = {}, {}
    for filt in arms:
        cfg = OptimizationConfig(epochs=spec.epochs, filter=filt, seed=seed,
                                 n_kernels=spec.n_kernels, lr=spec.lr)
        try:
            hists[filt] = run_optimization(problem, cfg)
        except Exception as exc:  # one failed arm must not sink the sweep
            errors[filt] = f"{type(exc).__name__}: {exc}"
    base = hists.get("none")
    records = []
    for filt in spec.filters:
        rec = CellRecord(load, volfrac, seed, filt)
        if filt in errors:
            rec.error = errors[filt]
        else:
            h = hists[filt]
            rec.history = h
            rec.final_compliance = h.compliance[-1]
            rec.final_vol_frac = h.vol_frac[-1]
            if base is None:
                rec.error = "baseline failed: " + errors.get("none", "")
            else:
                rec.baseline_compliance = base.compliance[-1]
                rec.speedup, rec.first_epoch_below = convergence_speedup(h, base)
                rec.feasible_speedup = convergence_speedup(h, base, volfrac)[0]
        records.append(rec)
    log.info("cell load=%s volfrac=%s seed=%s: %s", load, volfrac, seed,
             ", ".join(f"{r.filter} {r.speedup:.1f}%" if not r.error else f"{r.filter} failed"
                       for r in records))
    return records


def _run_simp(spec: SweepSpec, load, volfrac) -> float:
    try:
        return run_simp(problem_from_config(spec.cell_config(load, volfrac)), SIMPConfig()).compliance[-1]
    except Exception:
        return float("nan")


def run_sweep(spec: SweepSpec, workers: int = 1, keep_histories: bool = False) -> SweepResult:
    """Run every cell; results are ordered by (load, volfrac, seed, filter) regardless of ``workers``."""
    cells = list(itertools.product(spec.loads, spec.volfracs, spec.seeds))
    pairs = list(itertools.product(spec.loads, spec.volfracs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cell_out = list(pool.map(_run_cell, *zip(*[(spec, *c) for c in cells])))
            simp_out = list(pool.map(_run_simp, *zip(*[(spec, *p) for p in pairs]))) if spec.simp else []
    else:
        cell_out = [_run_cell(spec, *c) for c in cells]
        simp_out = [_run_simp(spec, *p) for p in pairs] if spec.simp else []
    simp = dict(zip(pairs, simp_out))
    records = []
    for (load, vf, _), recs in zip(cells, cell_out):
        for r in recs:
            r.simp_compliance = simp.get((load, vf), float("nan"))
            if not keep_histories:
                r.history = None
            records.append(r)
    return SweepResult(spec, records)


def summarize(result: SweepResult) -> dict:
    """Per-filter aggregates plus compliance curves sorted by the baseline compliance."""
    out = {"filters": {}, "failures": [f"{r.load}/{r.volfrac}/{r.seed}/{r.filter}: {r.error}"
                                       for r in result.failures]}
    ok = [r for r in result.records if not r.error]
    for filt in result.spec.filters:
        recs = [r for r in ok if r.filter == filt]
        if not recs:
            continue
        speed = [r.speedup for r in recs]
        feasible = [r.feasible_speedup for r in recs]
        ratio = [r.final_compliance / r.baseline_compliance for r in recs]
        by_vf, feasible_by_vf = {}, {}
        for vf in result.spec.volfracs:
            cell = [r for r in recs if r.volfrac == vf]
            if cell:
                by_vf[str(vf)] = statistics.fmean(r.speedup for r in cell)
                feasible_by_vf[str(vf)] = statistics.fmean(r.feasible_speedup for r in cell)
        order = sorted(recs, key=lambda r: r.baseline_compliance)
        out["filters"][filt] = {
            "count": len(recs),
            "mean_speedup": statistics.fmean(speed),
            "median_speedup": statistics.median(speed),
            "fraction_improved": sum(s > 0 for s in speed) / len(speed),
            "no_improvement_fraction": sum(r.no_improvement for r in recs) / len(recs),
            "mean_compliance_ratio": statistics.fmean(ratio),
            "mean_final_compliance": statistics.fmean(r.final_compliance for r in recs),
            "mean_speedup_by_volfrac": by_vf,
            "mean_feasible_speedup": statistics.fmean(feasible),
            "mean_feasible_speedup_by_volfrac": feasible_by_vf,
            "sorted_baseline_compliance": [r.baseline_compliance for r in order],
            "sorted_compliance": [r.final_compliance for r in order],
            "sorted_simp_compliance": [r.simp_compliance for r in order],
        }
    return out


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
