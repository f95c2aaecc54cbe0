"""Runtime monitors: conservation, entropy, macroscopic bounds and the
Lipschitz behaviour of the Maxwellian map."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .field import DistributionField, _check_same_grid, n0_norm, nq_norm, weighted_l1
from .grid import GridSpec
from .physics import (MomentField, compute_moments, discrete_maxwellian_values,
                      exact_total_moments, total_moments)
from .scheme import StepReport, run

LIPSCHITZ_Q = 2.0


class VacuumProbeError(ValueError):
    pass


def conservation_defect(before: DistributionField, after: DistributionField):
    """(d mass, d momentum, d energy) going from ``before`` to ``after``."""
    _check_same_grid(before, after)
    b = exact_total_moments(before.values, before.grid)
    a = exact_total_moments(after.values, after.grid)
    return tuple(x - y for x, y in zip(a, b))


def entropy_functional(fld: DistributionField) -> float:
    f = fld.values
    pos = f > 0
    flogf = np.zeros_like(f)
    flogf[pos] = f[pos] * np.log(f[pos])
    return float(flogf.sum()) * fld.grid.dx * fld.grid.dv


def maxwellian_of(fld: DistributionField) -> np.ndarray:
    return discrete_maxwellian_values(compute_moments(fld), fld.grid)


def maxwellian_lipschitz_probe(f: DistributionField, g: DistributionField):
    """(||f-g||_{L1_2}, ||M(f)-M(g)||_{L1_2})."""
    _check_same_grid(f, g)
    mf, mg = compute_moments(f), compute_moments(g)
    if mf.any_vacuum or mg.any_vacuum:
        raise VacuumProbeError("probe requires non-vacuum fields")
    grid = f.grid
    d_in = weighted_l1(f.values - g.values, grid, LIPSCHITZ_Q)
    d_out = weighted_l1(discrete_maxwellian_values(mf, grid) - discrete_maxwellian_values(mg, grid),
                        grid, LIPSCHITZ_Q)
    return d_in, d_out


def smooth_perturbation(rng: np.random.Generator, modes: int = 3):
    """Random smooth function of (x, v) with sup |p| <= 1: a few periodic x-modes
    times a low-order polynomial in v/4 clipped to [-1, 1]."""
    ks = np.arange(1, modes + 1)
    ax, bx = rng.uniform(-1, 1, modes), rng.uniform(-1, 1, modes)
    cv = rng.uniform(-1, 1, 3)
    norm = np.abs(ax).sum() + np.abs(bx).sum()

    def p(x, v):
        x = np.asarray(x)[..., None]
        px = (ax * np.sin(2 * np.pi * ks * x) + bx * np.cos(2 * np.pi * ks * x)).sum(-1) / norm
        s = np.clip(np.asarray(v) / 4.0, -1, 1)
        pv = (cv[0] + cv[1] * s + cv[2] * s * s) / np.abs(cv).sum()
        return px * pv
    return p


def lipschitz_census(base, grid: GridSpec, pairs: int = 100, seed: int = 0,
                     amplitude: float = 0.3) -> list[tuple[float, float]]:
    """Probe ``pairs`` random pairs f = base (1 + a p1), g = base (1 + a p2)."""
    rng = np.random.default_rng(seed)
    X, V = np.meshgrid(grid.x, grid.v, indexing="ij")
    b = base(X, V)
    samples = []
    for _ in range(pairs):
        p1, p2 = smooth_perturbation(rng), smooth_perturbation(rng)
        f = DistributionField(grid, b * (1 + amplitude * p1(X, V)))
        g = DistributionField(grid, b * (1 + amplitude * p2(X, V)))
        samples.append(maxwellian_lipschitz_probe(f, g))
    return samples


@dataclass
class DiagnosticsTrace:
    per_step: list[StepReport] = field(default_factory=list)
    entropy: list[float] = field(default_factory=list)
    lipschitz_samples: list[tuple[float, float]] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    totals: list[tuple[float, float, float]] = field(default_factory=list)
    min_rho: list[float] = field(default_factory=list)
    min_temp: list[float] = field(default_factory=list)
    nq: list[float] = field(default_factory=list)
    moments: list[MomentField] = field(default_factory=list, repr=False)
    n0_zero: list[float] = field(default_factory=list)


def run_with_diagnostics(f0, grid: GridSpec, steps: int | None = None):
    trace = DiagnosticsTrace()

    def watch(n, fld):
        mom = compute_moments(fld)
        trace.times.append(n * grid.dt)
        trace.totals.append(total_moments(fld.values, grid))
        trace.entropy.append(entropy_functional(fld))
        trace.min_rho.append(float(mom.rho.min()))
        trace.min_temp.append(float(mom.temp.min()))
        trace.nq.append(nq_norm(fld.values, grid, grid.q))
        trace.n0_zero.append(n0_norm(fld.values, grid, 0.0))
        trace.moments.append(mom)

    final, reports = run(f0, grid, steps=steps, callback=watch)
    trace.per_step = reports
    return final, trace


DIAG_HEADER = ["n", "t", "mass", "momentum", "energy", "entropy", "min_rho", "min_temp", "nq_norm"]


def write_trace_csv(trace: DiagnosticsTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAG_HEADER)
        for n, t in enumerate(trace.times):
            mass, mom, en = trace.totals[n]
            w.writerow([n] + [repr(float(val)) for val in
                              (t, mass, mom, en, trace.entropy[n], trace.min_rho[n],
                               trace.min_temp[n], trace.nq[n])])


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DIAG_HEADER:
            raise ValueError(f"unexpected diagnostics header {reader.fieldnames}")
        return [{k: (int(v) if k == "n" else float(v)) for k, v in row.items()} for row in reader]


@dataclass
class BoundsReport:
    min_rho: float
    min_temp: float
    max_rho: float
    max_u: float
    max_temp: float
    # per step: sup_i of each moment-bound ratio (NaN where the bound does not apply)
    ratios: np.ndarray
    zero_crossing: bool
    vacuum_steps: list[int]

    @property
    def ok(self) -> bool:
        return not self.zero_crossing


def moment_bound_ratios(mom: MomentField, n0: float, nq: float, q: float) -> np.ndarray:
    """The four moment-bound quotients for d = 1, each divided by its norm.

    rho / T^(1/2) / N_0;  rho (T+U^2)^((q-1)/2) / N_q  (q > 3);
    the q < 1 variant of the same;  rho |U|^(1+q) / ((T+U^2) T)^(1/2) / N_q  (q > 1).
    """
    ok = ~mom.vacuum_flags
    rho, u, t = mom.rho[ok], mom.u[ok], mom.temp[ok]
    if rho.size == 0:
        return np.full(4, np.nan)
    e = t + u * u
    r1 = np.max(rho / np.sqrt(t)) / n0
    r2 = np.max(rho * e ** ((q - 1) / 2)) / nq if q > 3 else np.nan
    r3 = np.max(rho * e ** ((q - 1) / 2)) / nq if q < 1 else np.nan
    r4 = np.max(rho * np.abs(u) ** (1 + q) / np.sqrt(e * t)) / nq if q > 1 else np.nan
    return np.array([r1, r2, r3, r4], dtype=float)


def bounds_monitor(trace: DiagnosticsTrace, grid: GridSpec) -> BoundsReport:
    ratios, vac_steps = [], []
    max_rho = max_u = max_temp = 0.0
    for n, mom in enumerate(trace.moments):
        if mom.any_vacuum:
            vac_steps.append(n)
        max_rho = max(max_rho, float(mom.rho.max()))
        max_u = max(max_u, float(np.abs(mom.u).max()))
        max_temp = max(max_temp, float(mom.temp.max()))
        ratios.append(moment_bound_ratios(mom, trace.n0_zero[n], trace.nq[n], grid.q))
    min_rho = min(trace.min_rho) if trace.min_rho else float("nan")
    min_temp = min(trace.min_temp) if trace.min_temp else float("nan")
    crossing = bool(vac_steps) or not (min_rho > 0 and min_temp > 0)
    return BoundsReport(min_rho, min_temp, max_rho, max_u, max_temp,
                        np.array(ratios).reshape(-1, 4), crossing, vac_steps)
