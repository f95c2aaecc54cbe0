"""Convergence and stability studies against a fine-grid reference."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .field import DistributionField, nq_norm, velocity_weight
from .grid import GridError, GridSpec, build_grid, cell_position, time_step_ok, velocity_index
from .physics import compute_moments
from .scheme import SimulationAborted, init_field, run

log = logging.getLogger(__name__)

ERROR_Q = 2.0
DENSE_FACTOR = 16
# cap on dense-sampling lattice size for the mesh check
DENSE_MAX_POINTS = 2 ** 22
THREADS_ENV = "BGK_SL_THREADS"


class NotNestedError(ValueError):
    pass


def worker_count() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# --- mesh validity -------------------------------------------------------

@dataclass
class ConditionCheck:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: value={self.value:.6g} threshold={self.threshold:.6g}"


@dataclass
class MeshValidity:
    checks: list[ConditionCheck]
    transported_density_min: float
    nbar_q: float

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _dense_counts(grid: GridSpec, dense: int) -> tuple[int, int]:
    nxd, nvd = grid.nx * dense, grid.nv * dense
    excess = nxd * (2 * nvd + 1) / DENSE_MAX_POINTS
    if excess > 1:
        shrink = math.sqrt(excess)
        nxd = max(grid.nx, math.ceil(nxd / shrink))
        nvd = max(grid.nv, math.ceil(nvd / shrink))
    return nxd, nvd


def nbar_q_estimate(f0, grid: GridSpec, dense: int = DENSE_FACTOR) -> float:
    """N0_q + sup|(1+|v|)^q d_x f0| + sup|(1+|v|)^q d_v f0| by central differences
    on a lattice ``dense`` times finer than ``grid`` (capped at DENSE_MAX_POINTS)."""
    nxd, nvd = _dense_counts(grid, dense)
    x = np.arange(nxd) / nxd
    v = np.linspace(-grid.vmax, grid.vmax, 2 * nvd + 1)
    hx, hv = 1.0 / nxd, v[1] - v[0]
    X, V = np.meshgrid(x, v, indexing="ij")
    f = np.broadcast_to(np.asarray(f0(X, V), dtype=float), X.shape)
    w = (1.0 + np.abs(v)) ** grid.q
    fx = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * hx)
    fv = (f[:, 2:] - f[:, :-2]) / (2 * hv)
    return (float(np.max(np.abs(f) * w)) + float(np.max(np.abs(fx) * w))
            + float(np.max(np.abs(fv) * w[1:-1])))


def transported_density_min(f0, grid: GridSpec, dense: int = DENSE_FACTOR) -> float:
    """inf_x of the integral over |v| < R of f0(x - v T_f, v), trapezoidal in v."""
    nxd, nvd = _dense_counts(grid, dense)
    x = np.arange(nxd) / nxd
    v = np.linspace(-grid.vmax, grid.vmax, 2 * nvd + 1)
    X, V = np.meshgrid(x, v, indexing="ij")
    vals = np.broadcast_to(np.asarray(f0(X - V * grid.t_final, V), dtype=float), X.shape)
    hv = v[1] - v[0]
    dens = (vals.sum(axis=1) - 0.5 * (vals[:, 0] + vals[:, -1])) * hv
    return float(dens.min())


def validate_mesh(grid: GridSpec, f0) -> MeshValidity:
    bound = max(0.5, grid.kappa)
    checks = [ConditionCheck("time step dt < max(1/2, kappa)", time_step_ok(grid.dt, grid.kappa),
                             grid.dt, bound)]
    dens = transported_density_min(f0, grid)
    nbar = nbar_q_estimate(f0, grid)
    if dens <= 0 or nbar <= 0:
        threshold = 0.0
    else:
        threshold = dens / (2.0 * nbar * (2.0 + grid.t_final))
    h = grid.dx + grid.dv
    checks.append(ConditionCheck("mesh smallness dx + dv < threshold", h < threshold, h, threshold))
    return MeshValidity(checks, dens, nbar)


# --- reference and error -------------------------------------------------

def reference_solution(f0, base: GridSpec, refine: int) -> DistributionField:
    if refine < 2:
        raise ValueError("refine must be >= 2")
    fine = base.refined(refine, refine, refine)
    final, _ = run(f0, fine)
    return final


def _nesting(coarse: GridSpec, fine: GridSpec) -> tuple[int, int]:
    """Integer refinement factors (rx, rv). The coarse velocity range may be
    narrower than the fine one as long as its nodes land on fine nodes."""
    rv = coarse.dv / fine.dv
    rv_int = round(rv)
    if (fine.nx % coarse.nx or rv_int < 1 or abs(rv - rv_int) > 1e-9 * rv
            or coarse.nv * rv_int > fine.nv):
        raise NotNestedError("grids not nested")
    return fine.nx // coarse.nx, rv_int


def extend_to(fld: DistributionField, target: GridSpec) -> np.ndarray:
    """Values of the extension of ``fld`` at every node of ``target``.

    Separable form of eval_extended: the velocity cell is selected per column,
    then the linear-in-x interpolation is applied per row.
    """
    grid = fld.grid
    j = velocity_index(target.v, grid)
    inside = ~np.isnan(j)
    cols = np.where(inside, j, 0).astype(np.int64) + grid.nv
    sel = fld.values[:, cols] * inside
    s, a = cell_position(target.x, grid.nx)
    left = sel[s]
    right = sel[(s + 1) % grid.nx]
    a = a[:, None]
    return np.where(a == 0.0, left, a * right + (1.0 - a) * left)


def error_vs_reference(coarse: DistributionField, reference: DistributionField) -> float:
    """Weighted L1_2 distance of the two extensions, sampled on the reference lattice."""
    fine = reference.grid
    _nesting(coarse.grid, fine)
    diff = extend_to(coarse, fine) - reference.values
    w = velocity_weight(fine, ERROR_Q)
    return float(np.sum(np.abs(diff).sum(axis=0) * w)) * fine.dx * fine.dv


# --- rate fitting --------------------------------------------------------

def fit_rate(dts, errors) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    lx = np.log(np.asarray(dts, dtype=float))
    ly = np.log(np.asarray(errors, dtype=float))
    if len(lx) < 2:
        return float("nan")
    A = np.vstack([lx, np.ones_like(lx)]).T
    slope, _ = np.linalg.lstsq(A, ly, rcond=None)[0]
    return float(slope)


@dataclass
class Level:
    dt: float
    dx: float
    dv: float
    vmax: float
    error_l1_2: float


@dataclass
class LevelRun:
    """Per-level run statistics kept alongside the report (not serialised)."""
    grid: GridSpec
    nq0: float
    nq_max_ratio: float
    min_rho: list[float]
    min_temp: list[float]
    mesh: MeshValidity


@dataclass
class ConvergenceReport:
    levels: list[Level]
    fitted_rate: float
    scaling_exponent: float
    runs: list[LevelRun] = field(default_factory=list, repr=False)
    skipped: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {"levels": [asdict(lv) for lv in self.levels],
               "fitted_rate": self.fitted_rate,
               "scaling_exponent": self.scaling_exponent}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        doc = json.loads(text)
        return cls([Level(**lv) for lv in doc["levels"]], doc["fitted_rate"],
                   doc["scaling_exponent"])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "dt", "dx", "dv", "vmax", "error"])
            for k, lv in enumerate(self.levels):
                w.writerow([k, repr(lv.dt), repr(lv.dx), repr(lv.dv), repr(lv.vmax),
                            repr(lv.error_l1_2)])


def read_convergence_csv(path) -> list[Level]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [Level(float(r["dt"]), float(r["dx"]), float(r["dv"]), float(r["vmax"]),
                  float(r["error"])) for r in rows]


def _tracked_run(f0, grid: GridSpec):
    fld = init_field(f0, grid)
    mom = compute_moments(fld)
    nq0 = nq_norm(fld.values, grid, grid.q)
    final, reports = run(fld, grid)
    info = LevelRun(grid, nq0, max([nq0] + [r.nq_norm for r in reports]) / nq0,
                    [float(mom.rho.min())] + [r.min_rho for r in reports],
                    [float(mom.temp.min())] + [r.min_temp for r in reports],
                    validate_mesh(grid, f0))
    return final, info


def level_grid(base: GridSpec, m: float, k: int) -> GridSpec:
    """Level k: dt halved k times, dx and dv shrunk by (2^-k)^(1+m), counts rounded up."""
    shrink = 2.0 ** (k * (1.0 + m))
    nx = math.ceil(base.nx * shrink - 1e-9)
    nv = math.ceil(base.nv * shrink - 1e-9)
    return base.with_(nx=nx, nv=nv, nt=base.nt * 2 ** k)


def scaling_study(f0, base: GridSpec, m: float, levels: int, refine: int = 2,
                  workers: int | None = None) -> ConvergenceReport:
    if levels < 3:
        raise ValueError("a scaling study needs at least 3 levels")
    grids, skipped = [], []
    for k in range(levels):
        try:
            grids.append(level_grid(base, m, k))
        except GridError as exc:
            skipped.append(f"level {k}: {exc}")
    if not grids:
        raise ValueError("no admissible levels")
    ref_grid = grids[-1].refined(refine, refine, refine)
    nested = []
    for g in grids:
        try:
            _nesting(g, ref_grid)
            nested.append(g)
        except NotNestedError:
            skipped.append(f"level nx={g.nx} nv={g.nv}: not nested in reference")
    for msg in skipped:
        log.warning("skipping %s", msg)
    if len(nested) < 3:
        raise ValueError(f"only {len(nested)} valid levels; at least 3 required")

    workers = workers or worker_count()
    jobs = [lambda: run(f0, ref_grid)[0]] + [lambda g=g: _tracked_run(f0, g) for g in nested]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda job: job(), jobs))
    reference, level_results = results[0], results[1:]

    out, runs = [], []
    for g, (final, info) in zip(nested, level_results):
        out.append(Level(g.dt, g.dx, g.dv, g.vmax, error_vs_reference(final, reference)))
        runs.append(info)
    rate = fit_rate([lv.dt for lv in out], [lv.error_l1_2 for lv in out])
    return ConvergenceReport(out, rate, float(m), runs, skipped)


# --- CFL sweep -----------------------------------------------------------

@dataclass
class SweepRow:
    cfl_target: float
    cfl: float
    dt: float
    nt: int
    nq_ratio: float
    blowup: bool


def cfl_sweep(f0, grid: GridSpec, cfl_values) -> list[SweepRow]:
    rows = []
    for target in cfl_values:
        dt = target * grid.dx / grid.vmax
        nt = max(1, round(grid.t_final / dt))
        g = grid.with_(nt=nt)
        nq0 = nq_norm(init_field(f0, g).values, g, g.q)
        try:
            final, reps = run(f0, g)
            ratio, blowup = max(r.nq_norm for r in reps) / nq0, False
        except SimulationAborted:
            ratio, blowup = float("inf"), True
        rows.append(SweepRow(float(target), g.cfl, g.dt, nt, ratio, blowup))
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cfl_target", "cfl", "dt", "nt", "nq_ratio", "blowup"])
        for r in rows:
            w.writerow([repr(r.cfl_target), repr(r.cfl), repr(r.dt), r.nt, repr(r.nq_ratio),
                        int(r.blowup)])


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        return [SweepRow(float(r["cfl_target"]), float(r["cfl"]), float(r["dt"]), int(r["nt"]),
                         float(r["nq_ratio"]), bool(int(r["blowup"])))
                for r in csv.DictReader(fh)]
