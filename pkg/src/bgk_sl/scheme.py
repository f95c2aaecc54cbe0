"""Semi-Lagrangian BGK time stepping.

One step backtracks every characteristic by ``dt * v_j``, interpolates
linearly in x at its foot, and then relaxes towards the Maxwellian built
from the moments of the interpolated field:

    f^{n+1} = kappa/(kappa+dt) * f~ + dt/(kappa+dt) * M(f~)

The relaxation is implicit in time but needs no solve, because M is
evaluated from the moments of f~.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field import DistributionField, nq_norm
from .grid import GridSpec, _snap
from .physics import discrete_maxwellian_values, moments_of, total_moments

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e12

InitialCondition = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SimulationAborted(RuntimeError):
    """Numerical abort: blow-up or loss of all mass."""


class InvalidInitialCondition(ValueError):
    pass


@dataclass(frozen=True)
class StepReport:
    step_index: int
    conservation_defect: tuple[float, float, float]
    min_rho: float
    min_temp: float
    nq_norm: float
    vacuum_cells: int = 0


def backtrack_offsets(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-velocity cell offset k_j and weight a_j of the characteristic foot.

    The foot x_i - dt v_j lies in cell s = i + k_j (mod nx) at fractional
    position a_j in [0, 1), identical for every i.
    """
    foot = _snap(-grid.dt * grid.v * grid.nx)
    k = np.floor(foot)
    a = foot - k
    return k.astype(np.int64), a


def reconstruct_values(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    k, a = backtrack_offsets(grid)
    nx = grid.nx
    idx = (np.arange(nx)[:, None] + k[None, :]) % nx
    left = np.take_along_axis(values, idx, axis=0)
    right = np.roll(left, -1, axis=0)
    right -= left
    right *= a
    right += left
    return right


def reconstruct(fld: DistributionField) -> DistributionField:
    return DistributionField(fld.grid, reconstruct_values(fld.values, fld.grid))


def _advance(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    tilde = reconstruct_values(values, grid)
    # moments of the reconstructed field, never of f^n itself
    maxw = discrete_maxwellian_values(moments_of(tilde, grid), grid)
    maxw *= grid.relax_weight
    tilde *= grid.kappa / (grid.kappa + grid.dt)
    tilde += maxw
    return tilde


def step(fld: DistributionField, n: int = 0) -> tuple[DistributionField, StepReport]:
    grid = fld.grid
    new = DistributionField(grid, _advance(fld.values, grid))
    before = total_moments(fld.values, grid)
    after = total_moments(new.values, grid)
    mom = moments_of(new.values, grid)
    report = StepReport(
        step_index=n,
        conservation_defect=tuple(b - a for a, b in zip(before, after)),
        min_rho=float(mom.rho.min()),
        min_temp=float(mom.temp.min()),
        nq_norm=nq_norm(new.values, grid, grid.q),
        vacuum_cells=int(mom.vacuum_flags.sum()),
    )
    return new, report


def init_field(f0: InitialCondition, grid: GridSpec) -> DistributionField:
    """Sample f0 at every node (x_i, v_j); |v_j| <= vmax by construction."""
    X, V = np.meshgrid(grid.x, grid.v, indexing="ij")
    try:
        vals = np.broadcast_to(np.asarray(f0(X, V), dtype=float), grid.shape).copy()
    except (TypeError, ValueError):
        vals = np.array([[float(f0(x, v)) for v in grid.v] for x in grid.x])
    bad = ~np.isfinite(vals) | (vals < 0)
    if bad.any():
        i, jj = np.argwhere(bad)[0]
        raise InvalidInitialCondition(
            f"invalid initial condition: f0(x={grid.x[i]!r}, v={grid.v[jj]!r}) = {vals[i, jj]!r}")
    return DistributionField(grid, vals)


def run(f0: InitialCondition | DistributionField, grid: GridSpec, steps: int | None = None,
        callback: Callable[[int, DistributionField], None] | None = None,
        ) -> tuple[DistributionField, list[StepReport]]:
    """Advance ``steps`` (default ``grid.nt``) steps from the sampled initial data.

    ``callback(n, field)`` is invoked for n = 0 (initial field) and after each step.
    """
    fld = f0 if isinstance(f0, DistributionField) else init_field(f0, grid)
    if fld.grid != grid:
        fld = DistributionField(grid, fld.values)
    nsteps = grid.nt if steps is None else steps
    nq0 = nq_norm(fld.values, grid, grid.q)
    if nsteps > 0 and not np.any(fld.values > 0):
        raise SimulationAborted("vacuum everywhere: initial field carries no mass")
    if callback:
        callback(0, fld)
    reports = []
    for n in range(nsteps):
        fld, rep = step(fld, n + 1)
        if not np.isfinite(rep.nq_norm) or rep.nq_norm > BLOWUP_FACTOR * nq0:
            raise SimulationAborted(f"blow-up detected at step {n + 1}: N_q = {rep.nq_norm:g}")
        if rep.vacuum_cells:
            log.warning("step %d: %d vacuum cells", n + 1, rep.vacuum_cells)
        reports.append(rep)
        if callback:
            callback(n + 1, fld)
    return fld, reports
