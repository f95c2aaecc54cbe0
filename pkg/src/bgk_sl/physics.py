"""Discrete macroscopic moments and sampled local Maxwellians (d = 1)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .field import DistributionField
from .grid import GridSpec

EPS_RHO = 1e-14
EPS_TEMP = 1e-14

# exp() below this argument would produce subnormals; those are returned as 0
_MIN_EXPONENT = math.log(np.finfo(float).tiny)


class DegenerateTemperatureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MomentField:
    rho: np.ndarray
    u: np.ndarray
    temp: np.ndarray
    vacuum_flags: np.ndarray

    def __len__(self):
        return len(self.rho)

    @property
    def any_vacuum(self) -> bool:
        return bool(self.vacuum_flags.any())

    @classmethod
    def uniform(cls, nx: int, rho: float, u: float, temp: float) -> "MomentField":
        return cls(np.full(nx, float(rho)), np.full(nx, float(u)), np.full(nx, float(temp)),
                   np.zeros(nx, dtype=bool))


def compute_moments(fld: DistributionField) -> MomentField:
    """rho, U, T per cell by the discrete velocity sums.

    Cells with rho <= EPS_RHO are vacuum; cells whose temperature falls to
    EPS_TEMP or below (e.g. a single occupied velocity node) are flagged too.
    """
    return moments_of(fld.values, fld.grid)


def moments_of(f: np.ndarray, grid: GridSpec) -> MomentField:
    v, dv = grid.v, grid.dv
    # fixed left-to-right order over j
    rho = f.sum(axis=1) * dv
    mom = (f * v).sum(axis=1) * dv
    vac = rho <= EPS_RHO
    safe_rho = np.where(vac, 1.0, rho)
    u = np.where(vac, 0.0, mom / safe_rho)
    c2 = v[None, :] - u[:, None]
    np.square(c2, out=c2)
    c2 *= f
    temp = np.where(vac, 0.0, c2.sum(axis=1) * dv / safe_rho)
    flags = vac | (temp <= EPS_TEMP)
    temp = np.where(temp <= EPS_TEMP, 0.0, temp)
    return MomentField(rho=rho, u=u, temp=temp, vacuum_flags=flags)


def maxwellian_value(rho, u, temp, v):
    """rho / sqrt(2 pi T) * exp(-(v-U)^2 / (2T)); elementwise on arrays."""
    rho, u, temp, v = (np.asarray(a, dtype=float) for a in (rho, u, temp, v))
    if np.any((temp <= 0) & (rho > 0)):
        raise DegenerateTemperatureError("degenerate temperature: T <= 0 with rho > 0")
    t = np.where(temp > 0, temp, 1.0)
    expo = np.square(v - u) * (-0.5 / t)
    underflow = expo < _MIN_EXPONENT
    out = np.exp(np.maximum(expo, _MIN_EXPONENT))
    out *= np.where(rho > 0, rho, 0.0) / np.sqrt(2.0 * np.pi * t)
    out = np.where(underflow, 0.0, out)
    return float(out) if out.ndim == 0 else out


def discrete_maxwellian_values(moments: MomentField, grid: GridSpec) -> np.ndarray:
    ok = ~moments.vacuum_flags
    rho = np.where(ok, moments.rho, 0.0)[:, None]
    u = np.where(ok, moments.u, 0.0)[:, None]
    temp = np.where(ok, moments.temp, 1.0)[:, None]
    return maxwellian_value(rho, u, temp, grid.v[None, :])


def discrete_maxwellian(moments: MomentField, grid: GridSpec) -> DistributionField:
    """Maxwellian sampled at (x_i, v_j), |v_j| <= vmax; flagged cells get a zero row."""
    return DistributionField(grid, discrete_maxwellian_values(moments, grid))


MOMENT_HEADER = ["i", "x", "rho", "u", "temp", "flag"]


def write_moments_csv(moments: MomentField, grid: GridSpec, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MOMENT_HEADER)
        for i, x in enumerate(grid.x):
            w.writerow([i, repr(float(x)), repr(float(moments.rho[i])), repr(float(moments.u[i])),
                        repr(float(moments.temp[i])), int(moments.vacuum_flags[i])])


def read_moments_csv(path) -> MomentField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != MOMENT_HEADER:
            raise ValueError(f"unexpected moments CSV header {header}")
        rows = list(reader)
    col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
    return MomentField(rho=col(2), u=col(3), temp=col(4),
                       vacuum_flags=np.array([bool(int(r[5])) for r in rows]))


def total_moments(values: np.ndarray, grid: GridSpec) -> tuple[float, float, float]:
    """Total discrete mass, momentum and energy sum f {1, v, v^2} dx dv."""
    v = grid.v
    per_v = values.sum(axis=0)
    cell = grid.dx * grid.dv
    return (float(per_v.sum()) * cell, float((per_v * v).sum()) * cell,
            float((per_v * v * v).sum()) * cell)


def exact_total_moments(values: np.ndarray, grid: GridSpec) -> tuple[float, float, float]:
    """Correctly rounded totals (math.fsum): independent of summation order, so
    any permutation of the nodes within a velocity column leaves them unchanged."""
    v = grid.v[None, :]
    cell = grid.dx * grid.dv
    return tuple(math.fsum(np.ravel(values * w)) * cell for w in (1.0, v, v * v))
