"""Discrete distribution functions, their phase-space extension and the
weighted norms used throughout the solver."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .grid import GridSpec, cell_position, velocity_index

# Negatives larger than this (relative to max |f|) are real errors, not round-off.
NEGATIVE_TOL = 1e-12


class IncompatibleGridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DistributionField:
    """Values f[i, j] on the (x_i, v_j) lattice; column ``j + nv`` holds v_j."""

    grid: GridSpec
    values: np.ndarray
    clamped: int = dc_field(default=0)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        neg = vals < 0
        count = int(np.count_nonzero(neg))
        if count:
            scale = float(np.max(np.abs(vals)))
            if float(vals.min()) < -NEGATIVE_TOL * scale:
                raise ValueError(f"field has negative entries (min {vals.min():g})")
            vals[neg] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "clamped", self.clamped + count)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "DistributionField":
        return cls(grid, np.zeros(grid.shape))

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j + self.grid.nv]


def _check_same_grid(f: DistributionField, g: DistributionField):
    a, b = f.grid, g.grid
    if (a.nx, a.nv) != (b.nx, b.nv) or a.dv != b.dv or a.dx != b.dx:
        raise IncompatibleGridError("incompatible grids")


def eval_extended(fld: DistributionField, x, v):
    """Evaluate the extension E(f): linear in x on [x_i, x_{i+1}), constant
    on each velocity cell, zero outside the truncated velocity range.

    Accepts scalars or broadcastable arrays.
    """
    grid = fld.grid
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    s, a = cell_position(x, grid.nx)
    j = velocity_index(v, grid)
    inside = ~np.isnan(j)
    col = np.where(inside, j, 0).astype(np.int64) + grid.nv
    left = fld.values[s, col]
    right = fld.values[(s + 1) % grid.nx, col]
    # a == 0 must return the node value untouched
    out = np.where(a == 0.0, left, a * right + (1.0 - a) * left)
    out = np.where(inside, out, 0.0)
    return float(out) if out.ndim == 0 else out


def velocity_weight(grid: GridSpec, q_w: float) -> np.ndarray:
    return (1.0 + np.abs(grid.v)) ** q_w


def weighted_l1(values: np.ndarray, grid: GridSpec, q_w: float) -> float:
    """sum_ij |values_ij| (1+|v_j|)^q dx dv for a raw lattice array."""
    per_v = np.abs(values).sum(axis=0)
    return float(np.sum(per_v * velocity_weight(grid, q_w))) * grid.dx * grid.dv


def weighted_l1_distance(f: DistributionField, g: DistributionField, q_w: float) -> float:
    _check_same_grid(f, g)
    return weighted_l1(f.values - g.values, f.grid, q_w)


@dataclass(frozen=True)
class NormReport:
    l1_q: float
    n0_q: float
    n1_q: float
    q: float

    @property
    def n_q(self) -> float:
        return self.n0_q + self.n1_q


def n0_norm(values: np.ndarray, grid: GridSpec, q_w: float) -> float:
    return float(np.max(np.abs(values) * velocity_weight(grid, q_w)))


def n1_norm(values: np.ndarray, grid: GridSpec, q_w: float) -> float:
    # periodic seam: row nx-1 differences against row 0
    diff = np.abs(np.roll(values, -1, axis=0) - values) / grid.dx
    return float(np.max(diff * velocity_weight(grid, q_w)))


def nq_norm(values: np.ndarray, grid: GridSpec, q_w: float) -> float:
    return n0_norm(values, grid, q_w) + n1_norm(values, grid, q_w)


def n_norms(fld: DistributionField, q_w: float) -> NormReport:
    vals, grid = fld.values, fld.grid
    return NormReport(l1_q=weighted_l1(vals, grid, q_w), n0_q=n0_norm(vals, grid, q_w),
                      n1_q=n1_norm(vals, grid, q_w), q=float(q_w))


# --- CSV ----------------------------------------------------------------

FIELD_HEADER = ["i", "j", "x", "v", "f"]


def write_field_csv(fld: DistributionField, path) -> None:
    grid = fld.grid
    xs, vs = grid.x, grid.v
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for i in range(grid.nx):
            row = fld.values[i]
            for jj in range(2 * grid.nv + 1):
                w.writerow([i, jj - grid.nv, repr(float(xs[i])), repr(float(vs[jj])),
                            repr(float(row[jj]))])


def read_field_csv(path, grid: GridSpec) -> DistributionField:
    vals = np.full(grid.shape, np.nan)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != FIELD_HEADER:
            raise ValueError(f"unexpected field CSV header {header}")
        for rec in reader:
            i, j = int(rec[0]), int(rec[1])
            vals[i, j + grid.nv] = float(rec[4])
    if np.isnan(vals).any():
        raise ValueError("field CSV does not cover every grid node")
    return DistributionField(grid, vals)
