"""Phase-space lattice for the 1D x 1V periodic problem.

Nodes are ``x_i = i * dx`` on the unit torus (``i = 0..nx-1``) and
``v_j = j * dv`` for ``j = -nv..nv``.  Spatial cells are half-open
``[x_i, x_{i+1})``; velocity cells are ``[v_j - dv/2, v_j + dv/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Index-space snapping tolerance (relative): a coordinate within a few ulps
# of a node or cell edge is treated as sitting on it.
SNAP_ULPS = 8
_SNAP_REL = SNAP_ULPS * np.finfo(float).eps

OUTSIDE = None


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    nx: int
    nv: int
    nt: int
    dx: float
    dv: float
    dt: float
    vmax: float
    t_final: float
    kappa: float
    q: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, 2 * self.nv + 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def v(self) -> np.ndarray:
        return np.arange(-self.nv, self.nv + 1) * self.dv

    @property
    def relax_weight(self) -> float:
        """Weight of the Maxwellian in the convex update, dt/(kappa+dt)."""
        return self.dt / (self.kappa + self.dt)

    @property
    def cfl(self) -> float:
        return self.dt * self.vmax / self.dx

    def refined(self, rx: int = 1, rv: int = 1, rt: int = 1) -> "GridSpec":
        return build_grid(self.nx * rx, self.nv * rv, self.nt * rt,
                          self.vmax, self.t_final, self.kappa, self.q)

    def with_(self, **changes) -> "GridSpec":
        params = dict(nx=self.nx, nv=self.nv, nt=self.nt, vmax=self.vmax,
                      t_final=self.t_final, kappa=self.kappa, q=self.q)
        params.update(changes)
        return build_grid(**params)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("nx", "nv", "nt", "dx", "dv", "dt", "vmax", "t_final", "kappa", "q")}


def time_step_ok(dt: float, kappa: float) -> bool:
    """Time-step bound dt < max(1/2, kappa)."""
    return dt < max(0.5, kappa)


def build_grid(nx: int, nv: int, nt: int, vmax: float, t_final: float,
               kappa: float, q: float = 4.0, check_time_step: bool = True) -> GridSpec:
    for name, n in (("nx", nx), ("nv", nv), ("nt", nt)):
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise GridError(f"{name} must be a positive integer, got {n!r}")
    for name, val in (("vmax", vmax), ("t_final", t_final), ("kappa", kappa)):
        if not (math.isfinite(val) and val > 0):
            raise GridError(f"{name} must be positive and finite, got {val!r}")
    if not (math.isfinite(q) and q >= 0):
        raise GridError(f"q must be finite and nonnegative, got {q!r}")
    dt = t_final / nt
    if check_time_step and not time_step_ok(dt, kappa):
        raise GridError(
            f"time-step bound violated: dt={dt:g} >= max(1/2, kappa={kappa:g}) "
            "(condition dt < max(1/2, kappa))")
    return GridSpec(nx=int(nx), nv=int(nv), nt=int(nt), dx=1.0 / nx, dv=vmax / nv,
                    dt=dt, vmax=float(vmax), t_final=float(t_final),
                    kappa=float(kappa), q=float(q))


def wrap_periodic(x):
    """Map ``x`` onto [0, 1).  Works elementwise on arrays."""
    w = np.asarray(x, dtype=float)
    w = w - np.floor(w)
    # tiny negative inputs round x - floor(x) up to exactly 1.0
    w = np.where(w >= 1.0, 0.0, w)
    return float(w) if w.ndim == 0 else w


def _snap(r, to_half=False):
    """Snap index-space coordinates lying within round-off of an integer
    (or half-integer) onto it."""
    r = np.asarray(r, dtype=float)
    offset = 0.5 if to_half else 0.0
    target = np.round(r - offset) + offset
    close = np.abs(r - target) <= _SNAP_REL * np.maximum(1.0, np.abs(r))
    return np.where(close, target, r)


def cell_position(x, nx: int):
    """Return (s, a): cell index with x_s <= wrap(x) < x_{s+1} and the
    fractional offset a = (wrap(x) - x_s)/dx in [0, 1)."""
    r = _snap(wrap_periodic(x) * nx)
    s = np.floor(r)
    a = r - s
    s = s.astype(np.int64) % nx
    return s, a


def spatial_cell_index(x, grid: GridSpec):
    s, _ = cell_position(x, grid.nx)
    return int(s) if np.ndim(s) == 0 else s


def velocity_index(v, grid: GridSpec):
    """Signed index j of the velocity cell containing v, as a float array
    (NaN outside the representable range [-vmax-dv/2, vmax+dv/2))."""
    r = _snap(np.asarray(v, dtype=float) / grid.dv, to_half=True)
    j = np.floor(r + 0.5)
    return np.where(np.abs(j) <= grid.nv, j, np.nan)


def c2_project(v: float, grid: GridSpec):
    """Cell-centred velocity projection; returns ``OUTSIDE`` (None) beyond
    the truncated velocity range."""
    j = float(velocity_index(v, grid))
    if math.isnan(j):
        return OUTSIDE
    return j * grid.dv
