import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bgk_sl.grid import (OUTSIDE, GridError, build_grid, c2_project, spatial_cell_index,
                         wrap_periodic)


def test_build_grid_spacings():
    g = build_grid(10, 5, 4, 1.0, 0.4, 1.0, 4)
    assert g.dx == pytest.approx(0.1)
    assert g.dv == pytest.approx(0.2)
    assert g.dt == pytest.approx(0.1)
    assert g.shape == (10, 11)


def test_build_grid_single_cell():
    g = build_grid(1, 1, 1, 1.0, 0.1, 1.0, 4)
    assert (g.dx, g.dv) == (1.0, 1.0)
    assert g.dt == pytest.approx(0.1)


def test_build_grid_rejects_large_time_step():
    with pytest.raises(GridError, match="time-step bound violated"):
        build_grid(10, 5, 1, 1.0, 2.0, 1.0, 4)


@pytest.mark.parametrize("bad", [dict(nx=0), dict(nv=-1), dict(nt=1.5), dict(vmax=0.0),
                                 dict(kappa=-1.0), dict(t_final=float("inf"))])
def test_build_grid_rejects_bad_parameters(bad):
    params = dict(nx=4, nv=4, nt=4, vmax=1.0, t_final=0.4, kappa=1.0, q=4.0)
    params.update(bad)
    with pytest.raises(GridError):
        build_grid(**params)


def test_grid_invariants():
    g = build_grid(7, 9, 3, 5.0, 0.3, 0.2, 4)
    assert g.nx * g.dx == pytest.approx(1.0)
    assert g.nv * g.dv == pytest.approx(5.0)
    assert g.nt * g.dt == pytest.approx(0.3)


@pytest.mark.parametrize("x, expected", [(0.3, 0.3), (1.7, 0.7), (-0.25, 0.75)])
def test_wrap_periodic(x, expected):
    assert wrap_periodic(x) == pytest.approx(expected, abs=1e-15)


def test_wrap_tiny_negative_stays_below_one():
    assert wrap_periodic(-1e-20) == 0.0


@pytest.mark.parametrize("v, expected", [(0.0, 0.0), (0.29, 0.2), (0.3, 0.4), (-0.1, 0.0),
                                         (-0.3, -0.2)])
def test_c2_project(v, expected):
    g = build_grid(10, 5, 4, 1.0, 0.4, 1.0, 4)
    assert c2_project(v, g) == pytest.approx(expected)


def test_c2_project_outside():
    g = build_grid(10, 5, 4, 1.0, 0.4, 1.0, 4)
    assert c2_project(1.1, g) is OUTSIDE
    assert c2_project(1.09, g) == pytest.approx(1.0)
    assert c2_project(-1.1, g) == pytest.approx(-1.0)  # left edge of the outermost cell
    assert c2_project(-1.2, g) is OUTSIDE


@pytest.mark.parametrize("x, s", [(0.25, 2), (0.0, 0), (-0.05, 9), (0.999999, 9), (1.0, 0)])
def test_spatial_cell_index(x, s):
    g = build_grid(10, 5, 4, 1.0, 0.4, 1.0, 4)
    assert spatial_cell_index(x, g) == s


@given(st.floats(-50, 50, allow_nan=False))
def test_half_open_cover(x):
    g = build_grid(13, 5, 4, 1.0, 0.4, 1.0, 4)
    s = spatial_cell_index(x, g)
    w = wrap_periodic(x)
    assert 0 <= s < g.nx
    if s == 0 and w > 1 - 1e-14:
        return  # snapped across the periodic seam
    # within snapping round-off of the cell edges
    assert s * g.dx <= w + 1e-14
    assert w < (s + 1) * g.dx + 1e-14


@given(st.floats(-0.85, 0.85, allow_nan=False))
def test_c2_projection_error(v):
    g = build_grid(10, 7, 4, 1.0, 0.4, 1.0, 4)
    assert abs(c2_project(v, g) - v) <= g.dv / 2 + 1e-15


def test_c2_idempotent_on_nodes():
    g = build_grid(10, 37, 4, 6.0, 0.4, 1.0, 4)
    for vj in g.v:
        assert c2_project(vj, g) == vj


@given(st.integers(-2 ** 40, 2 ** 40))
def test_wrap_shift_invariance_dyadic(k):
    x = k / 2 ** 30
    assert wrap_periodic(x + 1) == wrap_periodic(x)
