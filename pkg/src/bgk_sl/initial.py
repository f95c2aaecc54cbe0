"""Built-in initial conditions.  Each factory returns a vectorised f0(x, v)."""

from __future__ import annotations

import numpy as np

from .physics import maxwellian_value

# parameter name -> default (None = required)
IC_PARAMS = {
    "uniform_maxwellian": {"rho0": None, "T0": None, "U0": 0.0},
    "sine_density": {"rho0": 1.0, "amplitude": None, "T0": None, "U0": 0.0},
    "two_stream": {"rho0": 1.0, "amplitude": 0.0, "T0": None, "U0": None},
    "custom_table": {},
}


def uniform_maxwellian(rho0: float, T0: float, U0: float = 0.0):
    def f0(x, v):
        return maxwellian_value(rho0, U0, T0, v) + 0.0 * np.asarray(x)
    return f0


def sine_density(amplitude: float, T0: float, rho0: float = 1.0, U0: float = 0.0):
    """rho(x) = rho0 (1 + amplitude sin 2 pi x), Maxwellian in v."""
    if not 0 <= amplitude < 1:
        raise ValueError("sine_density needs 0 <= amplitude < 1 to keep the density positive")

    def f0(x, v):
        rho = rho0 * (1.0 + amplitude * np.sin(2.0 * np.pi * np.asarray(x)))
        return maxwellian_value(rho, U0, T0, v)
    return f0


def two_stream(U0: float, T0: float, rho0: float = 1.0, amplitude: float = 0.0):
    """Two counter-streaming Maxwellians at +-U0 with a cosine density modulation."""
    if not 0 <= amplitude < 1:
        raise ValueError("two_stream needs 0 <= amplitude < 1")

    def f0(x, v):
        rho = 0.5 * rho0 * (1.0 + amplitude * np.cos(2.0 * np.pi * np.asarray(x)))
        return maxwellian_value(rho, U0, T0, v) + maxwellian_value(rho, -U0, T0, v)
    return f0


def from_table(table):
    """f0 given by the extension of a stored field (see field.read_field_csv)."""
    from .field import eval_extended

    def f0(x, v):
        return eval_extended(table, x, v)
    return f0


FACTORIES = {
    "uniform_maxwellian": uniform_maxwellian,
    "sine_density": sine_density,
    "two_stream": two_stream,
}


def make_initial_condition(name: str, params: dict, table=None):
    if name == "custom_table":
        if table is None:
            raise ValueError("custom_table requires a table field")
        return from_table(table)
    if name not in FACTORIES:
        raise KeyError(name)
    return FACTORIES[name](**params)
