"""Command-line front end: ``bgk-sl {run|study|sweep|validate} <config.json>``.

Exit codes: 0 success, 1 config error, 2 numerical abort, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import run_with_diagnostics, write_trace_csv
from .field import DistributionField, write_field_csv
from .grid import GridError, GridSpec, build_grid
from .harness import cfl_sweep, scaling_study, validate_mesh, worker_count, write_sweep_csv
from .initial import IC_PARAMS, make_initial_condition
from .physics import DegenerateTemperatureError, compute_moments, write_moments_csv
from .scheme import InvalidInitialCondition, SimulationAborted

log = logging.getLogger("bgk_sl")

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_IO = 0, 1, 2, 3

ARTIFACTS = {
    "run": ("fields_final.csv", "moments_final.csv", "diagnostics.csv"),
    "study": ("convergence.json", "convergence.csv"),
    "sweep": ("cfl_sweep.csv",),
    "validate": (),
}
DEFAULT_CFL = (0.5, 1.0, 2.0, 5.0, 10.0)


class ConfigError(ValueError):
    pass


@dataclass
class StudyParams:
    m: float = 1.0
    levels: int = 4
    refine: int = 2


@dataclass
class RunConfig:
    nx: int
    nv: int
    nt: int
    vmax: float
    t_final: float
    kappa: float
    ic_name: str
    ic_params: dict[str, float] = field(default_factory=dict)
    q: float = 4.0
    outputs: str = "./out"
    artifacts: list[str] | None = None
    ic_table: str | None = None
    study: StudyParams | None = None
    cfl_values: list[float] = field(default_factory=lambda: list(DEFAULT_CFL))

    def grid(self, check_time_step: bool = True) -> GridSpec:
        return build_grid(self.nx, self.nv, self.nt, self.vmax, self.t_final, self.kappa, self.q,
                          check_time_step=check_time_step)

    def wants(self, name: str) -> bool:
        return self.artifacts is None or name in self.artifacts


# key -> (kind, required)
_SCHEMA = {
    "nx": ("int", True), "nv": ("int", True), "nt": ("int", True),
    "vmax": ("real", True), "t_final": ("real", True), "kappa": ("real", True),
    "ic_name": ("str", True), "ic_params": ("map", False), "q": ("real", False),
    "outputs": ("str", False), "artifacts": ("strlist", False), "ic_table": ("str", False),
    "study": ("study", False), "cfl_values": ("reallist", False),
}
_STUDY_SCHEMA = {"m": "real", "levels": "int", "refine": "int"}
_KIND_NAMES = {"int": "integer", "real": "real number", "str": "string",
               "map": "object of real numbers", "strlist": "list of strings",
               "reallist": "list of real numbers", "study": "object"}


def _is_int(val) -> bool:
    return isinstance(val, int) and not isinstance(val, bool)


def _is_real(val) -> bool:
    return isinstance(val, (int, float)) and not isinstance(val, bool)


def _check(key: str, kind: str, val):
    ok = {
        "int": _is_int,
        "real": _is_real,
        "str": lambda x: isinstance(x, str),
        "map": lambda x: isinstance(x, dict) and all(_is_real(y) for y in x.values()),
        "strlist": lambda x: isinstance(x, list) and all(isinstance(y, str) for y in x),
        "reallist": lambda x: isinstance(x, list) and all(_is_real(y) for y in x),
        "study": lambda x: isinstance(x, dict),
    }[kind](val)
    if not ok:
        raise ConfigError(f"{key}: expected {_KIND_NAMES[kind]}, got {type(val).__name__} "
                          f"{val!r}")
    if kind == "real":
        return float(val)
    if kind == "map":
        return {k: float(y) for k, y in val.items()}
    if kind == "reallist":
        return [float(y) for y in val]
    return val


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(_SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    values = {}
    for key, (kind, required) in _SCHEMA.items():
        if key not in doc:
            if required:
                raise ConfigError(f"{key}: missing required key ({_KIND_NAMES[kind]})")
            continue
        values[key] = _check(key, kind, doc[key])

    name = values["ic_name"]
    if name not in IC_PARAMS:
        raise ConfigError(f"ic_name: unknown initial condition {name!r}; "
                          f"valid names: {', '.join(IC_PARAMS)}")
    defaults = IC_PARAMS[name]
    params = values.get("ic_params", {})
    extra = sorted(set(params) - set(defaults))
    if extra:
        raise ConfigError(f"ic_params: unknown parameter(s) {', '.join(extra)} for {name}; "
                          f"expected {', '.join(defaults) or 'none'}")
    for pname, default in defaults.items():
        if pname not in params:
            if default is None:
                raise ConfigError(f"ic_params.{pname}: missing required parameter "
                                  f"(real number) for {name}")
            params[pname] = default
    values["ic_params"] = params
    if name == "custom_table" and "ic_table" not in values:
        raise ConfigError("ic_table: missing required key (string) for custom_table")

    if "study" in values:
        raw = values["study"]
        bad = sorted(set(raw) - set(_STUDY_SCHEMA))
        if bad:
            raise ConfigError(f"unknown study key(s): {', '.join(bad)}")
        values["study"] = StudyParams(**{k: _check(f"study.{k}", kind, raw[k])
                                         for k, kind in _STUDY_SCHEMA.items() if k in raw})
    if "artifacts" in values:
        known = {a for names in ARTIFACTS.values() for a in names}
        bad = sorted(set(values["artifacts"]) - known)
        if bad:
            raise ConfigError(f"artifacts: unknown artifact(s) {', '.join(bad)}; "
                              f"valid names: {', '.join(sorted(known))}")
    return RunConfig(**values)


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config. OSError propagates for unreadable files."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def load_table(path) -> DistributionField:
    """Field CSV whose lattice is inferred from its own (i, j, v) columns."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"ic_table: {path} holds no rows")
    nx = max(int(r["i"]) for r in rows) + 1
    nv = max(int(r["j"]) for r in rows)
    vmax = max(float(r["v"]) for r in rows)
    grid = build_grid(nx, nv, 1, vmax, 0.1, 1.0)
    vals = [[0.0] * (2 * nv + 1) for _ in range(nx)]
    for r in rows:
        vals[int(r["i"])][int(r["j"]) + nv] = float(r["f"])
    return DistributionField(grid, vals)


def initial_condition(cfg: RunConfig):
    table = load_table(cfg.ic_table) if cfg.ic_name == "custom_table" else None
    try:
        return make_initial_condition(cfg.ic_name, cfg.ic_params, table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"ic_params: {exc}") from None


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _warn_mesh(grid: GridSpec, f0) -> None:
    report = validate_mesh(grid, f0)
    for c in report.checks:
        if not c.passed:
            log.warning("mesh check failed: %s", c.line())


def cmd_run(cfg: RunConfig, out: Path, args) -> None:
    grid = cfg.grid()
    f0 = initial_condition(cfg)
    _warn_mesh(grid, f0)
    final, trace = run_with_diagnostics(f0, grid)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.wants("fields_final.csv"):
        write_field_csv(final, out / "fields_final.csv")
    if cfg.wants("moments_final.csv"):
        write_moments_csv(compute_moments(final), grid, out / "moments_final.csv")
    if cfg.wants("diagnostics.csv"):
        write_trace_csv(trace, out / "diagnostics.csv")
    mass0, mass1 = trace.totals[0][0], trace.totals[-1][0]
    _say(args, f"steps: {grid.nt}  cfl: {grid.cfl:.6g}")
    _say(args, f"mass: {mass0:.12g} -> {mass1:.12g}")
    _say(args, f"min density: {min(trace.min_rho):.6g}  min temperature: "
               f"{min(trace.min_temp):.6g}")


def cmd_study(cfg: RunConfig, out: Path, args) -> None:
    grid = cfg.grid()
    f0 = initial_condition(cfg)
    sp = cfg.study or StudyParams()
    try:
        report = scaling_study(f0, grid, sp.m, sp.levels, sp.refine, workers=worker_count())
    except GridError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, (DegenerateTemperatureError, InvalidInitialCondition)):
            raise
        raise ConfigError(f"study: {exc}") from None
    out.mkdir(parents=True, exist_ok=True)
    if cfg.wants("convergence.json"):
        (out / "convergence.json").write_text(report.to_json())
    if cfg.wants("convergence.csv"):
        report.write_csv(out / "convergence.csv")
    for lv in report.levels:
        _say(args, f"dt={lv.dt:.6g} dx={lv.dx:.6g} dv={lv.dv:.6g} error={lv.error_l1_2:.6g}")
    print(f"fitted_rate: {report.fitted_rate:.6g}")


def cmd_sweep(cfg: RunConfig, out: Path, args) -> None:
    grid = cfg.grid()
    f0 = initial_condition(cfg)
    try:
        rows = cfl_sweep(f0, grid, cfg.cfl_values)
    except GridError as exc:
        raise ConfigError(f"cfl_values: {exc}") from None
    out.mkdir(parents=True, exist_ok=True)
    if cfg.wants("cfl_sweep.csv"):
        write_sweep_csv(rows, out / "cfl_sweep.csv")
    for r in rows:
        _say(args, f"cfl={r.cfl:.6g} nt={r.nt} nq_ratio={r.nq_ratio:.6g} "
                   f"blowup={'yes' if r.blowup else 'no'}")
    if any(r.blowup for r in rows):
        raise SimulationAborted("blow-up in CFL sweep")


def cmd_validate(cfg: RunConfig, out: Path, args) -> None:
    grid = cfg.grid(check_time_step=False)
    report = validate_mesh(grid, initial_condition(cfg))
    for line in report.lines():
        print(line)


COMMANDS = {"run": cmd_run, "study": cmd_study, "sweep": cmd_sweep, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bgk-sl",
                                description="Semi-Lagrangian BGK solver and convergence harness")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config's outputs)")
    p.add_argument("--quiet", action="store_true", help="only print results and errors")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(args.config)
        out = Path(args.out or cfg.outputs)
        COMMANDS[args.command](cfg, out, args)
    except (ConfigError, GridError, InvalidInitialCondition) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationAborted, DegenerateTemperatureError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
