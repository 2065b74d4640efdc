"""Run specifications, orchestration and deterministic CSV output.

A run spec is an INI file::

    [run]
    mode = analytic          ; analytic | numeric | heom | compare | discriminant_map | sweep
    initial = excite:1       ; excite:k | uniform | dark13 | dark12 | comma-separated complex list
    t_end = 100
    n_samples = 1001

    [system]
    n_atoms = 2
    lam = 0.1
    gamma = 0.1
    dipole = 0.1
    detuning = 0
    topology = all_to_all    ; all_to_all | chain
    cavity = single          ; single | double

    [solver]                 ; optional overrides
    rtol = 1e-10
    atol = 1e-10
    depth = 6
    truncation = total_depth

    [sweep]                  ; mode = sweep only
    parameter = gamma
    values = 0.01, 0.1, 0.5
    mode = analytic
    reference = 0.1          ; optional: also emit |P(v) - P(reference)| per value

    [map]                    ; mode = discriminant_map only
    delta_min = 0
    delta_max = 1
    gamma_min = 0.005
    gamma_max = 1
    resolution = 200

Omitted system keys default to ``lam = gamma = dipole = 0.1`` and
``detuning = 0``.  Every solver is deterministic, so identical specs give
byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import configparser
import enum
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, heom, rwa, spectral
from .core import Cavity, ConfigError, SystemConfig, TimeSeries, Topology

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

SPEC_BEGIN = "--- spec ---"
SPEC_END = "--- end spec ---"


class SpecError(ValueError):
    """Malformed or invalid run spec; carries the offending field and line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class RunFailure(RuntimeError):
    """Solver failure with the run context attached."""


class Mode(enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"
    HEOM = "heom"
    COMPARE = "compare"
    DISCRIMINANT_MAP = "discriminant_map"
    SWEEP = "sweep"


_SYSTEM_KEYS = ("n_atoms", "lam", "gamma", "dipole", "detuning", "topology", "cavity")
SWEEPABLE = ("n_atoms", "lam", "gamma", "dipole", "detuning")
_SINGLE_MODES = (Mode.ANALYTIC, Mode.NUMERIC, Mode.HEOM)


@dataclass(frozen=True)
class SolverOverrides:
    rtol: float | None = None
    atol: float | None = None
    depth: int = heom.DEFAULT_DEPTH
    truncation: str = heom.Truncation.TOTAL_DEPTH.value

    def rwa_tolerances(self) -> dict:
        return {
            "rtol": rwa.DEFAULT_RTOL if self.rtol is None else self.rtol,
            "atol": rwa.DEFAULT_ATOL if self.atol is None else self.atol,
        }

    def heom_tolerances(self) -> dict:
        return {
            "rtol": heom.DEFAULT_RTOL if self.rtol is None else self.rtol,
            "atol": heom.DEFAULT_ATOL if self.atol is None else self.atol,
        }


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    mode: Mode = Mode.ANALYTIC
    reference: float | None = None


@dataclass(frozen=True)
class MapSpec:
    delta_range: tuple[float, float] = (0.0, 1.0)
    gamma_range: tuple[float, float] = (0.005, 1.0)
    resolution: int = 200


@dataclass(frozen=True)
class RunSpec:
    """Fully validated description of one invocation."""

    mode: Mode
    system: SystemConfig
    initial: str = "excite:1"
    amplitudes: tuple[complex, ...] = ()
    t_end: float = 100.0
    n_samples: int = 1001
    output_path: str | None = None
    solver: SolverOverrides = field(default_factory=SolverOverrides)
    sweep: SweepSpec | None = None
    grid: MapSpec | None = None

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_samples)

    @property
    def initial_amplitudes(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


@dataclass
class ResultBundle:
    """Metadata plus one or more labelled series or a discriminant map."""

    spec: RunSpec
    metadata: dict
    series: list[tuple[str, TimeSeries]] = field(default_factory=list)
    discriminant: spectral.DiscriminantMap | None = None


# ---------------------------------------------------------------------------
# presets and parsing


def expand_preset(initial: str, n_atoms: int) -> tuple[complex, ...]:
    """Amplitude vector for a preset name or an explicit comma-separated list."""
    token = initial.strip().lower()
    s = 1 / np.sqrt(2)
    if token.startswith("excite:"):
        try:
            k = int(token.split(":", 1)[1])
        except ValueError:
            raise SpecError(f"bad preset {initial!r}", "initial") from None
        if not 1 <= k <= n_atoms:
            raise SpecError(f"excite:{k} needs 1 <= k <= n_atoms = {n_atoms}", "initial")
        c = np.zeros(n_atoms, dtype=complex)
        c[k - 1] = 1
    elif token == "uniform":
        c = np.full(n_atoms, 1 / np.sqrt(n_atoms), dtype=complex)
    elif token in ("dark13", "dark12"):
        if n_atoms != 3:
            raise SpecError(f"preset {token} requires n_atoms = 3, got {n_atoms}", "initial")
        c = np.zeros(3, dtype=complex)
        c[0], c[2 if token == "dark13" else 1] = s, -s
    else:
        try:
            c = np.array([complex(v.strip().replace(" ", "")) for v in initial.split(",")])
        except ValueError:
            raise SpecError(f"unknown preset or amplitude list {initial!r}", "initial") from None
        if c.size != n_atoms:
            raise SpecError(f"expected {n_atoms} amplitudes, got {c.size}", "initial")
    if np.sum(np.abs(c) ** 2) > 1 + 1e-12:
        raise SpecError("amplitude norm exceeds 1", "initial")
    return tuple(complex(v) for v in c)


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
        elif section and "=" in line and not line.startswith((";", "#")):
            lines[(section, line.split("=", 1)[0].strip().lower())] = no
    return lines


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines: dict):
        self.parser = parser
        self.lines = lines
        self.used: set[tuple[str, str]] = set()

    def get(self, section: str, key: str, default=None, convert=str):
        if not self.parser.has_option(section, key):
            return default
        self.used.add((section, key))
        raw = self.parser.get(section, key)
        try:
            return convert(raw)
        except (ValueError, ConfigError, SpecError) as exc:
            raise SpecError(f"invalid value {raw!r} ({exc})", f"{section}.{key}", self.lines.get((section, key))) from None

    def unused(self) -> list[tuple[str, str]]:
        known = {(s, k) for s in self.parser.sections() for k in self.parser.options(s)}
        return sorted(known - self.used)


def _int(raw: str) -> int:
    value = float(raw)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _float_list(raw: str) -> tuple[float, ...]:
    values = tuple(float(v) for v in raw.split(",") if v.strip())
    if not values:
        raise ValueError("empty list")
    return values


def parse_run_spec_text(text: str, origin: str = "<spec>") -> RunSpec:
    """Parse and validate spec text (see module docstring for the schema)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.DuplicateOptionError as exc:
        raise SpecError(f"duplicate key '{exc.option}'", f"{exc.section}.{exc.option}", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise SpecError(f"duplicate section [{exc.section}]", None, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise SpecError("content before the first [section] header", None, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise SpecError("line is not 'key = value'", None, lineno) from None

    lines = _key_lines(text)
    r = _Reader(parser, lines)
    for section in parser.sections():
        if section not in ("run", "system", "solver", "sweep", "map"):
            raise SpecError(f"unknown section [{section}]")

    if not parser.has_option("run", "mode"):
        raise SpecError("missing required key", "run.mode")
    mode = r.get("run", "mode", convert=lambda v: Mode(v.strip().lower()))

    def sys_value(key, default, convert=float):
        return r.get("system", key, default, convert)

    try:
        system = SystemConfig(
            n_atoms=sys_value("n_atoms", 1, _int),
            lam=sys_value("lam", 0.1),
            gamma=sys_value("gamma", 0.1),
            dipole=sys_value("dipole", 0.1),
            detuning=sys_value("detuning", 0.0),
            topology=sys_value("topology", Topology.ALL_TO_ALL, lambda v: Topology(v.strip().lower())),
            cavity=sys_value("cavity", Cavity.SINGLE_LORENTZIAN, lambda v: Cavity(v.strip().lower())),
        )
    except ConfigError as exc:
        msg = str(exc)
        name = next((f for f in _SYSTEM_KEYS if f in msg), "n_atoms")
        raise SpecError(str(exc), f"system.{name}", lines.get(("system", name))) from None

    initial = r.get("run", "initial", "excite:1").strip()
    try:
        amplitudes = expand_preset(initial, system.n_atoms)
    except SpecError as exc:
        raise SpecError(str(exc).split(": ", 1)[-1], "run.initial", lines.get(("run", "initial"))) from None

    t_end = r.get("run", "t_end", 100.0, float)
    n_samples = r.get("run", "n_samples", 1001, _int)
    if not (np.isfinite(t_end) and t_end > 0):
        raise SpecError("must be finite and > 0", "run.t_end", lines.get(("run", "t_end")))
    if n_samples < 2:
        raise SpecError("must be >= 2", "run.n_samples", lines.get(("run", "n_samples")))
    output = r.get("run", "output", None)

    solver = SolverOverrides(
        rtol=r.get("solver", "rtol", None, float),
        atol=r.get("solver", "atol", None, float),
        depth=r.get("solver", "depth", heom.DEFAULT_DEPTH, _int),
        truncation=r.get("solver", "truncation", heom.Truncation.TOTAL_DEPTH.value,
                         lambda v: heom.Truncation(v.strip().lower()).value),
    )
    for key in ("rtol", "atol"):
        value = getattr(solver, key)
        if value is not None and not value > 0:
            raise SpecError("must be > 0", f"solver.{key}", lines.get(("solver", key)))
    if solver.depth < 0:
        raise SpecError("must be >= 0", "solver.depth", lines.get(("solver", "depth")))

    sweep = None
    if mode is Mode.SWEEP:
        if not parser.has_section("sweep"):
            raise SpecError("sweep mode needs a [sweep] section", "sweep")
        parameter = r.get("sweep", "parameter", None, lambda v: v.strip().lower())
        if parameter not in SWEEPABLE:
            raise SpecError(f"must be one of {', '.join(SWEEPABLE)}", "sweep.parameter", lines.get(("sweep", "parameter")))
        values = r.get("sweep", "values", None, _float_list)
        if values is None:
            raise SpecError("missing required key", "sweep.values")
        sub = r.get("sweep", "mode", Mode.ANALYTIC, lambda v: Mode(v.strip().lower()))
        if sub not in _SINGLE_MODES:
            raise SpecError("must be analytic, numeric or heom", "sweep.mode", lines.get(("sweep", "mode")))
        reference = r.get("sweep", "reference", None, float)
        if reference is not None and reference not in values:
            raise SpecError("must be one of the swept values", "sweep.reference", lines.get(("sweep", "reference")))
        sweep = SweepSpec(parameter, values, sub, reference)
        for v in values:
            _swept(system, initial, sweep.parameter, v)

    grid = None
    if mode is Mode.DISCRIMINANT_MAP:
        defaults = MapSpec()
        grid = MapSpec(
            delta_range=(r.get("map", "delta_min", defaults.delta_range[0], float),
                         r.get("map", "delta_max", defaults.delta_range[1], float)),
            gamma_range=(r.get("map", "gamma_min", defaults.gamma_range[0], float),
                         r.get("map", "gamma_max", defaults.gamma_range[1], float)),
            resolution=r.get("map", "resolution", defaults.resolution, _int),
        )
        if grid.resolution < 2:
            raise SpecError("must be >= 2", "map.resolution", lines.get(("map", "resolution")))
        if not (0 <= grid.delta_range[0] < grid.delta_range[1]):
            raise SpecError("need 0 <= delta_min < delta_max", "map.delta_min")
        if not (0 < grid.gamma_range[0] < grid.gamma_range[1]):
            raise SpecError("need 0 < gamma_min < gamma_max", "map.gamma_min")

    leftovers = r.unused()
    if leftovers:
        s, k = leftovers[0]
        raise SpecError("unknown key", f"{s}.{k}", lines.get((s, k)))

    spec = RunSpec(mode, system, initial, amplitudes, t_end, n_samples, output, solver, sweep, grid)
    _check_mode(spec)
    return spec


def parse_run_spec(path) -> RunSpec:
    """Read and validate a spec file."""
    path = Path(path)
    return parse_run_spec_text(path.read_text(), origin=str(path))


def _swept(system: SystemConfig, initial: str, parameter: str, value: float) -> tuple[SystemConfig, tuple]:
    try:
        cfg = system.with_(**{parameter: int(value) if parameter == "n_atoms" else value})
        return cfg, expand_preset(initial, cfg.n_atoms)
    except (ConfigError, SpecError) as exc:
        raise SpecError(f"value {value!r}: {exc}", f"sweep.{parameter}") from None


def _check_mode(spec: RunSpec) -> None:
    cfg = spec.system
    modes = [spec.sweep.mode] if spec.mode is Mode.SWEEP else [spec.mode]
    if Mode.ANALYTIC in modes:
        if cfg.topology is not Topology.ALL_TO_ALL or cfg.cavity is not Cavity.SINGLE_LORENTZIAN:
            raise SpecError("analytic mode needs all_to_all topology and a single cavity", "run.mode")
    if Mode.HEOM in modes or Mode.COMPARE in modes:
        if cfg.cavity is not Cavity.SINGLE_LORENTZIAN:
            raise SpecError("HEOM supports the single Lorentzian cavity only", "system.cavity")
        if cfg.n_atoms > heom.MAX_ATOMS:
            raise SpecError(f"HEOM supports at most {heom.MAX_ATOMS} atoms", "system.n_atoms")
    if spec.mode is Mode.DISCRIMINANT_MAP and cfg.n_atoms != 1:
        raise SpecError("the discriminant map describes a single atom", "system.n_atoms")


def format_run_spec(spec: RunSpec) -> str:
    """Resolved spec as INI text; parsing it back gives an equal ``RunSpec``."""
    cfg = spec.system
    out = [
        "[run]",
        f"mode = {spec.mode.value}",
        f"initial = {spec.initial}",
        f"t_end = {spec.t_end!r}",
        f"n_samples = {spec.n_samples}",
    ]
    if spec.output_path is not None:
        out.append(f"output = {spec.output_path}")
    out += [
        "",
        "[system]",
        f"n_atoms = {cfg.n_atoms}",
        f"lam = {cfg.lam!r}",
        f"gamma = {cfg.gamma!r}",
        f"dipole = {cfg.dipole!r}",
        f"detuning = {cfg.detuning!r}",
        f"topology = {cfg.topology.value}",
        f"cavity = {cfg.cavity.value}",
        "",
        "[solver]",
    ]
    if spec.solver.rtol is not None:
        out.append(f"rtol = {spec.solver.rtol!r}")
    if spec.solver.atol is not None:
        out.append(f"atol = {spec.solver.atol!r}")
    out += [f"depth = {spec.solver.depth}", f"truncation = {spec.solver.truncation}"]
    if spec.sweep is not None:
        out += [
            "",
            "[sweep]",
            f"parameter = {spec.sweep.parameter}",
            "values = " + ", ".join(repr(v) for v in spec.sweep.values),
            f"mode = {spec.sweep.mode.value}",
        ]
        if spec.sweep.reference is not None:
            out.append(f"reference = {spec.sweep.reference!r}")
    if spec.grid is not None:
        g = spec.grid
        out += [
            "",
            "[map]",
            f"delta_min = {g.delta_range[0]!r}",
            f"delta_max = {g.delta_range[1]!r}",
            f"gamma_min = {g.gamma_range[0]!r}",
            f"gamma_max = {g.gamma_range[1]!r}",
            f"resolution = {g.resolution}",
        ]
    return "\n".join(out) + "\n"


def spec_from_csv(path) -> RunSpec:
    """Recover the resolved spec echoed into a CSV written by :func:`emit_csv`."""
    body, inside = [], False
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        text = line[2:] if line.startswith("# ") else line[1:]
        if text == SPEC_BEGIN:
            inside = True
        elif text == SPEC_END:
            break
        elif inside:
            body.append(text)
    if not inside:
        raise SpecError(f"{path} has no embedded spec block")
    return parse_run_spec_text("\n".join(body) + "\n", origin=str(path))


# ---------------------------------------------------------------------------
# execution


def _run_single(mode: Mode, cfg: SystemConfig, c0: np.ndarray, spec: RunSpec) -> TimeSeries:
    times = spec.times
    if mode is Mode.ANALYTIC:
        return rwa.solve_symmetric_analytic(cfg, c0, times)
    if mode is Mode.NUMERIC:
        return rwa.solve_numeric(cfg, None, c0, times, **spec.solver.rwa_tolerances())
    dt = times[1] - times[0]
    return heom.run_heom(
        cfg, c0, spec.t_end, dt,
        depth=spec.solver.depth, truncation=spec.solver.truncation,
        keep_states=False, **spec.solver.heom_tolerances(),
    )


def _sweep_task(args):
    spec, value = args
    cfg, c0 = _swept(spec.system, spec.initial, spec.sweep.parameter, value)
    return _run_single(spec.sweep.mode, cfg, np.array(c0), spec)


def _label_value(value: float) -> str:
    return f"{value:.12g}"


def _difference_series(times, a: TimeSeries, b: TimeSeries) -> TimeSeries:
    return TimeSeries(
        times=np.asarray(times, dtype=float),
        populations=np.abs(a.populations - b.populations),
        total_polarisation=np.abs(a.total_polarisation - b.total_polarisation),
        label="difference",
    )


def _metadata(spec: RunSpec) -> dict:
    meta = {"version": __version__, "mode": spec.mode.value}
    uses = [spec.sweep.mode] if spec.sweep else [spec.mode]
    if any(m in (Mode.NUMERIC, Mode.COMPARE) for m in uses):
        meta["rwa_tolerances"] = spec.solver.rwa_tolerances()
    if any(m in (Mode.HEOM, Mode.COMPARE) for m in uses):
        meta["heom_tolerances"] = spec.solver.heom_tolerances()
        meta["heom_depth"] = spec.solver.depth
        meta["heom_truncation"] = spec.solver.truncation
    return meta


def run(spec: RunSpec, workers: int | None = None) -> ResultBundle:
    """Execute ``spec`` and collect the results.

    Sweeps run on a pool of ``workers`` processes (default: logical cores);
    results are gathered in the order of the swept values.

    Raises
    ------
    RunFailure
        Wrapping any solver error, with the mode and configuration attached.
    """
    bundle = ResultBundle(spec, _metadata(spec))
    c0 = spec.initial_amplitudes
    try:
        if spec.mode in _SINGLE_MODES:
            series = _run_single(spec.mode, spec.system, c0, spec)
            bundle.series.append((series.label, series))
        elif spec.mode is Mode.COMPARE:
            cmp = heom.compare_rwa_heom(
                spec.system, c0, spec.times,
                depth=spec.solver.depth, truncation=spec.solver.truncation,
                keep_states=False, **spec.solver.heom_tolerances(),
            )
            bundle.series += [
                ("rwa", cmp.rwa),
                ("heom", cmp.heom),
                ("difference", _difference_series(spec.times, cmp.rwa, cmp.heom)),
            ]
            bundle.metadata["max_difference"] = cmp.max_difference
        elif spec.mode is Mode.DISCRIMINANT_MAP:
            g = spec.grid
            bundle.discriminant = spectral.discriminant_map(
                g.delta_range, g.gamma_range, spec.system.lam, g.resolution
            )
        else:
            tasks = [(spec, v) for v in spec.sweep.values]
            workers = workers or os.cpu_count() or 1
            if workers == 1 or len(tasks) == 1:
                results = [_sweep_task(t) for t in tasks]
            else:
                with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
                    results = list(pool.map(_sweep_task, tasks))
            for value, series in zip(spec.sweep.values, results):
                label = f"{spec.sweep.parameter}={_label_value(value)}"
                series.label = label
                bundle.series.append((label, series))
            ref = spec.sweep.reference
            if ref is not None:
                base = results[spec.sweep.values.index(ref)]
                for value, series in zip(spec.sweep.values, results):
                    if value != ref:
                        diff = _difference_series(spec.times, series, base)
                        diff.label = f"difference:{series.label}"
                        bundle.series.append((diff.label, diff))
    except (rwa.SolverError, heom.HeomError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise RunFailure(f"{spec.mode.value} run failed for {spec.system}: {exc}") from exc
    for label, series in bundle.series:
        if series.diagnostics:
            bundle.metadata[f"diagnostics[{label}]"] = series.diagnostics
    return bundle


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _meta_lines(value, prefix: str) -> list[str]:
    if isinstance(value, dict):
        lines = []
        for k in value:
            lines += _meta_lines(value[k], f"{prefix}{k}." if isinstance(value[k], dict) else f"{prefix}{k}")
        return lines
    if isinstance(value, float):
        value = _fmt(value)
    return [f"# {prefix} = {value}"]


def _header(bundle: ResultBundle, label: str | None) -> list[str]:
    lines = [f"# cavity-memory-sim v{__version__}"]
    if label is not None:
        lines.append(f"# series = {label}")
    for key, value in bundle.metadata.items():
        lines += _meta_lines(value, f"{key}." if isinstance(value, dict) else key)
    lines.append(f"# {SPEC_BEGIN}")
    lines += [f"# {line}" if line else "#" for line in format_run_spec(bundle.spec).splitlines()]
    lines.append(f"# {SPEC_END}")
    return lines


def series_csv_text(bundle: ResultBundle, label: str, series: TimeSeries) -> str:
    cols = ["t"] + [f"P_{i + 1}" for i in range(series.n_atoms)] + ["abs_c_plus"]
    lines = _header(bundle, label) + [",".join(cols)]
    data = np.column_stack([series.times, series.populations, series.total_polarisation])
    lines += [",".join(_fmt(x) for x in row) for row in data]
    return "\n".join(lines) + "\n"


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=+-]", "_", label)


def emit_csv(bundle: ResultBundle, path) -> list[Path]:
    """Write the bundle; multi-series bundles get one ``<stem>__<label>.csv`` per series.

    Returns the written paths.  I/O errors propagate unchanged.
    """
    path = Path(path)
    if bundle.discriminant is not None:
        text = "\n".join(_header(bundle, None)) + "\n" + bundle.discriminant.csv_text()
        path.write_text(text)
        return [path]
    if len(bundle.series) == 1:
        label, series = bundle.series[0]
        path.write_text(series_csv_text(bundle, label, series))
        return [path]
    written = []
    for label, series in bundle.series:
        target = path.with_name(f"{path.stem}__{_safe(label)}{path.suffix or '.csv'}")
        target.write_text(series_csv_text(bundle, label, series))
        written.append(target)
    return written


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run a cavity-reservoir simulation spec.")
    p.add_argument("spec", help="INI run spec")
    p.add_argument("--out", help="output CSV path (default: [run] output, else <spec stem>.csv)")
    p.add_argument("--workers", type=int, default=None, help="sweep worker processes")
    p.add_argument("--seedless", action="store_true", help="accepted for compatibility; no solver uses randomness")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec_path = Path(args.spec)
    try:
        spec = parse_run_spec(spec_path)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SpecError as exc:
        print(f"{spec_path}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out or spec.output_path or spec_path.with_suffix(".csv").name)
    try:
        bundle = run(spec, workers=args.workers)
    except RunFailure as exc:
        print(f"{spec_path}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for written in emit_csv(bundle, out):
        print(written)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
