"""Declarative scenario files: parse, validate, serialize, and run.

A scenario is an INI-style text file that describes one job end to end, so a
run is reproducible from the file alone.  Sections:

- ``[job]``: ``kind`` (one of ``static``, ``dynamic``, ``pendulum``,
  ``det_probe``, ``convergence_sweep``, ``frequency_sweep``), optional
  ``preset`` to start from a named built-in scenario, and ``seed``.
- ``[discretization]``: spline ``degree``, ``continuity``, ``n_elements``,
  rod length ``L``, and the ``outlier_removal`` switch.
- ``[rod]``: section properties, either directly (``EA``, ``EI``, ``A_rho``,
  ``I_rho``) or as ``E``/``density``/``diameter`` of a circular section,
  plus the rotary-inertia scale ``alpha`` and the straight initial
  configuration (``origin``, unit ``direction``).
- ``[bc]``: ``left``/``right`` end conditions (``free``/``pinned``/``clamped``).
- ``[time]`` and ``[static]``: stepping controls for transient and
  load-ramped jobs respectively.
- ``[pendulum]``: parameters of the stiff spring pendulum job.
- ``[sweep]``: grid/sweep definitions for ``det_probe``,
  ``convergence_sweep`` and ``frequency_sweep`` jobs.
- ``[output]``: probe arc positions and artifact file names.
- ``[load:<name>]``: one applied load per section; ``type`` selects among
  ``point``, ``gravity``, ``follower``, ``tip_moment``, ``pulsating`` and
  ``flow``.

Parsing materializes every default, so serializing a parsed scenario and
parsing it again yields an identical job description.  Unknown sections or
keys are rejected.  ``run_scenario`` executes a parsed scenario into an
output directory: a time-series CSV (full double precision), a deterministic
``metadata.json`` echoing the scenario, job-specific tables, and a separate
``run_stamp.json`` holding the only non-reproducible field (the wall-clock
timestamp).
"""

from __future__ import annotations

import configparser
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import dynamics, statics
from .assembly import basis_tables
from .diagnostics import (
    error_norms,
    hermite_beam_matrices,
    det_probe,
    linear_beam_det_probe,
    steady_state_stats,
)
from .forces import (
    FlowLoad,
    Follower2D,
    FreestreamProfile,
    Gravity,
    PointLoad,
    Pulsating,
    TipMoment,
)
from .kinematics import MaterialParams
from .pendulum import (
    PendulumParams,
    pendulum_run,
)
from .splines import (
    SplineSpace,
    boundary_constraints,
    build_extraction,
    eval_basis,
    make_spline_space,
    straight_configuration,
)

__all__ = [
    "Scenario",
    "ScenarioError",
    "ScenarioSyntaxError",
    "ScenarioValidationError",
    "Discretization",
    "RodSpec",
    "TimeSpec",
    "StaticSpec",
    "PendulumSpec",
    "DetGridSpec",
    "ConvergenceSpec",
    "FrequencySweepSpec",
    "OutputSpec",
    "LoadSpec",
    "parse_scenario",
    "serialize_scenario",
    "preset_names",
    "preset_text",
    "preset_description",
    "run_scenario",
    "WORKERS_ENV_VAR",
]

JOB_KINDS = (
    "static",
    "dynamic",
    "pendulum",
    "det_probe",
    "convergence_sweep",
    "frequency_sweep",
)
BC_NAMES = ("free", "pinned", "clamped")
LOAD_TYPES = ("point", "gravity", "follower", "tip_moment", "pulsating", "flow")
PROFILE_KINDS = ("still", "rotating_wind", "parabolic_wind")

#: Environment variable bounding the number of worker processes sweep jobs
#: may fan out to; unset or 1 keeps everything in-process.
WORKERS_ENV_VAR = "SPLINEROD_WORKERS"

_LOAD_PREFIX = "load:"


class ScenarioError(ValueError):
    """Base class for scenario file problems."""


class ScenarioSyntaxError(ScenarioError):
    """The text is not well-formed key-value syntax."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ScenarioValidationError(ScenarioError):
    """The text parsed but describes an inconsistent or unknown job."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# --------------------------------------------------------------------------
# value coders


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"not an integer: {text!r}") from None


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _vec3(text: str) -> tuple[float, float, float]:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError(f"expected three components, got {len(parts)}")
    return tuple(_float(p) for p in parts)


def _floats(text: str) -> tuple[float, ...]:
    parts = text.split()
    if not parts:
        raise ValueError("expected at least one number")
    return tuple(_float(p) for p in parts)


def _ints(text: str) -> tuple[int, ...]:
    parts = text.split()
    if not parts:
        raise ValueError("expected at least one integer")
    return tuple(_int(p) for p in parts)


def _choice(options: Sequence[str]) -> Callable[[str], str]:
    def coder(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {text!r}")
        return text

    return coder


def _fmt(value) -> str:
    """Serialize one value so that parsing it back reproduces it exactly."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    return str(value)


# --------------------------------------------------------------------------
# scenario description dataclasses


@dataclass(frozen=True)
class Discretization:
    """Spline space of the rod centerline."""

    degree: int
    continuity: int
    L: float
    n_elements: int | None
    outlier_removal: bool


@dataclass(frozen=True)
class RodSpec:
    """Section properties and straight initial configuration."""

    EA: float
    EI: float
    A_rho: float
    I_rho: float
    alpha: float
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]


@dataclass(frozen=True)
class TimeSpec:
    """Time-stepping controls for transient jobs."""

    dt: float
    T_end: float
    newton_tol: float
    max_newton_iters: int
    correction_state: str
    record_every: int


@dataclass(frozen=True)
class StaticSpec:
    """Load-ramp controls for static jobs."""

    n_load_steps: int
    newton_tol: float
    max_newton_iters: int


@dataclass(frozen=True)
class PendulumSpec:
    """Stiff spring pendulum: parameters, initial state, and ambient wind."""

    length: float
    stiffness: float
    mass: float
    gravity: float
    theta0: float
    eta0: float
    theta_dot0: float
    eta_dot0: float
    drag_linear: float
    drag_quadratic: float
    correction: str
    wind: bool
    wind_amplitude: float
    wind_mod_amplitude: float
    wind_mod_rate: float


@dataclass(frozen=True)
class DetGridSpec:
    """Step/mesh grid for the round-off determinant probe."""

    dt_values: tuple[float, ...]
    n_elements_values: tuple[int, ...]


@dataclass(frozen=True)
class ConvergenceSpec:
    """Parameter sweep compared against a reference solution.

    ``parameter = n_elements`` refines the mesh of a pure-end-moment static
    job and measures errors against the closed-form circular equilibrium;
    ``parameter = alpha`` reruns a transient job at scaled rotary inertia and
    measures the final-state change against the run at the unscaled value.
    """

    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class FrequencySweepSpec:
    """Forcing-frequency sweep of a pulsating-load transient job."""

    frequencies_hz: tuple[float, ...]
    window: float
    long_run: bool
    long_T_end: float


@dataclass(frozen=True)
class OutputSpec:
    """Probe positions and artifact file names."""

    probes: tuple[float, ...]
    timeseries: str
    metadata: str
    table: str


@dataclass(frozen=True)
class LoadSpec:
    """One applied load; which fields are set depends on ``type``."""

    name: str
    type: str
    s: float | None = None
    F: tuple[float, float, float] | None = None
    t_c: float | None = None
    g: tuple[float, float, float] | None = None
    f0: float | None = None
    m: tuple[float, float, float] | None = None
    amplitude: float | None = None
    frequency_hz: float | None = None
    direction: tuple[float, float, float] | None = None
    C_M: float | None = None
    C_N: float | None = None
    C_T: float | None = None
    rho_f: float | None = None
    diameter: float | None = None
    profile: str | None = None
    v0: float | None = None
    beta0: float | None = None
    L_ref: float | None = None
    coord_axis: int | None = None
    scale: float | None = None
    mod_rate: float | None = None
    mod_amplitude: float | None = None


@dataclass(frozen=True)
class Scenario:
    """A fully validated job description with all defaults materialized."""

    kind: str
    seed: int
    output: OutputSpec
    discretization: Discretization | None = None
    rod: RodSpec | None = None
    bc_left: str | None = None
    bc_right: str | None = None
    time: TimeSpec | None = None
    static: StaticSpec | None = None
    pendulum: PendulumSpec | None = None
    det_grid: DetGridSpec | None = None
    convergence: ConvergenceSpec | None = None
    frequency_sweep: FrequencySweepSpec | None = None
    loads: tuple[LoadSpec, ...] = ()


# --------------------------------------------------------------------------
# section readers

_REQUIRED = object()


class _SectionReader:
    """Consume keys of one section with per-key validation.

    Collects values through :meth:`take`; :meth:`finish` rejects keys that
    were present but never consumed, naming them.
    """

    def __init__(self, section: str, mapping):
        self.section = section
        self.pending = dict(mapping)

    def take(self, key: str, coder: Callable[[str], object], default=_REQUIRED):
        if key in self.pending:
            raw = self.pending.pop(key)
            try:
                return coder(raw)
            except ValueError as err:
                raise ScenarioValidationError(f"[{self.section}] {key}", str(err)) from None
        if default is _REQUIRED:
            raise ScenarioValidationError(f"[{self.section}] {key}", "required key is missing")
        return default

    def forbid(self, key: str, why: str) -> None:
        if key in self.pending:
            self.pending.pop(key)
            raise ScenarioValidationError(f"[{self.section}] {key}", why)

    def finish(self) -> None:
        if self.pending:
            key = next(iter(self.pending))
            raise ScenarioValidationError(f"[{self.section}] {key}", "unknown key")


def _positive(value: float, section: str, key: str) -> float:
    if not value > 0.0:
        raise ScenarioValidationError(f"[{section}] {key}", f"must be positive, got {value}")
    return value


def _non_negative(value: float, section: str, key: str) -> float:
    if value < 0.0:
        raise ScenarioValidationError(f"[{section}] {key}", f"must be >= 0, got {value}")
    return value


# --------------------------------------------------------------------------
# parsing


def _read_ini(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(
        interpolation=None,
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=None,
        strict=True,
        default_section="__defaults_unused__",
    )
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as err:
        raise ScenarioSyntaxError(err.lineno, "key outside of any [section]") from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as err:
        raise ScenarioSyntaxError(err.lineno or 0, err.message.replace("\n", " ")) from None
    except configparser.ParsingError as err:
        line = err.errors[0][0] if err.errors else 0
        raise ScenarioSyntaxError(line, "cannot parse as 'key = value'") from None
    return cp


def _merge(base: configparser.ConfigParser, over: configparser.ConfigParser) -> None:
    """Overlay ``over`` onto ``base`` in place (``over`` wins per key)."""
    for section in over.sections():
        if not base.has_section(section):
            base.add_section(section)
        for key, value in over.items(section):
            base.set(section, key, value)


def _apply_overrides(cp: configparser.ConfigParser, overrides: Sequence[str]) -> None:
    for item in overrides:
        head, eq, value = item.partition("=")
        section, dot, key = head.partition(".")
        if not eq or not dot or not section or not key:
            raise ScenarioValidationError(
                "--override", f"expected SECTION.KEY=VALUE, got {item!r}"
            )
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.strip(), value.strip())


def parse_scenario(text: str, overrides: Sequence[str] = ()) -> Scenario:
    """Parse and validate scenario text into a fully materialized job.

    ``overrides`` are ``section.key=value`` strings applied after preset
    expansion and before validation, mirroring the command line flag.
    """
    cp = _read_ini(text)

    # Presets may themselves start from another preset; expand until no
    # reference is left, newest keys winning over what they build on.
    expanded: list[str] = []
    while cp.has_section("job") and cp.has_option("job", "preset"):
        preset = cp.get("job", "preset")
        cp.remove_option("job", "preset")
        if preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ScenarioValidationError(
                "[job] preset", f"unknown preset {preset!r}; known presets: {known}"
            )
        if preset in expanded:
            raise ScenarioValidationError(
                "[job] preset", f"presets reference each other in a cycle: {expanded + [preset]}"
            )
        expanded.append(preset)
        base = _read_ini(PRESETS[preset])
        _merge(base, cp)
        cp = base

    _apply_overrides(cp, overrides)
    return _validate(cp)


def _validate(cp: configparser.ConfigParser) -> Scenario:
    sections = {name: dict(cp.items(name)) for name in cp.sections()}

    if "job" not in sections:
        raise ScenarioValidationError("[job]", "required section is missing")
    job = _SectionReader("job", sections.pop("job"))
    kind = job.take("kind", _choice(JOB_KINDS))
    seed = job.take("seed", _int, 0)
    job.finish()
    if seed < 0:
        raise ScenarioValidationError("[job] seed", f"must be >= 0, got {seed}")

    load_sections = {
        name: sections.pop(name) for name in list(sections) if name.startswith(_LOAD_PREFIX)
    }

    # The sweep section steers which other sections a sweep job needs, so it
    # is read before the per-kind section plan is fixed.
    det_grid = convergence = frequency_sweep = None
    if kind in ("det_probe", "convergence_sweep", "frequency_sweep"):
        if "sweep" not in sections:
            raise ScenarioValidationError("[sweep]", f"required for kind = {kind}")
        sweep = _SectionReader("sweep", sections.pop("sweep"))
        if kind == "det_probe":
            det_grid = _parse_det_grid(sweep)
        elif kind == "convergence_sweep":
            convergence = _parse_convergence(sweep)
        else:
            frequency_sweep = _parse_frequency_sweep(sweep)
        sweep.finish()
    elif "sweep" in sections:
        raise ScenarioValidationError("[sweep]", f"not allowed for kind = {kind}")

    plan = _section_plan(kind, convergence)
    for name in sections:
        if name not in plan:
            raise ScenarioValidationError(f"[{name}]", f"not allowed for kind = {kind}")
    for name, required in plan.items():
        if required and name not in sections:
            raise ScenarioValidationError(f"[{name}]", f"required for kind = {kind}")
    if load_sections and "loads" not in plan:
        first = next(iter(load_sections))
        raise ScenarioValidationError(f"[{first}]", f"loads are not allowed for kind = {kind}")

    discretization = rod = bc_left = bc_right = time = static = pendulum = None

    if "discretization" in plan:
        n_elements_swept = kind == "det_probe" or (
            convergence is not None and convergence.parameter == "n_elements"
        )
        discretization = _parse_discretization(
            _SectionReader("discretization", sections.get("discretization", {})),
            n_elements_swept=n_elements_swept,
        )
    if "rod" in plan:
        rod = _parse_rod(_SectionReader("rod", sections.get("rod", {})))
    if "bc" in plan:
        bc = _SectionReader("bc", sections.get("bc", {}))
        bc_left = bc.take("left", _choice(BC_NAMES), "free")
        bc_right = bc.take("right", _choice(BC_NAMES), "free")
        bc.finish()
    if "time" in plan:
        time = _parse_time(_SectionReader("time", sections.get("time", {})))
    if "static" in plan:
        static = _parse_static(_SectionReader("static", sections.get("static", {})))
    if "pendulum" in plan:
        pendulum = _parse_pendulum(_SectionReader("pendulum", sections.get("pendulum", {})))

    loads = tuple(
        _parse_load(name[len(_LOAD_PREFIX) :], _SectionReader(name, mapping))
        for name, mapping in load_sections.items()
    )
    _check_load_names(loads)

    output = _parse_output(
        _SectionReader("output", sections.get("output", {})),
        kind,
        discretization.L if discretization is not None else None,
    )

    scenario = Scenario(
        kind=kind,
        seed=seed,
        output=output,
        discretization=discretization,
        rod=rod,
        bc_left=bc_left,
        bc_right=bc_right,
        time=time,
        static=static,
        pendulum=pendulum,
        det_grid=det_grid,
        convergence=convergence,
        frequency_sweep=frequency_sweep,
        loads=loads,
    )
    _check_cross_section_rules(scenario)
    return scenario


def _section_plan(kind: str, convergence: ConvergenceSpec | None) -> dict[str, bool]:
    """Allowed sections for a job kind; the value marks a section required."""
    if kind == "static":
        return {"discretization": True, "rod": True, "bc": False, "static": False,
                "output": False, "loads": False}
    if kind == "dynamic":
        return {"discretization": True, "rod": True, "bc": False, "time": True,
                "output": False, "loads": False}
    if kind == "pendulum":
        return {"time": True, "pendulum": False, "output": False}
    if kind == "det_probe":
        return {"discretization": True, "rod": True, "output": False}
    if kind == "frequency_sweep":
        return {"discretization": True, "rod": True, "bc": False, "time": True,
                "output": False, "loads": False}
    # convergence_sweep: the swept parameter decides between the static and
    # the transient flavor of the base job.
    if convergence is not None and convergence.parameter == "alpha":
        return {"discretization": True, "rod": True, "bc": False, "time": True,
                "output": False, "loads": False}
    return {"discretization": True, "rod": True, "bc": False, "static": False,
            "output": False, "loads": False}


def _parse_discretization(reader: _SectionReader, n_elements_swept: bool) -> Discretization:
    degree = reader.take("degree", _int)
    continuity = reader.take("continuity", _int)
    L = reader.take("L", _float)
    if n_elements_swept:
        reader.forbid("n_elements", "swept by this job kind; set it in [sweep]")
        n_elements = None
    else:
        n_elements = reader.take("n_elements", _int)
    outlier_removal = reader.take("outlier_removal", _bool, True)
    reader.finish()

    if degree < 2:
        raise ScenarioValidationError(
            "[discretization] degree", f"curvature needs degree >= 2, got {degree}"
        )
    if not 1 <= continuity <= degree - 1:
        raise ScenarioValidationError(
            "[discretization] continuity",
            f"must satisfy 1 <= continuity <= degree - 1, got {continuity} for degree {degree}",
        )
    _positive(L, "discretization", "L")
    if n_elements is not None and n_elements < 1:
        raise ScenarioValidationError(
            "[discretization] n_elements", f"must be >= 1, got {n_elements}"
        )
    return Discretization(degree, continuity, L, n_elements, outlier_removal)


def _parse_rod(reader: _SectionReader) -> RodSpec:
    geometry_keys = [k for k in ("E", "density", "diameter") if k in reader.pending]
    stiffness_keys = [k for k in ("EA", "EI", "A_rho", "I_rho") if k in reader.pending]
    if geometry_keys and stiffness_keys:
        raise ScenarioValidationError(
            f"[rod] {stiffness_keys[0]}",
            "give either E/density/diameter or EA/EI/A_rho/I_rho, not both",
        )
    if geometry_keys:
        E = reader.take("E", _float)
        density = reader.take("density", _float)
        diameter = reader.take("diameter", _float)
        _positive(E, "rod", "E")
        _positive(density, "rod", "density")
        _positive(diameter, "rod", "diameter")
        area = math.pi * diameter**2 / 4.0
        inertia = math.pi * diameter**4 / 64.0
        EA, EI = E * area, E * inertia
        A_rho, I_rho = density * area, density * inertia
    else:
        EA = reader.take("EA", _float)
        EI = reader.take("EI", _float)
        A_rho = reader.take("A_rho", _float)
        I_rho = reader.take("I_rho", _float)
        for key, value in (("EA", EA), ("EI", EI), ("A_rho", A_rho), ("I_rho", I_rho)):
            _positive(value, "rod", key)
    alpha = reader.take("alpha", _float, 1.0)
    origin = reader.take("origin", _vec3, (0.0, 0.0, 0.0))
    direction = reader.take("direction", _vec3, (1.0, 0.0, 0.0))
    reader.finish()

    _non_negative(alpha, "rod", "alpha")
    norm = math.sqrt(sum(c * c for c in direction))
    if abs(norm - 1.0) > 1e-9:
        raise ScenarioValidationError(
            "[rod] direction", f"must be a unit vector, got |direction| = {norm!r}"
        )
    return RodSpec(EA, EI, A_rho, I_rho, alpha, origin, direction)


def _parse_time(reader: _SectionReader) -> TimeSpec:
    spec = TimeSpec(
        dt=reader.take("dt", _float),
        T_end=reader.take("T_end", _float),
        newton_tol=reader.take("newton_tol", _float, 1e-10),
        max_newton_iters=reader.take("max_newton_iters", _int, 25),
        correction_state=reader.take(
            "correction_state", _choice(("midpoint", "endpoints")), "midpoint"
        ),
        record_every=reader.take("record_every", _int, 1),
    )
    reader.finish()
    _positive(spec.dt, "time", "dt")
    if spec.T_end < spec.dt:
        raise ScenarioValidationError(
            "[time] T_end", f"must be at least dt = {spec.dt}, got {spec.T_end}"
        )
    _positive(spec.newton_tol, "time", "newton_tol")
    if spec.max_newton_iters < 1:
        raise ScenarioValidationError(
            "[time] max_newton_iters", f"must be >= 1, got {spec.max_newton_iters}"
        )
    if spec.record_every < 1:
        raise ScenarioValidationError(
            "[time] record_every", f"must be >= 1, got {spec.record_every}"
        )
    return spec


def _parse_static(reader: _SectionReader) -> StaticSpec:
    spec = StaticSpec(
        n_load_steps=reader.take("n_load_steps", _int, 1),
        newton_tol=reader.take("newton_tol", _float, 1e-10),
        max_newton_iters=reader.take("max_newton_iters", _int, 20),
    )
    reader.finish()
    if spec.n_load_steps < 1:
        raise ScenarioValidationError(
            "[static] n_load_steps", f"must be >= 1, got {spec.n_load_steps}"
        )
    _positive(spec.newton_tol, "static", "newton_tol")
    if spec.max_newton_iters < 1:
        raise ScenarioValidationError(
            "[static] max_newton_iters", f"must be >= 1, got {spec.max_newton_iters}"
        )
    return spec


def _parse_pendulum(reader: _SectionReader) -> PendulumSpec:
    length = reader.take("length", _float, 1.0)
    stiffness = reader.take("stiffness", _float, 5328.49)
    mass = reader.take("mass", _float, 1.0)
    gravity = reader.take("gravity", _float, 0.0)
    theta0 = reader.take("theta0", _float, 0.0)
    eta0 = reader.take("eta0", _float, 0.1)
    theta_dot0 = reader.take("theta_dot0", _float, -0.5)
    eta_dot0 = reader.take("eta_dot0", _float, 0.25)
    drag_linear = reader.take("drag_linear", _float, 0.0)
    drag_quadratic = reader.take("drag_quadratic", _float, 0.0)
    correction = reader.take("correction", _choice(("conserving", "midpoint")), "conserving")
    wind = reader.take("wind", _bool, False)
    wind_amplitude = reader.take("wind_amplitude", _float, 1.0)
    wind_mod_amplitude = reader.take("wind_mod_amplitude", _float, 0.1)
    default_rate = math.sqrt(stiffness / mass) / (100.0 * math.pi) if mass > 0 else 0.0
    wind_mod_rate = reader.take("wind_mod_rate", _float, default_rate)
    reader.finish()

    _positive(length, "pendulum", "length")
    _positive(stiffness, "pendulum", "stiffness")
    _positive(mass, "pendulum", "mass")
    _non_negative(gravity, "pendulum", "gravity")
    _non_negative(drag_linear, "pendulum", "drag_linear")
    _non_negative(drag_quadratic, "pendulum", "drag_quadratic")
    return PendulumSpec(
        length, stiffness, mass, gravity, theta0, eta0, theta_dot0, eta_dot0,
        drag_linear, drag_quadratic, correction, wind,
        wind_amplitude, wind_mod_amplitude, wind_mod_rate,
    )


def _parse_det_grid(reader: _SectionReader) -> DetGridSpec:
    grid = DetGridSpec(
        dt_values=reader.take("dt_values", _floats),
        n_elements_values=reader.take("n_elements_values", _ints),
    )
    for dt in grid.dt_values:
        _positive(dt, "sweep", "dt_values")
    for nel in grid.n_elements_values:
        if nel < 1:
            raise ScenarioValidationError(
                "[sweep] n_elements_values", f"must be >= 1, got {nel}"
            )
    return grid


def _parse_convergence(reader: _SectionReader) -> ConvergenceSpec:
    parameter = reader.take("parameter", _choice(("n_elements", "alpha")))
    if parameter == "n_elements":
        values = tuple(float(v) for v in reader.take("values", _ints))
        for v in values:
            if v < 1:
                raise ScenarioValidationError("[sweep] values", f"must be >= 1, got {v}")
    else:
        values = reader.take("values", _floats)
        for v in values:
            _non_negative(v, "sweep", "values")
    if len(values) < 2:
        raise ScenarioValidationError("[sweep] values", "need at least two values to sweep")
    return ConvergenceSpec(parameter, values)


def _parse_frequency_sweep(reader: _SectionReader) -> FrequencySweepSpec:
    spec = FrequencySweepSpec(
        frequencies_hz=reader.take("frequencies_hz", _floats),
        window=reader.take("window", _float, 10.0),
        long_run=reader.take("long_run", _bool, False),
        long_T_end=reader.take("long_T_end", _float, 1000.0),
    )
    for f in spec.frequencies_hz:
        _positive(f, "sweep", "frequencies_hz")
    _positive(spec.window, "sweep", "window")
    _positive(spec.long_T_end, "sweep", "long_T_end")
    return spec


def _parse_output(reader: _SectionReader, kind: str, L: float | None) -> OutputSpec:
    if L is None:
        reader.forbid("probes", f"probes need a rod; not allowed for kind = {kind}")
        probes: tuple[float, ...] = ()
    else:
        probes = reader.take("probes", _floats, (L,))
    spec = OutputSpec(
        probes=probes,
        timeseries=reader.take("timeseries", str, "timeseries.csv"),
        metadata=reader.take("metadata", str, "metadata.json"),
        table=reader.take("table", str, "table.csv"),
    )
    reader.finish()
    if L is not None:
        for s in spec.probes:
            if not 0.0 <= s <= L:
                raise ScenarioValidationError(
                    "[output] probes", f"probe position {s} outside [0, {L}]"
                )
    for key, name in (
        ("timeseries", spec.timeseries),
        ("metadata", spec.metadata),
        ("table", spec.table),
    ):
        if not name or Path(name).is_absolute():
            raise ScenarioValidationError(
                f"[output] {key}", f"must be a relative file name, got {name!r}"
            )
    return spec


# required and optional keys per load type; every optional comes with its
# materialized default.
_LOAD_RULES: dict[str, tuple[tuple[str, ...], dict[str, object]]] = {
    "point": (("s", "F"), {"t_c": None}),
    "gravity": (("g",), {}),
    "follower": (("f0",), {}),
    "tip_moment": (("m",), {}),
    "pulsating": (("amplitude", "frequency_hz", "direction", "s"), {}),
    "flow": (("C_M", "C_N", "C_T", "rho_f", "diameter", "profile"), {}),
}
_PROFILE_RULES: dict[str, tuple[tuple[str, ...], dict[str, object]]] = {
    "still": ((), {}),
    "rotating_wind": (("v0", "beta0", "L_ref"), {"coord_axis": 2}),
    "parabolic_wind": (
        ("scale",),
        {"coord_axis": 2, "direction": (0.0, 1.0, 0.0), "mod_rate": 0.0, "mod_amplitude": 0.0},
    ),
}
_LOAD_CODERS: dict[str, Callable[[str], object]] = {
    "s": _float, "F": _vec3, "t_c": _float, "g": _vec3, "f0": _float, "m": _vec3,
    "amplitude": _float, "frequency_hz": _float, "direction": _vec3,
    "C_M": _float, "C_N": _float, "C_T": _float, "rho_f": _float, "diameter": _float,
    "profile": _choice(PROFILE_KINDS),
    "v0": _float, "beta0": _float, "L_ref": _float, "coord_axis": _int,
    "scale": _float, "mod_rate": _float, "mod_amplitude": _float,
}


def _parse_load(name: str, reader: _SectionReader) -> LoadSpec:
    if not name:
        raise ScenarioValidationError(f"[{reader.section}]", "load sections need a name")
    load_type = reader.take("type", _choice(LOAD_TYPES))
    required, optional = _LOAD_RULES[load_type]
    fields: dict[str, object] = {}
    for key in required:
        fields[key] = reader.take(key, _LOAD_CODERS[key])
    for key, default in optional.items():
        fields[key] = reader.take(key, _LOAD_CODERS[key], default)
    if load_type == "flow":
        p_required, p_optional = _PROFILE_RULES[fields["profile"]]
        for key in p_required:
            fields[key] = reader.take(key, _LOAD_CODERS[key])
        for key, default in p_optional.items():
            fields[key] = reader.take(key, _LOAD_CODERS[key], default)
    reader.finish()

    section = reader.section
    for key in ("C_M", "C_N", "C_T", "rho_f", "diameter", "amplitude",
                "frequency_hz", "v0", "L_ref", "t_c"):
        if fields.get(key) is not None:
            _positive(fields[key], section, key)
    if "coord_axis" in fields and fields["coord_axis"] not in (0, 1, 2):
        raise ScenarioValidationError(
            f"[{section}] coord_axis", f"must be 0, 1 or 2, got {fields['coord_axis']}"
        )
    return LoadSpec(name=name, type=load_type, **fields)


def _check_load_names(loads: tuple[LoadSpec, ...]) -> None:
    seen: set[str] = set()
    for load in loads:
        if load.name in seen:
            raise ScenarioValidationError(
                f"[load:{load.name}]", "duplicate load name"
            )
        seen.add(load.name)


def _check_cross_section_rules(sc: Scenario) -> None:
    if sc.kind in ("static", "dynamic", "frequency_sweep", "convergence_sweep"):
        for load in sc.loads:
            if load.s is not None and not 0.0 <= load.s <= sc.discretization.L:
                raise ScenarioValidationError(
                    f"[load:{load.name}] s",
                    f"position {load.s} outside [0, {sc.discretization.L}]",
                )
    static_like = sc.kind == "static" or (
        sc.kind == "convergence_sweep" and sc.convergence.parameter == "n_elements"
    )
    if static_like and sc.bc_left == "free" and sc.bc_right == "free":
        raise ScenarioValidationError(
            "[bc] left", "static equilibria need at least one supported end"
        )
    if sc.kind == "frequency_sweep":
        pulsating = [ld for ld in sc.loads if ld.type == "pulsating"]
        if len(pulsating) != 1:
            raise ScenarioValidationError(
                "[sweep] frequencies_hz",
                f"frequency sweeps need exactly one pulsating load, found {len(pulsating)}",
            )
    if sc.kind == "convergence_sweep" and sc.convergence.parameter == "n_elements":
        if len(sc.loads) != 1 or sc.loads[0].type != "tip_moment":
            raise ScenarioValidationError(
                "[sweep] parameter",
                "mesh sweeps compare against the closed-form end-moment equilibrium "
                "and need a single tip_moment load",
            )
        mx, my, mz = sc.loads[0].m
        if mx != 0.0 or my != 0.0 or mz <= 0.0:
            raise ScenarioValidationError(
                f"[load:{sc.loads[0].name}] m",
                "the closed-form reference needs a moment of the form 0 0 m with m > 0",
            )
        if sc.rod.origin != (0.0, 0.0, 0.0) or sc.rod.direction != (1.0, 0.0, 0.0):
            raise ScenarioValidationError(
                "[rod] direction",
                "the closed-form reference needs origin 0 0 0 and direction 1 0 0",
            )
        if sc.bc_left != "clamped" or sc.bc_right != "free":
            raise ScenarioValidationError(
                "[bc] left", "the closed-form reference needs left = clamped, right = free"
            )


# --------------------------------------------------------------------------
# serialization


def serialize_scenario(sc: Scenario) -> str:
    """Render a scenario back to text; parsing the result reproduces ``sc``."""
    lines: list[str] = ["[job]", f"kind = {sc.kind}", f"seed = {sc.seed}", ""]

    def emit(section: str, pairs: Sequence[tuple[str, object]]) -> None:
        lines.append(f"[{section}]")
        for key, value in pairs:
            if value is not None:
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")

    if sc.discretization is not None:
        d = sc.discretization
        emit("discretization", [
            ("degree", d.degree), ("continuity", d.continuity), ("L", d.L),
            ("n_elements", d.n_elements), ("outlier_removal", d.outlier_removal),
        ])
    if sc.rod is not None:
        r = sc.rod
        emit("rod", [
            ("EA", r.EA), ("EI", r.EI), ("A_rho", r.A_rho), ("I_rho", r.I_rho),
            ("alpha", r.alpha), ("origin", r.origin), ("direction", r.direction),
        ])
    if sc.bc_left is not None:
        emit("bc", [("left", sc.bc_left), ("right", sc.bc_right)])
    if sc.time is not None:
        t = sc.time
        emit("time", [
            ("dt", t.dt), ("T_end", t.T_end), ("newton_tol", t.newton_tol),
            ("max_newton_iters", t.max_newton_iters),
            ("correction_state", t.correction_state), ("record_every", t.record_every),
        ])
    if sc.static is not None:
        s = sc.static
        emit("static", [
            ("n_load_steps", s.n_load_steps), ("newton_tol", s.newton_tol),
            ("max_newton_iters", s.max_newton_iters),
        ])
    if sc.pendulum is not None:
        p = sc.pendulum
        emit("pendulum", [
            ("length", p.length), ("stiffness", p.stiffness), ("mass", p.mass),
            ("gravity", p.gravity), ("theta0", p.theta0), ("eta0", p.eta0),
            ("theta_dot0", p.theta_dot0), ("eta_dot0", p.eta_dot0),
            ("drag_linear", p.drag_linear), ("drag_quadratic", p.drag_quadratic),
            ("correction", p.correction), ("wind", p.wind),
            ("wind_amplitude", p.wind_amplitude),
            ("wind_mod_amplitude", p.wind_mod_amplitude),
            ("wind_mod_rate", p.wind_mod_rate),
        ])
    if sc.det_grid is not None:
        g = sc.det_grid
        emit("sweep", [
            ("dt_values", g.dt_values),
            ("n_elements_values", g.n_elements_values),
        ])
    if sc.convergence is not None:
        c = sc.convergence
        values: tuple = c.values
        if c.parameter == "n_elements":
            values = tuple(int(v) for v in c.values)
        emit("sweep", [("parameter", c.parameter), ("values", values)])
    if sc.frequency_sweep is not None:
        f = sc.frequency_sweep
        emit("sweep", [
            ("frequencies_hz", f.frequencies_hz), ("window", f.window),
            ("long_run", f.long_run), ("long_T_end", f.long_T_end),
        ])
    for load in sc.loads:
        pairs: list[tuple[str, object]] = [("type", load.type)]
        required, optional = _LOAD_RULES[load.type]
        keys = list(required) + list(optional)
        if load.type == "flow":
            p_required, p_optional = _PROFILE_RULES[load.profile]
            keys += list(p_required) + list(p_optional)
        pairs += [(key, getattr(load, key)) for key in keys]
        emit(f"load:{load.name}", pairs)

    o = sc.output
    pairs = [("probes", o.probes)] if o.probes else []
    pairs += [("timeseries", o.timeseries), ("metadata", o.metadata), ("table", o.table)]
    emit("output", pairs)
    return "\n".join(lines)


# --------------------------------------------------------------------------
# building runtime objects


def _space_for(sc: Scenario, n_elements: int | None = None) -> SplineSpace:
    d = sc.discretization
    nel = d.n_elements if n_elements is None else n_elements
    return make_spline_space(d.degree, d.continuity, nel, d.L)


def _extraction_for(sc: Scenario, space: SplineSpace):
    constraints = boundary_constraints(
        space, sc.bc_left, sc.bc_right, removal=sc.discretization.outlier_removal
    )
    if not constraints:
        return None
    return build_extraction(space, constraints)


def _material_for(sc: Scenario, alpha: float | None = None) -> MaterialParams:
    r = sc.rod
    return MaterialParams(
        EA=r.EA, EI=r.EI, A_rho=r.A_rho, I_rho=r.I_rho,
        alpha=r.alpha if alpha is None else alpha,
    )


def _profile_for(load: LoadSpec) -> FreestreamProfile:
    if load.profile == "still":
        return FreestreamProfile(kind="still")
    if load.profile == "rotating_wind":
        return FreestreamProfile(
            kind="rotating_wind", coord_axis=load.coord_axis,
            v0=load.v0, beta0=load.beta0, L_ref=load.L_ref,
        )
    return FreestreamProfile(
        kind="parabolic_wind", coord_axis=load.coord_axis, scale=load.scale,
        direction=load.direction, mod_rate=load.mod_rate,
        mod_amplitude=load.mod_amplitude,
    )


def _force_for(load: LoadSpec):
    if load.type == "point":
        return PointLoad(s_loc=load.s, F_c=load.F, t_c=load.t_c)
    if load.type == "gravity":
        return Gravity(g_vector=load.g)
    if load.type == "follower":
        return Follower2D(f0=load.f0)
    if load.type == "tip_moment":
        return TipMoment(m_vector=load.m)
    if load.type == "pulsating":
        return Pulsating(
            A_F=load.amplitude, omega=2.0 * math.pi * load.frequency_hz,
            direction=load.direction, s_loc=load.s,
        )
    return FlowLoad(
        C_M=load.C_M, C_N=load.C_N, C_T=load.C_T, rho_f=load.rho_f,
        diameter=load.diameter, profile=_profile_for(load),
    )


def _loads_for(sc: Scenario) -> tuple:
    return tuple(_force_for(load) for load in sc.loads)


def _static_spec(sc: Scenario) -> StaticSpec:
    return sc.static if sc.static is not None else StaticSpec(1, 1e-10, 20)


def _static_problem(sc: Scenario, space: SplineSpace) -> statics.StaticProblem:
    spec = _static_spec(sc)
    return statics.StaticProblem(
        space=space,
        extraction=_extraction_for(sc, space),
        material=_material_for(sc),
        loads=_loads_for(sc),
        n_load_steps=spec.n_load_steps,
        newton_tol=spec.newton_tol,
        max_newton_iters=spec.max_newton_iters,
    )


def _dynamic_problem(
    sc: Scenario, alpha: float | None = None, T_end: float | None = None,
    loads: tuple | None = None,
) -> dynamics.DynamicProblem:
    space = _space_for(sc)
    t = sc.time
    q0 = straight_configuration(space, sc.rod.origin, sc.rod.direction).reshape(-1)
    return dynamics.DynamicProblem(
        space=space,
        extraction=_extraction_for(sc, space),
        material=_material_for(sc, alpha),
        loads=_loads_for(sc) if loads is None else loads,
        dt=t.dt,
        T_end=t.T_end if T_end is None else T_end,
        q0=q0,
        qdot0=np.zeros_like(q0),
        newton_tol=t.newton_tol,
        max_newton_iters=t.max_newton_iters,
        correction_state=t.correction_state,
        record_every=t.record_every,
    )


def _pendulum_params(sc: Scenario) -> PendulumParams:
    p = sc.pendulum
    return PendulumParams(
        L0=p.length, k=p.stiffness, m_mass=p.mass, g=p.gravity,
        dt=sc.time.dt, T_end=sc.time.T_end,
        theta0=p.theta0, eta0=p.eta0,
        theta_dot0=p.theta_dot0, eta_dot0=p.eta_dot0,
        drag_coefficient=p.drag_quadratic, drag_linear=p.drag_linear,
        correction=p.correction,
        newton_tol=sc.time.newton_tol, max_newton_iters=sc.time.max_newton_iters,
    )


def _pendulum_wind(p: PendulumSpec) -> FreestreamProfile | None:
    if not p.wind:
        return None
    return FreestreamProfile(
        kind="parabolic_wind", coord_axis=0, scale=p.wind_amplitude,
        direction=(0.0, 1.0, 0.0), mod_rate=p.wind_mod_rate,
        mod_amplitude=p.wind_mod_amplitude,
    )


# --------------------------------------------------------------------------
# artifact writing


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _probe_rows(space: SplineSpace, probes: Sequence[float]) -> np.ndarray:
    """Basis rows evaluating the centerline at the probe arc positions."""
    rows = np.zeros((len(probes), space.n_basis))
    for i, s in enumerate(probes):
        be = eval_basis(space, float(s), max_deriv=0)
        rows[i, be.first_index : be.first_index + be.values.size] = be.values
    return rows


def _probe_header(probes: Sequence[float]) -> list[str]:
    header = []
    for i in range(len(probes)):
        header += [f"probe{i}_x", f"probe{i}_y", f"probe{i}_z"]
    return header


def _probe_values(rows: np.ndarray, q: np.ndarray) -> list[float]:
    points = rows @ q.reshape(-1, 3)
    return [float(v) for v in points.reshape(-1)]


def _write_metadata(out_dir: Path, sc: Scenario, status: str, failure: dict | None,
                    outputs: dict[str, object]) -> None:
    from . import __version__

    meta = {
        "kind": sc.kind,
        "version": __version__,
        "status": status,
        "failure": failure,
        "outputs": outputs,
        "scenario": serialize_scenario(sc),
    }
    path = out_dir / sc.output.metadata
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    stamp = {"written_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    (out_dir / "run_stamp.json").write_text(json.dumps(stamp, indent=2) + "\n")


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# running


def run_scenario(sc: Scenario, out_dir) -> int:
    """Execute a scenario, writing artifacts into ``out_dir``.

    Returns a process exit status: 0 on success, 3 when a solver failed
    (partial outputs are still written, and the metadata carries a
    machine-readable failure record).
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    runner = {
        "static": _run_static,
        "dynamic": _run_dynamic,
        "pendulum": _run_pendulum,
        "det_probe": _run_det_probe,
        "convergence_sweep": _run_convergence,
        "frequency_sweep": _run_frequency_sweep,
    }[sc.kind]
    return runner(sc, out_path)


def _run_static(sc: Scenario, out_dir: Path) -> int:
    space = _space_for(sc)
    problem = _static_problem(sc, space)
    q0 = straight_configuration(space, sc.rod.origin, sc.rod.direction).reshape(-1)

    failure = None
    status = "completed"
    try:
        result = statics.solve_static(problem, q0)
    except statics.StaticNewtonError as err:
        result = err.partial
        status = "newton_failure"
        failure = {
            "load_step": err.step,
            "load_factor": err.load_factor,
            "detail": str(err),
        }

    rows = []
    probe_mat = _probe_rows(space, sc.output.probes)
    from .diagnostics import energies

    material = _material_for(sc)
    for factor, q, iters in zip(result.load_factors, result.states, result.newton_iters):
        _, potential = energies(space, q, np.zeros_like(q), material)
        rows.append([factor, *_probe_values(probe_mat, q), potential, iters])
    header = ["load_factor", *_probe_header(sc.output.probes), "strain_energy", "newton_iters"]
    _write_csv(out_dir / sc.output.timeseries, header, rows)
    _write_metadata(out_dir, sc, status, failure, {"timeseries": sc.output.timeseries})
    return 0 if status == "completed" else 3


def _trajectory_rows(space, trajectory, probes) -> tuple[list[str], list[list]]:
    probe_mat = _probe_rows(space, probes)
    header = [
        "t", *_probe_header(probes),
        "kinetic", "potential", "total",
        "px", "py", "pz", "lx", "ly", "lz",
        "newton_iters",
    ]
    rows = []
    for i, rec in enumerate(trajectory.records):
        rows.append([
            rec.t, *_probe_values(probe_mat, trajectory.states[i]),
            rec.kinetic, rec.potential, rec.total,
            *rec.linear_momentum, *rec.angular_momentum,
            int(trajectory.newton_iters[i]),
        ])
    return header, rows


def _failure_record(trajectory) -> dict | None:
    if trajectory.status == dynamics.COMPLETED:
        return None
    return {"time": trajectory.failure_time, "detail": trajectory.failure_detail}


def _run_dynamic(sc: Scenario, out_dir: Path) -> int:
    problem = _dynamic_problem(sc)
    trajectory = dynamics.run(problem)
    header, rows = _trajectory_rows(problem.space, trajectory, sc.output.probes)
    _write_csv(out_dir / sc.output.timeseries, header, rows)
    _write_metadata(
        out_dir, sc, trajectory.status, _failure_record(trajectory),
        {"timeseries": sc.output.timeseries},
    )
    return 0 if trajectory.status == dynamics.COMPLETED else 3


def _run_pendulum(sc: Scenario, out_dir: Path) -> int:
    params = _pendulum_params(sc)
    trajectory = pendulum_run(params, wind=_pendulum_wind(sc.pendulum))

    header = ["t", "theta", "eta", "theta_dot", "eta_dot", "kinetic", "total", "j3"]
    rows = [
        [
            trajectory.times[i],
            trajectory.states[i, 0], trajectory.states[i, 1],
            trajectory.velocities[i, 0], trajectory.velocities[i, 1],
            trajectory.kinetic[i], trajectory.energies[i], trajectory.j3[i],
        ]
        for i in range(len(trajectory))
    ]
    _write_csv(out_dir / sc.output.timeseries, header, rows)
    failure = None
    if trajectory.status != "completed":
        failure = {"time": trajectory.failure_time, "detail": "newton iteration budget exhausted"}
    _write_metadata(out_dir, sc, trajectory.status, failure,
                    {"timeseries": sc.output.timeseries})
    return 0 if trajectory.status == "completed" else 3


def _run_det_probe(sc: Scenario, out_dir: Path) -> int:
    material = _material_for(sc)
    d = sc.discretization
    rows = []
    for dt in sc.det_grid.dt_values:
        for nel in sc.det_grid.n_elements_values:
            M, K = hermite_beam_matrices(nel, d.L, material)
            det_h = det_probe(M, K, dt)
            space = _space_for(sc, n_elements=nel)
            det_s = linear_beam_det_probe(space, dt, material, removal=False)
            det_r = linear_beam_det_probe(space, dt, material, removal=True)
            rows.append([dt, nel, det_h, det_s, det_r])
    header = ["dt", "n_elements", "det_hermite", "det_spline", "det_spline_removal"]
    _write_csv(out_dir / sc.output.table, header, rows)
    _write_metadata(out_dir, sc, "completed", None, {"table": sc.output.table})
    return 0


def _circle_reference(EI: float, moment: float):
    """Equilibrium of a clamped rod under a pure end moment about +z.

    Bending is inextensible here (no axial force), so the rod becomes a
    circular arc of curvature ``moment / EI`` traversed at unit speed.
    """
    kappa = moment / EI
    radius = 1.0 / kappa

    def reference(s: float):
        a = kappa * s
        value = (radius * math.sin(a), radius * (1.0 - math.cos(a)), 0.0)
        d1 = (math.cos(a), math.sin(a), 0.0)
        d2 = (-kappa * math.sin(a), kappa * math.cos(a), 0.0)
        return value, d1, d2

    return reference


def _relative_l2_change(space: SplineSpace, state: np.ndarray, ref_state: np.ndarray) -> float:
    """Relative L2 distance between two states of the same spline space.

    Both states share one basis, so their difference is itself a spline and
    identical coefficient vectors give exactly zero.
    """
    tables = basis_tables(space, space.degree + 3)
    diff_e = (state - ref_state).reshape(-1, 3)[tables.index]
    ref_e = ref_state.reshape(-1, 3)[tables.index]
    diff = np.einsum("ega,eax->egx", tables.N, diff_e)
    ref = np.einsum("ega,eax->egx", tables.N, ref_e)
    num = math.sqrt(np.sum(np.einsum("egx,egx->eg", diff, diff) @ tables.w))
    den = math.sqrt(np.sum(np.einsum("egx,egx->eg", ref, ref) @ tables.w))
    return num / den if den > 0.0 else num


def _run_convergence(sc: Scenario, out_dir: Path) -> int:
    if sc.convergence.parameter == "n_elements":
        return _run_mesh_sweep(sc, out_dir)
    return _run_alpha_sweep(sc, out_dir)


def _run_mesh_sweep(sc: Scenario, out_dir: Path) -> int:
    reference = _circle_reference(sc.rod.EI, sc.loads[0].m[2])
    rows = []
    status, failure = "completed", None
    previous: tuple | None = None
    for value in sc.convergence.values:
        nel = int(value)
        space = _space_for(sc, n_elements=nel)
        problem = _static_problem(sc, space)
        try:
            result = statics.solve_static(problem)
        except statics.StaticNewtonError as err:
            status = "newton_failure"
            failure = {"n_elements": nel, "detail": str(err)}
            break
        errors = error_norms(space, result.final_state, reference)
        if previous is None:
            rates = [math.nan] * 3
        else:
            # successive meshes refine by values[i]/values[i-1]; rates are
            # slopes of log(error) against log(element size)
            ratio = nel / previous[0]
            rates = [
                math.log(prev / curr) / math.log(ratio) if curr > 0.0 else math.inf
                for prev, curr in zip(previous[1], errors)
            ]
        rows.append([nel, *errors, *rates])
        previous = (nel, errors)
    header = ["n_elements", "err_l2", "err_h1", "err_h2", "rate_l2", "rate_h1", "rate_h2"]
    _write_csv(out_dir / sc.output.table, header, rows)
    _write_metadata(out_dir, sc, status, failure, {"table": sc.output.table})
    return 0 if status == "completed" else 3


def _final_state_for_alpha(args: tuple[Scenario, float]) -> tuple[str, np.ndarray]:
    sc, alpha = args
    trajectory = dynamics.run(_dynamic_problem(sc, alpha=alpha))
    return trajectory.status, trajectory.states[-1]


def _run_alpha_sweep(sc: Scenario, out_dir: Path) -> int:
    space = _space_for(sc)
    jobs = [(sc, float(alpha)) for alpha in sc.convergence.values]
    reference_job = (sc, sc.rod.alpha)

    workers = _worker_count()
    all_jobs = [reference_job, *jobs]
    if workers > 1 and len(all_jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_final_state_for_alpha, all_jobs))
    else:
        results = [_final_state_for_alpha(job) for job in all_jobs]

    status, failure = "completed", None
    (ref_status, ref_state), sweep_results = results[0], results[1:]
    rows = []
    if ref_status != dynamics.COMPLETED:
        status, failure = ref_status, {"alpha": sc.rod.alpha, "detail": "reference run failed"}
    else:
        for (alpha_status, state), (_, alpha) in zip(sweep_results, jobs):
            if alpha_status != dynamics.COMPLETED:
                status, failure = alpha_status, {"alpha": alpha, "detail": "sweep run failed"}
                break
            rows.append([alpha, _relative_l2_change(space, state, ref_state)])
    _write_csv(out_dir / sc.output.table, ["alpha", "rel_change_l2"], rows)
    _write_metadata(out_dir, sc, status, failure, {"table": sc.output.table})
    return 0 if status == "completed" else 3


def _run_one_frequency(args: tuple[Scenario, float]) -> dynamics.Trajectory:
    sc, frequency = args
    pulsating = next(ld for ld in sc.loads if ld.type == "pulsating")
    loads = tuple(
        _force_for(replace(ld, frequency_hz=frequency) if ld is pulsating else ld)
        for ld in sc.loads
    )
    sweep = sc.frequency_sweep
    T_end = sweep.long_T_end if sweep.long_run else sc.time.T_end
    trajectory = dynamics.run(_dynamic_problem(sc, T_end=T_end, loads=loads))
    return trajectory


def _run_frequency_sweep(sc: Scenario, out_dir: Path) -> int:
    space = _space_for(sc)
    sweep = sc.frequency_sweep
    jobs = [(sc, float(f)) for f in sweep.frequencies_hz]

    workers = _worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_run_one_frequency, jobs))
    else:
        trajectories = [_run_one_frequency(job) for job in jobs]

    stem = Path(sc.output.timeseries)
    status, failure = "completed", None
    rows = []
    outputs: dict[str, object] = {"table": sc.output.table, "timeseries": []}
    probe_mat = _probe_rows(space, sc.output.probes[:1])
    for i, ((_, frequency), trajectory) in enumerate(zip(jobs, trajectories)):
        name = f"{stem.stem}_f{i}{stem.suffix}"
        header, ts_rows = _trajectory_rows(space, trajectory, sc.output.probes)
        _write_csv(out_dir / name, header, ts_rows)
        outputs["timeseries"].append(name)
        if trajectory.status != dynamics.COMPLETED:
            status = trajectory.status
            failure = {"frequency_hz": frequency, "detail": trajectory.failure_detail}
            continue
        ux = np.array([
            _probe_values(probe_mat, state)[0] for state in trajectory.states
        ])
        stats = steady_state_stats(trajectory.times, ux - ux[0], sweep.window)
        rows.append([frequency, stats.mean, stats.amplitude, stats.periodic])
    _write_csv(out_dir / sc.output.table,
               ["frequency_hz", "mean_ux", "amplitude_ux", "periodic"], rows)
    _write_metadata(out_dir, sc, status, failure, outputs)
    return 0 if status == "completed" else 3


# --------------------------------------------------------------------------
# presets

_STEEL_ROD = """\
[rod]
E = 2e11
density = 7900.0
diameter = 0.01
"""

PRESETS: dict[str, str] = {
    "roll_up": """\
# Cantilever rolled into a closed circle by a ramped end moment.
[job]
kind = static

[discretization]
degree = 2
continuity = 1
n_elements = 40
L = 40.0
outlier_removal = false

[rod]
EA = 100.0
EI = 200.0
A_rho = 1.0
I_rho = 1.0

[bc]
left = clamped
right = free

[static]
n_load_steps = 54

[load:end_moment]
type = tip_moment
m = 0.0 0.0 31.41592653589793
""",
    "clamped_2d": """\
# Clamped steel rod under an in-plane tip force that ramps up and vanishes.
[job]
kind = dynamic

[discretization]
degree = 3
continuity = 1
n_elements = 20
L = 10.0
outlier_removal = true

[rod]
E = 2e11
density = 7900.0
diameter = 0.01

[bc]
left = clamped
right = free

[time]
dt = 0.005
T_end = 20.0

[load:tip]
type = point
s = 10.0
F = 0.0 30.0 0.0
t_c = 0.5
""",
    "unconstrained_3d": """\
# Free-floating slender rod under four out-of-plane forces that vanish.
[job]
kind = dynamic

[discretization]
degree = 3
continuity = 1
n_elements = 20
L = 10.0
outlier_removal = false

[rod]
E = 2e11
density = 7900.0
diameter = 0.005

[bc]
left = free
right = free

[time]
dt = 0.001
T_end = 2.0

[load:corner_a]
type = point
s = 0.0
F = -30.0 -30.0 0.0
t_c = 0.5

[load:corner_b]
type = point
s = 10.0
F = 30.0 30.0 0.0
t_c = 0.5

[load:web_a]
type = point
s = 0.5
F = 0.0 0.0 -24.0
t_c = 0.5

[load:web_b]
type = point
s = 9.5
F = 0.0 0.0 24.0
t_c = 0.5
""",
    "mass_alpha_sweep": """\
# Final-state sensitivity of the free-floating rod to the rotary-inertia scale.
[job]
kind = convergence_sweep
preset = unconstrained_3d

[sweep]
parameter = alpha
values = 0.0 0.25 0.5 0.75 1.0
""",
    "swinging_gravity": """\
# Soft rod pinned at one end, swinging under gravity from horizontal.
[job]
kind = dynamic

[discretization]
degree = 3
continuity = 1
n_elements = 20
L = 1.0
outlier_removal = true

[rod]
E = 5e6
density = 1100.0
diameter = 0.01

[bc]
left = pinned
right = free

[time]
dt = 0.01
T_end = 2.4

[load:gravity]
type = gravity
g = 0.0 -9.81 0.0
""",
    "swinging_wind": """\
# Swinging soft rod damped to rest by a height-rotating wind field.
[job]
kind = dynamic
preset = swinging_gravity

[rod]
direction = 0.9659258262890683 0.0 -0.25881904510252074

[time]
T_end = 30.0

[load:wind]
type = flow
C_M = 1.0
C_N = 1.2
C_T = 0.1
rho_f = 1.2
diameter = 0.01
profile = rotating_wind
v0 = 10.0
beta0 = 0.7853981633974483
L_ref = 1.0
""",
    "pulsating_sweep": """\
# Submerged hanging rod driven by a horizontal pulsating tip force.
[job]
kind = frequency_sweep

[discretization]
degree = 3
continuity = 1
n_elements = 20
L = 250.0
outlier_removal = true

[rod]
E = 7e10
density = 2700.0
diameter = 0.04
direction = 0.0 -1.0 0.0

[bc]
left = pinned
right = free

[time]
dt = 0.01
T_end = 60.0

[sweep]
frequencies_hz = 0.88
window = 10.0
long_run = false
long_T_end = 1000.0

[load:gravity]
type = gravity
g = 0.0 -9.81 0.0

[load:water]
type = flow
C_M = 1.0
C_N = 1.2
C_T = 0.05
rho_f = 1000.0
diameter = 0.04
profile = still

[load:forcing]
type = pulsating
amplitude = 350000.0
frequency_hz = 0.88
direction = 1.0 0.0 0.0
s = 250.0
""",
    "pendulum_free": """\
# Stiff spring pendulum with no forcing: conserves energy and j3 exactly.
[job]
kind = pendulum

[time]
dt = 0.005
T_end = 30.0

[pendulum]
gravity = 0.0
theta0 = 0.0
eta0 = 0.1
theta_dot0 = -0.5
eta_dot0 = 0.25
""",
    "pendulum_wind": """\
# Spring pendulum released horizontally, damped to rest by a parabolic wind.
[job]
kind = pendulum

[time]
dt = 0.005
T_end = 30.0

[pendulum]
gravity = 9.81
theta0 = 1.5707963267948966
eta0 = 0.0
theta_dot0 = 0.0
eta_dot0 = 0.0
drag_linear = 1.0
drag_quadratic = 0.5
wind = true
""",
    "det_probe": """\
# Round-off determinant probe over a time-step and mesh grid.
[job]
kind = det_probe

[discretization]
degree = 3
continuity = 1
L = 10.0
outlier_removal = true

[rod]
E = 2e11
density = 7900.0
diameter = 0.01

[sweep]
dt_values = 0.0025 0.005 0.01
n_elements_values = 2 4 8 16 32
""",
}


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ScenarioValidationError(
            "[job] preset", f"unknown preset {name!r}; known presets: {known}"
        )
    return PRESETS[name]


def preset_description(name: str) -> str:
    first = preset_text(name).splitlines()[0]
    return first.lstrip("# ").strip()
