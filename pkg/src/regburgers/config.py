"""Scenario files: INI sections parsed into frozen run descriptions.

A scenario file holds [scenario], [initial], [grid], [time], and
optional [diagnostics] and [outputs] sections; a limits file swaps
[time] for [limits].  ``validate_file`` returns every problem found,
each tagged with the file line of the offending key, and never writes
anything.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

import numpy as np

from .grid import COMPACT, ConfigError, GridFunction1D, PERIODIC, periodic_grid

SOLVERS = ("eulerian", "lagrangian_conservative", "lagrangian_dissipative")
DATUM_KINDS = ("gaussian", "smoothed_step", "bump_derivative", "tabulated")
DIAG_TOGGLES = ("energy", "total_variation", "oleinik", "weak_residuals")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    solver: str
    ell: float
    datum_kind: str
    datum_params: tuple
    n: int
    xmin: float
    xmax: float
    boundary: str
    xi_n: int
    t_end: float
    output_times: tuple
    cfl: float
    dt: float
    max_steps: int
    diagnostics: tuple
    oleinik_m: float
    out_dir: str
    sha256: str

    def datum(self, key, default=None):
        return dict(self.datum_params).get(key, default)


@dataclass(frozen=True)
class LimitsConfig:
    name: str
    datum_kind: str
    datum_params: tuple
    n: int
    xmin: float
    xmax: float
    boundary: str
    xi_n: int
    ladder: tuple
    t: float
    region: tuple
    dt: float
    out_dir: str
    sha256: str


def _line_of(text: str, section: str, key: str | None) -> int:
    """Best-effort line number of a key (or the section header)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i
        elif key is not None and current == section:
            if line.split("=")[0].split(":")[0].strip() == key:
                return i
    return 0


class _Checker:
    """Collects (line, message) problems while pulling typed values."""

    def __init__(self, parser, text, path):
        self.parser = parser
        self.text = text
        self.path = path
        self.problems: list[str] = []

    def complain(self, section, key, message):
        line = _line_of(self.text, section, key)
        where = f"{self.path}:{line}" if line else str(self.path)
        label = f"[{section}] {key}" if key else f"[{section}]"
        self.problems.append(f"{where}: {label}: {message}")

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def number(self, section, key, default=None, minimum=None,
               strict_min=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            val = float(raw)
        except ValueError:
            self.complain(section, key, f"not a number: {raw!r}")
            return default
        if not np.isfinite(val):
            self.complain(section, key, "must be finite")
            return default
        if minimum is not None and val < minimum:
            self.complain(section, key, f"must be >= {minimum}")
        if strict_min is not None and val <= strict_min:
            self.complain(section, key, f"must be > {strict_min}")
        return val

    def integer(self, section, key, default=None, minimum=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            val = int(raw)
        except ValueError:
            self.complain(section, key, f"not an integer: {raw!r}")
            return default
        if minimum is not None and val < minimum:
            self.complain(section, key, f"must be >= {minimum}")
        return val

    def choice(self, section, key, allowed, default=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        if raw not in allowed:
            self.complain(section, key,
                          f"must be one of {', '.join(allowed)}")
            return default
        return raw


def _parse_times(raw: str):
    tokens = raw.replace(",", " ").split()
    if tokens and tokens[0] == "linspace":
        if len(tokens) != 4:
            raise ValueError("linspace takes start stop count")
        return tuple(np.linspace(float(tokens[1]), float(tokens[2]),
                                 int(tokens[3])))
    return tuple(float(t) for t in tokens)


def _read(path):
    with open(path, "r") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    digest = hashlib.sha256(text.encode()).hexdigest()
    return parser, text, digest


def _check_datum(chk):
    kind = chk.choice("initial", "kind", DATUM_KINDS)
    if kind is None:
        chk.complain("initial", "kind", "missing; choose one of "
                     + ", ".join(DATUM_KINDS))
        return None, ()
    params = {}
    if kind == "gaussian" or kind == "bump_derivative":
        params["center"] = chk.number("initial", "center", 0.0)
        params["width"] = chk.number("initial", "width", 1.0, strict_min=0.0)
        params["amplitude"] = chk.number("initial", "amplitude", 1.0)
    elif kind == "smoothed_step":
        params["u_left"] = chk.number("initial", "u_left", 1.0)
        params["u_right"] = chk.number("initial", "u_right", 0.0)
        params["width"] = chk.number("initial", "width", 0.5, strict_min=0.0)
        params["center"] = chk.number("initial", "center", 0.0)
    elif kind == "tabulated":
        fname = chk.raw("initial", "file")
        if fname is None:
            chk.complain("initial", "file", "tabulated datum needs a file")
        params["file"] = fname or ""
    return kind, tuple(sorted(params.items()))


def _check_grid(chk, needs_xi):
    n = chk.integer("grid", "n", 1025, minimum=8)
    xmin = chk.number("grid", "xmin", -10.0)
    xmax = chk.number("grid", "xmax", 10.0)
    if xmin is not None and xmax is not None and xmin >= xmax:
        chk.complain("grid", "xmax", "domain must satisfy xmin < xmax")
    boundary = chk.choice("grid", "boundary", (COMPACT, PERIODIC), COMPACT)
    if boundary == PERIODIC and n is not None and n & (n - 1) != 0:
        chk.complain("grid", "n", "must be a power of two on the "
                     "spectral (periodic) grid")
    xi_n = chk.integer("grid", "xi_n", 4096, minimum=4 if needs_xi else 1)
    return n, xmin, xmax, boundary, xi_n


def _collect_scenario(path):
    parser, text, digest = _read(path)
    chk = _Checker(parser, text, path)
    for section in ("scenario", "initial", "grid", "time"):
        if not parser.has_section(section):
            chk.complain(section, None, "section is required")
    if chk.problems:
        return None, chk.problems

    name = chk.raw("scenario", "name", "")
    if not name:
        chk.complain("scenario", "name", "scenario needs a name")
    solver = chk.choice("scenario", "solver", SOLVERS)
    if solver is None:
        chk.complain("scenario", "solver", "missing; choose one of "
                     + ", ".join(SOLVERS))
    ell = chk.number("scenario", "ell", None, strict_min=0.0)
    if ell is None and not chk.has("scenario", "ell"):
        chk.complain("scenario", "ell", "kernel width is required")

    kind, params = _check_datum(chk)
    n, xmin, xmax, boundary, xi_n = _check_grid(
        chk, needs_xi=solver is not None and solver.startswith("lagrangian"))

    t_end = chk.number("time", "t_end", None, minimum=0.0)
    if t_end is None and not chk.has("time", "t_end"):
        chk.complain("time", "t_end", "horizon is required")
    times_raw = chk.raw("time", "output_times")
    if times_raw is None:
        output_times = (t_end,) if t_end is not None else ()
    else:
        try:
            output_times = _parse_times(times_raw)
        except ValueError as exc:
            chk.complain("time", "output_times", str(exc))
            output_times = ()
    if t_end is not None and t_end >= 0.0 and output_times:
        lo, hi = min(output_times), max(output_times)
        if lo < 0.0 or hi > t_end + 1e-12:
            chk.complain("time", "output_times",
                         f"must lie inside [0, {t_end}]")
    cfl = chk.number("time", "cfl", 0.3, strict_min=0.0)
    if cfl is not None and cfl > 1.0:
        chk.complain("time", "cfl", "must be <= 1")
    dt = chk.number("time", "dt", 2e-3, strict_min=0.0)
    max_steps = chk.integer("time", "max_steps", 5_000_000, minimum=1)

    toggles = []
    for key in DIAG_TOGGLES:
        default = "false" if key == "weak_residuals" else "true"
        raw = chk.raw("diagnostics", key, default) \
            if parser.has_section("diagnostics") else default
        if raw.lower() in ("true", "yes", "on", "1"):
            toggles.append(key)
        elif raw.lower() not in ("false", "no", "off", "0"):
            chk.complain("diagnostics", key, f"not a boolean: {raw!r}")
    m_raw = chk.raw("diagnostics", "oleinik_m", "inf") \
        if parser.has_section("diagnostics") else "inf"
    try:
        oleinik_m = float(m_raw)
    except ValueError:
        chk.complain("diagnostics", "oleinik_m", f"not a number: {m_raw!r}")
        oleinik_m = np.inf

    out_dir = chk.raw("outputs", "directory", f"runs/{name}") \
        if parser.has_section("outputs") else f"runs/{name}"

    if chk.problems:
        return None, chk.problems
    cfg = ScenarioConfig(
        name=name, solver=solver, ell=ell, datum_kind=kind,
        datum_params=params, n=n, xmin=xmin, xmax=xmax, boundary=boundary,
        xi_n=xi_n, t_end=t_end, output_times=output_times, cfl=cfl, dt=dt,
        max_steps=max_steps, diagnostics=tuple(toggles),
        oleinik_m=oleinik_m, out_dir=out_dir, sha256=digest)
    return cfg, []


def validate_file(path) -> list[str]:
    """All problems found in a scenario file; empty means valid."""
    try:
        _, problems = _collect_scenario(path)
    except ConfigError as exc:
        return [str(exc)]
    return problems


def load_config(path) -> ScenarioConfig:
    cfg, problems = _collect_scenario(path)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


# -- datum construction --------------------------------------------------

def _tabulated(fname):
    try:
        table = np.loadtxt(fname, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read tabulated datum {fname}: {exc}")
    except ValueError as exc:
        raise ConfigError(f"cannot parse tabulated datum {fname}: {exc}")
    if table.shape[1] < 2 or table.shape[0] < 8:
        raise ConfigError(f"tabulated datum {fname} needs >= 8 rows "
                          "of x,u pairs")
    xs, us = table[:, 0], table[:, 1]
    steps = np.diff(xs)
    if np.any(steps <= 0.0) or np.max(steps) - np.min(steps) > 1e-8 * steps[0]:
        raise ConfigError(f"tabulated datum {fname} must sample a "
                          "uniform increasing grid")
    return xs, us


def build_datum(cfg: ScenarioConfig) -> GridFunction1D:
    if cfg.datum_kind == "tabulated":
        xs, us = _tabulated(cfg.datum("file"))
        return GridFunction1D(xs, us)
    if cfg.boundary == PERIODIC:
        xs = periodic_grid(cfg.xmin, cfg.xmax, cfg.n)
    else:
        xs = np.linspace(cfg.xmin, cfg.xmax, cfg.n)
    c = cfg.datum("center", 0.0)
    w = cfg.datum("width", 1.0)
    z = (xs - c) / w
    if cfg.datum_kind == "gaussian":
        us = cfg.datum("amplitude", 1.0) * np.exp(-z * z)
    elif cfg.datum_kind == "smoothed_step":
        ul = cfg.datum("u_left", 1.0)
        ur = cfg.datum("u_right", 0.0)
        us = ur + (ul - ur) * 0.5 * (1.0 - np.tanh(z))
    elif cfg.datum_kind == "bump_derivative":
        us = -cfg.datum("amplitude", 1.0) * z * np.exp(-0.5 * z * z)
    else:
        raise ConfigError(f"unknown datum kind {cfg.datum_kind!r}")
    return GridFunction1D(xs, us, cfg.boundary)


# -- limits files --------------------------------------------------------

def load_limits_config(path) -> LimitsConfig:
    parser, text, digest = _read(path)
    chk = _Checker(parser, text, path)
    for section in ("scenario", "initial", "grid", "limits"):
        if not parser.has_section(section):
            chk.complain(section, None, "section is required")
    if chk.problems:
        raise ConfigError("; ".join(chk.problems))

    name = chk.raw("scenario", "name", "")
    if not name:
        chk.complain("scenario", "name", "scenario needs a name")
    kind, params = _check_datum(chk)
    n, xmin, xmax, boundary, xi_n = _check_grid(chk, needs_xi=True)

    ladder_raw = chk.raw("limits", "ladder")
    ladder = ()
    if ladder_raw is None:
        chk.complain("limits", "ladder", "width ladder is required")
    else:
        try:
            ladder = tuple(float(t) for t in
                           ladder_raw.replace(",", " ").split())
        except ValueError:
            chk.complain("limits", "ladder", f"not numbers: {ladder_raw!r}")
    t = chk.number("limits", "t", None, strict_min=0.0)
    if t is None and not chk.has("limits", "t"):
        chk.complain("limits", "t", "comparison time is required")
    region_raw = chk.raw("limits", "region")
    region = ()
    if region_raw is None:
        chk.complain("limits", "region", "comparison region is required")
    else:
        try:
            region = tuple(float(t) for t in
                           region_raw.replace(",", " ").split())
        except ValueError:
            chk.complain("limits", "region", f"not numbers: {region_raw!r}")
        if len(region) == 2 and region[0] >= region[1]:
            chk.complain("limits", "region", "must satisfy a < b")
        elif len(region) != 2:
            chk.complain("limits", "region", "takes exactly two numbers")
    dt = chk.number("limits", "dt", 2e-3, strict_min=0.0)
    out_dir = chk.raw("outputs", "directory", f"runs/{name}") \
        if parser.has_section("outputs") else f"runs/{name}"

    if chk.problems:
        raise ConfigError("; ".join(chk.problems))
    return LimitsConfig(name=name, datum_kind=kind, datum_params=params,
                        n=n, xmin=xmin, xmax=xmax, boundary=boundary,
                        xi_n=xi_n, ladder=ladder, t=t, region=region,
                        dt=dt, out_dir=out_dir, sha256=digest)


def build_limits_datum(cfg: LimitsConfig) -> GridFunction1D:
    proxy = ScenarioConfig(
        name=cfg.name, solver="lagrangian_dissipative", ell=1.0,
        datum_kind=cfg.datum_kind, datum_params=cfg.datum_params,
        n=cfg.n, xmin=cfg.xmin, xmax=cfg.xmax, boundary=cfg.boundary,
        xi_n=cfg.xi_n, t_end=cfg.t, output_times=(cfg.t,), cfl=0.3,
        dt=cfg.dt, max_steps=1, diagnostics=(), oleinik_m=np.inf,
        out_dir=cfg.out_dir, sha256=cfg.sha256)
    return build_datum(proxy)
