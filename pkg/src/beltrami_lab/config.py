"""INI configuration for the command-line tool.

Sections ``[grid]``, ``[solver]``, ``[coefficients]`` and ``[probe]``; the
full key list lives in ``data/config_schema.txt``.  Errors name the section,
the key and the line.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

from .experiments import FAMILIES, CoefficientFamily, ProbeSpec
from .grid import Grid
from .solver import SolverConfig
from .spaces import SobolevIndex

__all__ = ["ConfigError", "Config", "load_config", "parse_config", "SCHEMA_PATH", "SCHEMA"]

SCHEMA_PATH = Path(__file__).with_name("data") / "config_schema.txt"

# section -> key -> (type, required)
SCHEMA = {
    "grid": {"n": ("int", True), "half_side": ("float", True)},
    "solver": {
        "tolerance": ("float", False),
        "max_iterations": ("int", False),
        "over_relaxation": ("float", False),
        "anderson": ("int", False),
    },
    "coefficients": {
        "family": ("str", True),
        "k": ("float", False),
        "base": ("str", False),
        "n_moll": ("int", False),
        "mu_path": ("path", False),
        "nu_path": ("path", False),
    },
    "probe": {
        "s": ("float", True),
        "p": ("float", True),
        "kappa": ("float", True),
        "q_grid": ("floats", True),
        "refinement_levels": ("ints", True),
        "fine_index": ("float", False),
    },
}


class ConfigError(ValueError):
    def __init__(self, message, section=None, key=None, line=None):
        where = ""
        if section:
            where = f"[{section}]" + (f" {key}" if key else "")
            if line:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)
        self.section, self.key, self.line = section, key, line


@dataclass
class Config:
    grid: Grid | None
    solver: SolverConfig
    family: CoefficientFamily | None
    probe: ProbeSpec | None
    source: str | None = None


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number."""
    out, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = i
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), i)
    return out


class _Reader:
    def __init__(self, parser, lines, base_dir):
        self.parser, self.lines, self.base_dir = parser, lines, base_dir

    def err(self, msg, section, key=None):
        return ConfigError(msg, section, key, self.lines.get((section, key)))

    def has(self, section):
        return self.parser.has_section(section)

    def get(self, section, key):
        kind, required = SCHEMA[section][key]
        if not self.parser.has_option(section, key):
            if required:
                raise self.err("missing required key", section, key)
            return None
        raw = self.parser.get(section, key).strip()
        try:
            if kind == "int":
                return int(raw)
            if kind == "float":
                return float(raw)
            if kind == "floats":
                return [float(x) for x in raw.replace(",", " ").split()]
            if kind == "ints":
                return [int(x) for x in raw.replace(",", " ").split()]
            if kind == "path":
                p = Path(raw)
                return str(p if p.is_absolute() else self.base_dir / p)
            return raw
        except ValueError:
            raise self.err(f"expected {kind}, got {raw!r}", section, key) from None


def parse_config(text: str, base_dir=".", source=None, require=()) -> Config:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    lines = _line_index(text)
    rd = _Reader(parser, lines, Path(base_dir))

    for section in parser.sections():
        if section not in SCHEMA:
            raise rd.err(f"unknown section; expected one of {sorted(SCHEMA)}", section)
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise rd.err(f"unknown key; expected one of {sorted(SCHEMA[section])}", section, key)
    for section in require:
        if not rd.has(section):
            raise ConfigError(f"missing required section [{section}]")

    grid = None
    if rd.has("grid"):
        n, half = rd.get("grid", "n"), rd.get("grid", "half_side")
        try:
            grid = Grid(n, half)
        except ValueError as exc:
            key = "n" if "n must" in str(exc) else "half_side"
            raise rd.err(str(exc), "grid", key) from None

    solver = SolverConfig()
    if rd.has("solver"):
        kw = {k: rd.get("solver", k) for k in SCHEMA["solver"]}
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            solver = SolverConfig(**kw)
        except ValueError as exc:
            key = next((k for k in kw if k in str(exc)), None)
            raise rd.err(str(exc), "solver", key) from None

    family = None
    if rd.has("coefficients"):
        family = _family(rd)

    probe = None
    if rd.has("probe"):
        if family is None:
            raise ConfigError("[probe] needs a [coefficients] section")
        probe = _probe(rd, family, grid)
    return Config(grid, solver, family, probe, source)


def _family(rd: _Reader) -> CoefficientFamily:
    sec = "coefficients"
    kind = rd.get(sec, "family")
    if kind not in FAMILIES:
        raise rd.err(f"unknown family {kind!r}; expected one of {list(FAMILIES)}", sec, "family")
    k = rd.get(sec, "k")
    try:
        if kind in ("disk-indicator", "radial-stretch"):
            if k is None:
                raise rd.err("required for this family", sec, "k")
            return CoefficientFamily(kind, k=k)
        if kind == "mollified":
            base = rd.get(sec, "base")
            if base not in ("disk-indicator", "radial-stretch", "custom"):
                raise rd.err("base must be disk-indicator, radial-stretch or custom", sec, "base")
            n_moll = rd.get(sec, "n_moll")
            if n_moll is None:
                raise rd.err("required for the mollified family", sec, "n_moll")
            if base == "custom":
                inner = _custom(rd)
            else:
                if k is None:
                    raise rd.err("required for this family", sec, "k")
                inner = CoefficientFamily(base, k=k)
            return CoefficientFamily("mollified", base=inner, n_moll=n_moll)
        return _custom(rd)
    except ConfigError:
        raise
    except ValueError as exc:
        key = "n_moll" if "n_moll" in str(exc) else "k"
        raise rd.err(str(exc), sec, key) from None


def _custom(rd):
    sec = "coefficients"
    mu = rd.get(sec, "mu_path")
    if mu is None:
        raise rd.err("required for custom coefficients", sec, "mu_path")
    nu = rd.get(sec, "nu_path")
    for key, p in (("mu_path", mu), ("nu_path", nu)):
        if p is not None and not Path(p).is_file():
            raise rd.err(f"file not found: {p}", sec, key)
    return CoefficientFamily.custom(mu, nu)


def _probe(rd: _Reader, family, grid) -> ProbeSpec:
    sec = "probe"
    vals = {k: rd.get(sec, k) for k in SCHEMA[sec]}
    try:
        index = SobolevIndex(vals["s"], vals["p"], 2)
    except ValueError as exc:
        raise rd.err(str(exc), sec, "p" if "integrability" in str(exc) else "s") from None
    kw = dict(
        family=family,
        index=index,
        kappa=vals["kappa"],
        q_grid=vals["q_grid"],
        refinement_levels=vals["refinement_levels"],
    )
    if vals["fine_index"] is not None:
        kw["fine_index"] = vals["fine_index"]
    if grid is not None:
        kw["half_side"] = grid.half_side
    try:
        return ProbeSpec(**kw)
    except ValueError as exc:
        msg = str(exc)
        key = ("q_grid" if "q_grid" in msg else "refinement_levels" if "refinement" in msg
               else "kappa" if "kappa" in msg else None)
        raise rd.err(msg, sec, key) from None


def load_config(path, require=()) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), base_dir=path.parent, source=str(path), require=require)
