"""Line-oriented ``key = value`` run configuration.

Sections: ``[problem]`` (a, T, r | r_table, s | s_table, alpha, beta),
``[model]`` (a, b, c, e | e_table, T), ``[certify]`` (m, R1, R2, grid) and
``[solve]`` (method, N, tol, max_iter, x0, v0). ``#`` starts a comment.
Table paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .errors import ConfigError, LiebauError
from .model import Constant, ProblemSpec, SingularModelSpec, Table, regularize

SECTIONS = {
    "problem": {"a", "T", "r", "r_table", "s", "s_table", "alpha", "beta"},
    "model": {"a", "b", "c", "e", "e_table", "T"},
    "certify": {"m", "R1", "R2", "grid"},
    "solve": {"method", "N", "tol", "max_iter", "x0", "v0"},
}
_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")


@dataclass
class RunConfig:
    """Parsed sections (string values) plus the line each key came from."""

    sections: Dict[str, Dict[str, str]] = field(default_factory=dict)
    lines: Dict[Tuple[str, str], int] = field(default_factory=dict)
    base_dir: str = "."

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value) -> None:
        if key not in SECTIONS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        self.sections.setdefault(section, {})[key] = _fmt(value)

    def number(self, section: str, key: str, default=None, kind=float):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}",
                              self.lines.get((section, key))) from None

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.sections == other.sections


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    cfg = RunConfig(base_dir=base_dir)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SECTIONS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        if key in cfg.sections[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        cfg.sections[section][key] = value
        cfg.lines[(section, key)] = lineno
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), os.path.dirname(os.path.abspath(path)))


def parse_inline(spec: str, section: str, cfg: Optional[RunConfig] = None) -> RunConfig:
    """Parse ``"a=1.6, T=1, r=154"`` into ``section`` of ``cfg``."""
    cfg = cfg or RunConfig(base_dir=os.getcwd())
    cfg.sections.setdefault(section, {})
    for item in filter(None, (p.strip() for p in re.split(r"[,;]", spec))):
        if "=" not in item:
            raise ConfigError(f"inline item {item!r} is not key=value")
        key, value = (p.strip() for p in item.split("=", 1))
        cfg.set(section, key, value)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; table paths are written absolute."""
    out = []
    for section in SECTIONS:
        if section not in cfg.sections:
            continue
        out.append(f"[{section}]")
        for key in sorted(cfg.sections[section]):
            value = cfg.sections[section][key]
            if key.endswith("_table"):
                value = os.path.normpath(os.path.join(cfg.base_dir, value))
            out.append(f"{key} = {value}")
        out.append("")
    return "\n".join(out)


def _coefficient(cfg: RunConfig, section: str, name: str, T: float):
    table = cfg.get(section, f"{name}_table")
    const = cfg.get(section, name)
    if (table is None) == (const is None):
        raise ConfigError(f"[{section}] needs exactly one of {name!r} or {name}_table",
                          cfg.lines.get((section, name)) or cfg.lines.get((section, f"{name}_table")))
    if const is not None:
        return Constant(cfg.number(section, name))
    path = os.path.join(cfg.base_dir, table)
    try:
        tab = Table.from_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"[{section}] {name}_table: {exc}", cfg.lines.get((section, f"{name}_table"))) from None
    if abs(tab.T - T) > 1e-9 * T:
        raise ConfigError(f"[{section}] {name}_table spans [0, {tab.T}] but T = {T}",
                          cfg.lines.get((section, f"{name}_table")))
    return Table(tab.samples, T)


def _require(cfg, section, keys):
    for key in keys:
        if cfg.get(section, key) is None:
            first = min((ln for (s, _), ln in cfg.lines.items() if s == section), default=None)
            raise ConfigError(f"[{section}] is missing required key {key!r}", first)


def build_problem(cfg: RunConfig) -> Tuple[ProblemSpec, Optional[SingularModelSpec]]:
    """The problem described by ``cfg`` and, when given as a model, the model too."""
    has_p, has_m = "problem" in cfg.sections, "model" in cfg.sections
    if has_p == has_m:
        raise ConfigError("config must define exactly one of [problem] or [model]")
    if has_m:
        _require(cfg, "model", ("a", "b", "c", "T"))
        T = cfg.number("model", "T")
        try:
            model = SingularModelSpec(a=cfg.number("model", "a"), b=cfg.number("model", "b"),
                                      c=cfg.number("model", "c"),
                                      e=_coefficient(cfg, "model", "e", T), T=T)
        except LiebauError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"[model] {exc}", cfg.lines.get(("model", "b"))) from None
        return regularize(model), model
    _require(cfg, "problem", ("a", "T", "alpha", "beta"))
    T = cfg.number("problem", "T")
    r = _coefficient(cfg, "problem", "r", T)
    s = _coefficient(cfg, "problem", "s", T)
    try:
        p = ProblemSpec(a=cfg.number("problem", "a"), T=T, r=r, s=s,
                        alpha=cfg.number("problem", "alpha"), beta=cfg.number("problem", "beta"))
    except LiebauError as exc:
        line = cfg.lines.get(("problem", "beta")) if "alpha" in str(exc) else cfg.lines.get(("problem", "a"))
        raise ConfigError(f"[problem] {exc}", line) from None
    return p, None
