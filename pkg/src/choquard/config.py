"""Sectioned ``key = value`` experiment configuration.

Sections are ``[problem]``, ``[potential]``, ``[symmetry]``, ``[domain]``
and ``[run]``; ``#`` starts a comment.  :func:`emit` writes every resolved
key, and ``parse(emit(cfg)) == cfg``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import symmetry as sy
from .energy import Problem
from .grid import Grid, ball_complement_mask, box_complement_mask
from .io import fmt
from .potential import parse_potential

__all__ = ["ConfigError", "Config", "SCHEMA", "parse", "load", "emit", "build_problem", "parse_floats"]


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based or ``None``."""

    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


def parse_floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def f(text):
        return None if text.strip().lower() in ("", "none", "auto") else conv(text)
    return f


def _str(text):
    return text.strip()


# section -> key -> (converter, default)
SCHEMA = {
    "problem": {
        "n": (int, 3),
        "alpha": (float, 1.0),
        "p": (float, 2.0),
        "l": (float, 16.0),
        "m": (int, 64),
    },
    "potential": {"spec": (_str, "zero")},
    "symmetry": {
        "preset": (_str, "trivial"),
        "generators": (_str, ""),
        "signs": (_str, ""),
    },
    "domain": {"obstacle": (_str, "none")},
    "run": {
        "seed": (int, 0),
        "tol": (_opt(float), None),
        "max_iter": (_opt(int), None),
        "z": (parse_floats, ()),
        "r": (float, 6.0),
        "r_values": (parse_floats, ()),
        "z_values": (_str, ""),
        "lam": (_opt(float), None),
        "initializer": (_str, "theta"),
        "window": (parse_floats, (6.0, 12.0)),
        "shift_window": (parse_floats, (10.0, 16.0)),
        "trials": (int, 10_000),
        "ground_state": (_str, ""),
        "stabilize": (_bool, True),
        "sweep": (_str, "r"),
        "dedup": (float, 1e-3),
    },
}


@dataclass
class Config:
    values: dict = field(default_factory=lambda: {s: {k: d for k, (_, d) in keys.items()}
                                                  for s, keys in SCHEMA.items()})

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    def set(self, section, key, value):
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {section}.{key}")
        conv = SCHEMA[section][key][0]
        self.values[section][key] = conv(value) if isinstance(value, str) else value

    def copy(self) -> "Config":
        return Config(copy.deepcopy(self.values))

    def __eq__(self, other):
        return isinstance(other, Config) and emit(self) == emit(other)

    # derived objects
    def grid(self) -> Grid:
        pr = self["problem"]
        return Grid(pr["n"], pr["m"], pr["l"])

    def z(self) -> np.ndarray:
        n = self["problem"]["n"]
        z = self["run"]["z"]
        if not z:
            return np.eye(n)[0]
        if len(z) != n:
            raise ConfigError(f"run.z has {len(z)} components, problem has N={n}")
        v = np.asarray(z, dtype=float)
        if not np.linalg.norm(v) > 0:
            raise ConfigError("run.z must be nonzero")
        return v / np.linalg.norm(v)

    def z_list(self) -> list:
        text = self["run"]["z_values"]
        if not text:
            return [self.z()]
        n = self["problem"]["n"]
        out = []
        for chunk in text.split(";"):
            v = np.asarray(parse_floats(chunk))
            if v.size != n or not np.linalg.norm(v) > 0:
                raise ConfigError(f"bad point {chunk.strip()!r} in run.z_values")
            out.append(v / np.linalg.norm(v))
        return out

    def hash(self) -> str:
        import hashlib

        return hashlib.sha256(emit(self).encode()).hexdigest()[:8]


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(fmt(float(v)) for v in value)
    if value is None:
        return "auto"
    return fmt(value)


def emit(cfg: Config) -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_format(cfg.values[section][key])}")
        lines.append("")
    return "\n".join(lines)


def parse(text: str) -> Config:
    cfg = Config()
    section = None
    seen = set()
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", no)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", no)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", no)
        if section is None:
            raise ConfigError("key outside of any section", no)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", no)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", no)
        seen.add((section, key))
        try:
            cfg.values[section][key] = SCHEMA[section][key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", no) from None
    validate(cfg)
    return cfg


def load(path) -> Config:
    return parse(Path(path).read_text())


def validate(cfg: Config) -> None:
    """Cross-field checks that need no heavy computation."""
    pr = cfg["problem"]
    n, alpha, p = pr["n"], pr["alpha"], pr["p"]
    if n < 1:
        raise ConfigError("problem.n must be >= 1")
    if not 0 < alpha < n:
        raise ConfigError(f"problem.alpha must lie in (0, {n})")
    upper = np.inf if n <= 2 else (2 * n - alpha) / (n - 2)
    if not 2 <= p < upper:
        raise ConfigError(f"problem.p must lie in [2, {upper:.6g})")
    if pr["m"] < 8 or pr["m"] & (pr["m"] - 1):
        raise ConfigError("problem.m must be a power of two >= 8")
    if not pr["l"] > 0:
        raise ConfigError("problem.l must be positive")
    run = cfg["run"]
    if run["tol"] is not None and not run["tol"] > 0:
        raise ConfigError("run.tol must be positive")
    if run["max_iter"] is not None and run["max_iter"] < 1:
        raise ConfigError("run.max_iter must be >= 1")
    if run["sweep"] not in ("r", "z"):
        raise ConfigError("run.sweep must be 'r' or 'z'")
    if run["initializer"] not in ("theta", "chi_sigma") and not run["initializer"].endswith(".chqf"):
        raise ConfigError("run.initializer must be theta, chi_sigma or a .chqf path")
    if len(run["window"]) != 2 or not run["window"][0] < run["window"][1]:
        raise ConfigError("run.window needs two increasing radii")
    if len(run["shift_window"]) != 2 or not 0 < run["shift_window"][0] < run["shift_window"][1]:
        raise ConfigError("run.shift_window needs two increasing positive radii")
    if run["trials"] < 1:
        raise ConfigError("run.trials must be >= 1")
    if run["z"]:
        cfg.z()
    if run["z_values"]:
        cfg.z_list()
    if not cfg["symmetry"]["generators"]:
        try:
            sy.from_preset(cfg["symmetry"]["preset"], n)
        except ValueError as exc:
            raise ConfigError(f"symmetry.preset: {exc}") from None


def _group(cfg: Config, n: int):
    sym = cfg["symmetry"]
    if sym["generators"]:
        mats = []
        for block in sym["generators"].split("|"):
            rows = [parse_floats(r) for r in block.split(";")]
            mats.append(np.asarray(rows, dtype=float))
        signs = [int(float(s)) for s in parse_floats(sym["signs"])] or None
        if signs is not None and len(signs) != len(mats):
            raise ConfigError("symmetry.signs must match the number of generators")
        g = sy.SymmetryGroup.from_generators(mats, signs, name="custom")
        if g.ndim != n:
            raise ConfigError(f"generators act on R^{g.ndim}, problem has N={n}")
        return g
    return sy.from_preset(sym["preset"], n)


def _mask(cfg: Config, grid: Grid):
    spec = cfg["domain"]["obstacle"].split()
    if not spec or spec[0] == "none":
        return None
    if len(spec) == 2 and spec[0] in ("ball", "box"):
        r = float(spec[1])
        return ball_complement_mask(grid, r) if spec[0] == "ball" else box_complement_mask(grid, r)
    raise ConfigError(f"bad obstacle {cfg['domain']['obstacle']!r} (ball <r> | box <a> | none)")


def build_problem(cfg: Config, grid: Grid | None = None) -> Problem:
    """Problem from the config; raises :class:`ConfigError` on any inconsistency."""
    grid = grid or cfg.grid()
    try:
        group = _group(cfg, grid.ndim)
        if group.order == 1:
            group = None
        return Problem(grid, cfg["problem"]["alpha"], cfg["problem"]["p"],
                       parse_potential(cfg["potential"]["spec"], grid), _mask(cfg, grid), group)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
