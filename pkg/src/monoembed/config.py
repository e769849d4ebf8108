"""Run configuration: file loading, validation, and flag overrides.

Configs are flat key-value text files with one level of sections (INI
grammar via :mod:`configparser`), or the same two-level structure encoded
as JSON.  Every key is optional except the model source: exactly one of a
built-in model name or an expression must be configured.  See the README
for the full key reference.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, replace

from .solver import SolverConfig

_BUILTIN_MODELS = ("ricker", "rational")
_FORMATS = ("csv", "svg", "json")

# keys accepted outside of [model] (which also takes free-form parameters
# when a built-in model is named)
_RUN_KEYS = {
    "region", "tol", "max_iter", "samples", "seed", "burn_in",
    "match_tol", "starts",
}
_SOLVER_KEYS = {
    "grid", "root_tol", "dedup_tol", "genuine_tol", "newton_max_iter",
    "fd_scale", "tangency_tol",
}
_OUTPUT_KEYS = {"out", "format", "jobs"}
_SWEEP_KEYS = {
    "p1", "p1_range", "p1_cells", "p2", "p2_range", "p2_cells",
    "delay", "curves", "samples", "grid", "newton_iter",
}
_MODEL_KEYS = {"name", "expr", "arity", "pattern"}


class ConfigError(ValueError):
    """Invalid, contradictory, or unparseable run configuration."""


def _norm_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def _as_float(section: str, key: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}") from None


def _as_int(section: str, key: str, value) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}") from None
    if f != int(f):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
    return int(f)


def parse_region(text, section: str = "run", key: str = "region") -> tuple[float, float]:
    """Parse a scan range written as ``lo:hi``."""
    if isinstance(text, (tuple, list)):
        parts = list(text)
    else:
        parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}: expected lo:hi, got {text!r}")
    lo = _as_float(section, key, parts[0])
    hi = _as_float(section, key, parts[1])
    if not lo < hi:
        raise ConfigError(f"[{section}] {key}: need lo < hi, got {lo}:{hi}")
    return lo, hi


@dataclass
class SweepSpec:
    """Two-parameter grid for :func:`monoembed.cli.cmd_sweep`."""

    p1: str = "h"
    p1_range: tuple[float, float] = (0.1, 5.0)
    p1_cells: int = 50
    p2: str = "r"
    p2_range: tuple[float, float] = (0.1, 4.0)
    p2_cells: int = 50
    delay: int = 1
    curves: tuple[int, ...] = (2, 3)
    # per-cell analysis budgets: scans trade certificate strength for
    # coverage, so these sit below the single-run defaults
    samples: int = 2
    grid: int = 48
    newton_iter: int = 40

    def validate(self) -> None:
        if self.p1 == self.p2:
            raise ConfigError("[sweep] p1 and p2 must name different parameters")
        for key in ("p1_cells", "p2_cells", "samples", "grid", "newton_iter"):
            if getattr(self, key) < 1:
                raise ConfigError(f"[sweep] {key}: must be >= 1")
        if self.delay < 0:
            raise ConfigError("[sweep] delay: must be >= 0")


@dataclass
class RunConfig:
    """Everything a CLI command needs: model source, budgets, outputs.

    The model source is exclusive: ``model_name`` (+ ``params``) for a
    built-in model, or ``exprs`` (+ ``arity``, ``pattern``) for expression
    phases; two or more expressions make the system periodic.
    """

    model_name: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    exprs: tuple[str, ...] = ()
    arity: int | None = None
    pattern: str | None = None          # sign text like "++-", or "infer"

    region: tuple[float, float] | None = None
    tol: float = 1e-10
    max_iter: int | None = None         # squeeze budget override
    samples: int = 100
    seed: int | None = None
    burn_in: int = 512
    match_tol: float = 1e-8
    starts: int = 200                   # multistart count for cycle search

    solver: SolverConfig = field(default_factory=SolverConfig)

    out: str | None = None
    fmt: str | None = None              # None = per-command default
    jobs: int | None = None             # None = all cores
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def validate(self) -> None:
        if (self.model_name is None) == (not self.exprs):
            raise ConfigError(
                "[model] configure exactly one model source: either name= "
                "(built-in) or expr= (expression)")
        if self.model_name is not None and self.model_name not in _BUILTIN_MODELS:
            raise ConfigError(
                f"[model] name: unknown built-in {self.model_name!r} "
                f"(choose from {', '.join(_BUILTIN_MODELS)})")
        if self.exprs and (self.arity is None or self.arity < 1):
            raise ConfigError("[model] arity: required (>= 1) for expression models")
        for key in ("tol", "match_tol"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"[run] {key}: must be > 0")
        for key in ("samples", "starts"):
            if getattr(self, key) < 1:
                raise ConfigError(f"[run] {key}: must be >= 1")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError("[run] max_iter: must be >= 1")
        if self.burn_in < 0:
            raise ConfigError("[run] burn_in: must be >= 0")
        for key in ("grid", "newton_max_iter"):
            if getattr(self.solver, key) < 1:
                raise ConfigError(f"[solver] {key}: must be >= 1")
        for key in ("root_tol", "dedup_tol", "genuine_tol", "fd_scale", "tangency_tol"):
            if getattr(self.solver, key) <= 0:
                raise ConfigError(f"[solver] {key}: must be > 0")
        if self.fmt is not None and self.fmt not in _FORMATS:
            raise ConfigError(f"[output] format: {self.fmt!r} is not one of "
                              f"{', '.join(_FORMATS)}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError("[output] jobs: must be >= 1")
        self.sweep.validate()

    # -- section mergers ----------------------------------------------------

    def _merge_model(self, items: dict) -> None:
        exprs: dict[int, str] = {}
        for raw_key, value in items.items():
            key = _norm_key(raw_key)
            if key == "name":
                self.model_name = str(value).strip().lower()
            elif key == "expr":
                exprs[0] = str(value)
            elif key.startswith("expr."):
                exprs[_as_int("model", key, key.split(".", 1)[1])] = str(value)
            elif key == "arity":
                self.arity = _as_int("model", key, value)
            elif key == "pattern":
                self.pattern = str(value).strip()
            else:
                # free-form parameters belong to built-in models
                self.params[key] = _as_float("model", key, value)
        if exprs:
            phases = sorted(exprs)
            if phases != list(range(len(phases))):
                raise ConfigError("[model] expression phases must be "
                                  "expr (= expr.0), expr.1, ... without gaps")
            self.exprs = tuple(exprs[i] for i in phases)
        if self.params and self.exprs:
            bad = ", ".join(sorted(self.params))
            raise ConfigError(f"[model] parameters ({bad}) only apply to "
                              "built-in models, not expressions")

    def _merge_run(self, items: dict) -> None:
        for raw_key, value in items.items():
            key = _norm_key(raw_key)
            if key not in _RUN_KEYS:
                raise ConfigError(f"[run] unknown key {raw_key!r}")
            if key == "region":
                self.region = parse_region(value)
            elif key in ("tol", "match_tol"):
                setattr(self, key, _as_float("run", key, value))
            else:
                setattr(self, key, _as_int("run", key, value))

    def _merge_solver(self, items: dict) -> None:
        updates = {}
        for raw_key, value in items.items():
            key = _norm_key(raw_key)
            if key not in _SOLVER_KEYS:
                raise ConfigError(f"[solver] unknown key {raw_key!r}")
            if key in ("grid", "newton_max_iter"):
                updates[key] = _as_int("solver", key, value)
            else:
                updates[key] = _as_float("solver", key, value)
        if updates:
            self.solver = replace(self.solver, **updates)

    def _merge_output(self, items: dict) -> None:
        for raw_key, value in items.items():
            key = _norm_key(raw_key)
            if key not in _OUTPUT_KEYS:
                raise ConfigError(f"[output] unknown key {raw_key!r}")
            if key == "out":
                self.out = str(value)
            elif key == "format":
                self.fmt = str(value).strip().lower()
            else:
                self.jobs = _as_int("output", key, value)

    def _merge_sweep(self, items: dict) -> None:
        for raw_key, value in items.items():
            key = _norm_key(raw_key)
            if key not in _SWEEP_KEYS:
                raise ConfigError(f"[sweep] unknown key {raw_key!r}")
            if key in ("p1", "p2"):
                setattr(self.sweep, key, _norm_key(str(value)))
            elif key in ("p1_range", "p2_range"):
                setattr(self.sweep, key, parse_region(value, "sweep", key))
            elif key == "curves":
                if isinstance(value, (tuple, list)):
                    parts = list(value)
                else:
                    parts = [p for p in str(value).split(",") if p.strip()]
                self.sweep.curves = tuple(_as_int("sweep", key, p) for p in parts)
            else:
                setattr(self.sweep, key, _as_int("sweep", key, value))

    def merge_sections(self, sections: dict) -> None:
        """Fold a {section: {key: value}} mapping into this config."""
        mergers = {
            "model": self._merge_model,
            "run": self._merge_run,
            "solver": self._merge_solver,
            "output": self._merge_output,
            "sweep": self._merge_sweep,
        }
        for raw_name, items in sections.items():
            name = _norm_key(raw_name)
            if name not in mergers:
                raise ConfigError(f"unknown config section [{raw_name}]")
            if not isinstance(items, dict):
                raise ConfigError(f"section [{raw_name}] must hold key-value pairs")
            mergers[name](items)


def loads_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text (INI sections or a JSON object) into a RunConfig."""
    config = base if base is not None else RunConfig()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object of sections")
        config.merge_sections(data)
        return config
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    config.merge_sections({s: dict(parser.items(s)) for s in parser.sections()})
    return config


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    """Load a config file; JSON and INI encodings are both accepted."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads_config(text, base)
