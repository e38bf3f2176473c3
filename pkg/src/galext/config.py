"""Scenario files.

Scenarios are INI files read with :mod:`configparser`.  Sections and keys
are documented in ``docs/formats.md``; every missing or malformed value
raises :class:`ConfigError` naming ``section.key``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import SGrid, SpatialGrid
from .errors import ConfigError, GalextError

KINDS = ("free_covariance", "ep_check", "bargmann_scan", "algebra_check", "poincare_reduction")

DEFAULT_TOLERANCES = {
    "free_covariance": {"residual": 1e-5, "fidelity": 1e-8, "phase": 1e-6},
    "ep_check": {"fidelity": 1e-6},
    "bargmann_scan": {"law": 1e-10},
    "algebra_check": {"commutator": 1e-10},
    "poincare_reduction": {"scaling": 0.01, "coords": 1e-14},
}

# (section, key) pairs that must be present for each kind
REQUIRED = {
    "free_covariance": [("grid", "n"), ("grid", "length"), ("physics", "masses"),
                        ("physics", "v"), ("numerics", "dt"), ("numerics", "t_final")],
    "ep_check": [("grid", "n"), ("grid", "length"), ("physics", "masses"),
                 ("physics", "g"), ("numerics", "dt"), ("numerics", "t_final")],
    "bargmann_scan": [("physics", "masses"), ("scan", "av_start"), ("scan", "av_stop"),
                      ("scan", "points")],
    "algebra_check": [("grid", "n"), ("grid", "length"), ("grid", "n_s"),
                      ("grid", "length_s"), ("physics", "masses"), ("algebra", "probes"),
                      ("scenario", "seed")],
    "poincare_reduction": [("physics", "masses"), ("physics", "p"), ("physics", "v"),
                           ("physics", "a"), ("physics", "c_values")],
}


@dataclass
class ScenarioConfig:
    kind: str
    raw: dict
    grid: Optional[SpatialGrid] = None
    sgrid: Optional[SGrid] = None
    hbar: float = 1.0
    c: float = math.inf
    masses: tuple = ()
    weights: tuple = ()
    x0: float = 0.0
    k0: float = 0.0
    sigma: float = 1.0
    v: float = 0.0
    g: float = 0.0
    a: float = 0.0
    p: float = 0.0
    rest_energy: bool = False
    c_values: tuple = ()
    dt: float = 0.0
    t_final: float = 0.0
    snapshot_stride: int = 0
    av_values: tuple = ()
    probes: int = 0
    seed: Optional[int] = None
    sign_convention: Optional[str] = None
    tolerances: dict = field(default_factory=dict)
    output_dir: Optional[str] = None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def raw(self, section, key):
        if not self.has(section, key):
            raise ConfigError(f"missing required field {section}.{key}")
        return self.cp.get(section, key).strip()

    def float(self, section, key, default=None):
        if default is not None and not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a number, got {text!r}") from None
        if math.isnan(value):
            raise ConfigError(f"{section}.{key}: NaN is not allowed")
        return value

    def int(self, section, key, default=None):
        if default is not None and not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected an integer, got {text!r}") from None

    def floats(self, section, key, default=None):
        if default is not None and not self.has(section, key):
            return tuple(default)
        text = self.raw(section, key)
        try:
            return tuple(float(tok) for tok in text.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a list of numbers, got {text!r}") from None

    def bool(self, section, key, default=False):
        if not self.has(section, key):
            return default
        try:
            return self.cp.getboolean(section, key)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected true/false") from None


def parse_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable scenario file: {exc}") from None
    r = _Reader(cp)
    kind = r.raw("scenario", "kind")
    if kind not in KINDS:
        raise ConfigError(f"scenario.kind: unknown kind {kind!r}; expected one of {KINDS}")
    for section, key in REQUIRED[kind]:
        r.raw(section, key)

    cfg = ScenarioConfig(kind=kind, raw={s: dict(cp.items(s)) for s in cp.sections()})
    cfg.hbar = r.float("physics", "hbar", 1.0)
    cfg.c = r.float("physics", "c", math.inf)
    if not cfg.hbar > 0:
        raise ConfigError("physics.hbar must be positive")
    if not cfg.c > 0:
        raise ConfigError("physics.c must be positive (or inf)")
    cfg.masses = r.floats("physics", "masses", ())
    if any(m <= 0 for m in cfg.masses):
        raise ConfigError("physics.masses must all be positive")
    cfg.weights = r.floats("physics", "weights", [1.0] * len(cfg.masses))
    if len(cfg.weights) != len(cfg.masses):
        raise ConfigError("physics.weights must have one entry per mass")
    for key in ("x0", "k0", "v", "g", "a", "p"):
        setattr(cfg, key, r.float("physics", key, 0.0))
    cfg.sigma = r.float("physics", "sigma", 1.0)
    if not cfg.sigma > 0:
        raise ConfigError("physics.sigma must be positive")
    cfg.rest_energy = r.bool("physics", "rest_energy")
    if cfg.rest_energy and math.isinf(cfg.c):
        raise ConfigError("physics.rest_energy needs a finite physics.c")
    cfg.c_values = r.floats("physics", "c_values", ())

    if r.has("grid", "n"):
        try:
            cfg.grid = SpatialGrid(r.int("grid", "n"), r.float("grid", "length"))
        except GalextError as exc:
            raise ConfigError(f"grid: {exc}") from None
    if r.has("grid", "n_s"):
        try:
            cfg.sgrid = SGrid(r.int("grid", "n_s"), r.float("grid", "length_s"), cfg.hbar)
            for m in cfg.masses:
                cfg.sgrid.mass_index(m)
        except GalextError as exc:
            raise ConfigError(f"grid: {exc}") from None

    if kind in ("free_covariance", "ep_check"):
        cfg.dt = r.float("numerics", "dt")
        cfg.t_final = r.float("numerics", "t_final")
        if not cfg.dt > 0 or cfg.t_final < 2 * cfg.dt:
            raise ConfigError("numerics.dt must be positive and numerics.t_final >= 2 dt")
        cfg.snapshot_stride = r.int("numerics", "snapshot_stride", 0)
    if kind in ("free_covariance", "ep_check") and len(set(cfg.masses)) != len(cfg.masses):
        raise ConfigError("physics.masses must be distinct")
    if kind == "ep_check" and r.has("physics", "sign_convention"):
        cfg.sign_convention = r.raw("physics", "sign_convention")
        if cfg.sign_convention not in ("s_transform", "printed_phase"):
            raise ConfigError("physics.sign_convention must be s_transform or printed_phase")
    if kind == "bargmann_scan":
        if len(cfg.masses) != 2:
            raise ConfigError("physics.masses: bargmann_scan needs exactly two masses")
        npts = r.int("scan", "points")
        if npts < 1:
            raise ConfigError("scan.points must be >= 1")
        lo, hi = r.float("scan", "av_start"), r.float("scan", "av_stop")
        cfg.av_values = tuple(lo + (hi - lo) * i / max(npts - 1, 1) for i in range(npts))
        cfg.v = r.float("physics", "v", 1.0)
        if cfg.v == 0:
            raise ConfigError("physics.v must be non-zero for a loop scan")
    if kind == "algebra_check":
        cfg.probes = r.int("algebra", "probes")
        if cfg.probes < 1:
            raise ConfigError("algebra.probes must be >= 1")
        cfg.seed = r.int("scenario", "seed")
    if kind == "poincare_reduction":
        if len(cfg.masses) != 1:
            raise ConfigError("physics.masses: poincare_reduction takes one mass")
        if len(cfg.c_values) < 2 or any(not c > 0 or math.isinf(c) for c in cfg.c_values):
            raise ConfigError("physics.c_values needs at least two finite positive speeds")

    cfg.tolerances = dict(DEFAULT_TOLERANCES[kind])
    if cp.has_section("tolerances"):
        for key in cp.options("tolerances"):
            cfg.tolerances[key] = r.float("tolerances", key)
    if r.has("output", "dir"):
        cfg.output_dir = r.raw("output", "dir")
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    return parse_config(text)
