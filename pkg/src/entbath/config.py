"""Run configuration: strict INI-style parsing, defaults, digests.

The format is a flat key = value file with sections.  Unknown sections or keys
are rejected, and every violation found is reported at once.  List-valued keys
accept either a comma-separated list ("0, 0.5, 1") or a linspace range
("start:stop:count").
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bathsim import BARE, POSITION, RENORMALIZED, SYMMETRIC, FullModel
from .errors import ConfigError
from .spectra import OhmicSpectralDensity

WORKERS_ENV_VAR = "ENTBATH_WORKERS"

_STATE_KINDS = ("two-mode-squeezed", "squeezed-product", "coherent-product", "explicit-covariance")


def _parse_float_list(text: str):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# schema: section -> key -> (parser, default); ... = required (no default)
_REQUIRED = object()
_SCHEMA = {
    "model": {
        "coupling": (str.strip, POSITION),
        "renormalization": (str.strip, RENORMALIZED),
        "mass": (float, 1.0),
        "omega_r": (float, None),
        "omega0": (float, None),
        "c12": (float, 0.0),
    },
    "bath": {
        "gamma0": (float, _REQUIRED),
        "cutoff": (float, _REQUIRED),
        "temperature": (float, _REQUIRED),
        "modes": (int, 1000),
    },
    "initial": {
        "kind": (str.strip, "two-mode-squeezed"),
        "r": (float, 0.0),
        "purity_product": (float, 0.5),
    },
    "grid": {
        "t_max": (float, 100.0),
        "dt": (float, 0.005),
        "dt_out": (float, 0.05),
    },
    "sweep": {
        "temperatures": (_parse_float_list, None),
        "squeezings": (_parse_float_list, None),
        "c12_values": (_parse_float_list, None),
        "purity_values": (_parse_float_list, None),
    },
    "run": {
        "workers": (int, 0),
        "out_dir": (str.strip, "out"),
        "override_horizon": (_parse_bool, False),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved and validated run configuration."""

    coupling: str
    renormalization: str
    mass: float
    omega_r: float | None
    omega0: float | None
    c12: float
    gamma0: float
    cutoff: float
    temperature: float
    modes: int
    kind: str
    r: float
    purity_product: float
    t_max: float
    dt: float
    dt_out: float
    temperatures: tuple | None
    squeezings: tuple | None
    c12_values: tuple | None
    purity_values: tuple | None
    workers: int
    out_dir: str
    override_horizon: bool
    source_path: str = field(default="", compare=False)

    @property
    def recurrence_time(self) -> float:
        return 2.0 * math.pi * self.modes / self.cutoff

    @property
    def horizon(self) -> float:
        return 0.5 * self.recurrence_time

    def density(self) -> OhmicSpectralDensity:
        return OhmicSpectralDensity(gamma0=self.gamma0, cutoff=self.cutoff, mass=self.mass)

    def build_model(self, temperature: float | None = None, c12: float | None = None) -> FullModel:
        """FullModel at the configured point, optionally overriding sweep axes."""
        t = self.temperature if temperature is None else temperature
        c = self.c12 if c12 is None else c12
        if self.renormalization == RENORMALIZED:
            return FullModel.renormalized(
                self.density(), self.modes, t, omega_r=self.omega_r, c12=c,
                coupling_type=self.coupling,
            )
        return FullModel.bare(
            self.density(), self.modes, t, omega0=self.omega0, c12=c,
            coupling_type=self.coupling,
        )

    def resolve_workers(self, cli_value: int | None = None) -> int:
        if cli_value is not None and cli_value > 0:
            return cli_value
        if self.workers > 0:
            return self.workers
        env = os.environ.get(WORKERS_ENV_VAR, "")
        if env.strip():
            try:
                n = int(env)
            except ValueError:
                raise ConfigError([f"{WORKERS_ENV_VAR} must be an integer, got {env!r}"])
            if n > 0:
                return n
        return 1

    def as_dict(self) -> dict:
        out = {}
        for name in (
            "coupling", "renormalization", "mass", "omega_r", "omega0", "c12",
            "gamma0", "cutoff", "temperature", "modes", "kind", "r",
            "purity_product", "t_max", "dt", "dt_out", "temperatures",
            "squeezings", "c12_values", "purity_values", "workers", "out_dir",
            "override_horizon",
        ):
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out

    def digest(self) -> str:
        """Hash of the resolved configuration (and code version)."""
        payload = {"version": __version__, "config": self.as_dict()}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def load_config(path) -> RunConfig:
    """Parse, default, and validate a configuration file (fail-closed)."""
    path = Path(path)
    problems: list[str] = []
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError([f"parse error in {path}: {exc}"]) from exc

    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key {key!r} in section [{section}]")
    for section, keys in _SCHEMA.items():
        for key, (parse, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    values[key] = parse(raw)
                except (ValueError, TypeError) as exc:
                    problems.append(f"[{section}] {key}: cannot parse {raw!r} ({exc})")
                    values[key] = None
            else:
                if default is _REQUIRED:
                    problems.append(f"[{section}] missing required key {key!r}")
                    values[key] = None
                else:
                    values[key] = default

    def check(cond: bool, message: str):
        if not cond:
            problems.append(message)

    coupling = values.get("coupling")
    renorm = values.get("renormalization")
    check(coupling in (POSITION, SYMMETRIC), f"[model] coupling must be '{POSITION}' or '{SYMMETRIC}'")
    check(renorm in (RENORMALIZED, BARE), f"[model] renormalization must be '{RENORMALIZED}' or '{BARE}'")
    if renorm == RENORMALIZED:
        check(values.get("omega_r") is not None, "[model] omega_r is required in renormalized mode")
        if values.get("omega_r") is not None:
            check(values["omega_r"] > 0, "[model] omega_r must be positive")
    if renorm == BARE:
        check(values.get("omega0") is not None, "[model] omega0 is required in bare mode")
        if values.get("omega0") is not None:
            check(values["omega0"] > 0, "[model] omega0 must be positive")
    if values.get("mass") is not None:
        check(values["mass"] > 0, "[model] mass must be positive")
    if values.get("gamma0") is not None:
        check(values["gamma0"] >= 0, "[bath] gamma0 must be non-negative")
    if values.get("cutoff") is not None:
        check(values["cutoff"] > 0, "[bath] cutoff must be positive")
    if values.get("temperature") is not None:
        check(values["temperature"] >= 0, "[bath] temperature must be non-negative")
    if values.get("modes") is not None:
        check(values["modes"] >= 1, "[bath] modes must be at least 1")
    check(values.get("kind") in _STATE_KINDS, f"[initial] kind must be one of {_STATE_KINDS}")
    if values.get("purity_product") is not None:
        check(values["purity_product"] >= 0.5 - 1e-12, "[initial] purity_product must be >= 1/2")
    for key in ("t_max", "dt", "dt_out"):
        if values.get(key) is not None:
            check(values[key] > 0, f"[grid] {key} must be positive")
    if values.get("workers") is not None:
        check(values["workers"] >= 0, "[run] workers must be >= 0")

    if values.get("dt") and values.get("cutoff"):
        check(
            values["dt"] * values["cutoff"] <= 0.1 * (1 + 1e-9),
            f"[grid] dt*cutoff = {values['dt'] * values['cutoff']:.4g} exceeds 0.1",
        )
    if (
        values.get("t_max")
        and values.get("cutoff")
        and values.get("modes")
        and not values.get("override_horizon")
    ):
        horizon = math.pi * values["modes"] / values["cutoff"]
        check(
            values["t_max"] <= horizon * (1 + 1e-12),
            f"[grid] t_max = {values['t_max']:.6g} exceeds the validity horizon "
            f"{horizon:.6g} (= half the bath recurrence time); increase [bath] modes "
            "or set [run] override_horizon = true",
        )
    for key in ("temperatures", "squeezings", "c12_values", "purity_values"):
        if values.get(key) is not None:
            check(len(values[key]) > 0, f"[sweep] {key} must not be empty")

    if problems:
        raise ConfigError(problems)

    def tup(key):
        v = values[key]
        return None if v is None else tuple(v)

    return RunConfig(
        coupling=values["coupling"],
        renormalization=values["renormalization"],
        mass=values["mass"],
        omega_r=values["omega_r"],
        omega0=values["omega0"],
        c12=values["c12"],
        gamma0=values["gamma0"],
        cutoff=values["cutoff"],
        temperature=values["temperature"],
        modes=values["modes"],
        kind=values["kind"],
        r=values["r"],
        purity_product=values["purity_product"],
        t_max=values["t_max"],
        dt=values["dt"],
        dt_out=values["dt_out"],
        temperatures=tup("temperatures"),
        squeezings=tup("squeezings"),
        c12_values=tup("c12_values"),
        purity_values=tup("purity_values"),
        workers=values["workers"],
        out_dir=values["out_dir"],
        override_horizon=values["override_horizon"],
        source_path=str(path),
    )
