"""Experiment configuration: flat key = value sections, one per module."""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError

EXPERIMENTS = ("vqu", "eigencheck", "evolve", "noise-check", "lambda-q", "report")


def _float(text: str) -> str:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return repr(v)


def _auto_float(text: str) -> str:
    return "auto" if text.strip().lower() == "auto" else _float(text)


def _int(text: str) -> str:
    f = float(text)
    if f != int(f):
        raise ValueError("expected an integer")
    return str(int(f))


def _bool(text: str) -> str:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return "true"
    if t in ("0", "false", "no", "off"):
        return "false"
    raise ValueError("expected true/false")


def _str(text: str) -> str:
    return text.strip()


def _floats(text: str) -> str:
    parts = [p for p in text.replace(",", " ").split() if p]
    return ", ".join(_float(p) for p in parts)


def _choice(*options):
    def check(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return check


SCHEMA = {
    "experiment": {"name": _choice(*EXPERIMENTS), "seed": _int, "out": _str},
    "grid": {"x_min": _float, "x_max": _float, "n_points": _int},
    "physics": {"mass": _float, "hbar": _float, "boltzmann": _float, "temperature": _float,
                "potential": _choice("free", "harmonic", "csv"), "omega": _float, "center": _float,
                "potential_csv": _str},
    "evolution": {"dt": _float, "n_steps": _int, "scheme": _choice("deterministic", "stochastic"),
                  "record_every": _int, "ensemble": _int, "workers": _int, "trajectories": _floats,
                  "snapshots": _bool},
    "noise": {"mu": _float, "lambda_c": _auto_float, "conserve_mass": _bool},
    "state": {"kind": _choice("ho", "gaussian", "csv"), "level": _int, "sigma": _float,
              "center": _float, "momentum": _float, "path": _str},
    "vqu": {"source": _choice("cosine", "gaussian", "ho", "csv"), "wavelength": _float,
            "sigma": _float, "level": _int, "path": _str},
    "eigencheck": {"n_max": _int, "periods": _float, "dt": _float, "dx": _float},
    "noise_check": {"samples": _int, "dt": _float},
    "lambda_q": {"source": _choice("pseudo_gaussian", "csv"), "case": _choice("a", "b", "c", "d", "gaussian"),
                 "Lambda": _float, "delta_q": _float, "g": _float, "center": _float,
                 "lambda_c": _auto_float, "q_max": _float, "path": _str},
    "report": {"system_length": _float, "lambda_q": _float, "c": _float},
}
IGNORED_SECTIONS = ("manifest",)


@dataclass
class ExperimentConfig:
    """Normalized sections; every value is the canonical string for its type."""

    sections: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax: {exc}") from None
        cfg = cls()
        for sec in cp.sections():
            if sec in IGNORED_SECTIONS:
                continue
            if sec not in SCHEMA:
                raise ConfigError(f"[{sec}]: unknown section")
            for key, raw in cp.items(sec):
                cfg.set(sec, key, raw)
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None

    def set(self, section: str, key: str, raw) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"[{section}]: unknown section")
        conv = SCHEMA[section].get(key)
        if conv is None:
            raise ConfigError(f"{section}.{key}: unknown key")
        try:
            val = conv(str(raw))
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} = {raw!r}: {exc}") from None
        self.sections.setdefault(section, {})[key] = val

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return section in self.sections
        return key in self.sections.get(section, {})

    def raw(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def get_float(self, section, key, default=None) -> float:
        v = self.raw(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"{section}.{key}: required")
            return float(default)
        return float(v)

    def get_int(self, section, key, default=None) -> int:
        v = self.raw(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"{section}.{key}: required")
            return int(default)
        return int(v)

    def get_bool(self, section, key, default: bool) -> bool:
        v = self.raw(section, key)
        return default if v is None else v == "true"

    def get_str(self, section, key, default=None) -> str:
        v = self.raw(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"{section}.{key}: required")
            return default
        return v

    def get_floats(self, section, key) -> list[float]:
        v = self.raw(section, key)
        return [] if not v else [float(p) for p in v.split(",")]

    @property
    def experiment(self) -> str:
        return self.get_str("experiment", "name")

    @property
    def seed(self) -> int | None:
        v = self.raw("experiment", "seed")
        return None if v is None else int(v)

    def to_text(self) -> str:
        out = []
        for sec in SCHEMA:
            if sec not in self.sections:
                continue
            out.append(f"[{sec}]")
            for key in SCHEMA[sec]:
                if key in self.sections[sec]:
                    out.append(f"{key} = {self.sections[sec][key]}")
            out.append("")
        return "\n".join(out)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()
