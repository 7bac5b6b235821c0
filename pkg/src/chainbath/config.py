"""Flat ``key = value`` run configuration with dotted section names."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .model import ModelParams, trap_frequency_ratio
from .spectral import REVIVAL_CONVENTIONS
from .states import SqueezeParams, shifted_from_bare

__all__ = ["RunConfig", "load_config", "parse_config", "parse_grid"]

FRAMES = ("bare", "shifted")
STEADY_METHODS = ("exact", "fast")

# key -> default as it would appear in a config file (None: derived)
DEFAULTS = {
    "model.n_ions": "1000",
    "model.mass_ratio": "0.5",
    "model.kappa": "1.0",
    "model.gamma": "0.1",
    "model.omega_b": None,
    "temperature": "1e-05",
    "squeeze1.r": "0",
    "squeeze1.phi": "0",
    "squeeze1.frame": "bare",
    "squeeze2.r": "0",
    "squeeze2.phi": "0",
    "squeeze2.frame": "bare",
    "time.t_max": None,
    "time.n_samples": "2048",
    "revival.convention": "round_trip",
    "steady.method": "exact",
    "steady.window": "0.4, 0.9",
    "scan.r_values": "1e-06, geomspace(1e-04, 0.2, 39)",
    "scan.temperature_values": "linspace(1e-05, 0.5, 40)",
    "scan.dphi": "0",
    "scan.gamma_values": "linspace(0, 0.95, 20)",
    "scan.kappa_values": "linspace(0.05, 2, 20)",
    "spectral.omega_min": "0.01",
    "spectral.omega_max": None,
    "spectral.n_omega": "400",
    "spectral.broadening": "0.02",
    "spectral.method": "spacing",
    "spectral.kernel_t_max": "50",
    "spectral.kernel_n_samples": "501",
    "isolated.gap_tolerance": "1e-06",
    "output.path": "output",
}
_ALIASES = {"scan.t_values": "scan.temperature_values"}

_GRID_ITEM = re.compile(r"^(linspace|geomspace)\(([^()]*)\)$")


def parse_grid(text: str, key: str = "grid") -> np.ndarray:
    """Parse a comma list whose items are numbers or ``linspace(a, b, n)`` / ``geomspace(a, b, n)``."""
    items = [s.strip() for s in re.split(r",(?![^(]*\))", text) if s.strip()]
    if not items:
        raise ConfigError(key, "grid is empty")
    parts = []
    for item in items:
        match = _GRID_ITEM.match(item)
        if match:
            args = [a.strip() for a in match.group(2).split(",")]
            if len(args) != 3:
                raise ConfigError(key, f"{match.group(1)} takes (start, stop, count), got {item!r}")
            start, stop = _to_float(args[0], key), _to_float(args[1], key)
            count = _to_int(args[2], key)
            if count < 1:
                raise ConfigError(key, "grid count must be positive")
            if match.group(1) == "geomspace" and not (start > 0 and stop > 0):
                raise ConfigError(key, "geomspace bounds must be positive")
            parts.append(getattr(np, match.group(1))(start, stop, count))
        else:
            parts.append(np.array([_to_float(item, key)]))
    return np.concatenate(parts)


def _to_float(text: str, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {text!r}")
    return value


def _to_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _choice(text: str, key: str, options) -> str:
    if text not in options:
        raise ConfigError(key, f"expected one of {', '.join(options)}, got {text!r}")
    return text


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration.

    ``squeeze1``/``squeeze2`` are always stored in the shifted frame; the raw
    text of every key, with defaults filled in, is kept in ``resolved``.
    """

    model: ModelParams
    temperature: float
    squeeze1: SqueezeParams
    squeeze2: SqueezeParams
    t_max: float | None
    n_samples: int
    revival_convention: str
    steady_method: str
    steady_window: tuple[float, float]
    r_values: np.ndarray = field(repr=False)
    temperature_values: np.ndarray = field(repr=False)
    dphi: float = 0.0
    gamma_values: np.ndarray = field(repr=False, default=None)
    kappa_values: np.ndarray = field(repr=False, default=None)
    omega_min: float = 0.01
    omega_max: float | None = None
    n_omega: int = 400
    broadening: float = 0.02
    spectral_method: str = "spacing"
    kernel_t_max: float = 50.0
    kernel_n_samples: int = 501
    gap_tolerance: float = 1e-6
    output_path: Path = Path("output")
    resolved: dict = field(default_factory=dict, repr=False)

    def resolved_text(self) -> str:
        """The resolved configuration in the input format, one sorted key per line."""
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.resolved.items()))


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse configuration text; unknown or malformed keys raise :class:`ConfigError`."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown configuration key")
        if key in raw:
            raise ConfigError(key, "given more than once")
        raw[key] = value
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown configuration key")
        raw[key] = value
    return _resolve(raw)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)


def _squeeze(raw, prefix: str, params: ModelParams) -> SqueezeParams:
    frame = _choice(raw[f"{prefix}.frame"], f"{prefix}.frame", FRAMES)
    s = SqueezeParams(_to_float(raw[f"{prefix}.r"], f"{prefix}.r"), _to_float(raw[f"{prefix}.phi"], f"{prefix}.phi"))
    return shifted_from_bare(s, trap_frequency_ratio(params.gamma)) if frame == "bare" else s


def _resolve(given: dict) -> RunConfig:
    raw = {k: v for k, v in DEFAULTS.items() if v is not None}
    raw.update(given)
    model_args = {
        "n_ions": _to_int(raw["model.n_ions"], "model.n_ions"),
        "mass_ratio": _to_float(raw["model.mass_ratio"], "model.mass_ratio"),
        "kappa": _to_float(raw["model.kappa"], "model.kappa"),
        "gamma": _to_float(raw["model.gamma"], "model.gamma"),
    }
    if "model.omega_b" in raw:
        model_args["omega_b"] = _to_float(raw["model.omega_b"], "model.omega_b")
    try:
        params = ModelParams(**model_args)
    except ValueError as exc:
        name = str(exc).split(" ", 1)[0]
        raise ConfigError(f"model.{name}", str(exc)) from None
    raw["model.omega_b"] = repr(params.omega_b)

    temperature = _to_float(raw["temperature"], "temperature")
    if temperature < 0:
        raise ConfigError("temperature", "must be non-negative")
    t_max = _to_float(raw["time.t_max"], "time.t_max") if "time.t_max" in raw else None
    if t_max is not None and not t_max > 0:
        raise ConfigError("time.t_max", f"must be positive, got {t_max}")
    n_samples = _to_int(raw["time.n_samples"], "time.n_samples")
    if n_samples < 2:
        raise ConfigError("time.n_samples", "need at least two samples")
    window = parse_grid(raw["steady.window"], "steady.window")
    if window.size != 2 or not 0 <= window[0] < window[1]:
        raise ConfigError("steady.window", "expected two increasing fractions of the revival time")
    temps = parse_grid(raw["scan.temperature_values"], "scan.temperature_values")
    if np.any(temps < 0):
        raise ConfigError("scan.temperature_values", "temperatures must be non-negative")
    gammas = parse_grid(raw["scan.gamma_values"], "scan.gamma_values")
    if np.any((gammas < 0) | (gammas >= 1)):
        raise ConfigError("scan.gamma_values", "coupling must lie in [0, 1)")
    kappas = parse_grid(raw["scan.kappa_values"], "scan.kappa_values")
    if np.any(kappas <= 0):
        raise ConfigError("scan.kappa_values", "spring constants must be positive")
    omega_max = _to_float(raw["spectral.omega_max"], "spectral.omega_max") if "spectral.omega_max" in raw else None
    omega_min = _to_float(raw["spectral.omega_min"], "spectral.omega_min")
    if omega_max is not None and not omega_max > omega_min:
        raise ConfigError("spectral.omega_max", "must exceed spectral.omega_min")
    n_omega = _to_int(raw["spectral.n_omega"], "spectral.n_omega")
    if n_omega < 1:
        raise ConfigError("spectral.n_omega", "must be positive")
    broadening = _to_float(raw["spectral.broadening"], "spectral.broadening")
    if not broadening > 0:
        raise ConfigError("spectral.broadening", "must be positive")
    kernel_t_max = _to_float(raw["spectral.kernel_t_max"], "spectral.kernel_t_max")
    if kernel_t_max < 0:
        raise ConfigError("spectral.kernel_t_max", "must be non-negative")
    kernel_n = _to_int(raw["spectral.kernel_n_samples"], "spectral.kernel_n_samples")
    if kernel_n < 1:
        raise ConfigError("spectral.kernel_n_samples", "must be positive")
    gap = _to_float(raw["isolated.gap_tolerance"], "isolated.gap_tolerance")
    if gap < 0:
        raise ConfigError("isolated.gap_tolerance", "must be non-negative")
    output = raw["output.path"]
    if not output:
        raise ConfigError("output.path", "must not be empty")

    return RunConfig(
        model=params,
        temperature=temperature,
        squeeze1=_squeeze(raw, "squeeze1", params),
        squeeze2=_squeeze(raw, "squeeze2", params),
        t_max=t_max,
        n_samples=n_samples,
        revival_convention=_choice(raw["revival.convention"], "revival.convention", REVIVAL_CONVENTIONS),
        steady_method=_choice(raw["steady.method"], "steady.method", STEADY_METHODS),
        steady_window=(float(window[0]), float(window[1])),
        r_values=parse_grid(raw["scan.r_values"], "scan.r_values"),
        temperature_values=temps,
        dphi=_to_float(raw["scan.dphi"], "scan.dphi"),
        gamma_values=gammas,
        kappa_values=kappas,
        omega_min=omega_min,
        omega_max=omega_max,
        n_omega=n_omega,
        broadening=broadening,
        spectral_method=_choice(raw["spectral.method"], "spectral.method", ("spacing", "gaussian")),
        kernel_t_max=kernel_t_max,
        kernel_n_samples=kernel_n,
        gap_tolerance=gap,
        output_path=Path(output),
        resolved=raw,
    )
