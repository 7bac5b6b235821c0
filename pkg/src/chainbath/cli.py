"""Command-line front end writing comma-separated data tables.

Usage::

    chainbath {single,contour,spectral,boundary} [--config FILE] [--output DIR]
              [--workers N] [--fast-steady]
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, parse_config
from .dynamics import (
    com_variance_series,
    default_times,
    measure_plateau,
    normal_mode_decomposition,
    simulate_defects,
    thermal_steady_estimate,
)
from .entanglement import (
    classify_phase,
    logarithmic_negativity,
    nu_minus_from_invariants,
    steady_state_coefficients,
)
from .exceptions import ConfigError, NumericalError
from .spectral import (
    analytic_dispersion,
    bath_spectrum,
    find_isolated_frequencies,
    memory_friction_kernel,
    revival_time,
    spectral_density,
)

__all__ = ["main", "run_boundary_scan", "run_contour", "run_single", "run_spectral"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMBER_FORMAT = "%.12g"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return NUMBER_FORMAT % value


def write_table(path: Path, header, rows) -> Path:
    """Write ``rows`` as comma-separated text with a single header line."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ConfigError("output.path", f"cannot write {path}: {exc.strerror}") from None
    return path


def _write_sidecar(config: RunConfig) -> Path:
    path = config.output_path / "resolved_config.txt"
    try:
        config.output_path.mkdir(parents=True, exist_ok=True)
        path.write_text(config.resolved_text())
    except OSError as exc:
        raise ConfigError("output.path", f"cannot write {path}: {exc.strerror}") from None
    return path


def _times(config: RunConfig) -> np.ndarray:
    return default_times(config.model, config.n_samples, config.t_max, config.revival_convention)


def run_single(config: RunConfig) -> list[Path]:
    """Exact time series of the COM variances and the defect negativity."""
    times = _times(config)
    traj = simulate_defects(config.model, config.temperature, config.squeeze1, config.squeeze2, times)
    series = traj.variance_series()
    rows = []
    for k, t in enumerate(times):
        neg = logarithmic_negativity(traj.covariances[k], check=False)
        rows.append((t, series.dx_plus_sq[k], series.dp_plus_sq[k], neg.script_e, neg.e_n))
    header = ("t", "dx_plus_var", "dp_plus_var", "script_e", "e_n")
    return [write_table(config.output_path / "single.csv", header, rows), _write_sidecar(config)]


def _plateau_variances(config: RunConfig, workers: int) -> tuple[np.ndarray, np.ndarray]:
    temps = config.temperature_values
    if config.steady_method == "fast":
        return thermal_steady_estimate(config.model, temps)
    t_rev = revival_time(config.model, config.revival_convention)
    times = np.linspace(config.steady_window[0] * t_rev, config.steady_window[1] * t_rev, config.n_samples)
    modes = normal_mode_decomposition(config.model)

    def plateau(temperature):
        series = com_variance_series(
            config.model, temperature, config.squeeze1, config.squeeze2, times, modes=modes
        )
        pl = measure_plateau(series, t_rev, config.steady_window)
        return pl.dx_plus_sq, pl.dp_plus_sq

    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(plateau, temps))
    return np.array([v[0] for v in values]), np.array([v[1] for v in values])


def contour_rows(config: RunConfig, workers: int = 1):
    """Rows ``(r, temperature, e_min, e_max, e_n_envelope_mid, phase)`` in grid order (r outer)."""
    dx, dp = _plateau_variances(config, workers)
    rows = []
    for r in config.r_values:
        for k, temperature in enumerate(config.temperature_values):
            label = classify_phase(r, r, config.dphi, dx[k], dp[k])
            delta0, _, det = steady_state_coefficients(r, r, config.dphi, dx[k], dp[k])
            mid = max(0.0, float(-np.log(2.0 * nu_minus_from_invariants(delta0, det))))
            rows.append((r, temperature, label.e_min, label.e_max, mid, label.label.value))
    return rows


def run_contour(config: RunConfig, workers: int = 1) -> list[Path]:
    """Steady-state phase diagram over the ``(r, temperature)`` grid."""
    header = ("r", "temperature", "e_min", "e_max", "e_n_envelope_mid", "phase")
    rows = contour_rows(config, workers)
    return [write_table(config.output_path / "contour.csv", header, rows), _write_sidecar(config)]


def run_spectral(config: RunConfig) -> list[Path]:
    """Dispersion, smoothed spectral density, memory-friction kernel and isolated frequencies."""
    params = config.model
    spectrum = bath_spectrum(params)
    j = np.arange(1, params.n_ions + 1)
    analytic = analytic_dispersion(j, params.n_ions, params.kappa, params.mass_ratio)
    omega_max = config.omega_max if config.omega_max is not None else params.cutoff
    omega = np.linspace(config.omega_min, omega_max, config.n_omega)
    density = spectral_density(spectrum, omega, config.broadening, config.spectral_method)
    t = np.linspace(0.0, config.kernel_t_max, config.kernel_n_samples)
    kernel = memory_friction_kernel(spectrum, t)
    report = find_isolated_frequencies(params, config.gap_tolerance)
    out = config.output_path
    return [
        write_table(out / "dispersion.csv", ("j", "omega_analytic", "omega_numeric"),
                    zip(j, analytic, spectrum.frequencies)),
        write_table(out / "spectral_density.csv", ("omega", "j_plus"), zip(omega, density)),
        write_table(out / "kernel.csv", ("t", "gamma_plus"), zip(t, kernel)),
        write_table(out / "isolated.csv", ("frequency", "band_edge"),
                    ((f, report.band_edge) for f in report.isolated)),
        _write_sidecar(config),
    ]


def run_boundary_scan(config: RunConfig, workers: int = 1) -> list[Path]:
    """Largest isolated frequency over the ``(gamma, kappa)`` grid (0 when there is none)."""
    points = [(g, k) for g in config.gamma_values for k in config.kappa_values]

    def largest(point):
        params = config.model.replace(gamma=point[0], kappa=point[1])
        return find_isolated_frequencies(params, config.gap_tolerance).largest

    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(largest, points))
    rows = [(g, k, v) for (g, k), v in zip(points, values)]
    return [
        write_table(config.output_path / "boundary.csv", ("gamma", "kappa", "largest_isolated"), rows),
        _write_sidecar(config),
    ]


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainbath", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=("single", "contour", "spectral", "boundary"))
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--output", type=Path, help="output directory (overrides output.path)")
    parser.add_argument("--workers", type=int, default=1, help="concurrent grid workers")
    parser.add_argument("--fast-steady", action="store_true",
                        help="use the thermal steady-state estimate instead of simulated plateaus")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {}
    if args.output is not None:
        overrides["output.path"] = str(args.output)
    if args.fast_steady:
        overrides["steady.method"] = "fast"
    try:
        if args.workers < 1:
            raise ConfigError("--workers", "must be at least 1")
        config = load_config(args.config, overrides) if args.config else parse_config("", overrides)
        if args.command == "single":
            written = run_single(config)
        elif args.command == "contour":
            written = run_contour(config, args.workers)
        elif args.command == "spectral":
            written = run_spectral(config)
        else:
            written = run_boundary_scan(config, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK
