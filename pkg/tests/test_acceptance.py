"""Acceptance criteria with their tolerances fixed up front.

Every test records one PASS/FAIL line that is repeated in the terminal
summary. Reference values marked as published are the stationary variances
(0.5031, 0.4988) and the recurrence time (about 1416) of the reference chain.
"""
import math

import numpy as np
import pytest
from scipy import ndimage

from chainbath.cli import contour_rows
from chainbath.config import parse_config
from chainbath.dynamics import (
    com_relative_transform,
    dense_exponential_oracle,
    evolve_covariance,
    measure_plateau,
    normal_mode_decomposition,
    NormalModeDecomposition,
    plateau_breakdown_time,
    relative_free_evolution,
    simulate_defects,
    thermal_steady_estimate,
)
from chainbath.entanglement import (
    Phase,
    classify_phase,
    det2_sum,
    logarithmic_negativity,
    oscillation_phase,
    steady_state_negativity,
    symplectic_eigenvalues,
)
from chainbath.model import ModelParams, build_full_system
from chainbath.spectral import analytic_dispersion, bath_spectrum, find_isolated_frequencies, revival_time
from chainbath.states import (
    SqueezeParams,
    bare_from_shifted,
    initial_covariance,
    shifted_from_bare,
    squeezed_defect_covariance,
)

REFERENCE = ModelParams(n_ions=1000, mass_ratio=0.5, kappa=1.0, gamma=0.1)
COLD = 1e-5
# bare-trap ground state of each defect, written in the shifted frame
DEFECT = SqueezeParams(0.25 * math.log(1.0 - REFERENCE.gamma), 0.0)

PUBLISHED_DX, PUBLISHED_DP, PLATEAU_TOL = 0.5031, 0.4988, 1e-3
ESTIMATE_REL_TOL = 0.01
PUBLISHED_REVIVAL, REVIVAL_REL_TOL, BREAKDOWN_THRESHOLD = 1416.0, 0.05, 0.05
PHASE_TEMPERATURES = (1e-5, 0.27, 0.33)
NEGATIVITY_TOL, FREQUENCY_TOL = 1e-3, 1e-4
ORACLE_TOL, SYMPLECTIC_TOL = 1e-8, 1e-10
INVARIANT_TOL, ROUNDTRIP_TOL, IDENTITY_TOL = 1e-9, 1e-10, 1e-12
DISPERSION_TOL = 1e-10


@pytest.fixture(scope="session")
def modes():
    return normal_mode_decomposition(REFERENCE)


@pytest.fixture(scope="session")
def t_rev():
    return revival_time(REFERENCE)


@pytest.fixture(scope="session")
def reference_trajectory(modes, t_rev):
    times = np.linspace(0.0, 1.5 * t_rev, 3001)
    return simulate_defects(REFERENCE, COLD, DEFECT, DEFECT, times, modes=modes)


@pytest.fixture(scope="session")
def reference_plateau(reference_trajectory, t_rev):
    return measure_plateau(reference_trajectory.variance_series(), t_rev)


def test_criterion_01_plateau_variances(reference_plateau, record_criterion):
    dx, dp = reference_plateau.dx_plus_sq, reference_plateau.dp_plus_sq
    ok = abs(dx - PUBLISHED_DX) <= PLATEAU_TOL and abs(dp - PUBLISHED_DP) <= PLATEAU_TOL
    record_criterion(1, "plateau variances", ok, f"dX+^2={dx:.6f}, dP+^2={dp:.6f}, tol {PLATEAU_TOL}")
    assert ok


def test_criterion_02_thermal_estimate(reference_plateau, record_criterion):
    dx, dp = thermal_steady_estimate(REFERENCE, COLD)
    rel = max(abs(dx / reference_plateau.dx_plus_sq - 1), abs(dp / reference_plateau.dp_plus_sq - 1))
    ok = rel <= ESTIMATE_REL_TOL
    record_criterion(2, "thermal estimate vs plateau", ok, f"max relative difference {rel:.2e}")
    assert ok


def test_criterion_03_revival_time(reference_trajectory, reference_plateau, record_criterion):
    series = reference_trajectory.variance_series()
    t_break = plateau_breakdown_time(series, reference_plateau, BREAKDOWN_THRESHOLD)
    late = series.times > reference_plateau.window[0]
    peak = np.max(np.abs(series.dx_plus_sq[late] / reference_plateau.dx_plus_sq - 1.0))
    ok = t_break is not None and abs(t_break / PUBLISHED_REVIVAL - 1.0) <= REVIVAL_REL_TOL
    detail = f"breakdown at {t_break}, largest post-transient deviation {peak:.2%}"
    record_criterion(3, "revival time from 5% plateau breakdown", ok, detail)
    assert ok


def test_criterion_04_phase_triple(modes, t_rev, reference_plateau, record_criterion):
    labels = []
    times = np.linspace(0.4 * t_rev, 0.9 * t_rev, 800)
    for temperature in PHASE_TEMPERATURES:
        if temperature == COLD:
            dx, dp = reference_plateau.dx_plus_sq, reference_plateau.dp_plus_sq
        else:
            series = simulate_defects(REFERENCE, temperature, DEFECT, DEFECT, times, modes=modes).variance_series()
            plateau = measure_plateau(series, t_rev)
            dx, dp = plateau.dx_plus_sq, plateau.dp_plus_sq
        labels.append(classify_phase(DEFECT.r, DEFECT.r, 0.0, dx, dp).label)
    ok = labels == [Phase.NSD, Phase.SDR, Phase.SD]
    record_criterion(4, "phase triple", ok, ", ".join(label.value for label in labels))
    assert ok


def _fit_frequency(t, y, guess=2.0, span=0.05):
    """Least-squares frequency of a periodic signal, harmonics up to the third."""

    def residual(w):
        cols = [np.ones_like(t)]
        for k in (1, 2, 3):
            cols += [np.cos(k * w * t), np.sin(k * w * t)]
        a = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        return float(np.sum((a @ coef - y) ** 2))

    grid = np.linspace(guess - span, guess + span, 2001)
    values = [residual(w) for w in grid]
    k = int(np.argmin(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    for _ in range(60):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if residual(m1) < residual(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def test_criterion_05_closed_form_vs_simulation(modes, t_rev, reference_plateau, record_criterion):
    dx, dp = reference_plateau.dx_plus_sq, reference_plateau.dp_plus_sq
    phase = oscillation_phase(DEFECT, DEFECT, dx, dp)
    times = np.linspace(0.45 * t_rev, 0.85 * t_rev, 20)
    traj = simulate_defects(REFERENCE, COLD, DEFECT, DEFECT, times, modes=modes)
    simulated = np.array([logarithmic_negativity(c).e_n for c in traj.covariances])
    closed = steady_state_negativity(DEFECT.r, DEFECT.r, 0.0, dx, dp, times, phase=phase).e_n
    worst = float(np.max(np.abs(simulated - closed)))

    dense = np.linspace(0.4 * t_rev, 0.9 * t_rev, 4000)
    dense_traj = simulate_defects(REFERENCE, COLD, DEFECT, DEFECT, dense, modes=modes)
    script_e = np.array([logarithmic_negativity(c).script_e for c in dense_traj.covariances])
    omega = _fit_frequency(dense, script_e)
    ok = worst <= NEGATIVITY_TOL and abs(omega - 2.0) < FREQUENCY_TOL
    detail = f"max |dE_N|={worst:.2e}, fitted frequency {omega:.7f}"
    record_criterion(5, "closed form vs simulation", ok, detail)
    assert ok


def test_criterion_06_oracle_equivalence(modes, record_criterion):
    small = build_full_system(ModelParams(5, 0.5, 1.0, 0.1))
    small_modes = NormalModeDecomposition(small)
    err = max(
        float(np.max(np.abs(small_modes.propagator(t).matrix - dense_exponential_oracle(small, t).matrix)))
        for t in (0.1, 1.0, 10.0)
    )
    defect = max(modes.propagator(t).symplecticity_defect(modes.system.j_matrix) for t in (1.0, 700.0))
    ok = err <= ORACLE_TOL and defect <= SYMPLECTIC_TOL
    record_criterion(6, "oracle equivalence", ok, f"max entry error {err:.2e}, symplecticity defect {defect:.2e}")
    assert ok


def _wrapped_difference(a, b):
    return abs(math.remainder(a - b, 2.0 * math.pi))


def test_criterion_07_invariant_suite(reference_trajectory, record_criterion):
    params = ModelParams(100, 0.5, 1.0, 0.1)
    system = build_full_system(params)
    nm = NormalModeDecomposition(system)
    cov0 = initial_covariance(params, 0.2, SqueezeParams(0.5, 0.3), SqueezeParams(0.2, -1.1))
    nu0 = symplectic_eigenvalues(cov0, system.j_matrix)
    energy0 = 0.5 * np.trace(system.h_matrix @ cov0)
    nu_drift = energy_drift = 0.0
    for t in (1.0, 50.0, 300.0):
        cov = evolve_covariance(cov0, nm.propagator(t))
        nu_drift = max(nu_drift, float(np.max(np.abs(symplectic_eigenvalues(cov, system.j_matrix) - nu0))))
        energy_drift = max(energy_drift, abs(0.5 * np.trace(system.h_matrix @ cov) / energy0 - 1.0))

    pm = com_relative_transform(reference_trajectory.covariances)
    rel0 = pm[0, 2:, 2:]
    rotation = max(
        float(np.max(np.abs(block - relative_free_evolution(rel0, t))))
        for t, block in zip(reference_trajectory.times, pm[:, 2:, 2:])
    )

    roundtrip = 0.0
    omega_ratio = math.sqrt(1.0 - REFERENCE.gamma)
    for r in np.linspace(0.05, 2.0, 20):
        for phi in np.linspace(-math.pi, math.pi, 20):
            s = SqueezeParams(r, phi)
            for back in (
                shifted_from_bare(bare_from_shifted(s, omega_ratio), omega_ratio),
                bare_from_shifted(shifted_from_bare(s, omega_ratio), omega_ratio),
            ):
                roundtrip = max(roundtrip, abs(back.r - s.r), _wrapped_difference(back.phi, s.phi))

    rng = np.random.default_rng(2024)
    identity = 0.0
    for _ in range(1000):
        a, b = rng.normal(size=(2, 2, 2))
        for sign in (1.0, -1.0):
            identity = max(identity, abs(det2_sum(a, b, sign) - np.linalg.det(a + sign * b)))

    ok = (
        nu_drift <= INVARIANT_TOL
        and energy_drift <= INVARIANT_TOL
        and rotation <= INVARIANT_TOL
        and roundtrip <= ROUNDTRIP_TOL
        and identity <= IDENTITY_TOL
    )
    detail = (
        f"symplectic eigenvalues {nu_drift:.1e}, energy {energy_drift:.1e}, relative rotation {rotation:.1e}, "
        f"frame roundtrip {roundtrip:.1e}, determinant identity {identity:.1e}"
    )
    record_criterion(7, "invariant suite", ok, detail)
    assert ok


def test_criterion_08_dispersion(record_criterion):
    params = ModelParams(200, 0.5, 1.0, 0.0)
    numeric = bath_spectrum(params).frequencies
    analytic = analytic_dispersion(np.arange(1, 201), 200, params.kappa, params.mass_ratio)
    err = float(np.max(np.abs(numeric - analytic)))
    ok = err <= DISPERSION_TOL
    record_criterion(8, "dispersion exactness", ok, f"max |domega|={err:.1e}")
    assert ok


def _island(overrides=""):
    config = parse_config("steady.method = fast\n" + overrides)
    rows = contour_rows(config)
    n_r, n_t = config.r_values.size, config.temperature_values.size
    nsd = np.array([row[5] == Phase.NSD.value for row in rows]).reshape(n_r, n_t)
    labels, _ = ndimage.label(nsd)
    island = labels[0, 0]
    main = labels[-1, 0]
    size = int(np.sum(labels == island)) if island else 0
    return island, main, size, nsd


def test_criterion_09_contour_structure(record_criterion):
    island, main, size, nsd = _island()
    cold_row = nsd[:, 0]
    # walking up in r at the coldest temperature leaves the island before reaching the main region
    first_gap = int(np.argmin(cold_row)) if island else 0
    separated = bool(island) and bool(main) and island != main and not cold_row[first_gap]
    sizes = {
        "gamma=0.2": _island("model.gamma = 0.2")[2],
        "kappa=0.5": _island("model.kappa = 0.5")[2],
        "kappa=1.5": _island("model.kappa = 1.5")[2],
    }
    ok = separated and sizes["gamma=0.2"] > size and sizes["kappa=0.5"] > sizes["kappa=1.5"]
    detail = f"island cells {size} (separated={separated}), " + ", ".join(f"{k}: {v}" for k, v in sizes.items())
    record_criterion(9, "contour structure", ok, detail)
    assert ok


def test_criterion_10_isolated_frequencies(record_criterion):
    used = [(0.1, 1.0), (0.2, 1.0), (0.1, 0.5), (0.1, 1.5)]
    clear = [not find_isolated_frequencies(REFERENCE.replace(gamma=g, kappa=k)) for g, k in used]
    edge = find_isolated_frequencies(REFERENCE.replace(omega_b=2.0))
    ok = all(clear) and bool(edge)
    record_criterion(10, "isolated-frequency map", ok, f"reference points clear: {all(clear)}, omega_b=2 -> {edge.isolated}")
    assert ok


def test_plateau_determinant_is_quasi_stationary(reference_trajectory, reference_plateau):
    # residual COM fluctuations of the finite chain keep det at the 1e-5 level, not machine precision
    lo, hi = reference_plateau.window
    mask = (reference_trajectory.times >= lo) & (reference_trajectory.times <= hi)
    det = np.linalg.det(reference_trajectory.covariances[mask])
    assert np.ptp(det) / np.mean(det) < 1e-4
