"""Normal-mode characterisation of the chain as a reservoir for the defect COM."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .exceptions import NumericalError
from .model import ModelParams, build_com_sector, build_shifted_potential, coupling_vector

__all__ = [
    "ModeSpectrum",
    "IsolatedFrequencyReport",
    "analytic_dispersion",
    "bath_spectrum",
    "cutoff_frequency",
    "find_isolated_frequencies",
    "memory_friction_kernel",
    "normal_modes",
    "revival_time",
    "spectral_density",
    "REVIVAL_CONVENTIONS",
]

REVIVAL_CONVENTIONS = ("single_pass", "round_trip")


@dataclass(frozen=True)
class ModeSpectrum:
    """Chain normal modes as seen by the centre-of-mass coordinate.

    ``frequencies`` are strictly ascending; ``couplings[j]`` is the coupling of
    the COM to mode ``j``.
    """

    frequencies: np.ndarray = field(repr=False)
    couplings: np.ndarray = field(repr=False)
    mass_ratio: float
    cutoff: float

    def __post_init__(self):
        if self.frequencies.shape != self.couplings.shape:
            raise ValueError("frequencies and couplings must have equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly ascending")

    def __len__(self):
        return self.frequencies.size

    @property
    def spectral_weights(self) -> np.ndarray:
        """Weights of the delta peaks in the spectral density."""
        return 0.5 * np.pi * self.couplings**2 / (self.mass_ratio * self.frequencies)

    @property
    def kernel_weights(self) -> np.ndarray:
        """Cosine amplitudes of the memory-friction kernel."""
        return self.couplings**2 / (self.mass_ratio * self.frequencies**2)


def cutoff_frequency(kappa: float, mass_ratio: float) -> float:
    return math.sqrt(4.0 * kappa / mass_ratio)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # first non-negligible entry of every column made positive
    scale = np.max(np.abs(vectors), axis=0)
    significant = np.abs(vectors) > 1e-12 * scale
    first = np.argmax(significant, axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def normal_modes(v_gamma, mass_ratio: float, coupling, *, kappa: float | None = None) -> ModeSpectrum:
    """Diagonalise the chain potential and project the COM coupling on its modes.

    Parameters
    ----------
    v_gamma : (N, N) array_like
        Symmetric chain potential including the coupling shift.
    mass_ratio : float
        Chain-ion mass in defect units.
    coupling : (N,) array_like
        Coupling vector of the COM coordinate to the chain coordinates.
    kappa : float, optional
        Spring constant used for the band edge; read off the first
        off-diagonal element of ``v_gamma`` when omitted.
    """
    v = np.asarray(v_gamma, dtype=float)
    g = np.asarray(coupling, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or g.shape != (v.shape[0],):
        raise ValueError("v_gamma must be square and match the coupling vector")
    if kappa is None:
        kappa = -v[0, 1]
    try:
        eigvals, eigvecs = np.linalg.eigh(v)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed (condition number {np.linalg.cond(v):.3e})") from exc
    if eigvals[0] <= 0:
        cond = abs(eigvals[-1] / eigvals[0]) if eigvals[0] != 0 else math.inf
        raise NumericalError(
            f"chain potential is not positive definite: smallest eigenvalue {eigvals[0]:.3e}, "
            f"condition number {cond:.3e}"
        )
    eigvecs = _fix_signs(eigvecs)
    return ModeSpectrum(
        frequencies=np.sqrt(eigvals / mass_ratio),
        couplings=eigvecs.T @ g,
        mass_ratio=float(mass_ratio),
        cutoff=cutoff_frequency(kappa, mass_ratio),
    )


def bath_spectrum(params: ModelParams) -> ModeSpectrum:
    """:func:`normal_modes` for the chain defined by ``params``."""
    return normal_modes(
        build_shifted_potential(params), params.mass_ratio, coupling_vector(params), kappa=params.kappa
    )


def analytic_dispersion(j, n_ions: int, kappa: float, mass_ratio: float):
    """Mode frequency ``cutoff * sin(j pi / (2 (N + 1)))`` of the uncoupled, default-pinned chain."""
    j_arr = np.asarray(j)
    if np.any(j_arr < 1) or np.any(j_arr > n_ions):
        raise ValueError(f"mode index must lie in [1, {n_ions}]")
    result = cutoff_frequency(kappa, mass_ratio) * np.sin(0.5 * j_arr * np.pi / (n_ions + 1))
    return float(result) if j_arr.ndim == 0 else result


def spectral_density(spectrum: ModeSpectrum, omega_grid, broadening: float, method: str = "spacing"):
    """Smooth the delta comb of the spectral density onto ``omega_grid``.

    ``method="spacing"`` divides each peak weight by the local mode spacing and
    averages those densities over the modes within ``+-broadening`` of each
    grid point (zero where no mode lies in the window). ``method="gaussian"``
    replaces every delta peak by a normalised Gaussian of width ``broadening``.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if omega.size == 0:
        raise ValueError("omega grid is empty")
    if not broadening > 0:
        raise ValueError(f"broadening must be positive, got {broadening}")
    freqs = spectrum.frequencies
    weights = spectrum.spectral_weights
    if method == "gaussian":
        out = np.zeros(omega.shape)
        flat = out.reshape(-1)
        om = omega.reshape(-1)
        for start in range(0, om.size, 512):
            diff = om[start:start + 512, None] - freqs[None, :]
            flat[start:start + 512] = np.exp(-0.5 * (diff / broadening) ** 2) @ weights
        return out / (math.sqrt(2.0 * np.pi) * broadening)
    if method != "spacing":
        raise ValueError(f"unknown smoothing method {method!r}")
    if freqs.size > 1:
        density = weights / np.gradient(freqs)
    else:
        density = weights / (2.0 * broadening)
    cumulative = np.concatenate(([0.0], np.cumsum(density)))
    lo = np.searchsorted(freqs, omega - broadening, side="left")
    hi = np.searchsorted(freqs, omega + broadening, side="right")
    count = hi - lo
    total = cumulative[hi] - cumulative[lo]
    return np.divide(total, count, out=np.zeros(omega.shape), where=count > 0)


def memory_friction_kernel(spectrum: ModeSpectrum, t):
    """Memory-friction kernel ``sum_j k_j cos(omega_j t)`` for ``t >= 0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("memory-friction kernel is only defined for t >= 0")
    k = spectrum.kernel_weights
    flat = t_arr.reshape(-1)
    out = np.empty(flat.shape)
    for start in range(0, flat.size, 256):
        out[start:start + 256] = np.cos(np.outer(flat[start:start + 256], spectrum.frequencies)) @ k
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


@dataclass(frozen=True)
class IsolatedFrequencyReport:
    """Eigenfrequencies of the COM + chain stiffness lying above the phonon band."""

    isolated: tuple[float, ...]
    band_edge: float
    gap_tolerance: float

    def __post_init__(self):
        threshold = self.band_edge * (1.0 + self.gap_tolerance)
        if any(f <= threshold for f in self.isolated):
            raise ValueError("isolated frequencies must exceed the band edge")

    @property
    def largest(self) -> float:
        """Largest isolated frequency, 0.0 when there is none."""
        return max(self.isolated, default=0.0)

    def __bool__(self):
        return bool(self.isolated)


def _frequencies_above(params: ModelParams, threshold: float) -> np.ndarray:
    _, _, w_plus = build_com_sector(params)
    diag = np.diag(w_plus).copy()
    off = np.diag(w_plus, 1).copy()
    # Gershgorin bound for the top of the spectrum
    radius = np.abs(np.concatenate(([0.0], off))) + np.abs(np.concatenate((off, [0.0])))
    upper = float(np.max(diag + radius)) + 1.0
    if threshold**2 >= upper:
        return np.empty(0)
    eig = eigvalsh_tridiagonal(diag, off, select="v", select_range=(threshold**2, upper))
    return np.sqrt(np.sort(eig))


def find_isolated_frequencies(
    params: ModelParams, gap_tolerance: float = 1e-6, *, confirm: bool = True, persistence: float = 1e-3
) -> IsolatedFrequencyReport:
    """Search the COM + chain stiffness for frequencies above the band edge.

    With ``confirm`` the search is repeated for a chain of twice the length
    and only frequencies that reappear within ``persistence`` (relative) are
    kept, which discards finite-size states sitting at the band edge.
    """
    edge = params.cutoff
    threshold = edge * (1.0 + gap_tolerance)
    found = _frequencies_above(params, threshold)
    if confirm and found.size:
        doubled = _frequencies_above(params.replace(n_ions=2 * params.n_ions), threshold)
        found = np.array(
            [f for f in found if doubled.size and np.min(np.abs(doubled - f)) <= persistence * f]
        )
    return IsolatedFrequencyReport(
        isolated=tuple(float(f) for f in found), band_edge=edge, gap_tolerance=gap_tolerance
    )


def revival_time(params: ModelParams, convention: str = "round_trip") -> float:
    """Finite-size recurrence time: chain length over sound velocity.

    ``single_pass`` gives ``2 N / cutoff``; ``round_trip`` (the default) twice that.
    """
    if convention not in REVIVAL_CONVENTIONS:
        raise ValueError(f"convention must be one of {REVIVAL_CONVENTIONS}, got {convention!r}")
    single = 2.0 * params.n_ions / params.cutoff
    return single if convention == "single_pass" else 2.0 * single
