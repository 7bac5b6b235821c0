"""Exact Gaussian dynamics of the defects + chain system.

The Hamiltonian is quadratic with no position-momentum cross terms, so the
symplectic propagator is built from one eigendecomposition of the
mass-weighted stiffness ``W = T^1/2 V T^1/2``::

    q(t) = T^1/2 [cos(Wt) T^-1/2 q0 + sin(Wt) W^-1/2 T^1/2 p0]
    p(t) = T^-1/2 [-W^1/2 sin(Wt) T^-1/2 q0 + cos(Wt) T^1/2 p0]

where the trigonometric functions act on the frequencies ``sqrt(eig W)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .exceptions import NumericalError
from .model import FullSystem, ModelParams, build_com_sector, build_full_system
from .spectral import revival_time
from .states import SqueezeParams, initial_covariance

__all__ = [
    "DefectTrajectory",
    "NormalModeDecomposition",
    "Plateau",
    "SymplecticPropagator",
    "VarianceSeries",
    "com_relative_transform",
    "com_variance_series",
    "defect_covariance",
    "dense_exponential_oracle",
    "evolve_covariance",
    "measure_plateau",
    "normal_mode_decomposition",
    "plateau_breakdown_time",
    "propagator",
    "relative_free_evolution",
    "simulate_defects",
    "thermal_steady_estimate",
    "thermalization_time",
]

DEFECT_INDEX = np.arange(4)
_CHUNK = 128


@dataclass(frozen=True)
class SymplecticPropagator:
    """Linear map ``zeta(t) = matrix @ zeta(0)`` in the package's phase-space ordering."""

    matrix: np.ndarray = field(repr=False)
    time: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def symplecticity_defect(self, j) -> float:
        """Largest entry of ``S J S^T - J``."""
        s = self.matrix
        return float(np.abs(s @ j @ s.T - j).max())


class NormalModeDecomposition:
    """Eigendecomposition of the mass-weighted stiffness of a :class:`FullSystem`."""

    def __init__(self, system: FullSystem):
        h = system.h_matrix
        pos, mom = system.position_index, system.momentum_index
        if np.any(h[np.ix_(pos, mom)] != 0):
            raise ValueError("spectral synthesis needs a Hamiltonian without position-momentum terms")
        inv_mass = system.inverse_masses
        if np.any(inv_mass <= 0):
            raise ValueError("inverse masses must be positive")
        root = np.sqrt(inv_mass)
        w = (root[:, None] * root[None, :]) * system.stiffness
        try:
            eigvals, modes = np.linalg.eigh(w)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed (condition number {np.linalg.cond(w):.3e})") from exc
        if eigvals[0] <= 0:
            raise NumericalError(
                f"stiffness is not positive definite: smallest eigenvalue {eigvals[0]:.3e}, "
                f"condition number {abs(eigvals[-1] / eigvals[0]) if eigvals[0] else math.inf:.3e}"
            )
        self.system = system
        self.frequencies = np.sqrt(eigvals)
        self.modes = modes
        self._root = root
        # instances are shared through a cache
        for arr in (self.frequencies, self.modes, self._root):
            arr.setflags(write=False)

    @classmethod
    def from_params(cls, params: ModelParams) -> "NormalModeDecomposition":
        return cls(build_full_system(params))

    @property
    def dimension(self) -> int:
        return self.system.dimension

    def propagator(self, t: float) -> SymplecticPropagator:
        """Full ``(2N+4)``-dimensional propagator at time ``t``."""
        u, root, w = self.modes, self._root, self.frequencies
        c, s = np.cos(w * t), np.sin(w * t)
        qq = (root[:, None] * (u * c)) @ (u.T / root[None, :])
        qp = (root[:, None] * (u * (s / w))) @ (u.T * root[None, :])
        pq = ((u * (-w * s)) / root[:, None]) @ (u.T / root[None, :])
        pp = ((u * c) / root[:, None]) @ (u.T * root[None, :])
        pos, mom = self.system.position_index, self.system.momentum_index
        mat = np.empty((self.dimension, self.dimension))
        mat[np.ix_(pos, pos)] = qq
        mat[np.ix_(pos, mom)] = qp
        mat[np.ix_(mom, pos)] = pq
        mat[np.ix_(mom, mom)] = pp
        return SymplecticPropagator(matrix=mat, time=float(t))

    def mode_covariance(self, cov0) -> np.ndarray:
        """Covariance of the mode amplitudes ``(U^T T^-1/2 q, U^T T^1/2 p)``."""
        cov0 = np.asarray(cov0, dtype=float)
        if cov0.shape != (self.dimension, self.dimension):
            raise ValueError(f"covariance must be {self.dimension}x{self.dimension}, got {cov0.shape}")
        pos, mom = self.system.position_index, self.system.momentum_index
        a = self.modes.T / self._root[None, :]
        b = self.modes.T * self._root[None, :]
        n = self.frequencies.size
        z = np.empty((2 * n, 2 * n))
        z[:n, :n] = a @ cov0[np.ix_(pos, pos)] @ a.T
        z[:n, n:] = a @ cov0[np.ix_(pos, mom)] @ b.T
        z[n:, :n] = z[:n, n:].T
        z[n:, n:] = b @ cov0[np.ix_(mom, mom)] @ b.T
        return z

    def _row_factors(self, rows):
        # per requested phase-space row: (is_position, scale, modal row)
        pos_lookup = {int(p): k for k, p in enumerate(self.system.position_index)}
        mom_lookup = {int(p): k for k, p in enumerate(self.system.momentum_index)}
        is_pos, scale, modal = [], [], []
        for r in rows:
            r = int(r)
            if r in pos_lookup:
                k = pos_lookup[r]
                is_pos.append(True)
                scale.append(self._root[k])
            elif r in mom_lookup:
                k = mom_lookup[r]
                is_pos.append(False)
                scale.append(1.0 / self._root[k])
            else:
                raise ValueError(f"row {r} outside phase space of dimension {self.dimension}")
            modal.append(self.modes[k])
        return np.array(is_pos), np.array(scale), np.array(modal)

    def evolve_rows(self, cov0, times, rows=DEFECT_INDEX) -> np.ndarray:
        """Covariance restricted to ``rows`` at every time in ``times``.

        Returns an array of shape ``(len(times), len(rows), len(rows))``. Only
        the selected rows of the propagator are formed, so memory scales with
        ``len(rows)`` rather than with the full dimension.
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        z = self.mode_covariance(cov0)
        is_pos, scale, modal = self._row_factors(rows)
        w = self.frequencies
        k, n = len(is_pos), w.size
        out = np.empty((times.size, k, k))
        for start in range(0, times.size, _CHUNK):
            t = times[start:start + _CHUNK]
            c, s = np.cos(np.outer(t, w)), np.sin(np.outer(t, w))
            g = np.empty((t.size, k, 2 * n))
            a = scale[:, None] * modal
            g[:, is_pos, :n] = c[:, None, :] * a[is_pos]
            g[:, is_pos, n:] = (s / w)[:, None, :] * a[is_pos]
            g[:, ~is_pos, :n] = (-w * s)[:, None, :] * a[~is_pos]
            g[:, ~is_pos, n:] = c[:, None, :] * a[~is_pos]
            gz = g @ z
            out[start:start + t.size] = gz @ g.transpose(0, 2, 1)
        return 0.5 * (out + out.transpose(0, 2, 1))


@lru_cache(maxsize=4)
def normal_mode_decomposition(params: ModelParams) -> NormalModeDecomposition:
    """Cached :class:`NormalModeDecomposition` for ``params``."""
    return NormalModeDecomposition.from_params(params)


def propagator(system: FullSystem, t: float) -> SymplecticPropagator:
    """Propagator of ``system`` at time ``t`` by spectral synthesis."""
    return NormalModeDecomposition(system).propagator(t)


def dense_exponential_oracle(system: FullSystem, t: float, max_dimension: int = 200) -> SymplecticPropagator:
    """Propagator ``exp(J H t)`` from a dense matrix exponential, for cross-checks on small systems."""
    if system.dimension > max_dimension:
        raise ValueError(f"dense exponential limited to dimension {max_dimension}, got {system.dimension}")
    return SymplecticPropagator(matrix=expm(system.j_matrix @ system.h_matrix * t), time=float(t))


def evolve_covariance(cov0, prop: SymplecticPropagator) -> np.ndarray:
    """``S cov0 S^T``."""
    cov0 = np.asarray(cov0, dtype=float)
    if cov0.shape != (prop.dimension, prop.dimension):
        raise ValueError(f"covariance shape {cov0.shape} does not match propagator dimension {prop.dimension}")
    out = prop.matrix @ cov0 @ prop.matrix.T
    return 0.5 * (out + out.T)


def defect_covariance(cov) -> np.ndarray:
    """Leading ``4x4`` block ``(X1, P1, X2, P2)``."""
    cov = np.asarray(cov)
    return cov[..., :4, :4].copy()


_COM_REL = np.kron(np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0), np.eye(2))


def com_relative_transform(sigma) -> np.ndarray:
    """Map a two-mode covariance from ``(X1, P1, X2, P2)`` to ``(X+, P+, X-, P-)``.

    Works on a single ``4x4`` matrix or a stack of them.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[-2:] != (4, 4):
        raise ValueError("expected 4x4 covariance matrices")
    return _COM_REL.T @ sigma @ _COM_REL


def relative_free_evolution(sigma_minus0, t) -> np.ndarray:
    """Free evolution of the decoupled relative mode at unit frequency."""
    c, s = math.cos(t), math.sin(t)
    rot = np.array([[c, s], [-s, c]])
    return rot @ np.asarray(sigma_minus0, dtype=float) @ rot.T


@dataclass(frozen=True)
class VarianceSeries:
    """Time series of the COM position and momentum variances."""

    times: np.ndarray = field(repr=False)
    dx_plus_sq: np.ndarray = field(repr=False)
    dp_plus_sq: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DefectTrajectory:
    """Defect covariance ``(X1, P1, X2, P2)`` sampled at ``times``."""

    times: np.ndarray = field(repr=False)
    covariances: np.ndarray = field(repr=False)

    def com_relative(self) -> np.ndarray:
        return com_relative_transform(self.covariances)

    def variance_series(self) -> VarianceSeries:
        pm = self.com_relative()
        return VarianceSeries(self.times, pm[:, 0, 0].copy(), pm[:, 1, 1].copy())


def simulate_defects(
    params: ModelParams,
    temperature: float,
    squeeze1: SqueezeParams,
    squeeze2: SqueezeParams,
    times,
    *,
    modes: NormalModeDecomposition | None = None,
) -> DefectTrajectory:
    """Exact defect covariance for a thermal chain and squeezed defects (shifted frame)."""
    if modes is None:
        modes = normal_mode_decomposition(params)
    cov0 = initial_covariance(params, temperature, squeeze1, squeeze2)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return DefectTrajectory(times=times, covariances=modes.evolve_rows(cov0, times))


def com_variance_series(
    params: ModelParams,
    temperature: float,
    squeeze1: SqueezeParams,
    squeeze2: SqueezeParams,
    times,
    *,
    modes: NormalModeDecomposition | None = None,
) -> VarianceSeries:
    """COM variances ``<dX+^2>`` and ``<dP+^2>`` along the exact dynamics."""
    return simulate_defects(params, temperature, squeeze1, squeeze2, times, modes=modes).variance_series()


@dataclass(frozen=True)
class Plateau:
    """Quasi-steady COM variances between thermalisation and revival."""

    dx_plus_sq: float
    dp_plus_sq: float
    dx_spread: float
    dp_spread: float
    window: tuple[float, float]


def measure_plateau(series: VarianceSeries, t_rev: float, window=(0.4, 0.9)) -> Plateau:
    """Median and half-range of the variances over ``window`` (fractions of ``t_rev``)."""
    lo, hi = window
    if not 0 <= lo < hi:
        raise ValueError(f"invalid plateau window {window}")
    t0, t1 = lo * t_rev, hi * t_rev
    mask = (series.times >= t0) & (series.times <= t1)
    if mask.sum() < 2:
        raise ValueError(f"fewer than two samples inside the plateau window [{t0:g}, {t1:g}]")
    dx, dp = series.dx_plus_sq[mask], series.dp_plus_sq[mask]
    return Plateau(
        dx_plus_sq=float(np.median(dx)),
        dp_plus_sq=float(np.median(dp)),
        dx_spread=float(0.5 * np.ptp(dx)),
        dp_spread=float(0.5 * np.ptp(dp)),
        window=(t0, t1),
    )


def _relative_deviation(series: VarianceSeries, plateau: Plateau) -> np.ndarray:
    dx = np.abs(series.dx_plus_sq / plateau.dx_plus_sq - 1.0)
    dp = np.abs(series.dp_plus_sq / plateau.dp_plus_sq - 1.0)
    return np.maximum(dx, dp)


def thermalization_time(series: VarianceSeries, plateau: Plateau, rel_tol: float = 0.01) -> float | None:
    """First time after which both variances stay within ``rel_tol`` of the plateau.

    Only samples up to the end of the plateau window are considered.
    """
    keep = series.times <= plateau.window[1]
    dev = _relative_deviation(series, plateau)[keep]
    outside = np.nonzero(dev > rel_tol)[0]
    if outside.size == 0:
        return float(series.times[0])
    last = outside[-1]
    if last + 1 >= dev.size:
        return None
    return float(series.times[keep][last + 1])


def plateau_breakdown_time(
    series: VarianceSeries,
    plateau: Plateau,
    rel_threshold: float = 0.05,
    *,
    start: float | None = None,
    envelope_window: float = math.pi,
    hold: float = 10.0 * math.pi,
) -> float | None:
    """First time after ``start`` where the variances leave the plateau for good.

    The deviation envelope is the running maximum of the relative deviation
    over the preceding ``envelope_window`` (one period of the variance
    oscillation by default). Breakdown is the first sample from which the
    envelope stays above ``rel_threshold`` for at least ``hold``. Returns
    ``None`` if that never happens within the series. ``start`` defaults to
    the beginning of the plateau window.
    """
    t = series.times
    if start is None:
        start = plateau.window[0]
    dev = _relative_deviation(series, plateau)
    lo = np.searchsorted(t, t - envelope_window, side="left")
    envelope = np.array([dev[lo[i]:i + 1].max() for i in range(dev.size)])
    above = envelope > rel_threshold
    for i in np.nonzero(above & (t >= start))[0]:
        if t[-1] < t[i] + hold:
            return None
        end = np.searchsorted(t, t[i] + hold, side="right")
        if above[i:end].all():
            return float(t[i])
    return None


@lru_cache(maxsize=8)
def _com_sector_modes(params: ModelParams):
    _, _, w_plus = build_com_sector(params)
    eigvals, vecs = np.linalg.eigh(w_plus)
    if eigvals[0] <= 0:
        raise NumericalError(f"COM sector stiffness is not positive definite ({eigvals[0]:.3e})")
    return np.sqrt(eigvals), vecs[0] ** 2


def thermal_steady_estimate(params: ModelParams, temperature):
    """COM variances of the COM + chain sector in thermal equilibrium.

    Serves as the fast estimate of the plateau, since the coupled sector
    relaxes towards its own equilibrium before the revival time. Vectorised
    over ``temperature``; returns ``(dx_plus_sq, dp_plus_sq)``.
    """
    temps = np.asarray(temperature, dtype=float)
    if np.any(temps < 0):
        raise ValueError("temperature must be non-negative")
    freqs, weight = _com_sector_modes(params)
    flat = temps.reshape(-1)
    with np.errstate(divide="ignore"):
        arg = freqs[None, :] / (2.0 * flat[:, None])
    occupation = np.where(flat[:, None] > 0, 1.0 / np.tanh(arg), 1.0)
    dx = 0.5 * occupation @ (weight / freqs)
    dp = 0.5 * occupation @ (weight * freqs)
    if temps.ndim == 0:
        return float(dx[0]), float(dp[0])
    return dx.reshape(temps.shape), dp.reshape(temps.shape)


def default_times(params: ModelParams, n_samples: int = 2048, t_max: float | None = None,
                  convention: str = "round_trip") -> np.ndarray:
    """Uniform grid from 0 to ``t_max`` (1.5 revival times by default)."""
    if t_max is None:
        t_max = 1.5 * revival_time(params, convention)
    return np.linspace(0.0, t_max, n_samples)
