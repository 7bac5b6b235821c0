"""Initial Gaussian states: squeezed defects, thermal chain, and their product."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, build_chain_potential, symplectic_form, trap_frequency_ratio

__all__ = [
    "SqueezeParams",
    "assemble_initial_covariance",
    "bare_from_shifted",
    "initial_covariance",
    "is_physical",
    "squeeze_from_covariance",
    "squeezed_defect_covariance",
    "shifted_from_bare",
    "thermal_chain_covariance",
    "uncertainty_eigenvalues",
]


def wrap_angle(phi: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.pi - math.fmod(math.pi - phi, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class SqueezeParams:
    """Single-mode squeezing ``s = r exp(i phi)``.

    A negative ``r`` is accepted and normalised through the identity
    ``(-r, phi) == (r, phi + pi)``; ``phi`` is always stored in (-pi, pi].
    """

    r: float
    phi: float = 0.0

    def __post_init__(self):
        r, phi = float(self.r), float(self.phi)
        if not (math.isfinite(r) and math.isfinite(phi)):
            raise ValueError("squeezing parameters must be finite")
        if r < 0:
            r, phi = -r, phi + math.pi
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phi", wrap_angle(phi))


def squeezed_defect_covariance(s: SqueezeParams) -> np.ndarray:
    """Covariance matrix of a squeezed vacuum in the shifted-frequency frame."""
    e_minus, e_plus = math.exp(-2.0 * s.r), math.exp(2.0 * s.r)
    c2, s2 = math.cos(0.5 * s.phi) ** 2, math.sin(0.5 * s.phi) ** 2
    off = -0.5 * math.sinh(2.0 * s.r) * math.sin(s.phi)
    return np.array(
        [
            [0.5 * (e_minus * c2 + e_plus * s2), off],
            [off, 0.5 * (e_minus * s2 + e_plus * c2)],
        ]
    )


def squeeze_from_covariance(sigma) -> SqueezeParams:
    """Read the squeezing parameters back off a pure single-mode covariance matrix."""
    sigma = np.asarray(sigma, dtype=float)
    trace = sigma[0, 0] + sigma[1, 1]
    r = 0.5 * math.acosh(max(trace, 1.0))
    phi = math.atan2(-2.0 * sigma[0, 1], sigma[1, 1] - sigma[0, 0]) if r > 0 else 0.0
    return SqueezeParams(r, phi)


def _half_angle(num: float, den: float) -> float:
    if den == 0.0:
        return math.copysign(math.pi, num)
    return 2.0 * math.atan(num / den)


def _rescale_squeezing(r: float, phi: float, scale: float, sign: float) -> SqueezeParams:
    """Squeezing of the state obtained by the frequency rescaling ``scale``.

    ``scale`` is the frequency ratio between the source and the target frame
    in the form entering the auxiliary functions; ``sign`` is the overall sign
    of the angle formula (``+1`` towards the bare frame, ``-1`` towards the
    shifted one).
    """
    log_half = 0.5 * math.log(scale)
    if r == 0.0 or phi == 0.0:
        return SqueezeParams(r - log_half, 0.0)
    if abs(phi) == math.pi:
        return SqueezeParams(r + log_half, math.pi)
    inv = 1.0 / scale
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    r_plus = 0.5 * (inv + scale) * ch + 0.5 * (inv - scale) * sh * math.cos(phi)
    r_minus = 0.5 * (inv - scale) * ch + 0.5 * (inv + scale) * sh * math.cos(phi)
    root = math.sqrt(max(r_plus * r_plus - 1.0, 0.0))
    s = sign * sh * math.sin(phi)
    num, den = root - r_minus, root + r_minus
    # num * den == s**2 exactly; recover the cancelling factor from the other one
    if abs(num) < abs(den):
        num = s * s / den
    elif den != 0.0:
        den = s * s / num
    angle = sign * _half_angle(num + s, den + s)
    return SqueezeParams(0.5 * math.acosh(max(r_plus, 1.0)), angle)


def _check_ratio(omega_ratio: float) -> float:
    omega_ratio = float(omega_ratio)
    if not omega_ratio > 0:
        raise ValueError(f"frequency ratio must be positive, got {omega_ratio}")
    return omega_ratio


def bare_from_shifted(s: SqueezeParams, omega_ratio: float) -> SqueezeParams:
    """Bare-frame squeezing ``(r, phi)`` describing the same state as shifted-frame ``s``.

    ``omega_ratio`` is the bare trap frequency over the shifted one. For
    ``omega_ratio > 1`` the roles of the two frames are exchanged, which the
    shared implementation handles through the sign of ``log(omega_ratio)``.
    """
    omega_ratio = _check_ratio(omega_ratio)
    if omega_ratio == 1.0:
        return SqueezeParams(s.r, s.phi)
    return _rescale_squeezing(s.r, s.phi, omega_ratio, +1.0)


def shifted_from_bare(s: SqueezeParams, omega_ratio: float) -> SqueezeParams:
    """Shifted-frame squeezing describing the same state as bare-frame ``s``."""
    omega_ratio = _check_ratio(omega_ratio)
    if omega_ratio == 1.0:
        return SqueezeParams(s.r, s.phi)
    return _rescale_squeezing(s.r, s.phi, 1.0 / omega_ratio, -1.0)


def thermal_chain_covariance(v, mass_ratio: float, temperature: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum blocks of the thermal chain state.

    ``temperature == 0`` gives the ground state (``coth -> 1`` exactly). The
    position-momentum block vanishes and is not returned.
    """
    v = np.asarray(v, dtype=float)
    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    eigvals, vecs = np.linalg.eigh(v)
    if eigvals[0] <= 0:
        raise ValueError(f"potential matrix is not positive definite (min eigenvalue {eigvals[0]:.3e})")
    stiff = np.sqrt(mass_ratio * eigvals)
    occupation = 1.0 if temperature == 0 else 1.0 / np.tanh(np.sqrt(eigvals / mass_ratio) / (2.0 * temperature))
    sxx = (vecs * (0.5 * occupation / stiff)) @ vecs.T
    spp = (vecs * (0.5 * occupation * stiff)) @ vecs.T
    return 0.5 * (sxx + sxx.T), 0.5 * (spp + spp.T)


def assemble_initial_covariance(sigma1, sigma2, sigma_xx, sigma_pp) -> np.ndarray:
    """Block-diagonal covariance of the uncorrelated defects and chain."""
    sigma1, sigma2 = np.asarray(sigma1, dtype=float), np.asarray(sigma2, dtype=float)
    sigma_xx, sigma_pp = np.asarray(sigma_xx, dtype=float), np.asarray(sigma_pp, dtype=float)
    if sigma1.shape != (2, 2) or sigma2.shape != (2, 2):
        raise ValueError("defect covariances must be 2x2")
    n = sigma_xx.shape[0]
    if sigma_xx.shape != (n, n) or sigma_pp.shape != (n, n):
        raise ValueError("chain covariance blocks must be square and of equal size")
    cov = np.zeros((2 * n + 4, 2 * n + 4))
    cov[0:2, 0:2] = sigma1
    cov[2:4, 2:4] = sigma2
    cov[4:4 + n, 4:4 + n] = sigma_xx
    cov[4 + n:, 4 + n:] = sigma_pp
    return cov


def initial_covariance(
    params: ModelParams, temperature: float, squeeze1: SqueezeParams, squeeze2: SqueezeParams
) -> np.ndarray:
    """Full initial covariance for shifted-frame squeezing and a thermal chain.

    The chain is thermal with respect to its uncoupled potential; the coupling
    is switched on at ``t = 0``.
    """
    sxx, spp = thermal_chain_covariance(build_chain_potential(params), params.mass_ratio, temperature)
    return assemble_initial_covariance(
        squeezed_defect_covariance(squeeze1), squeezed_defect_covariance(squeeze2), sxx, spp
    )


def uncertainty_eigenvalues(cov, j=None) -> np.ndarray:
    """Eigenvalues of ``cov + i/2 J``; all are non-negative for a physical state."""
    cov = np.asarray(cov, dtype=float)
    if j is None:
        j = symplectic_form((cov.shape[0] - 4) // 2) if cov.shape[0] > 4 else _two_mode_form(cov.shape[0])
    return np.linalg.eigvalsh(cov + 0.5j * np.asarray(j))


def _two_mode_form(dim: int) -> np.ndarray:
    return np.kron(np.eye(dim // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_physical(cov, j=None, tol: float = 1e-10) -> bool:
    """Whether ``cov`` is symmetric and satisfies the Robertson-Schroedinger relation."""
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=0.0, atol=tol * max(1.0, np.abs(cov).max())):
        return False
    return bool(uncertainty_eigenvalues(cov, j).min() >= -tol)


def default_ground_squeeze(params: ModelParams) -> SqueezeParams:
    """Shifted-frame squeezing of the bare-trap ground state."""
    return shifted_from_bare(SqueezeParams(0.0, 0.0), trap_frequency_ratio(params.gamma))
