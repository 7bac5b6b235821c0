"""Two-mode Gaussian entanglement: logarithmic negativity and steady-state phases."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .states import SqueezeParams, is_physical, squeezed_defect_covariance, wrap_angle

__all__ = [
    "NegativityResult",
    "Phase",
    "PhaseLabel",
    "classify_phase",
    "delta_invariant",
    "delta_tilde",
    "delta_tilde_com",
    "det2_sum",
    "equal_squeeze_conditions",
    "logarithmic_negativity",
    "negativity_envelope",
    "nu_minus_from_invariants",
    "nsd_condition",
    "orthogonal_squeeze_condition",
    "oscillation_phase",
    "partial_transpose",
    "simon_criterion",
    "steady_state_coefficients",
    "steady_state_negativity",
    "symplectic_eigenvalues",
]

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
_FLIP = np.diag([1.0, 1.0, 1.0, -1.0])
PHASE_TOL = 1e-9


def _blocks(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (4, 4):
        raise ValueError(f"expected a 4x4 covariance matrix, got shape {sigma.shape}")
    return sigma[:2, :2], sigma[2:, 2:], sigma[:2, 2:]


def _det2(m) -> float:
    return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def delta_invariant(sigma) -> float:
    """Symplectic invariant ``det A + det B + 2 det C``."""
    a, b, c = _blocks(sigma)
    return _det2(a) + _det2(b) + 2.0 * _det2(c)


def delta_tilde(sigma) -> float:
    """Invariant of the partial transpose, ``det A + det B - 2 det C``."""
    a, b, c = _blocks(sigma)
    return _det2(a) + _det2(b) - 2.0 * _det2(c)


def delta_tilde_com(sigma_pm) -> float:
    """Partial-transpose invariant evaluated from the COM/relative covariance."""
    a, b, c = _blocks(sigma_pm)
    return delta_invariant(sigma_pm) - _det2(a - b + c.T - c)


def det2_sum(a, b, sign: float = 1.0) -> float:
    """``det(A + sign B)`` expanded into determinants of mixed rows (``sign`` is +-1)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    mixed = _det2(np.array([a[0], b[1]])) + _det2(np.array([b[0], a[1]]))
    return _det2(a) + _det2(b) + sign * mixed


def partial_transpose(sigma) -> np.ndarray:
    """Covariance after time reversal of the second mode."""
    return _FLIP @ np.asarray(sigma, dtype=float) @ _FLIP


def symplectic_eigenvalues(sigma, j=None) -> np.ndarray:
    """Symplectic eigenvalues (ascending) from the spectrum of ``i J sigma``.

    ``j`` defaults to the symplectic form of interleaved ``(x, p)`` pairs.
    """
    sigma = np.asarray(sigma, dtype=float)
    if j is None:
        j = np.kron(np.eye(sigma.shape[0] // 2), _J2)
    ev = np.abs(np.linalg.eigvals(1j * j @ sigma))
    return np.sort(ev)[::2]


@dataclass(frozen=True)
class NegativityResult:
    """Logarithmic negativity ``e_n = max(0, script_e)`` with ``script_e = -ln(2 nu_minus)``."""

    e_n: float
    script_e: float
    nu_minus: float


def nu_minus_from_invariants(delta_t, det) -> np.ndarray:
    """Smallest partially-transposed symplectic eigenvalue from ``delta_tilde`` and ``det``."""
    inner = np.maximum(np.asarray(delta_t) ** 2 - 4.0 * det, 0.0)
    return np.sqrt(0.5 * (delta_t - np.sqrt(inner)))


def logarithmic_negativity(sigma, *, check: bool = True) -> NegativityResult:
    """Logarithmic negativity of a two-mode covariance ``(X1, P1, X2, P2)``."""
    sigma = np.asarray(sigma, dtype=float)
    _blocks(sigma)
    if check and not is_physical(sigma, np.kron(np.eye(2), _J2)):
        raise ValueError("covariance matrix violates the uncertainty relation")
    nu = float(nu_minus_from_invariants(delta_tilde(sigma), np.linalg.det(sigma)))
    script_e = -math.log(2.0 * nu)
    return NegativityResult(e_n=max(0.0, script_e), script_e=script_e, nu_minus=nu)


def simon_criterion(sigma) -> bool:
    """Necessary and sufficient separability violation for two-mode Gaussian states."""
    return delta_tilde(sigma) - 4.0 * float(np.linalg.det(sigma)) - 0.25 > 0


def steady_state_coefficients(r1: float, r2: float, dphi: float, dx2: float, dp2: float):
    """Constant part, oscillation amplitude and determinant of the steady state.

    Squeezing magnitudes may carry a sign, following ``(-r, phi) == (r, phi + pi)``.
    Returns ``(delta0, delta2, det)`` so that the partial-transpose invariant
    reads ``delta0 + delta2 cos(2 t + phase)``.
    """
    c1, c2 = math.cosh(2.0 * r1), math.cosh(2.0 * r2)
    s1, s2 = math.sinh(2.0 * r1), math.sinh(2.0 * r2)
    cdp = math.cos(dphi)
    det = 0.125 * dx2 * dp2 * (1.0 + c1 * c2 - cdp * s1 * s2)
    delta0 = 0.25 * (dx2 + dp2) * (c1 + c2)
    delta2 = 0.25 * abs(dx2 - dp2) * math.sqrt(max(s1 * s1 + s2 * s2 + 2.0 * cdp * s1 * s2, 0.0))
    return delta0, delta2, det


def oscillation_phase(squeeze1: SqueezeParams, squeeze2: SqueezeParams, dx2: float, dp2: float) -> float:
    """Phase of the steady-state oscillation of the partial-transpose invariant."""
    rel = 0.5 * (squeezed_defect_covariance(squeeze1) + squeezed_defect_covariance(squeeze2))
    theta = math.atan2(2.0 * rel[0, 1], rel[0, 0] - rel[1, 1])
    phase = math.pi - theta if dx2 >= dp2 else -theta
    return wrap_angle(phase)


def steady_state_negativity(r1, r2, dphi, dx2, dp2, t, phase: float = 0.0):
    """Steady-state negativity at time ``t`` (scalar or array).

    Returns a :class:`NegativityResult` whose fields are arrays when ``t`` is one.
    """
    delta0, delta2, det = steady_state_coefficients(r1, r2, dphi, dx2, dp2)
    t_arr = np.asarray(t, dtype=float)
    nu = nu_minus_from_invariants(delta0 + delta2 * np.cos(2.0 * t_arr + phase), det)
    script_e = -np.log(2.0 * nu)
    e_n = np.maximum(script_e, 0.0)
    if t_arr.ndim == 0:
        return NegativityResult(float(e_n), float(script_e), float(nu))
    return NegativityResult(e_n, script_e, nu)


def negativity_envelope(r1, r2, dphi, dx2, dp2) -> tuple[float, float]:
    """Extremes ``(e_min, e_max)`` of the steady-state ``script_e`` over one period.

    ``nu_minus`` falls as the invariant grows, so the minimum comes from
    ``delta0 - delta2`` and the maximum from ``delta0 + delta2``.
    """
    delta0, delta2, det = steady_state_coefficients(r1, r2, dphi, dx2, dp2)
    nu = nu_minus_from_invariants(np.array([delta0 - delta2, delta0 + delta2]), det)
    e_min, e_max = -np.log(2.0 * nu)
    return float(e_min), float(e_max)


class Phase(str, Enum):
    """Steady-state entanglement phases."""

    SD = "SD"  # sudden death: never entangled
    SDR = "SDR"  # periodic death and revival
    NSD = "NSD"  # entangled at all times


@dataclass(frozen=True)
class PhaseLabel:
    label: Phase
    e_min: float
    e_max: float


def classify_phase(r1, r2, dphi, dx2, dp2, tol: float = PHASE_TOL) -> PhaseLabel:
    """Classify the steady state from its negativity envelope.

    Envelope values within ``tol`` of zero count as zero, which places
    borderline cases in ``SDR``.
    """
    e_min, e_max = negativity_envelope(r1, r2, dphi, dx2, dp2)
    if e_min > tol:
        label = Phase.NSD
    elif e_max < -tol:
        label = Phase.SD
    else:
        label = Phase.SDR
    return PhaseLabel(label, e_min, e_max)


def nsd_condition(r1, r2, dphi, dx2, dp2) -> bool:
    """Entanglement at all times, written as a condition on the invariants."""
    delta0, delta2, det = steady_state_coefficients(r1, r2, dphi, dx2, dp2)
    return delta0 - delta2 - 4.0 * det - 0.25 > 0


def equal_squeeze_conditions(r: float, dx2: float, dp2: float) -> tuple[bool, bool]:
    """Conditions for permanent entanglement with identical squeezing on both defects.

    Returns ``(position_condition, momentum_condition)``: the first reads
    ``dx2 < exp(2 r) / 2``, the second ``dp2 < exp(-2 r) / 2``. The state is
    entangled at all times iff either holds; since ``dx2 * dp2 >= 1/4`` they
    never hold together. Requires ``dx2 > dp2``.
    """
    if not dx2 > dp2:
        raise ValueError("equal-squeezing conditions assume a larger position than momentum variance")
    r = abs(r)
    return dx2 < 0.5 * math.exp(2.0 * r), dp2 < 0.5 * math.exp(-2.0 * r)


def orthogonal_squeeze_condition(r: float, dp2: float) -> bool:
    """Permanent entanglement for squeezing angles differing by ``pi``."""
    return dp2 < 0.5 / math.cosh(2.0 * r)
