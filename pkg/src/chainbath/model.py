"""Dimensionless model of two defect oscillators coupled to the edge of a harmonic chain.

Units: the defect mass sets the mass unit, the shifted trap frequency
``Omega_gamma = sqrt(Omega**2 + gamma/M)`` the frequency unit and
``M * Omega_gamma**2`` the stiffness unit.

Phase-space ordering used everywhere in the package::

    (X1, P1, X2, P2, x_1, ..., x_N, p_1, ..., p_N)

i.e. the two defects as interleaved (position, momentum) pairs followed by
all chain positions and then all chain momenta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "FullSystem",
    "RescaledParameters",
    "build_chain_potential",
    "build_shifted_potential",
    "build_com_sector",
    "build_full_system",
    "build_position_stiffness",
    "coupling_vector",
    "rescale_parameters",
    "symplectic_form",
    "trap_frequency_ratio",
]


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of chain and defects.

    Parameters
    ----------
    n_ions : int
        Number of chain ions ``N`` (at least 2).
    mass_ratio : float
        Chain-ion mass over defect mass.
    kappa : float
        Nearest-neighbour spring constant of the chain.
    gamma : float
        Defect-chain coupling, restricted to ``0 <= gamma < 1``.
    omega_b : float, optional
        Pinning frequency of the two edge ions. Defaults to
        ``sqrt(kappa / mass_ratio)``, which makes the uncoupled chain
        spectrum exactly sinusoidal.
    """

    n_ions: int
    mass_ratio: float
    kappa: float
    gamma: float
    omega_b: float | None = None

    def __post_init__(self):
        if isinstance(self.n_ions, bool) or int(self.n_ions) != self.n_ions:
            raise ValueError(f"n_ions must be an integer, got {self.n_ions!r}")
        object.__setattr__(self, "n_ions", int(self.n_ions))
        if self.n_ions < 2:
            raise ValueError(f"n_ions must be >= 2, got {self.n_ions}")
        for name in ("mass_ratio", "kappa"):
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
            object.__setattr__(self, name, value)
        gamma = float(self.gamma)
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
        object.__setattr__(self, "gamma", gamma)
        if self.omega_b is None:
            object.__setattr__(self, "omega_b", math.sqrt(self.kappa / self.mass_ratio))
        else:
            omega_b = float(self.omega_b)
            if not (omega_b > 0 and math.isfinite(omega_b)):
                raise ValueError(f"omega_b must be positive and finite, got {omega_b}")
            object.__setattr__(self, "omega_b", omega_b)

    @property
    def cutoff(self) -> float:
        """High-frequency band edge ``sqrt(4 kappa / mass_ratio)``."""
        return math.sqrt(4.0 * self.kappa / self.mass_ratio)

    def replace(self, **changes) -> "ModelParams":
        """Return a copy with some fields changed.

        ``omega_b`` is re-derived from the new ``kappa``/``mass_ratio`` unless
        it is given explicitly or was set away from its default.
        """
        values = {
            "n_ions": self.n_ions,
            "mass_ratio": self.mass_ratio,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "omega_b": None if self.has_default_omega_b else self.omega_b,
        }
        values.update(changes)
        return ModelParams(**values)

    @property
    def has_default_omega_b(self) -> bool:
        return math.isclose(
            self.omega_b, math.sqrt(self.kappa / self.mass_ratio), rel_tol=1e-12
        )


@dataclass(frozen=True)
class RescaledParameters:
    """Result of :func:`rescale_parameters`."""

    params: ModelParams
    omega_gamma: float
    omega_ratio: float  # bare trap frequency over shifted trap frequency


def rescale_parameters(
    *, M: float, m: float, Omega: float, kappa: float, gamma: float, omega_b: float | None = None,
    n_ions: int,
) -> RescaledParameters:
    """Convert physical parameters into the dimensionless set.

    ``omega_b`` defaults to ``sqrt(kappa/m)``, the physical counterpart of the
    dimensionless default.
    """
    if not M > 0:
        raise ValueError(f"defect mass M must be positive, got {M}")
    if not Omega > 0:
        raise ValueError(f"trap frequency Omega must be positive, got {Omega}")
    if not m > 0 or not kappa > 0:
        raise ValueError("m and kappa must be positive")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    omega_gamma = math.sqrt(Omega**2 + gamma / M)
    energy = M * omega_gamma**2
    if omega_b is None:
        omega_b = math.sqrt(kappa / m)
    params = ModelParams(
        n_ions=n_ions,
        mass_ratio=m / M,
        kappa=kappa / energy,
        gamma=gamma / energy,
        omega_b=omega_b / omega_gamma,
    )
    return RescaledParameters(params=params, omega_gamma=omega_gamma, omega_ratio=Omega / omega_gamma)


def trap_frequency_ratio(gamma: float) -> float:
    """Bare over shifted trap frequency, ``sqrt(1 - gamma)`` in reduced units."""
    return math.sqrt(1.0 - gamma)


def build_chain_potential(params: ModelParams) -> np.ndarray:
    """Tridiagonal potential matrix of the pinned chain (without the coupling shift)."""
    n = params.n_ions
    k = params.kappa
    v = np.zeros((n, n))
    idx = np.arange(n)
    v[idx, idx] = 2.0 * k
    v[idx[:-1], idx[1:]] = -k
    v[idx[1:], idx[:-1]] = -k
    corner = params.mass_ratio * params.omega_b**2 + k
    v[0, 0] = corner
    v[-1, -1] = corner
    return v


def build_shifted_potential(params: ModelParams) -> np.ndarray:
    """Chain potential including the ``2 gamma`` shift on the first ion."""
    v = build_chain_potential(params)
    v[0, 0] += 2.0 * params.gamma
    return v


def coupling_vector(params: ModelParams) -> np.ndarray:
    """Coupling of the centre-of-mass coordinate to the chain, ``(sqrt(2) gamma, 0, ..., 0)``."""
    g = np.zeros(params.n_ions)
    g[0] = math.sqrt(2.0) * params.gamma
    return g


def build_com_sector(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kinetic, potential and mass-weighted stiffness matrices of the COM + chain sector.

    Returns ``(t_plus, v_plus, w_plus)`` with ``w_plus = t_plus^1/2 v_plus t_plus^1/2``.
    """
    n = params.n_ions
    t_diag = np.concatenate(([1.0], np.full(n, 1.0 / params.mass_ratio)))
    t_plus = np.diag(t_diag)
    v_plus = np.zeros((n + 1, n + 1))
    v_plus[0, 0] = 1.0
    g = coupling_vector(params)
    v_plus[0, 1:] = -g
    v_plus[1:, 0] = -g
    v_plus[1:, 1:] = build_shifted_potential(params)
    s = np.sqrt(t_diag)
    w_plus = (s[:, None] * s[None, :]) * v_plus
    return t_plus, v_plus, w_plus


def build_position_stiffness(params: ModelParams) -> np.ndarray:
    """Stiffness matrix over positions ``(X1, X2, x_1, ..., x_N)``."""
    n = params.n_ions
    v = np.zeros((n + 2, n + 2))
    v[0, 0] = v[1, 1] = 1.0
    v[2:, 2:] = build_shifted_potential(params)
    v[0, 2] = v[2, 0] = -params.gamma
    v[1, 2] = v[2, 1] = -params.gamma
    return v


def _phase_space_indices(n_ions: int) -> tuple[np.ndarray, np.ndarray]:
    pos = np.concatenate(([0, 2], 4 + np.arange(n_ions)))
    mom = np.concatenate(([1, 3], 4 + n_ions + np.arange(n_ions)))
    return pos, mom


def symplectic_form(n_ions: int) -> np.ndarray:
    """Symplectic form for the package's phase-space ordering."""
    dim = 2 * n_ions + 4
    j = np.zeros((dim, dim))
    pos, mom = _phase_space_indices(n_ions)
    j[pos, mom] = 1.0
    j[mom, pos] = -1.0
    return j


@dataclass(frozen=True)
class FullSystem:
    """Quadratic Hamiltonian ``H = 1/2 zeta^T h_matrix zeta`` of defects and chain."""

    params: ModelParams
    h_matrix: np.ndarray = field(repr=False)
    j_matrix: np.ndarray = field(repr=False)
    position_index: np.ndarray = field(repr=False)
    momentum_index: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.h_matrix.shape[0]

    @property
    def stiffness(self) -> np.ndarray:
        """Position block of ``h_matrix``."""
        return self.h_matrix[np.ix_(self.position_index, self.position_index)]

    @property
    def inverse_masses(self) -> np.ndarray:
        """Diagonal of the momentum block of ``h_matrix``."""
        return np.diag(self.h_matrix)[self.momentum_index]


def build_full_system(params: ModelParams) -> FullSystem:
    """Assemble the Hamiltonian and symplectic matrices of the full system."""
    n = params.n_ions
    dim = 2 * n + 4
    pos, mom = _phase_space_indices(n)
    h = np.zeros((dim, dim))
    h[np.ix_(pos, pos)] = build_position_stiffness(params)
    inv_mass = np.concatenate(([1.0, 1.0], np.full(n, 1.0 / params.mass_ratio)))
    h[mom, mom] = inv_mass
    for arr in (h, pos, mom):
        arr.setflags(write=False)
    j = symplectic_form(n)
    j.setflags(write=False)
    return FullSystem(params=params, h_matrix=h, j_matrix=j, position_index=pos, momentum_index=mom)
