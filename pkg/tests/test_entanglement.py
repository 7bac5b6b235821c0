import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainbath.dynamics import com_relative_transform, relative_free_evolution
from chainbath.entanglement import (
    Phase,
    classify_phase,
    delta_tilde,
    delta_tilde_com,
    det2_sum,
    equal_squeeze_conditions,
    logarithmic_negativity,
    negativity_envelope,
    nsd_condition,
    orthogonal_squeeze_condition,
    oscillation_phase,
    partial_transpose,
    simon_criterion,
    steady_state_coefficients,
    steady_state_negativity,
    symplectic_eigenvalues,
)
from chainbath.states import SqueezeParams, squeezed_defect_covariance

radius = st.floats(0.0, 1.5)
angle = st.floats(-math.pi, math.pi)
variance = st.floats(0.5, 3.0)


def _random_state(rng, dim=4):
    """Random physical covariance: a symplectic map applied to a thermal state."""
    j = np.kron(np.eye(dim // 2), [[0.0, 1.0], [-1.0, 0.0]])
    s = np.eye(dim)
    # product of exponentials of Hamiltonian generators is symplectic
    for _ in range(3):
        h = rng.normal(size=(dim, dim))
        h = 0.3 * (h + h.T)
        w, v = np.linalg.eig(j @ h)
        s = s @ np.real(v @ np.diag(np.exp(w)) @ np.linalg.inv(v))
    nu = 0.5 + rng.exponential(0.3, size=dim // 2)
    return s @ np.diag(np.repeat(nu, 2)) @ s.T


def _steady_state(s1, s2, dx2, dp2, t):
    rel = 0.5 * (squeezed_defect_covariance(s1) + squeezed_defect_covariance(s2))
    pm = np.zeros((4, 4))
    pm[0, 0], pm[1, 1] = dx2, dp2
    pm[2:, 2:] = relative_free_evolution(rel, t)
    return com_relative_transform(pm), pm


def test_two_mode_squeezed_vacuum():
    r = 0.7
    c, s = 0.5 * math.cosh(2 * r), 0.5 * math.sinh(2 * r)
    sigma = np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])
    result = logarithmic_negativity(sigma)
    assert result.e_n == pytest.approx(2 * r, rel=1e-12)
    assert result.nu_minus == pytest.approx(0.5 * math.exp(-2 * r), rel=1e-12)


def test_product_vacuum_not_entangled():
    result = logarithmic_negativity(0.5 * np.eye(4))
    assert result.e_n == 0.0 and result.script_e == pytest.approx(0.0, abs=1e-15)
    assert not simon_criterion(0.5 * np.eye(4) + 0.01 * np.eye(4))


def test_unphysical_state_rejected():
    with pytest.raises(ValueError):
        logarithmic_negativity(0.1 * np.eye(4))
    with pytest.raises(ValueError):
        logarithmic_negativity(np.eye(3))


def test_closed_form_matches_brute_force_eigenvalues():
    rng = np.random.default_rng(11)
    for _ in range(300):
        sigma = _random_state(rng)
        result = logarithmic_negativity(sigma)
        nu = symplectic_eigenvalues(partial_transpose(sigma))[0]
        assert result.nu_minus == pytest.approx(nu, rel=1e-8, abs=1e-12)
        assert simon_criterion(sigma) == (result.e_n > 0)


def test_partial_transpose_invariant_from_com_coordinates():
    rng = np.random.default_rng(5)
    for _ in range(200):
        sigma = _random_state(rng)
        assert delta_tilde_com(com_relative_transform(sigma)) == pytest.approx(delta_tilde(sigma), rel=1e-11)


def test_det2_sum_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.normal(size=(2, 2, 2))
        for sign in (1.0, -1.0):
            worst = max(worst, abs(det2_sum(a, b, sign) - np.linalg.det(a + sign * b)))
    assert worst < 1e-12


@settings(max_examples=150, deadline=None)
@given(radius, angle, radius, angle, variance, variance, st.floats(0.0, 10.0))
def test_steady_state_closed_form_matches_covariance(r1, p1, r2, p2, dx2, dp2, t):
    s1, s2 = SqueezeParams(r1, p1), SqueezeParams(r2, p2)
    sigma, _ = _steady_state(s1, s2, dx2, dp2, t)
    phase = oscillation_phase(s1, s2, dx2, dp2)
    closed = steady_state_negativity(s1.r, s2.r, s1.phi - s2.phi, dx2, dp2, t, phase=phase)
    direct = logarithmic_negativity(sigma)
    # near-degenerate symplectic eigenvalues turn rounding in det into sqrt(eps) errors
    assert closed.script_e == pytest.approx(direct.script_e, abs=1e-7)
    _, _, det = steady_state_coefficients(s1.r, s2.r, s1.phi - s2.phi, dx2, dp2)
    assert det == pytest.approx(np.linalg.det(sigma), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(radius, angle, radius, angle, variance, variance)
def test_envelope_bounds_the_oscillation(r1, p1, r2, p2, dx2, dp2):
    s1, s2 = SqueezeParams(r1, p1), SqueezeParams(r2, p2)
    e_min, e_max = negativity_envelope(s1.r, s2.r, s1.phi - s2.phi, dx2, dp2)
    assert e_min <= e_max + 1e-15
    t = np.linspace(0.0, math.pi, 401)
    series = steady_state_negativity(s1.r, s2.r, s1.phi - s2.phi, dx2, dp2, t).script_e
    assert series.min() >= e_min - 1e-12 and series.max() <= e_max + 1e-12
    assert series.min() == pytest.approx(e_min, abs=1e-4)
    assert series.max() == pytest.approx(e_max, abs=1e-4)
    if abs(e_min) > 1e-9:
        assert nsd_condition(s1.r, s2.r, s1.phi - s2.phi, dx2, dp2) == (e_min > 0)


def test_signed_radius_gives_same_coefficients():
    a = steady_state_coefficients(-0.3, -0.2, 0.4, 0.6, 0.5)
    b = steady_state_coefficients(0.3, 0.2, 0.4, 0.6, 0.5)
    c = steady_state_coefficients(-0.3, 0.2, 0.4 + math.pi, 0.6, 0.5)
    np.testing.assert_allclose(a, b, rtol=1e-14)
    np.testing.assert_allclose(c, b, rtol=1e-14)


def test_phase_labels():
    # plateau variances of the reference chain at three temperatures
    assert classify_phase(0.0263, 0.0263, 0.0, 0.5030646, 0.4987502).label is Phase.NSD
    assert classify_phase(0.0263, 0.0263, 0.0, 0.53005, 0.52449).label is Phase.SDR
    assert classify_phase(0.0263, 0.0263, 0.0, 0.55646, 0.55017).label is Phase.SD
    # a vanishing envelope counts as the boundary phase
    assert classify_phase(0.0, 0.0, 0.0, 0.5, 0.5).label is Phase.SDR


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.5, 20.0), st.floats(0.01, 2.0))
def test_equal_squeezing_decomposition(r, dx2, dp2):
    if not (dx2 > dp2 and dx2 * dp2 >= 0.25):
        return
    cond_dfs, cond_bath = equal_squeeze_conditions(r, dx2, dp2)
    label = classify_phase(r, r, 0.0, dx2, dp2, tol=0.0)
    e_min, _ = negativity_envelope(r, r, 0.0, dx2, dp2)
    if abs(e_min) > 1e-9:
        assert (cond_dfs or cond_bath) == (label.label is Phase.NSD)
    assert not (cond_dfs and cond_bath)


def test_equal_squeezing_examples():
    assert equal_squeeze_conditions(1e-9, 0.5031, 0.4988)[1]
    assert equal_squeeze_conditions(2.0, 10.0, 0.1)[0]
    assert equal_squeeze_conditions(-2.0, 10.0, 0.1)[0]
    with pytest.raises(ValueError):
        equal_squeeze_conditions(0.1, 0.4, 0.5)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 2.0), variance, st.floats(0.01, 2.0))
def test_orthogonal_squeezing_condition(r, dx2, dp2):
    e_min, _ = negativity_envelope(r, r, math.pi, dx2, dp2)
    if abs(e_min) > 1e-9:
        assert orthogonal_squeeze_condition(r, dp2) == (e_min > 0)


def test_orthogonal_squeezing_examples():
    assert orthogonal_squeeze_condition(0.0, 0.4988)
    assert orthogonal_squeeze_condition(0.0, 0.4988) == equal_squeeze_conditions(0.0, 0.5031, 0.4988)[1]
    assert not orthogonal_squeeze_condition(5.0, 0.01)
