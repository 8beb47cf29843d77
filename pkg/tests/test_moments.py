import math

import numpy as np
import pytest
from scipy.special import eval_hermite

import gpexact as gx
from gpexact.errors import ResolutionError

from conftest import KAPPA


def hermite_gaussian(axis, n, m_omega, hbar=1.0, x0=0.0):
    """Independent n-th oscillator eigenfunction with analytic normalization."""
    xi = np.sqrt(m_omega / hbar) * (axis.points - x0)
    norm = (m_omega / (np.pi * hbar)) ** 0.25 \
        / math.sqrt(2.0 ** n * math.factorial(n))
    psi = norm * eval_hermite(n, xi) * np.exp(-xi ** 2 / 2.0)
    return gx.GridState((axis,), psi.astype(complex), 0.0, hbar)


def test_norm_gaussian(axis_2048):
    psi = gx.gaussian_packet((axis_2048,), 1.0, [0.0], [0.0], [1.0])
    assert gx.norm_squared(psi) == pytest.approx(1.0, abs=1e-12)
    doubled = psi.with_psi(2.0 * psi.psi)
    assert gx.norm_squared(doubled) == pytest.approx(4.0, abs=1e-11)


def test_norm_hermite_gaussian(axis_2048):
    psi = hermite_gaussian(axis_2048, 2, 1.0)
    assert gx.norm_squared(psi) == pytest.approx(1.0, abs=1e-10)


def test_first_moments_centered(axis_2048):
    psi = gx.gaussian_packet((axis_2048,), 1.0, [0.0], [0.0], [1.0])
    assert np.allclose(gx.first_moments(psi), [0.0, 0.0], atol=1e-10)


def test_first_moments_boost_shift(axis_2048):
    psi = gx.gaussian_packet((axis_2048,), 1.0, [1.3], [0.7], [1.0])
    z = gx.first_moments(psi)
    assert z[0] == pytest.approx(0.7, abs=1e-9)
    assert z[1] == pytest.approx(1.3, abs=1e-9)


def test_second_moments_ground_gaussian(axis_2048):
    m_omega = 1.7
    psi = gx.gaussian_packet((axis_2048,), 1.0, [0.0], [0.0], [m_omega])
    d = gx.second_moments(psi)
    assert d[1, 1] == pytest.approx(1.0 / (2.0 * m_omega), rel=1e-10)
    assert d[0, 0] == pytest.approx(m_omega / 2.0, rel=1e-10)
    assert d[0, 1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_second_moments_hermite_tower(axis_2048, n):
    m_omega = 1.0488088481701516
    psi = hermite_gaussian(axis_2048, n, m_omega)
    d = gx.second_moments(psi)
    assert d[1, 1] == pytest.approx((2 * n + 1) / (2.0 * m_omega), rel=1e-9)
    assert d[0, 0] == pytest.approx(m_omega * (2 * n + 1) / 2.0, rel=1e-9)


def test_centered_moment_invariance(axis_2048):
    base = gx.gaussian_packet((axis_2048,), 1.0, [0.0], [0.0], [0.9])
    boosted = gx.gaussian_packet((axis_2048,), 1.0, [0.0], [1.1], [0.9])
    shifted = gx.gaussian_packet((axis_2048,), 1.0, [2.0], [0.0], [0.9])
    d0 = gx.second_moments(base)
    db = gx.second_moments(boosted)
    ds = gx.second_moments(shifted)
    assert db[0, 0] == pytest.approx(d0[0, 0], rel=1e-10)
    assert ds[0, 1] == pytest.approx(d0[0, 1], abs=1e-10)
    assert ds[1, 1] == pytest.approx(d0[1, 1], rel=1e-10)


def test_global_phase_invariance(axis_1024):
    psi = gx.gaussian_packet((axis_1024,), 1.0, [0.4], [0.6], [1.2])
    rotated = psi.with_psi(np.exp(1j * 0.83) * psi.psi)
    assert np.allclose(gx.first_moments(psi), gx.first_moments(rotated),
                       rtol=0, atol=5e-15)
    assert np.allclose(gx.second_moments(psi), gx.second_moments(rotated),
                       rtol=0, atol=5e-15)


def test_normalization_convention_for_unnormalized_input(axis_1024):
    psi = gx.gaussian_packet((axis_1024,), 1.0, [0.8], [0.3], [1.0])
    scaled = psi.with_psi(3.0 * psi.psi)
    assert np.allclose(gx.first_moments(scaled), gx.first_moments(psi),
                       atol=1e-12)
    assert np.allclose(gx.second_moments(scaled), gx.second_moments(psi),
                       atol=1e-12)


def test_superposition_moments_from_combined_array(axis_2048):
    # two equal-width real Gaussians: <x> has an interference correction
    # relative to the norm-weighted average of centers
    alpha, a, b = 1.0, -1.0, 1.5
    p1 = gx.gaussian_packet((axis_2048,), 1.0, [a], [0.0], [alpha])
    p2 = gx.gaussian_packet((axis_2048,), 1.0, [b], [0.0], [alpha])
    c1, c2 = 0.6, 0.8
    comb = p1.with_psi(c1 * p1.psi + c2 * p2.psi)
    # analytic overlap of unit Gaussians: s = exp(-alpha (a-b)^2 / (4 hbar))
    s = math.exp(-alpha * (a - b) ** 2 / 4.0)
    norm_sq = c1 ** 2 + c2 ** 2 + 2 * c1 * c2 * s
    mean_x = (c1 ** 2 * a + c2 ** 2 * b
              + 2 * c1 * c2 * s * (a + b) / 2.0) / norm_sq
    z = gx.first_moments(comb)
    assert gx.norm_squared(comb) == pytest.approx(norm_sq, rel=1e-10)
    assert z[1] == pytest.approx(mean_x, rel=1e-9)
    naive = (c1 ** 2 * a + c2 ** 2 * b) / (c1 ** 2 + c2 ** 2)
    assert abs(mean_x - naive) > 1e-3  # the cross term genuinely matters


def test_uncertainty_relation_sanity(axis_1024):
    rng = np.random.default_rng(11)
    for _ in range(10):
        alpha = rng.uniform(0.5, 2.0)
        x0, p0 = rng.uniform(-1, 1), rng.uniform(-1, 1)
        c2 = rng.uniform(-0.3, 0.3)
        base = gx.gaussian_packet((axis_1024,), 1.0, [x0], [p0], [alpha])
        xi = np.sqrt(alpha) * (axis_1024.points - x0)
        psi = base.with_psi(base.psi * (1.0 + c2 * xi ** 2))
        d = gx.second_moments(psi)
        assert d[0, 0] * d[1, 1] - d[0, 1] ** 2 >= 0.25 - 1e-9


def test_constants_of_motion_bundle(model_1d, axis_2048):
    psi = gx.gaussian_packet((axis_2048,), 1.0, [1.0], [0.2], [1.0])
    cons = gx.constants_of_motion(model_1d, psi)
    assert cons.norm_sq == pytest.approx(1.0, abs=1e-12)
    assert cons.kappa_tilde == pytest.approx(KAPPA, abs=1e-12)
    assert cons.point.z[1] == pytest.approx(1.0, abs=1e-9)
    assert gx.effective_coupling(model_1d, psi) == pytest.approx(KAPPA,
                                                                 abs=1e-12)


def test_zero_state_rejected(model_1d, axis_1024):
    zero = gx.GridState((axis_1024,), np.zeros(axis_1024.num, dtype=complex),
                        0.0, 1.0)
    with pytest.raises(ResolutionError):
        gx.constants_of_motion(model_1d, zero)


def test_unresolved_state_rejected():
    axis = gx.Axis(-3.0, 3.0, 64)
    wide = gx.gaussian_packet((axis,), 1.0, [0.0], [0.0], [0.05])
    with pytest.raises(ResolutionError):
        gx.norm_squared(wide)


def test_aliasing_rejected():
    axis = gx.Axis(-12.0, 12.0, 64)
    fast = gx.gaussian_packet((axis,), 1.0, [0.0], [7.0], [1.0])
    with pytest.raises(ResolutionError):
        gx.first_moments(fast)


def test_fock_first_moments_follow_trajectory(model_1d):
    """Means of the n = 1 basis state sit on the steady orbit at any time."""
    params = model_1d.example
    x0 = params.steady_center(KAPPA)
    axis = gx.Axis(x0 - 12.0, x0 + 12.0, 2048)
    g0 = gx.constants_of_motion(
        model_1d, gx.fock_state(model_1d, 1, 0.0, axis=axis)).point
    traj = gx.integrate_moments(model_1d, KAPPA, g0, 0.0, 1.3)
    for t in (0.0, 0.6, 1.3):
        f1 = gx.fock_state(model_1d, 1, t, axis=axis)
        z = gx.first_moments(f1)
        assert np.allclose(z, traj.z(t), atol=1e-9)


def test_constants_of_ground_state(model_1d):
    params = model_1d.example
    om = params.Omega(KAPPA)
    x0 = params.steady_center(KAPPA)
    axis = gx.Axis(x0 - 12.0, x0 + 12.0, 2048)
    cons = gx.constants_of_motion(model_1d,
                                  gx.fock_state(model_1d, 0, 0.0, axis=axis))
    assert cons.point.z[0] == pytest.approx(0.0, abs=1e-10)
    assert cons.point.z[1] == pytest.approx(x0, abs=1e-10)
    assert cons.point.Delta[1, 1] == pytest.approx(1.0 / (2 * om), rel=1e-10)
    assert cons.point.Delta[0, 0] == pytest.approx(om / 2.0, rel=1e-10)
    assert cons.point.Delta[0, 1] == pytest.approx(0.0, abs=1e-11)
