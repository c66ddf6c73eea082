"""Compressible-flow kernel checks: fluxes, Jacobians, eigensystems.

Jacobians are verified against central finite differences of the flux;
eigensystems against the defining identities L R = I and L A R = diag.
Random states are drawn with positive density and pressure.
"""

import numpy as np
import pytest

from dgdetect import euler
from dgdetect.errors import NonphysicalStateError

GAMMA = euler.GAMMA


def _random_states(rng, n, dim):
    rho = rng.uniform(0.1, 5.0, size=n)
    vel = rng.uniform(-3.0, 3.0, size=(n, dim))
    p = rng.uniform(0.05, 8.0, size=n)
    prim = np.concatenate([rho[:, None], vel, p[:, None]], axis=1)
    return euler.conservative_from_primitive(prim)


def _random_normals(rng, n, dim):
    if dim == 1:
        return np.where(rng.random((n, 1)) < 0.5, -1.0, 1.0)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([np.cos(theta), np.sin(theta)])


@pytest.mark.parametrize("dim", [1, 2])
def test_primitive_round_trip(dim):
    rng = np.random.default_rng(2)
    q = _random_states(rng, 50, dim)
    prim = euler.primitive_from_conservative(q)
    back = euler.conservative_from_primitive(prim)
    assert np.max(np.abs(back - q)) < 1e-12


def test_pressure_hand_value():
    # rho=1, u=2, p=3: E = p/(gamma-1) + rho u^2 / 2
    e = 3.0 / (GAMMA - 1.0) + 0.5 * 1.0 * 4.0
    q = np.array([1.0, 2.0, e])
    assert abs(euler.pressure(q) - 3.0) < 1e-14


def test_physical_flux_hand_value_1d():
    rho, u, p = 2.0, 0.5, 1.5
    e = p / (GAMMA - 1.0) + 0.5 * rho * u * u
    q = np.array([rho, rho * u, e])
    f = euler.physical_flux(q, axis=0)
    expect = np.array([rho * u, rho * u * u + p, u * (e + p)])
    assert np.max(np.abs(f - expect)) < 1e-13


@pytest.mark.parametrize("dim", [1, 2])
def test_directional_flux_is_normal_combination(dim):
    rng = np.random.default_rng(7)
    q = _random_states(rng, 20, dim)
    n = _random_normals(rng, 20, dim)
    f = euler.directional_flux(q, n)
    expect = n[:, 0:1] * euler.physical_flux(q, axis=0)
    if dim == 2:
        expect = expect + n[:, 1:2] * euler.physical_flux(q, axis=1)
    assert np.max(np.abs(f - expect)) < 1e-12


@pytest.mark.parametrize("dim", [1, 2])
def test_flux_jacobian_matches_finite_difference(dim):
    rng = np.random.default_rng(13)
    q = _random_states(rng, 15, dim)
    n = _random_normals(rng, 15, dim)
    a = euler.flux_jacobian(q, n)
    nv = dim + 2
    eps = 1e-6
    for j in range(nv):
        dq = np.zeros(nv)
        dq[j] = eps
        fd = (euler.directional_flux(q + dq, n)
              - euler.directional_flux(q - dq, n)) / (2 * eps)
        assert np.max(np.abs(a[:, :, j] - fd)) < 2e-5


@pytest.mark.parametrize("dim", [1, 2])
def test_eigensystem_inverse_and_diagonalization(dim):
    rng = np.random.default_rng(19)
    q = _random_states(rng, 25, dim)
    n = _random_normals(rng, 25, dim)
    left, right = euler.eigensystem(q, n)
    nv = dim + 2
    ident = np.eye(nv)
    assert np.max(np.abs(left @ right - ident)) < 1e-10
    a = euler.flux_jacobian(q, n)
    lam = left @ a @ right
    off = lam - np.eye(nv) * lam[..., np.arange(nv), np.arange(nv)][..., None]
    assert np.max(np.abs(off)) < 1e-9
    # eigenvalue set is {un - c, un (x dim), un + c}
    prim = euler.primitive_from_conservative(q)
    vel = prim[:, 1:1 + dim]
    un = np.sum(vel * n, axis=1)
    c = euler.sound_speed(q)
    diag = lam[..., np.arange(nv), np.arange(nv)]
    expect = np.sort(np.column_stack(
        [un - c] + [un] * dim + [un + c]), axis=1)
    assert np.max(np.abs(np.sort(diag, axis=1) - expect)) < 1e-9


def test_max_wave_speed_formula():
    rng = np.random.default_rng(29)
    for dim in (1, 2):
        q = _random_states(rng, 10, dim)
        prim = euler.primitive_from_conservative(q)
        speed = np.linalg.norm(prim[:, 1:1 + dim], axis=1)
        expect = speed + np.sqrt(GAMMA * prim[:, -1] / prim[:, 0])
        assert np.max(np.abs(euler.max_wave_speed(q) - expect)) < 1e-12


def test_lax_friedrichs_consistency_and_dissipation():
    rng = np.random.default_rng(31)
    q = _random_states(rng, 12, 1)
    n = np.ones((12, 1))
    # consistency: equal states reproduce the physical flux
    f = euler.lax_friedrichs_flux(q, q, n)
    assert np.max(np.abs(f - euler.directional_flux(q, n))) < 1e-12
    # two-state form: average flux minus wave-speed-scaled jump
    ql, qr = q[:6], q[6:]
    nl = np.ones((6, 1))
    got = euler.lax_friedrichs_flux(ql, qr, nl)
    s = np.maximum(euler.max_wave_speed(ql), euler.max_wave_speed(qr))
    expect = 0.5 * (euler.directional_flux(ql, nl)
                    + euler.directional_flux(qr, nl)
                    - s[:, None] * (qr - ql))
    assert np.max(np.abs(got - expect)) < 1e-12


def test_characteristic_direction_follows_velocity():
    q1 = euler.conservative_from_primitive(np.array([1.0, -2.0, 1.0]))
    assert euler.characteristic_direction(q1)[0] == -1.0
    q0 = euler.conservative_from_primitive(np.array([1.0, 0.0, 1.0]))
    assert euler.characteristic_direction(q0)[0] == 1.0  # rest defaults +x
    q2 = euler.conservative_from_primitive(np.array([1.0, 3.0, 4.0, 1.0]))
    d = euler.characteristic_direction(q2)
    assert np.max(np.abs(d - np.array([0.6, 0.8]))) < 1e-14


def test_nonphysical_states_rejected():
    bad_rho = np.array([-1.0, 0.0, 2.5])
    with pytest.raises(NonphysicalStateError):
        euler.primitive_from_conservative(bad_rho)
    # kinetic energy exceeding total energy means negative pressure
    bad_p = np.array([1.0, 3.0, 1.0])
    with pytest.raises(NonphysicalStateError):
        euler.primitive_from_conservative(bad_p)
    assert euler.has_nonphysical_point(bad_p[None, :])
    good = euler.conservative_from_primitive(np.array([1.0, 0.3, 1.0]))
    assert not euler.has_nonphysical_point(good[None, :])
