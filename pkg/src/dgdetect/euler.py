"""Compressible Euler physics: state algebra, fluxes, wave structure.

Conserved layout is (rho, rho*u, E) in 1D and (rho, rho*u, rho*v, E) in 2D,
stored along the trailing axis so every routine is batched.  gamma = 1.4
throughout (calorically perfect gas).
"""

import numpy as np

from .errors import NonphysicalStateError

GAMMA = 1.4


def _check_positive(rho, p, where=""):
    bad_rho = ~(np.min(rho) > 0.0)
    bad_p = ~(np.min(p) > 0.0)
    if bad_rho or bad_p:
        quantity = "density" if bad_rho else "pressure"
        arr = rho if bad_rho else p
        idx = int(np.argmin(arr))
        raise NonphysicalStateError(
            f"nonpositive {quantity} {'at ' + where if where else ''}"
            f"(flat index {idx}, value {np.ravel(arr)[idx]:.6e})",
            element=idx)


def pressure(conserved):
    """Thermodynamic pressure from conserved variables (no positivity check)."""
    q = np.asarray(conserved)
    rho = q[..., 0]
    kinetic = 0.5 * np.sum(q[..., 1:-1] ** 2, axis=-1) / rho
    return (GAMMA - 1.0) * (q[..., -1] - kinetic)


def has_nonphysical_point(states):
    """True where any state along the second-to-last axis has rho <= 0 or p <= 0.

    states: (..., n_points, nvars); returns a bool array over the leading axes.
    Division guards against rho <= 0 so the check never raises.
    """
    q = np.asarray(states)
    rho = q[..., 0]
    kinetic = 0.5 * np.sum(q[..., 1:-1] ** 2, axis=-1) / np.where(rho > 0.0, rho, 1.0)
    p = (GAMMA - 1.0) * (q[..., -1] - kinetic)
    return np.any((rho <= 0.0) | (p <= 0.0), axis=-1)


def primitive_from_conservative(conserved, check=True):
    """(rho, u[, v], p) from conserved variables."""
    q = np.asarray(conserved, dtype=float)
    rho = q[..., 0]
    p = pressure(q)
    if check:
        _check_positive(rho, p, "conversion to primitive ")
    out = np.empty_like(q)
    out[..., 0] = rho
    out[..., 1:-1] = q[..., 1:-1] / rho[..., None]
    out[..., -1] = p
    return out


def conservative_from_primitive(primitive, check=True):
    """Conserved variables from (rho, u[, v], p)."""
    w = np.asarray(primitive, dtype=float)
    rho = w[..., 0]
    p = w[..., -1]
    if check:
        _check_positive(rho, p, "conversion from primitive ")
    out = np.empty_like(w)
    out[..., 0] = rho
    out[..., 1:-1] = rho[..., None] * w[..., 1:-1]
    out[..., -1] = p / (GAMMA - 1.0) + 0.5 * rho * np.sum(w[..., 1:-1] ** 2, axis=-1)
    return out


def sound_speed(conserved):
    q = np.asarray(conserved)
    p = pressure(q)
    return np.sqrt(GAMMA * p / q[..., 0])


def physical_flux(conserved, axis=0):
    """Flux component along coordinate `axis` (0 = x, 1 = y)."""
    q = np.asarray(conserved)
    nvars = q.shape[-1]
    vel = q[..., 1 + axis] / q[..., 0]
    p = pressure(q)
    flux = q * vel[..., None]
    flux[..., 1 + axis] += p
    flux[..., nvars - 1] += p * vel
    return flux


def directional_flux(conserved, normal):
    """F(Q) . n for a unit (or general) direction vector `normal`."""
    q = np.asarray(conserved)
    n = np.asarray(normal, dtype=float)
    dim = q.shape[-1] - 2
    out = n[..., 0, None] * physical_flux(q, axis=0)
    if dim == 2:
        out = out + n[..., 1, None] * physical_flux(q, axis=1)
    return out


def flux_jacobian(conserved, normal):
    """Jacobian of the directional flux, shape (..., nvars, nvars)."""
    q = np.asarray(conserved, dtype=float)
    dim = q.shape[-1] - 2
    n = np.asarray(normal, dtype=float)
    g = GAMMA
    rho = q[..., 0]
    p = pressure(q)
    enthalpy = (q[..., -1] + p) / rho
    if dim == 1:
        u = q[..., 1] / rho
        nx = n[..., 0] if n.ndim else n
        un = u * nx
        shape = q.shape[:-1] + (3, 3)
        a = np.zeros(shape)
        a[..., 0, 1] = nx
        a[..., 1, 0] = 0.5 * (g - 3.0) * u * u * nx
        a[..., 1, 1] = (3.0 - g) * un
        a[..., 1, 2] = (g - 1.0) * nx
        a[..., 2, 0] = un * (0.5 * (g - 1.0) * u * u - enthalpy)
        a[..., 2, 1] = (enthalpy - (g - 1.0) * u * u) * nx
        a[..., 2, 2] = g * un
        return a
    u = q[..., 1] / rho
    v = q[..., 2] / rho
    nx, ny = n[..., 0], n[..., 1]
    un = u * nx + v * ny
    ek = 0.5 * (u * u + v * v)
    shape = q.shape[:-1] + (4, 4)
    a = np.zeros(shape)
    a[..., 0, 1] = nx
    a[..., 0, 2] = ny
    a[..., 1, 0] = (g - 1.0) * ek * nx - u * un
    a[..., 1, 1] = un - (g - 2.0) * u * nx
    a[..., 1, 2] = u * ny - (g - 1.0) * v * nx
    a[..., 1, 3] = (g - 1.0) * nx
    a[..., 2, 0] = (g - 1.0) * ek * ny - v * un
    a[..., 2, 1] = v * nx - (g - 1.0) * u * ny
    a[..., 2, 2] = un - (g - 2.0) * v * ny
    a[..., 2, 3] = (g - 1.0) * ny
    a[..., 3, 0] = un * ((g - 1.0) * ek - enthalpy)
    a[..., 3, 1] = enthalpy * nx - (g - 1.0) * u * un
    a[..., 3, 2] = enthalpy * ny - (g - 1.0) * v * un
    a[..., 3, 3] = g * un
    return a


def right_eigenvectors(conserved, normal):
    """Right eigenvector matrix of the directional flux Jacobian.

    Column order: acoustic (un - c), entropy (un), [shear (un) in 2D],
    acoustic (un + c).  Requires a physical state; `normal` must be unit.
    """
    q = np.asarray(conserved, dtype=float)
    dim = q.shape[-1] - 2
    n = np.asarray(normal, dtype=float)
    rho = q[..., 0]
    p = pressure(q)
    _check_positive(rho, p, "eigenvector construction ")
    c = np.sqrt(GAMMA * p / rho)
    enthalpy = (q[..., -1] + p) / rho
    if dim == 1:
        u = q[..., 1] / rho
        nx = n[..., 0] if n.ndim else n
        un = u * nx
        shape = q.shape[:-1] + (3, 3)
        r = np.empty(shape)
        r[..., 0, 0] = 1.0
        r[..., 1, 0] = u - c * nx
        r[..., 2, 0] = enthalpy - c * un
        r[..., 0, 1] = 1.0
        r[..., 1, 1] = u
        r[..., 2, 1] = 0.5 * u * u
        r[..., 0, 2] = 1.0
        r[..., 1, 2] = u + c * nx
        r[..., 2, 2] = enthalpy + c * un
        return r
    u = q[..., 1] / rho
    v = q[..., 2] / rho
    nx, ny = n[..., 0], n[..., 1]
    un = u * nx + v * ny
    ek = 0.5 * (u * u + v * v)
    shape = q.shape[:-1] + (4, 4)
    r = np.empty(shape)
    r[..., 0, 0] = 1.0
    r[..., 1, 0] = u - c * nx
    r[..., 2, 0] = v - c * ny
    r[..., 3, 0] = enthalpy - c * un
    r[..., 0, 1] = 1.0
    r[..., 1, 1] = u
    r[..., 2, 1] = v
    r[..., 3, 1] = ek
    r[..., 0, 2] = 0.0
    r[..., 1, 2] = -ny
    r[..., 2, 2] = nx
    r[..., 3, 2] = v * nx - u * ny
    r[..., 0, 3] = 1.0
    r[..., 1, 3] = u + c * nx
    r[..., 2, 3] = v + c * ny
    r[..., 3, 3] = enthalpy + c * un
    return r


def eigensystem(conserved, normal):
    """(L, R) with L = R^{-1}; rows of L are left eigenvectors."""
    r = right_eigenvectors(conserved, normal)
    return np.linalg.inv(r), r


def characteristic_direction(mean_conserved, tie_tolerance=1e-12):
    """Unit vector along the cell-average velocity, +x when nearly at rest."""
    q = np.asarray(mean_conserved, dtype=float)
    dim = q.shape[-1] - 2
    vel = q[..., 1:1 + dim] / q[..., 0:1]
    if dim == 1:
        sign = np.where(np.abs(vel[..., 0]) < tie_tolerance, 1.0,
                        np.sign(vel[..., 0]))
        return sign[..., None]
    speed = np.sqrt(np.sum(vel ** 2, axis=-1))
    out = np.empty_like(vel)
    rest = speed < tie_tolerance
    safe = np.where(rest, 1.0, speed)
    out[..., 0] = np.where(rest, 1.0, vel[..., 0] / safe)
    out[..., 1] = np.where(rest, 0.0, vel[..., 1] / safe)
    return out


def max_wave_speed(conserved):
    """|u . n| maximized over directions plus sound speed: |u| + c."""
    q = np.asarray(conserved)
    dim = q.shape[-1] - 2
    vel = q[..., 1:1 + dim] / q[..., 0:1]
    return np.sqrt(np.sum(vel ** 2, axis=-1)) + sound_speed(q)


def lax_friedrichs_flux(q_left, q_right, normal):
    """Local Lax-Friedrichs numerical flux for the face normal `normal`.

    `q_left` is the interior trace (normal points from left to right state).
    alpha is the max of |u.n| + c over the two traces.
    """
    ql = np.asarray(q_left, dtype=float)
    qr = np.asarray(q_right, dtype=float)
    n = np.asarray(normal, dtype=float)
    dim = ql.shape[-1] - 2
    un_l = np.sum(ql[..., 1:1 + dim] / ql[..., 0:1] * n, axis=-1)
    un_r = np.sum(qr[..., 1:1 + dim] / qr[..., 0:1] * n, axis=-1)
    alpha = np.maximum(np.abs(un_l) + sound_speed(ql),
                       np.abs(un_r) + sound_speed(qr))
    central = 0.5 * (directional_flux(ql, n) + directional_flux(qr, n))
    return central - 0.5 * alpha[..., None] * (qr - ql)
