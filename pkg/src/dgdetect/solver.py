"""Modal DG discretization of the Euler equations with SSP-RK3 marching.

The semi-discrete form solved per element is

    J dq/dt = - surface(numerical flux) + volume(F . grad psi)

with J the affine Jacobian (the mass matrix is J*I for the orthonormal
basis).  Interface fluxes are local Lax-Friedrichs, computed once per face.
After every Runge-Kutta stage the configured detector marks troubled cells
and the limiter rebuilds exactly those; the flags recorded for statistics
are the ones from the first stage of each step.
"""

from dataclasses import dataclass

import numpy as np

from . import euler
from .boundary import padded_coefficients
from .discretization import cell_averages
from .errors import ConfigurationError, NonphysicalStateError

CFL_DEFAULT = 0.3


@dataclass
class ModalField:
    """Modal coefficients (n_elements, n_modes, nvars) at a point in time."""

    mesh: object
    basis: object
    coefficients: np.ndarray
    time: float = 0.0

    def cell_averages(self):
        return cell_averages(self.coefficients, self.basis)

    def copy(self):
        return ModalField(self.mesh, self.basis, self.coefficients.copy(),
                          self.time)

    def with_coefficients(self, coefficients, time=None):
        return ModalField(self.mesh, self.basis, coefficients,
                          self.time if time is None else time)


def project_initial_condition(mesh, basis, ic, check=True):
    """L2-project ic(points) -> conserved states onto every element."""
    if mesh.dim != basis.dim:
        raise ConfigurationError("mesh and basis dimensions differ")
    hw = np.array([mesh.dx / 2.0]) if mesh.dim == 1 else \
        np.array([mesh.dx / 2.0, mesh.dy / 2.0])
    pts = mesh.centers[:, None, :] + basis.nodes[None, :, :] * hw
    vals = np.asarray(ic(pts), dtype=float)
    coeffs = np.einsum("mq,kqv->kmv", basis.nodal_to_modal, vals)
    field = ModalField(mesh, basis, coeffs, 0.0)
    if check:
        _check_average_physicality(field, 0.0, None)
    return field


def evaluate_at_quadrature(field):
    """Conserved states at the interior quadrature nodes, (K, nq, nvars)."""
    return np.einsum("qm,kmv->kqv", field.basis.phi, field.coefficients)


def _check_states(states, time, step, where):
    rho = states[..., 0]
    p = euler.pressure(states)
    if not (np.min(rho) > 0.0 and np.min(p) > 0.0):
        bad = np.argwhere(~((rho > 0.0) & (p > 0.0)))
        elem = int(bad[0][0]) if bad.size else None
        raise NonphysicalStateError(
            f"nonphysical state in {where} at t={time:.6e}"
            + (f", step {step}" if step is not None else "")
            + (f", element {elem}" if elem is not None else ""),
            element=elem, time=time, step=step)


def _check_average_physicality(field, time, step):
    _check_states(field.cell_averages(), time, step, "cell averages")


def dg_residual(field, bcs, time):
    """d(coefficients)/dt of the semi-discrete DG operator."""
    mesh, basis = field.mesh, field.basis
    padded = padded_coefficients(field, bcs, time)
    if mesh.dim == 1:
        return _residual_1d(field, padded, time)
    return _residual_2d(field, padded, time)


def _residual_1d(field, padded, time):
    mesh, basis = field.mesh, field.basis
    w, phi, dphi = basis.weights, basis.phi, basis.dphi[:, :, 0]

    interior = np.einsum("qm,kmv->kqv", phi, field.coefficients)
    traces = np.einsum("fom,kmv->kfv", basis.face_phi, padded)  # o is the single face node
    _check_states(interior, time, None, "volume quadrature")

    q_left = traces[:-1, 1]   # right-face trace of the cell left of each interface
    q_right = traces[1:, 0]
    _check_states(q_left, time, None, "face traces")
    _check_states(q_right, time, None, "face traces")
    fstar = euler.lax_friedrichs_flux(q_left, q_right, np.array([1.0]))

    flux = euler.physical_flux(interior, axis=0)
    volume = np.einsum("q,qm,kqv->kmv", w, dphi, flux)
    phi_r = basis.face_phi[1, 0]  # mode traces at r=+1
    phi_l = basis.face_phi[0, 0]
    surface = np.einsum("m,kv->kmv", phi_r, fstar[1:]) \
        - np.einsum("m,kv->kmv", phi_l, fstar[:-1])
    return (volume - surface) / (mesh.dx / 2.0)


def _residual_2d(field, padded, time):
    mesh, basis = field.mesh, field.basis
    nx, ny = mesh.nx, mesh.ny
    npmod, nvars = basis.n_modes, field.coefficients.shape[-1]
    w2, phi = basis.weights, basis.phi
    fw = basis.face_weights

    grid = padded[1:-1, 1:-1]
    interior = np.einsum("qm,yxmv->yxqv", phi, grid)
    _check_states(interior, time, None, "volume quadrature")

    tw = np.einsum("qm,yxmv->yxqv", basis.face_phi[0], padded)
    te = np.einsum("qm,yxmv->yxqv", basis.face_phi[1], padded)
    ts = np.einsum("qm,yxmv->yxqv", basis.face_phi[2], padded)
    tn = np.einsum("qm,yxmv->yxqv", basis.face_phi[3], padded)
    for used in (te[1:-1, :-1], tw[1:-1, 1:], tn[:-1, 1:-1], ts[1:, 1:-1]):
        _check_states(used, time, None, "face traces")

    nx_hat = np.array([1.0, 0.0])
    ny_hat = np.array([0.0, 1.0])
    # vertical interfaces i = 0..nx between columns i and i+1 of padded
    fx = euler.lax_friedrichs_flux(te[1:-1, :-1], tw[1:-1, 1:], nx_hat)
    # horizontal interfaces j = 0..ny
    fy = euler.lax_friedrichs_flux(tn[:-1, 1:-1], ts[1:, 1:-1], ny_hat)

    f = euler.physical_flux(interior, axis=0)
    g = euler.physical_flux(interior, axis=1)
    volume = (mesh.dy / 2.0) * np.einsum("q,qm,yxqv->yxmv", w2,
                                         basis.dphi[:, :, 0], f) \
        + (mesh.dx / 2.0) * np.einsum("q,qm,yxqv->yxmv", w2,
                                      basis.dphi[:, :, 1], g)

    surf_e = np.einsum("q,qm,yxqv->yxmv", fw, basis.face_phi[1], fx[:, 1:])
    surf_w = np.einsum("q,qm,yxqv->yxmv", fw, basis.face_phi[0], fx[:, :-1])
    surf_n = np.einsum("q,qm,yxqv->yxmv", fw, basis.face_phi[3], fy[1:])
    surf_s = np.einsum("q,qm,yxqv->yxmv", fw, basis.face_phi[2], fy[:-1])
    surface = (mesh.dy / 2.0) * (surf_e - surf_w) \
        + (mesh.dx / 2.0) * (surf_n - surf_s)

    jac = mesh.dx * mesh.dy / 4.0
    return ((volume - surface) / jac).reshape(nx * ny, npmod, nvars)


def stable_dt(field, cfl=CFL_DEFAULT):
    """CFL time step: cfl * h / ((2N+1) * max(|u|+c)) over quadrature states."""
    states = evaluate_at_quadrature(field)
    _check_states(states, field.time, None, "time-step estimate")
    speed = float(np.max(euler.max_wave_speed(states)))
    mesh = field.mesh
    h = mesh.dx if mesh.dim == 1 else min(mesh.dx, mesh.dy)
    return cfl * h / ((2 * field.basis.degree + 1) * speed)


def _identity_limiter(field, flags):
    return field.coefficients


def _null_detector(field, time):
    from .indicators import TroubledFlags
    return TroubledFlags(flags=np.zeros(field.mesh.n_elements, dtype=bool),
                         time=time)


def _evaluation_point_states(field):
    """Every state the residual will evaluate: volume nodes plus face traces."""
    basis, coeffs = field.basis, field.coefficients
    parts = [np.einsum("qm,kmv->kqv", basis.phi, coeffs)]
    for f in range(2 * field.mesh.dim):
        parts.append(np.einsum("qm,kmv->kqv", basis.face_phi[f], coeffs))
    return np.concatenate(parts, axis=1)


def physicality_screen(field):
    """Elements whose polynomial carries a nonphysical evaluation point.

    A cell flagged here has a physical average (callers check that
    separately) but a trace or volume node with rho <= 0 or p <= 0; the
    next residual would reject it, so it needs limiting regardless of what
    the indicator said.
    """
    return euler.has_nonphysical_point(_evaluation_point_states(field))


def _rebuild_until_physical(field, qs, indicator_flags, limit, detect_time):
    """Re-limit elements with nonphysical evaluation points; flatten if stuck."""
    for attempt in range(3):
        guarded = field.with_coefficients(qs, detect_time)
        sick = physicality_screen(guarded)
        if not sick.any():
            break
        if attempt < 2:
            qs = limit(guarded, indicator_flags | sick)
        else:
            # last resort: drop to the (physical) cell average
            qs = qs.copy()
            qs[sick, 1:, :] = 0.0
    return qs


def ssp_rk3_step(field, dt, bcs, detector=None, limit=None, step=None):
    """One SSP-RK3 step with detect-then-limit after every stage.

    Returns (advanced field, TroubledFlags from the first stage).

    After indicator-driven limiting, any element whose averages are fine
    but whose evaluation points are nonphysical is also rebuilt (the
    indicator watches one variable and can miss, say, an energy blow-up on
    a flat density field).  Reported statistics never include these extra
    rebuilds.  If rebuilding does not cure the element, the next residual
    aborts as contracted.
    """
    detector = detector or _null_detector
    limit = limit or _identity_limiter
    mesh, basis = field.mesh, field.basis
    q0 = field.coefficients
    t = field.time

    def stage(prev_coeffs, residual_time, combine, detect_time):
        r = dg_residual(field.with_coefficients(prev_coeffs), bcs, residual_time)
        qs = combine(r)
        stage_field = field.with_coefficients(qs, detect_time)
        flags = detector(stage_field, detect_time)
        qs = limit(stage_field, flags)
        if limit is not _identity_limiter:
            qs = _rebuild_until_physical(field, qs,
                                         np.asarray(flags.flags, dtype=bool),
                                         limit, detect_time)
        _check_average_physicality(field.with_coefficients(qs), detect_time, step)
        return qs, flags

    q1, flags1 = stage(q0, t, lambda r: q0 + dt * r, t + dt)
    q2, _ = stage(q1, t + dt,
                  lambda r: 0.75 * q0 + 0.25 * (q1 + dt * r), t + 0.5 * dt)
    q3, _ = stage(q2, t + 0.5 * dt,
                  lambda r: (q0 + 2.0 * (q2 + dt * r)) / 3.0, t + dt)
    return field.with_coefficients(q3, t + dt), flags1


def march(field, bcs, t_end, cfl=CFL_DEFAULT, detector=None, limit=None,
          on_step=None, max_steps=None):
    """Advance to t_end; on_step(step_index, time_before, flags) per step.

    When a limiter is supplied, the initial field gets the same
    detect-then-limit treatment as a stage result before the first
    time-step estimate: projecting a discontinuity that crosses cell
    interiors can leave nonphysical point values even though every cell
    average is fine.  This initial pass is not recorded in the statistics.
    """
    if t_end < field.time:
        raise ConfigurationError("t_end precedes the field's current time")
    if limit is not None:
        flags0 = (detector or _null_detector)(field, field.time)
        qs = limit(field, flags0)
        qs = _rebuild_until_physical(field, qs,
                                     np.asarray(flags0.flags, dtype=bool),
                                     limit, field.time)
        field = field.with_coefficients(qs)
    step = 0
    tiny = 1e-14 * max(1.0, abs(t_end))
    while field.time < t_end - tiny:
        if max_steps is not None and step >= max_steps:
            break
        dt = min(stable_dt(field, cfl), t_end - field.time)
        t_before = field.time
        try:
            field, flags = ssp_rk3_step(field, dt, bcs, detector, limit, step)
        except NonphysicalStateError as err:
            err.step = step
            raise
        if on_step is not None:
            on_step(step, t_before, flags)
        step += 1
    return field
