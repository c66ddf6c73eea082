"""Benchmark case catalog: initial data, boundaries, domains, end times.

Eight cases cover the standard shock-capturing suite: an advected contact of
configurable strength, the Sod and Lax shock tubes, the Shu-Osher
shock/entropy-wave interaction, the Woodward-Colella interacting blast
waves, the double Mach reflection ramp flow, and two four-quadrant Riemann
configurations on the unit square.  State functions take points shaped
(..., dim) and return conserved states shaped (..., nvars), so they plug
directly into the projector and the Dirichlet boundary machinery.

Also here: the exact-solution oracles used by validation (a standard exact
Riemann solver specialized to the Sod data, and the analytic moving-shock
state for the double Mach reflection boundaries).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import euler
from .boundary import (Dirichlet, DmrBottom, Reflective, Transmissive,
                       make_boundary_conditions)
from .discretization import structured_mesh_2d, uniform_mesh_1d
from .errors import ConfigurationError, ContractViolationError, DgError
from .solver import project_initial_condition

PROBLEM_NAMES = ("contact", "sod", "lax", "shuosher", "blast", "dmr",
                 "riemann4", "riemann12")

CONTACT_DENSITY_RATIO = 1.0e6


def _conserved(rho, u, p, v=None):
    prim = np.stack(np.broadcast_arrays(
        *([rho, u, p] if v is None else [rho, u, v, p])), axis=-1)
    return euler.conservative_from_primitive(prim)


def _split_1d(x, edge, left, right):
    return np.where((x < edge)[..., None], left, right)


@dataclass(frozen=True)
class ProblemSpec:
    """One runnable benchmark case."""

    name: str
    dim: int
    extents: tuple
    t_end: float
    initial_state: object
    boundaries: dict = dc_field(default_factory=dict)
    default_cells: tuple = ()
    detect_variable: int = 0
    description: str = ""

    def make_mesh(self, cells):
        """Build the uniform mesh: int cell count (1D) or (nx, ny) pair."""
        if self.dim == 1:
            return uniform_mesh_1d(self.extents[0], self.extents[1],
                                   int(cells))
        if np.isscalar(cells):
            cells = (int(cells), int(cells))
        (xlo, xhi), (ylo, yhi) = self.extents
        return structured_mesh_2d(xlo, xhi, ylo, yhi, int(cells[0]),
                                  int(cells[1]))

    def make_bcs(self, mesh):
        return make_boundary_conditions(mesh, dict(self.boundaries))

    def initialize(self, mesh, basis):
        return project_initial_condition(mesh, basis, self.initial_state)


# ------------------------------------------------------------------ 1D cases

def _contact_state(eta):
    lo = _conserved(1.0, 1.0, 1.0)
    hi = _conserved(float(eta), 1.0, 1.0)

    def state(points, time=0.0):
        # pure advection at speed 1: the interface sits at x = t
        return _split_1d(points[..., 0] - time, 0.0, lo, hi)
    return state


def _sod_state(points, time=0.0):
    return _split_1d(points[..., 0], 0.5,
                     _conserved(1.0, 0.0, 1.0), _conserved(0.125, 0.0, 0.1))


def _lax_state(points, time=0.0):
    return _split_1d(points[..., 0], 0.5,
                     _conserved(0.445, 0.698, 3.528),
                     _conserved(0.5, 0.0, 0.571))


def _shuosher_state(points, time=0.0):
    x = points[..., 0]
    left = _conserved(3.857143, 2.629369, 10.333333)
    wavy = _conserved(1.0 + 0.2 * np.sin(16.0 * np.pi * x), 0.0, 1.0)
    return np.where((x < 0.125)[..., None], left, wavy)


def _blast_state(points, time=0.0):
    x = points[..., 0]
    p = np.where(x < 0.1, 1000.0, np.where(x < 0.9, 0.01, 100.0))
    return _conserved(1.0, 0.0, p)


# ------------------------------------------------------------------ 2D cases

def _quadrant_state(q1, q2, q3, q4):
    """Four-quadrant primitive data (rho, u, v, p) split at (0.5, 0.5)."""
    c1 = _conserved(q1[0], q1[1], q1[3], v=q1[2])
    c2 = _conserved(q2[0], q2[1], q2[3], v=q2[2])
    c3 = _conserved(q3[0], q3[1], q3[3], v=q3[2])
    c4 = _conserved(q4[0], q4[1], q4[3], v=q4[2])

    def state(points, time=0.0):
        x, y = points[..., 0], points[..., 1]
        upper = y >= 0.5
        right = x >= 0.5
        out = np.where((right & upper)[..., None], c1,
                       np.where((~right & upper)[..., None], c2,
                                np.where((~right & ~upper)[..., None],
                                         c3, c4)))
        return out
    return state


DMR_POST_SHOCK = (8.0, 8.25 * np.cos(np.pi / 6.0), -8.25 * np.sin(np.pi / 6.0),
                  116.5)
DMR_PRE_SHOCK = (1.4, 0.0, 0.0, 1.0)
DMR_SHOCK_FOOT = 1.0 / 6.0
_DMR_POST_CONS = _conserved(DMR_POST_SHOCK[0], DMR_POST_SHOCK[1],
                            DMR_POST_SHOCK[3], v=DMR_POST_SHOCK[2])
_DMR_PRE_CONS = _conserved(DMR_PRE_SHOCK[0], DMR_PRE_SHOCK[1],
                           DMR_PRE_SHOCK[3], v=DMR_PRE_SHOCK[2])


def dmr_shock_position(y, time):
    """x coordinate of the Mach-10 oblique shock at height y and time t."""
    return DMR_SHOCK_FOOT + (np.asarray(y) + 20.0 * time) / np.sqrt(3.0)


def _dmr_field_state(points, time=0.0):
    x, y = points[..., 0], points[..., 1]
    behind = x < dmr_shock_position(y, time)
    return np.where(behind[..., None], _DMR_POST_CONS, _DMR_PRE_CONS)


def dmr_boundary_state(x, y, t):
    """Exact top/bottom boundary state for the double Mach reflection.

    Bottom (y = 0): the post-shock inflow left of the shock foot at x = 1/6;
    asking for the wall region x >= 1/6 is a contract violation since the
    wall is reflective there, not a prescribed state.  Top (y = 1): the
    analytic moving-shock state.  Points off both boundaries are rejected.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tol = 1e-12
    on_bottom = np.abs(y) <= tol
    on_top = np.abs(y - 1.0) <= tol
    if not np.all(on_bottom | on_top):
        raise ContractViolationError(
            "dmr_boundary_state needs points on the top or bottom boundary")
    if np.any(on_bottom & (x >= DMR_SHOCK_FOOT)):
        raise ContractViolationError(
            "bottom boundary is a reflective wall for x >= 1/6; "
            "no prescribed state exists there")
    pts = np.stack([x, np.where(on_bottom, 0.0, 1.0)], axis=-1)
    return _dmr_field_state(pts, t)


def _dmr_top_state(points, time=0.0):
    return _dmr_field_state(points, time)


def _dmr_left_state(points, time=0.0):
    return np.broadcast_to(
        _DMR_POST_CONS, points.shape[:-1] + (4,)).copy()


# ------------------------------------------------------------------- catalog

def problem_catalog(contact_eta=CONTACT_DENSITY_RATIO):
    """All benchmark cases, keyed order matching the CLI problem tokens."""
    specs = [
        ProblemSpec(
            name="contact", dim=1, extents=(-5.0, 5.0), t_end=3.0,
            initial_state=_contact_state(contact_eta),
            boundaries={"left": Dirichlet(_contact_state(contact_eta)),
                        "right": Dirichlet(_contact_state(contact_eta))},
            default_cells=(200, 400),
            description="advected single contact discontinuity, density "
                        f"ratio {contact_eta:g}"),
        ProblemSpec(
            name="sod", dim=1, extents=(0.0, 1.0), t_end=0.2,
            initial_state=_sod_state,
            boundaries={"left": Transmissive(), "right": Transmissive()},
            default_cells=(200, 400),
            description="classic shock tube: shock, contact, rarefaction"),
        ProblemSpec(
            name="lax", dim=1, extents=(0.0, 1.0), t_end=0.1,
            initial_state=_lax_state,
            boundaries={"left": Transmissive(), "right": Transmissive()},
            default_cells=(200, 400),
            description="shock tube with a strong contact and shock"),
        ProblemSpec(
            name="shuosher", dim=1, extents=(0.0, 1.0), t_end=0.178,
            initial_state=_shuosher_state,
            boundaries={"left": Dirichlet(_shuosher_state),
                        "right": Transmissive()},
            default_cells=(200, 400),
            description="Mach-3 shock running into a sinusoidal density"),
        ProblemSpec(
            name="blast", dim=1, extents=(0.0, 1.0), t_end=0.038,
            initial_state=_blast_state,
            boundaries={"left": Reflective(), "right": Reflective()},
            default_cells=(200, 400),
            description="interacting blast waves between reflecting walls"),
        ProblemSpec(
            name="dmr", dim=2, extents=((0.0, 4.0), (0.0, 1.0)), t_end=0.2,
            initial_state=_dmr_field_state,
            boundaries={"left": Dirichlet(_dmr_left_state),
                        "right": Transmissive(),
                        "bottom": DmrBottom(_DMR_POST_CONS, DMR_SHOCK_FOOT),
                        "top": Dirichlet(_dmr_top_state)},
            default_cells=((480, 120), (960, 240)),
            description="Mach-10 shock reflecting off a ramp"),
        ProblemSpec(
            name="riemann4", dim=2, extents=((0.0, 1.0), (0.0, 1.0)),
            t_end=0.25,
            initial_state=_quadrant_state(
                (1.1, 0.0, 0.0, 1.1), (0.5065, 0.8939, 0.0, 0.35),
                (1.1, 0.8939, 0.8939, 1.1), (0.5065, 0.0, 0.8939, 0.35)),
            boundaries={s: Transmissive()
                        for s in ("left", "right", "bottom", "top")},
            default_cells=((200, 200), (400, 400)),
            description="four-quadrant Riemann data, configuration 4"),
        ProblemSpec(
            name="riemann12", dim=2, extents=((0.0, 1.0), (0.0, 1.0)),
            t_end=0.25,
            initial_state=_quadrant_state(
                (0.5313, 0.0, 0.0, 0.4), (1.0, 0.7276, 0.0, 1.0),
                (0.8, 0.0, 0.0, 1.0), (1.0, 0.0, 0.7276, 1.0)),
            boundaries={s: Transmissive()
                        for s in ("left", "right", "bottom", "top")},
            default_cells=((200, 200), (400, 400)),
            description="four-quadrant Riemann data, configuration 12"),
    ]
    return specs


def get_problem(name, contact_eta=CONTACT_DENSITY_RATIO):
    for spec in problem_catalog(contact_eta):
        if spec.name == name:
            return spec
    raise ConfigurationError(
        f"unknown problem '{name}'; valid: {', '.join(PROBLEM_NAMES)}")


# ------------------------------------------------- exact shock-tube solution

def _riemann_star(left, right, tol=1e-12, max_iter=100):
    """Star-region pressure and velocity by Newton iteration."""
    gamma = euler.GAMMA
    rl, ul, pl = left
    rr, ur, pr = right
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)

    def branch(p, rho, pk, ck):
        # shock branch for p > pk, rarefaction branch otherwise
        if p > pk:
            a = 2.0 / ((gamma + 1.0) * rho)
            b = (gamma - 1.0) / (gamma + 1.0) * pk
            f = (p - pk) * np.sqrt(a / (p + b))
            df = np.sqrt(a / (p + b)) * (1.0 - 0.5 * (p - pk) / (p + b))
        else:
            f = 2.0 * ck / (gamma - 1.0) * (
                (p / pk) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
            df = (p / pk) ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho * ck)
        return f, df

    p = max(0.5 * (pl + pr), 1e-8)
    for _ in range(max_iter):
        fl, dfl = branch(p, rl, pl, cl)
        fr, dfr = branch(p, rr, pr, cr)
        g = fl + fr + (ur - ul)
        step = g / (dfl + dfr)
        p_new = max(p - step, 1e-14)
        if abs(p_new - p) <= tol * max(p, 1.0):
            p = p_new
            break
        p = p_new
    else:
        raise DgError("star-region pressure iteration failed to converge")
    fl, _ = branch(p, rl, pl, cl)
    fr, _ = branch(p, rr, pr, cr)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return p, u


def exact_sod_profile(x, t, left=(1.0, 0.0, 1.0), right=(0.125, 0.0, 0.1),
                      diaphragm=0.5):
    """Exact primitive (rho, u, p) profile of the shock tube at time t."""
    if t <= 0.0:
        raise ContractViolationError("exact profile needs t > 0")
    gamma = euler.GAMMA
    rl, ul, pl = left
    rr, ur, pr = right
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    ps, us = _riemann_star(left, right)
    xi = (np.asarray(x, dtype=float) - diaphragm) / t

    gm, gp = gamma - 1.0, gamma + 1.0
    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    p = np.empty_like(xi)

    # left wave (rarefaction if ps <= pl, shock otherwise)
    if ps <= pl:
        rho_sl = rl * (ps / pl) ** (1.0 / gamma)
        c_sl = cl * (ps / pl) ** (gm / (2.0 * gamma))
        head, tail = ul - cl, us - c_sl
        m = xi < head
        rho[m], u[m], p[m] = rl, ul, pl
        m = (xi >= head) & (xi < tail)
        fac = 2.0 / gp + gm / (gp * cl) * (ul - xi[m])
        rho[m] = rl * fac ** (2.0 / gm)
        u[m] = 2.0 / gp * (cl + gm / 2.0 * ul + xi[m])
        p[m] = pl * fac ** (2.0 * gamma / gm)
        m = (xi >= tail) & (xi < us)
        rho[m], u[m], p[m] = rho_sl, us, ps
    else:
        s = ul - cl * np.sqrt(gp / (2.0 * gamma) * ps / pl
                              + gm / (2.0 * gamma))
        m = xi < s
        rho[m], u[m], p[m] = rl, ul, pl
        m = (xi >= s) & (xi < us)
        rho[m] = rl * (ps / pl + gm / gp) / (gm / gp * ps / pl + 1.0)
        u[m], p[m] = us, ps
    # right wave
    if ps > pr:
        s = ur + cr * np.sqrt(gp / (2.0 * gamma) * ps / pr
                              + gm / (2.0 * gamma))
        m = (xi >= us) & (xi < s)
        rho[m] = rr * (ps / pr + gm / gp) / (gm / gp * ps / pr + 1.0)
        u[m], p[m] = us, ps
        m = xi >= s
        rho[m], u[m], p[m] = rr, ur, pr
    else:
        rho_sr = rr * (ps / pr) ** (1.0 / gamma)
        c_sr = cr * (ps / pr) ** (gm / (2.0 * gamma))
        head, tail = ur + cr, us + c_sr
        m = (xi >= us) & (xi < tail)
        rho[m], u[m], p[m] = rho_sr, us, ps
        m = (xi >= tail) & (xi < head)
        fac = 2.0 / gp - gm / (gp * cr) * (ur - xi[m])
        rho[m] = rr * fac ** (2.0 / gm)
        u[m] = 2.0 / gp * (-cr + gm / 2.0 * ur + xi[m])
        p[m] = pr * fac ** (2.0 * gamma / gm)
        m = xi >= head
        rho[m], u[m], p[m] = rr, ur, pr
    return np.stack([rho, u, p], axis=-1)
