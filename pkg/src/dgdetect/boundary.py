"""Boundary treatment via ghost elements.

Every consumer of neighbor data (face fluxes, stencil indicators, the
limiter) reads from a ghost-padded coefficient array.  Each boundary side
carries a condition that manufactures the ghost cells' modal coefficients:

- transmissive: the boundary element's own polynomial re-expanded on the
  ghost cell (smooth extension; boundary traces are jump-free),
- reflective: mirror image with the normal momentum negated,
- dirichlet: L2 projection of a prescribed state function,
- periodic: wrap-around copy.

Corner ghosts (needed by 8-neighborhood detectors) apply the x-side rule to
the already-built y-side ghost rows, except Dirichlet corners which project
the prescribed state directly.
"""

import numpy as np

from .discretization import shift_operator
from .errors import ConfigurationError
from .euler import has_nonphysical_point


def constant_coefficients(state, basis, n=1):
    """Modal coefficients of a spatially constant state, shape (n, modes, nvars)."""
    state = np.asarray(state, dtype=float)
    out = np.zeros((n, basis.n_modes, state.shape[-1]))
    out[:, 0, :] = state / basis.avg_coeff
    return out


def project_states(state_fn, centers, half_widths, basis, time):
    """Project state_fn(points, t) onto cells with given centers, vectorized."""
    centers = np.atleast_2d(centers)
    hw = np.asarray(half_widths, dtype=float)
    pts = centers[:, None, :] + basis.nodes[None, :, :] * hw
    vals = np.asarray(state_fn(pts, time), dtype=float)
    return np.einsum("mq,kqv->kmv", basis.nodal_to_modal, vals)


class BoundaryCondition:
    kind = "abstract"

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        """Ghost coefficients for ghost cells at `centers`.

        source: (n, n_modes, nvars) coefficients of the cells the ghosts
        extend (the boundary row, or a ghost row when building corners);
        axis: 0 for x-sides, 1 for y-sides; direction: outward -1 or +1.
        """
        raise NotImplementedError


class Transmissive(BoundaryCondition):
    kind = "transmissive"

    def __init__(self):
        self._ops = {}

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        key = (basis.dim, basis.degree, axis, direction)
        if key not in self._ops:
            offset = direction if basis.dim == 1 else (
                (direction, 0) if axis == 0 else (0, direction))
            self._ops[key] = shift_operator(basis, offset)
        return np.einsum("nm,kmv->knv", self._ops[key], source)


class Reflective(BoundaryCondition):
    kind = "reflective"

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        parity = np.where(basis.mode_degrees[:, axis] % 2 == 1, -1.0, 1.0)
        out = source * parity[None, :, None]
        out[:, :, 1 + axis] = -out[:, :, 1 + axis]
        return out


class Dirichlet(BoundaryCondition):
    """L2 projection of a prescribed state function.

    A discontinuity in the prescribed state crossing a ghost cell projects
    to a polynomial that can dip below vacuum at some evaluation point even
    though the cell average stays physical; such ghosts fall back to their
    averages so manufactured boundary data never injects nonphysical traces.
    """

    kind = "dirichlet"

    def __init__(self, state_fn):
        self.state_fn = state_fn

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        out = project_states(self.state_fn, centers, half_widths, basis, time)
        pts = np.concatenate([basis.phi] + list(basis.face_phi))
        sick = has_nonphysical_point(np.einsum("qm,kmv->kqv", pts, out))
        if np.any(sick):
            out[sick, 1:, :] = 0.0
        return out


class Periodic(BoundaryCondition):
    kind = "periodic"

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        raise ConfigurationError("periodic ghosts are wrap copies; "
                                 "handled by the padding assembly")


class DmrBottom(BoundaryCondition):
    """Post-shock inflow ahead of the wedge tip, reflecting wall after it."""

    kind = "dmr-bottom"

    def __init__(self, post_shock_conserved, x_split):
        self.post = np.asarray(post_shock_conserved, dtype=float)
        self.x_split = float(x_split)
        self._wall = Reflective()

    def ghost(self, source, centers, half_widths, axis, direction, basis, time):
        out = self._wall.ghost(source, centers, half_widths, axis, direction,
                               basis, time)
        inflow = centers[:, 0] < self.x_split
        if np.any(inflow):
            out[inflow] = constant_coefficients(self.post, basis, int(inflow.sum()))
        return out


def make_boundary_conditions(mesh, spec=None):
    """Normalize a {side: condition} mapping; missing sides get transmissive."""
    bcs = {}
    for side in mesh.boundary_names:
        cond = spec.get(side) if spec else None
        bcs[side] = cond if cond is not None else Transmissive()
    if spec:
        unknown = set(spec) - set(mesh.boundary_names)
        if unknown:
            raise ConfigurationError(f"unknown boundary sides: {sorted(unknown)}")
    pairs = [("left", "right")] + ([("bottom", "top")] if mesh.dim == 2 else [])
    for a, b in pairs:
        if (bcs[a].kind == "periodic") != (bcs[b].kind == "periodic"):
            raise ConfigurationError(f"periodic must pair {a} with {b}")
    return bcs


def padded_coefficients(field, bcs, time):
    """Ghost-padded modal coefficients.

    1D: (K+2, n_modes, nvars); 2D: (ny+2, nx+2, n_modes, nvars) in grid
    layout (row-major elements reshaped to (ny, nx)).
    """
    mesh, basis = field.mesh, field.basis
    coeffs = field.coefficients
    npmod, nvars = basis.n_modes, coeffs.shape[-1]

    if mesh.dim == 1:
        k = mesh.n_elements
        out = np.empty((k + 2, npmod, nvars))
        out[1:-1] = coeffs
        if bcs["left"].kind == "periodic":
            out[0] = coeffs[-1]
            out[-1] = coeffs[0]
        else:
            hw = np.array([mesh.dx / 2.0])
            out[0] = bcs["left"].ghost(
                coeffs[0:1], mesh.centers[0:1] - np.array([mesh.dx]), hw,
                0, -1, basis, time)[0]
            out[-1] = bcs["right"].ghost(
                coeffs[-1:], mesh.centers[-1:] + np.array([mesh.dx]), hw,
                0, 1, basis, time)[0]
        return out

    nx, ny = mesh.nx, mesh.ny
    grid = coeffs.reshape(ny, nx, npmod, nvars)
    centers = mesh.centers.reshape(ny, nx, 2)
    hw = np.array([mesh.dx / 2.0, mesh.dy / 2.0])
    out = np.empty((ny + 2, nx + 2, npmod, nvars))
    out[1:-1, 1:-1] = grid

    periodic_x = bcs["left"].kind == "periodic"
    periodic_y = bcs["bottom"].kind == "periodic"

    # side rims
    if periodic_x:
        out[1:-1, 0] = grid[:, -1]
        out[1:-1, -1] = grid[:, 0]
    else:
        out[1:-1, 0] = bcs["left"].ghost(
            grid[:, 0], centers[:, 0] - [mesh.dx, 0.0], hw, 0, -1, basis, time)
        out[1:-1, -1] = bcs["right"].ghost(
            grid[:, -1], centers[:, -1] + [mesh.dx, 0.0], hw, 0, 1, basis, time)
    if periodic_y:
        out[0, 1:-1] = grid[-1]
        out[-1, 1:-1] = grid[0]
    else:
        out[0, 1:-1] = bcs["bottom"].ghost(
            grid[0], centers[0] - [0.0, mesh.dy], hw, 1, -1, basis, time)
        out[-1, 1:-1] = bcs["top"].ghost(
            grid[-1], centers[-1] + [0.0, mesh.dy], hw, 1, 1, basis, time)

    # corners: wrap when x is periodic, else x-side rule applied to the
    # y-ghost rows just built
    corner_targets = ((0, 0, -1), (0, -1, 1), (-1, 0, -1), (-1, -1, 1))
    if periodic_x:
        out[0, 0], out[0, -1] = out[0, -2], out[0, 1]
        out[-1, 0], out[-1, -1] = out[-1, -2], out[-1, 1]
    else:
        y_ghost_centers = {
            0: centers[0] - [0.0, mesh.dy],
            -1: centers[-1] + [0.0, mesh.dy],
        }
        for row, col, direction in corner_targets:
            bc = bcs["left"] if direction < 0 else bcs["right"]
            src_col = 1 if direction < 0 else -2
            src_center = y_ghost_centers[row][0 if direction < 0 else -1]
            ghost_center = src_center + [direction * mesh.dx, 0.0]
            out[row, col] = bc.ghost(
                out[row, src_col][None], ghost_center[None], hw,
                0, direction, basis, time)[0]
    return out
