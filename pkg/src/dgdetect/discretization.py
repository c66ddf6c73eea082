"""Reference-element bases, quadrature, and structured meshes.

All elements are affine images of the reference interval [-1, 1] or the
reference square [-1, 1]^2.  Basis functions are Legendre polynomials
normalized to unit L2 norm on the reference element, so the reference
mass matrix is the identity and the physical mass matrix is J * I with
J the (constant) affine Jacobian.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError, ContractViolationError, InvalidMeshError

MIN_DEGREE = 1
MAX_DEGREE = 4

# Face index conventions.
# 1D: 0 = left (r=-1), 1 = right (r=+1).
# 2D: 0 = west (r=-1), 1 = east (r=+1), 2 = south (s=-1), 3 = north (s=+1).
OPPOSITE_FACE = (1, 0, 3, 2)


def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    nodes, weights = npleg.leggauss(n)
    return nodes, weights


def orthonormal_legendre(r, degree):
    """Table of L2-orthonormal Legendre values, shape (len(r), degree+1)."""
    r = np.asarray(r, dtype=float)
    table = npleg.legvander(r, degree)
    scale = np.sqrt((2.0 * np.arange(degree + 1) + 1.0) / 2.0)
    return table * scale


def orthonormal_legendre_derivative(r, degree, order=1):
    """Same table differentiated `order` times in r."""
    r = np.asarray(r, dtype=float)
    out = np.zeros((r.size, degree + 1))
    scale = np.sqrt((2.0 * np.arange(degree + 1) + 1.0) / 2.0)
    for i in range(degree + 1):
        coef = np.zeros(i + 1)
        coef[i] = 1.0
        dcoef = npleg.legder(coef, order) if order <= i else np.zeros(1)
        out[:, i] = npleg.legval(r, dcoef) * scale[i]
    return out


@dataclass
class Basis:
    """Orthonormal modal basis plus quadrature tables on the reference element.

    2D modes are tensor products ordered m = j*(degree+1) + i where i is the
    x-degree and j the y-degree; mode 0 is the constant, mode 1 the first
    x-mode, and mode degree+1 the first y-mode.
    """

    dim: int
    degree: int
    n_modes: int
    nodes: np.ndarray          # (nq, dim) interior quadrature nodes
    weights: np.ndarray        # (nq,)
    phi: np.ndarray            # (nq, n_modes)
    dphi: np.ndarray           # (nq, n_modes, dim) reference-coordinate gradients
    nodal_to_modal: np.ndarray  # (n_modes, nq); exact on polynomials of the space
    mode_degrees: np.ndarray   # (n_modes, dim) per-axis degrees
    avg_coeff: float           # cell average = avg_coeff * coefficient of mode 0
    face_weights: np.ndarray   # (nfq,) face quadrature weights on [-1, 1]
    face_nodes: np.ndarray     # (nfq,) face parameter nodes
    face_phi: np.ndarray       # (2*dim, nfq, n_modes) traces of the modes
    quad_1d: tuple = field(repr=False, default=None)  # (nodes, weights) per axis

    def eval_modes(self, points):
        """Evaluate all modes at reference points, shape (npts, n_modes)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1:
            return orthonormal_legendre(pts[:, 0], self.degree)
        vx = orthonormal_legendre(pts[:, 0], self.degree)
        vy = orthonormal_legendre(pts[:, 1], self.degree)
        n1 = self.degree + 1
        out = np.empty((pts.shape[0], self.n_modes))
        for j in range(n1):
            out[:, j * n1:(j + 1) * n1] = vx * vy[:, j:j + 1]
        return out


def make_basis(dim, degree):
    """Build the modal basis with (degree+2)-point Gauss quadrature per axis."""
    if dim not in (1, 2):
        raise ConfigurationError(f"dimension must be 1 or 2, got {dim}")
    if not (MIN_DEGREE <= degree <= MAX_DEGREE):
        raise ConfigurationError(
            f"polynomial degree must lie in [{MIN_DEGREE}, {MAX_DEGREE}], got {degree}")
    n1 = degree + 1
    nq1 = degree + 2
    r1, w1 = gauss_legendre(nq1)
    v1 = orthonormal_legendre(r1, degree)
    d1 = orthonormal_legendre_derivative(r1, degree)
    ends = orthonormal_legendre(np.array([-1.0, 1.0]), degree)

    if dim == 1:
        nodes = r1[:, None]
        weights = w1.copy()
        phi = v1
        dphi = d1[:, :, None]
        mode_degrees = np.arange(n1)[:, None]
        # single-point faces: weight 2 and unit face measure make the
        # generic surface formula (measure/2) * sum(w*g) reduce to g(point)
        face_weights = np.array([2.0])
        face_nodes = np.array([0.0])
        face_phi = np.stack([ends[0][None, :], ends[1][None, :]])
        n_modes = n1
    else:
        n_modes = n1 * n1
        ra, sa = np.meshgrid(r1, r1, indexing="xy")  # q = b*nq1 + a, a indexes r
        nodes = np.column_stack([ra.ravel(), sa.ravel()])
        weights = np.outer(w1, w1).ravel()
        vx = orthonormal_legendre(nodes[:, 0], degree)
        vy = orthonormal_legendre(nodes[:, 1], degree)
        dx_ = orthonormal_legendre_derivative(nodes[:, 0], degree)
        dy_ = orthonormal_legendre_derivative(nodes[:, 1], degree)
        phi = np.empty((nodes.shape[0], n_modes))
        dphi = np.empty((nodes.shape[0], n_modes, 2))
        mode_degrees = np.empty((n_modes, 2), dtype=int)
        for j in range(n1):
            for i in range(n1):
                m = j * n1 + i
                phi[:, m] = vx[:, i] * vy[:, j]
                dphi[:, m, 0] = dx_[:, i] * vy[:, j]
                dphi[:, m, 1] = vx[:, i] * dy_[:, j]
                mode_degrees[m] = (i, j)
        face_weights = w1.copy()
        face_nodes = r1.copy()
        vxi = orthonormal_legendre(r1, degree)
        face_phi = np.empty((4, nq1, n_modes))
        for j in range(n1):
            for i in range(n1):
                m = j * n1 + i
                face_phi[0, :, m] = ends[0, i] * vxi[:, j]   # west:  r=-1, s=xi
                face_phi[1, :, m] = ends[1, i] * vxi[:, j]   # east:  r=+1, s=xi
                face_phi[2, :, m] = vxi[:, i] * ends[0, j]   # south: s=-1, r=xi
                face_phi[3, :, m] = vxi[:, i] * ends[1, j]   # north: s=+1, r=xi

    nodal_to_modal = phi.T * weights  # exact L2 projection on the span
    avg_coeff = float(phi[0, 0])      # mode 0 is constant
    return Basis(dim=dim, degree=degree, n_modes=n_modes, nodes=nodes,
                 weights=weights, phi=phi, dphi=dphi,
                 nodal_to_modal=nodal_to_modal, mode_degrees=mode_degrees,
                 avg_coeff=avg_coeff, face_weights=face_weights,
                 face_nodes=face_nodes, face_phi=face_phi, quad_1d=(r1, w1))


@dataclass
class Mesh:
    """Uniform structured mesh of intervals (1D) or axis-aligned quads (2D).

    Elements are numbered row-major in 2D: k = iy*nx + ix.  `neighbors`
    holds -1 where a face lies on the domain boundary; `boundary_names`
    maps face index to the boundary side name used by boundary conditions.
    """

    dim: int
    n_elements: int
    nx: int
    ny: int
    dx: float
    dy: float
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    centers: np.ndarray        # (K, dim)
    measures: np.ndarray       # (K,)
    neighbors: np.ndarray      # (K, 2*dim), -1 on the boundary
    face_normals: np.ndarray   # (2*dim, dim) outward unit normals
    face_measures: np.ndarray  # (2*dim,) length of each face (1.0 in 1D)
    boundary_names: tuple

    def element_vertices(self, k):
        """Corner coordinates of element k, shape (2, 1) in 1D or (4, 2) in 2D."""
        if not (0 <= k < self.n_elements):
            raise ContractViolationError(f"element id {k} out of range")
        if self.dim == 1:
            x0 = self.x_lo + k * self.dx
            return np.array([[x0], [x0 + self.dx]])
        iy, ix = divmod(k, self.nx)
        x0 = self.x_lo + ix * self.dx
        y0 = self.y_lo + iy * self.dy
        return np.array([[x0, y0], [x0 + self.dx, y0],
                         [x0 + self.dx, y0 + self.dy], [x0, y0 + self.dy]])

    def is_boundary(self, k, face):
        return self.neighbors[k, face] < 0


def uniform_mesh_1d(x_lo, x_hi, n_cells):
    if n_cells < 3:
        raise InvalidMeshError(f"need at least 3 cells, got {n_cells}")
    if not x_hi > x_lo:
        raise InvalidMeshError(f"empty extent [{x_lo}, {x_hi}]")
    dx = (x_hi - x_lo) / n_cells
    centers = (x_lo + dx * (np.arange(n_cells) + 0.5))[:, None]
    neighbors = np.empty((n_cells, 2), dtype=np.int64)
    neighbors[:, 0] = np.arange(n_cells) - 1
    neighbors[:, 1] = np.arange(n_cells) + 1
    neighbors[-1, 1] = -1
    return Mesh(dim=1, n_elements=n_cells, nx=n_cells, ny=1, dx=dx, dy=0.0,
                x_lo=x_lo, x_hi=x_hi, y_lo=0.0, y_hi=0.0, centers=centers,
                measures=np.full(n_cells, dx),
                neighbors=neighbors,
                face_normals=np.array([[-1.0], [1.0]]),
                face_measures=np.array([1.0, 1.0]),
                boundary_names=("left", "right"))


def structured_mesh_2d(x_lo, x_hi, y_lo, y_hi, nx, ny):
    if nx < 3 or ny < 3:
        raise InvalidMeshError(f"need at least 3 cells per axis, got {nx}x{ny}")
    if not (x_hi > x_lo and y_hi > y_lo):
        raise InvalidMeshError("empty extent")
    dx = (x_hi - x_lo) / nx
    dy = (y_hi - y_lo) / ny
    k = np.arange(nx * ny)
    ix = k % nx
    iy = k // nx
    centers = np.column_stack([x_lo + dx * (ix + 0.5), y_lo + dy * (iy + 0.5)])
    neighbors = np.empty((nx * ny, 4), dtype=np.int64)
    neighbors[:, 0] = np.where(ix > 0, k - 1, -1)
    neighbors[:, 1] = np.where(ix < nx - 1, k + 1, -1)
    neighbors[:, 2] = np.where(iy > 0, k - nx, -1)
    neighbors[:, 3] = np.where(iy < ny - 1, k + nx, -1)
    return Mesh(dim=2, n_elements=nx * ny, nx=nx, ny=ny, dx=dx, dy=dy,
                x_lo=x_lo, x_hi=x_hi, y_lo=y_lo, y_hi=y_hi, centers=centers,
                measures=np.full(nx * ny, dx * dy),
                neighbors=neighbors,
                face_normals=np.array([[-1.0, 0.0], [1.0, 0.0],
                                       [0.0, -1.0], [0.0, 1.0]]),
                face_measures=np.array([dy, dy, dx, dx]),
                boundary_names=("left", "right", "bottom", "top"))


def cell_average(element_coefficients, basis):
    """Cell average of one element's modal coefficients (per variable)."""
    coeffs = np.asarray(element_coefficients)
    return basis.avg_coeff * coeffs[0]


def cell_averages(coefficients, basis):
    """Vectorized cell averages for (K, n_modes, nvars) coefficient arrays."""
    return basis.avg_coeff * coefficients[:, 0]


def shift_operator_1d(basis_like_degree, offset, quad=None):
    """Matrix re-expanding a 1D polynomial on the cell `offset` cells away.

    Row m', column m: coefficient of target mode m' produced by source mode m,
    where the target cell center sits offset*h from the source center.  Exact
    because the integrand is a polynomial within quadrature exactness.
    """
    degree = basis_like_degree
    if quad is None:
        quad = gauss_legendre(degree + 2)
    r, w = quad
    # target-local point r sits at source-local r + 2*offset (unit half-width)
    vt = orthonormal_legendre(r, degree)
    vs = orthonormal_legendre(r + 2.0 * offset, degree)
    return (vt * w[:, None]).T @ vs


def shift_operator(basis, offset):
    """Re-expansion matrix onto the neighbor cell displaced by integer `offset`.

    `offset` is an int in 1D or an (ox, oy) pair in 2D, measured in whole
    cells from source to target.  Maps source-cell modal coefficients to the
    modal coefficients of the same global polynomial on the target cell.
    """
    if basis.dim == 1:
        if np.ndim(offset) > 0:
            offset, = offset
        return shift_operator_1d(basis.degree, int(offset), basis.quad_1d)
    ox, oy = offset
    sx = shift_operator_1d(basis.degree, int(ox), basis.quad_1d)
    sy = shift_operator_1d(basis.degree, int(oy), basis.quad_1d)
    return np.kron(sy, sx)  # mode ordering m = j*(degree+1) + i


def extrapolated_cell_average(field, source_element, target_element):
    """Average over the target cell of the source cell's polynomial.

    The two elements must share a face.  Evaluation happens in the source
    element's own coordinates continued across the shared face.
    """
    mesh, basis = field.mesh, field.basis
    for k in (source_element, target_element):
        if not (0 <= k < mesh.n_elements):
            raise ContractViolationError(f"element id {k} out of range")
    faces = np.nonzero(mesh.neighbors[source_element] == target_element)[0]
    if faces.size == 0:
        raise ContractViolationError(
            f"elements {source_element} and {target_element} do not share a face")
    face = faces[0]
    if mesh.dim == 1:
        offset = -1 if face == 0 else 1
    else:
        offset = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}[face]
    shift = shift_operator(basis, offset)
    shifted = shift @ field.coefficients[source_element]
    return basis.avg_coeff * shifted[0]
