"""WENO rebuild of flagged elements.

A flagged cell's polynomial is replaced by a nonlinear combination of
itself and its face neighbors' polynomials, each neighbor re-expanded on
the flagged cell and shifted to match its cell average.  Linear weights
heavily favor the cell's own polynomial (0.998 in 1D, 0.996 on quads,
0.001 per neighbor); Jiang-Shu squared-derivative smoothness indicators
steer the nonlinear weights away from oscillatory candidates at shocks.
The weighting runs in local characteristic variables (frozen at the cell
average, oriented along the cell-average velocity) so a jump in one wave
family does not drag the other fields to first order; set
characteristic=False for plain component-wise weighting.
Cell averages are preserved and unflagged cells are returned bit-identical.
"""

import numpy as np

from . import euler
from .discretization import (orthonormal_legendre_derivative, shift_operator)

EPS_WENO = 1e-6
CENTRAL_WEIGHT_1D = 0.998
CENTRAL_WEIGHT_2D = 0.996
NEIGHBOR_WEIGHT = 0.001
BOUNDS_SLACK = 0.3

_CACHE = {}


def smoothness_matrix(basis, dx, dy=None):
    """Matrix B with beta(q) = q^T B q summing scaled squared derivatives.

    Uses sum over derivative multi-indices alpha, 1 <= |alpha| <= degree, of
    |Omega|^{|alpha|-1} * integral over the cell of (D^alpha p)^2.
    """
    n = basis.degree
    r, w = basis.quad_1d
    derivs = {order: orthonormal_legendre_derivative(r, n, order)
              for order in range(0, n + 1)}
    if basis.dim == 1:
        b = np.zeros((basis.n_modes, basis.n_modes))
        for s in range(1, n + 1):
            d = derivs[s]
            scale = dx ** (2 * s - 1) * (2.0 / dx) ** (2 * s) * (dx / 2.0)
            b += scale * (d * w[:, None]).T @ d
        return b
    n1 = n + 1
    area = dx * dy
    b = np.zeros((basis.n_modes, basis.n_modes))
    w2 = np.outer(w, w).ravel()
    for a in range(0, n + 1):
        for c in range(0, n + 1):
            s = a + c
            if s < 1 or s > n:
                continue
            da, dc = derivs[a], derivs[c]
            table = np.empty((r.size * r.size, basis.n_modes))
            for j in range(n1):
                for i in range(n1):
                    m = j * n1 + i
                    table[:, m] = np.outer(dc[:, j], da[:, i]).ravel()
            scale = area ** (s - 1) * (2.0 / dx) ** (2 * a) \
                * (2.0 / dy) ** (2 * c) * (area / 4.0)
            b += scale * (table * w2[:, None]).T @ table
    return b


def _tables(basis, dx, dy):
    key = (basis.dim, basis.degree, round(dx, 15), round(dy or 0.0, 15))
    if key not in _CACHE:
        if basis.dim == 1:
            shifts = [shift_operator(basis, +1),   # from left neighbor
                      shift_operator(basis, -1)]   # from right neighbor
        else:
            shifts = [shift_operator(basis, (+1, 0)),   # from west neighbor
                      shift_operator(basis, (-1, 0)),   # from east
                      shift_operator(basis, (0, +1)),   # from south
                      shift_operator(basis, (0, -1))]   # from north
        _CACHE[key] = (smoothness_matrix(basis, dx, dy), shifts)
    return _CACHE[key]


def extreme_front_mask(field, idx, slack=BOUNDS_SLACK):
    """Which of the elements `idx` carry an extreme front worth protecting.

    Rebuilding flattens.  For moderate jumps that is the right trade; for
    a front so steep that no cell polynomial can span it and stay positive
    (neighbor-average ratio beyond ~3 at degree 1), flattening just
    re-steepens next stage and the front diffuses one cell per rebuild
    with no compensating gain.  Such cells keep their polynomial when the
    data through them is clean.  A cell qualifies when, for every
    conserved variable, either the variable is locally passive
    (stencil-average span negligible) or

    - the stencil-average span is extreme (more than twice the smaller
      bound magnitude, i.e. a ratio beyond ~3), and
    - the neighbor averages straddle the cell's own average along some
      axis (monotone data; a wiggle crest or trough never qualifies), and
    - all point values (volume nodes and face traces) stay inside the
      stencil-average envelope widened by `slack` of its span, each side's
      widening capped at half that bound's own magnitude so a huge span
      never sanctions values of the opposite sign (e.g. negative density
      under a 1e6 density ratio).
    """
    basis, mesh = field.basis, field.mesh
    pts = np.concatenate([basis.phi] + list(basis.face_phi))
    vals = np.einsum("qm,fmv->fqv", pts, field.coefficients[idx])
    avg = basis.avg_coeff * field.coefficients[:, 0, :]
    own = avg[idx]

    nb_avgs = []
    for d in range(mesh.neighbors.shape[1]):
        nb = mesh.neighbors[idx, d]
        valid = (nb >= 0)[:, None]
        nb_avgs.append((valid, np.where(valid, avg[np.maximum(nb, 0)], own)))

    lo = own.copy()
    hi = own.copy()
    for _, nav in nb_avgs:
        lo = np.minimum(lo, nav)
        hi = np.maximum(hi, nav)
    span = hi - lo
    scale = np.maximum(np.abs(lo), np.abs(hi))

    # straddle test per axis: (before - own) * (own - after) > 0; a missing
    # neighbor collapses the product to <= 0, failing that axis
    straddle = np.zeros(own.shape, dtype=bool)
    for a in range(0, len(nb_avgs), 2):
        va, na = nb_avgs[a]
        vb, nb_ = nb_avgs[a + 1]
        straddle |= (va & vb) & ((na - own) * (own - nb_) > 0.0)

    extreme = span > 2.0 * np.minimum(np.abs(lo), np.abs(hi))
    atol = 1e-12 * scale
    pad_lo = np.minimum(slack * span, 0.5 * np.abs(lo)) + atol
    pad_hi = np.minimum(slack * span, 0.5 * np.abs(hi)) + atol
    bounded = np.all(
        (vals >= (lo - pad_lo)[:, None, :]) & (vals <= (hi + pad_hi)[:, None, :]),
        axis=1)
    passive = span <= 1e-10 * np.maximum(scale, 1e-300)
    return np.all(passive | (extreme & straddle & bounded), axis=-1)


def _superlinear_modes(basis):
    """Indices of modes with total degree above one."""
    return np.nonzero(basis.mode_degrees.sum(axis=1) > 1)[0]


def apply_weno_limiter(field, flags, central_weight=None, characteristic=True,
                       bounds_gate=True):
    """Rebuild the flagged cells' polynomials; returns a new coefficient array."""
    if isinstance(flags, np.ndarray):
        flag_arr = flags
    else:
        flag_arr = getattr(flags, "flags", flags)
    flag_arr = np.asarray(flag_arr, dtype=bool)
    out = field.coefficients.copy()
    idx = np.nonzero(flag_arr)[0]
    if bounds_gate and idx.size:
        idx = idx[~extreme_front_mask(field, idx)]
    if idx.size == 0:
        return out
    mesh, basis = field.mesh, field.basis
    if central_weight is None:
        central_weight = CENTRAL_WEIGHT_1D if mesh.dim == 1 else CENTRAL_WEIGHT_2D
    bmat, shifts = _tables(basis, mesh.dx, mesh.dy if mesh.dim == 2 else None)

    own = field.coefficients[idx]
    high = _superlinear_modes(basis)
    # Rebuild in the linear span.  Shifted polynomials beyond degree 1 are
    # extrapolations whose high modes grow without bound (the top mode of a
    # quartic gains two orders of magnitude one cell out), and a full-order
    # central candidate re-seeds the high-mode debris it was meant to clear,
    # so every candidate keeps only its linear projection.
    own_cand = own.copy()
    own_cand[:, high, :] = 0.0
    candidates = [own_cand]
    gammas = [np.full((idx.size, 1), central_weight)]
    for d, shift in enumerate(shifts):
        nb = mesh.neighbors[idx, d]
        valid = nb >= 0
        cand = np.einsum("nm,fmv->fnv", shift, field.coefficients[np.maximum(nb, 0)])
        cand[:, high, :] = 0.0
        cand[:, 0, :] = own[:, 0, :]  # match the flagged cell's average
        cand[~valid] = own_cand[~valid]  # dummy; weight zeroed below
        candidates.append(cand)
        gammas.append(np.where(valid, NEIGHBOR_WEIGHT, 0.0)[:, None])

    cand = np.stack(candidates)                      # (ncand, nf, modes, nvars)
    gamma = np.stack(gammas)                         # (ncand, nf, 1)
    work = cand
    char_ok = None
    if characteristic:
        mean = basis.avg_coeff * own[:, 0, :]
        # cells with a nonphysical mean (doomed to abort soon) have no
        # eigensystem; those rebuild component-wise
        char_ok = ~euler.has_nonphysical_point(mean[:, None, :])
        if np.any(char_ok):
            lmat, rmat = euler.eigensystem(
                mean[char_ok], euler.characteristic_direction(mean[char_ok]))
            work = cand.copy()
            work[:, char_ok] = np.einsum("fvw,cfmw->cfmv", lmat, cand[:, char_ok])
    beta = np.einsum("cfmv,mn,cfnv->cfv", work, bmat, work)
    weights = gamma / (EPS_WENO + beta) ** 2
    weights /= np.sum(weights, axis=0)
    rebuilt = np.einsum("cfv,cfmv->fmv", weights, work)
    if char_ok is not None and np.any(char_ok):
        rebuilt[char_ok] = np.einsum("fvw,fmw->fmv", rmat, rebuilt[char_ok])
        rebuilt[:, 0, :] = own[:, 0, :]  # averages exact despite L*R roundoff
    out[idx] = rebuilt
    return out
