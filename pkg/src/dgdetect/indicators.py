"""Troubled-cell detectors.

Eight interchangeable detectors mark elements whose polynomial data looks
discontinuous.  All of them are vectorized over the whole mesh and read
neighbor data from ghost-padded coefficient arrays, so boundary elements
are detected under the same rules as interior ones.

Naming: pp (modal truncation energy), sj (concentration kernel), fs1/fs2
(extrapolated cell-average mismatch), lpr (inflow-jump plus linear-fit
two-stage), rh (trained multilayer perceptron), ppl (pp per characteristic
field), mh (pressure/density ratio with an optional 2D sonic gate).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import euler
from .boundary import make_boundary_conditions, padded_coefficients
from .discretization import (gauss_legendre, orthonormal_legendre_derivative,
                             shift_operator)
from .errors import ConfigurationError

PP_TAU1_DEFAULT = 2e-4       # calibrated on the quad benchmarks; see README
SJ_THRESHOLD_DEFAULT = 0.02  # calibrated on Sod 200/P1; see README
FS_THRESHOLDS_DEFAULT = {1: 0.05, 2: 0.1, 3: 0.25, 4: 0.5}
MH_FC_DEFAULT = 0.5
RH_THRESHOLD_DEFAULT = 0.5

KINDS = ("pp", "sj", "fs1", "fs2", "lpr", "rh", "ppl", "mh")

_DEGENERATE_EPS = 1e-13


@dataclass
class TroubledFlags:
    """Boolean flag per element plus bookkeeping for statistics."""

    flags: np.ndarray
    time: float = 0.0
    step: int = None
    degenerate: int = 0
    extras: dict = dc_field(default_factory=dict)

    @property
    def count(self):
        return int(np.count_nonzero(self.flags))

    def percent(self):
        return 100.0 * self.count / self.flags.size


@dataclass
class IndicatorConfig:
    """Detector selection and thresholds; None fields fall back to defaults."""

    kind: str = "fs1"
    variable: int = 0            # detection variable index (0 = density)
    pp_tau1: float = PP_TAU1_DEFAULT
    pp_scale: float = 1.0        # threshold for degree N >= 2 is pp_scale / N^4
    sj_exponent: float = 2.0
    sj_threshold: float = SJ_THRESHOLD_DEFAULT
    fs_thresholds: dict = None
    lpr_c1: float = None         # default 1 in 1D, 2 on quads
    lpr_c2: float = None
    mh_fc: float = MH_FC_DEFAULT
    mh_sonic_gate: bool = False  # require the sonic condition on quads
    rh_threshold: float = RH_THRESHOLD_DEFAULT
    network: object = None       # ann.MlpNetwork; shipped default when None

    def __post_init__(self):
        if self.fs_thresholds is None:
            self.fs_thresholds = dict(FS_THRESHOLDS_DEFAULT)

    def validate(self, degree=None):
        if self.kind not in KINDS + ("none", "all"):
            raise ConfigurationError(
                f"unknown indicator '{self.kind}'; valid: {', '.join(KINDS)}")
        positives = {"pp_tau1": self.pp_tau1, "pp_scale": self.pp_scale,
                     "sj_exponent": self.sj_exponent,
                     "sj_threshold": self.sj_threshold, "mh_fc": self.mh_fc}
        for name, value in positives.items():
            if not value > 0.0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if not 0.0 < self.rh_threshold < 1.0:
            raise ConfigurationError("rh_threshold must lie in (0, 1)")
        for c in (self.lpr_c1, self.lpr_c2):
            if c is not None and not c > 0.0:
                raise ConfigurationError("lpr thresholds must be positive")
        if degree is not None and degree not in self.fs_thresholds:
            raise ConfigurationError(f"fs_thresholds lacks degree {degree}")
        return self


def _resolve_bcs(field, bcs):
    return bcs if bcs is not None else make_boundary_conditions(field.mesh)


def _neighbor_slices(padded, dim):
    """Face-neighbor coefficient arrays in mesh element order."""
    if dim == 1:
        return [padded[:-2], padded[2:]]
    inner = lambda a: a.reshape(-1, *a.shape[2:])
    return [inner(padded[1:-1, :-2]), inner(padded[1:-1, 2:]),
            inner(padded[:-2, 1:-1]), inner(padded[2:, 1:-1])]


# ---------------------------------------------------------------- pp

def _pp_drop_mask(basis):
    deg = basis.mode_degrees
    if basis.dim == 1:
        return deg[:, 0] == basis.degree
    return np.max(deg, axis=1) == basis.degree


def _pp_threshold(config, degree):
    return config.pp_tau1 if degree == 1 else config.pp_scale / degree ** 4


def _pp_ratio(coeffs_var, basis):
    """Truncation-energy fraction per element for (K, n_modes) data."""
    drop = _pp_drop_mask(basis)
    total = np.sum(coeffs_var ** 2, axis=-1)
    high = np.sum(coeffs_var[..., drop] ** 2, axis=-1)
    degenerate = total <= _DEGENERATE_EPS ** 2
    ratio = np.divide(high, total, out=np.zeros_like(total),
                      where=~degenerate)
    return ratio, degenerate


def detect_pp(field, config=None, bcs=None, time=None):
    """Flag where the top-degree modal energy fraction exceeds the threshold."""
    config = config or IndicatorConfig(kind="pp")
    basis = field.basis
    ratio, degenerate = _pp_ratio(field.coefficients[:, :, config.variable], basis)
    flags = ratio > _pp_threshold(config, basis.degree)
    return TroubledFlags(flags=flags, time=field.time if time is None else time,
                         degenerate=int(np.count_nonzero(degenerate)))


# ---------------------------------------------------------------- sj

_SJ_CACHE = {}


def _sj_matrix(degree):
    """Concentration kernel matrix C: kernel values = C @ modal coefficients.

    Solution points are the (degree+1)-point Gauss nodes; mode of degree d
    carries the first-order concentration factor sigma((d+1)/n_p) = pi (d+1)/n_p.
    """
    if degree not in _SJ_CACHE:
        n_p = degree + 1
        x, _ = gauss_legendre(n_p)
        dpsi = orthonormal_legendre_derivative(x, degree)
        sigma = np.pi * (np.arange(degree + 1) + 1.0) / n_p
        c = (np.pi / n_p) * np.sqrt(1.0 - x * x)[:, None] * sigma[None, :] * dpsi
        _SJ_CACHE[degree] = c
    return _SJ_CACHE[degree]


def _sj_fire(modal_lines, degree, config):
    """Any enhanced kernel entry above threshold, for (..., degree+1) lines.

    Lines are normalized by their own L2 magnitude first, making the flags
    invariant under Q -> aQ and keeping one threshold meaningful across
    states whose amplitudes differ by orders of magnitude.
    """
    c = _sj_matrix(degree)
    scale = np.linalg.norm(modal_lines, axis=-1, keepdims=True)
    scale = np.where(scale > 0.0, scale, 1.0)
    kernel = (modal_lines / scale) @ c.T
    n_p = degree + 1
    p = config.sj_exponent
    enhanced = n_p ** (p / 2.0) * np.abs(kernel) ** p
    return np.any(enhanced > config.sj_threshold, axis=-1)


def detect_sj(field, config=None, bcs=None, time=None):
    """Concentration-kernel detector, dimension by dimension in 2D."""
    config = config or IndicatorConfig(kind="sj")
    basis = field.basis
    v = config.variable
    coeffs = field.coefficients[:, :, v]
    if basis.dim == 1:
        flags = _sj_fire(coeffs, basis.degree, config)
    else:
        n1 = basis.degree + 1
        x_line = coeffs[:, basis.mode_degrees[:, 1] == 0] / np.sqrt(2.0)
        y_line = coeffs[:, basis.mode_degrees[:, 0] == 0] / np.sqrt(2.0)
        assert x_line.shape[1] == n1 and y_line.shape[1] == n1
        flags = _sj_fire(x_line, basis.degree, config) \
            | _sj_fire(y_line, basis.degree, config)
    return TroubledFlags(flags=flags, time=field.time if time is None else time)


# ---------------------------------------------------------------- fs1 / fs2

_FS_CACHE = {}


def _fs_rows(basis):
    """Per direction: rows giving (a) the average over the home cell of the
    neighbor's polynomial and (b) the average over the neighbor cell of the
    home polynomial."""
    key = (basis.dim, basis.degree)
    if key not in _FS_CACHE:
        if basis.dim == 1:
            offsets = [+1, -1]
        else:
            offsets = [(+1, 0), (-1, 0), (0, +1), (0, -1)]
        into_home = [basis.avg_coeff * shift_operator(basis, off)[0]
                     for off in offsets]
        into_nbr = [basis.avg_coeff * shift_operator(
            basis, -off if basis.dim == 1 else (-off[0], -off[1]))[0]
            for off in offsets]
        _FS_CACHE[key] = (into_home, into_nbr)
    return _FS_CACHE[key]


def _fs_detect(field, config, bcs, time, variant):
    basis, mesh = field.basis, field.mesh
    v = config.variable
    time = field.time if time is None else time
    threshold = config.fs_thresholds.get(basis.degree)
    if threshold is None:
        raise ConfigurationError(f"fs_thresholds lacks degree {basis.degree}")
    padded = padded_coefficients(field, _resolve_bcs(field, bcs), time)
    neighbors = _neighbor_slices(padded, mesh.dim)
    into_home, into_nbr = _fs_rows(basis)

    own = field.coefficients[:, :, v]
    own_avg = basis.avg_coeff * own[:, 0]
    nb_avgs = [basis.avg_coeff * nb[:, 0, v] for nb in neighbors]
    denom = np.abs(own_avg)
    for nb_avg in nb_avgs:
        denom = np.maximum(denom, np.abs(nb_avg))

    t_sum = np.zeros(mesh.n_elements)
    for d, nb in enumerate(neighbors):
        if variant == 1:
            extrapolated = nb[:, :, v] @ into_home[d]
            t_sum += np.abs(extrapolated - own_avg)
        else:
            extended = own @ into_nbr[d]
            t_sum += np.abs(extended - nb_avgs[d])

    degenerate = denom <= _DEGENERATE_EPS
    t = np.divide(t_sum, denom, out=np.zeros_like(t_sum), where=~degenerate)
    return TroubledFlags(flags=t > threshold,
                         time=field.time if time is None else time,
                         degenerate=int(np.count_nonzero(degenerate)))


def detect_fs1(field, config=None, bcs=None, time=None):
    """Neighbor polynomials averaged over the home cell vs the home average."""
    return _fs_detect(field, config or IndicatorConfig(kind="fs1"), bcs, time, 1)


def detect_fs2(field, config=None, bcs=None, time=None):
    """Home polynomial averaged over each neighbor cell vs that neighbor."""
    return _fs_detect(field, config or IndicatorConfig(kind="fs2"), bcs, time, 2)


# ---------------------------------------------------------------- lpr

_LPR_CACHE = {}


def _lpr_tables(basis, dx, dy):
    """Moment rows for the anchored least-squares linear fit."""
    key = (basis.dim, basis.degree, round(dx, 15), round(dy, 15) if dy else 0.0)
    if key in _LPR_CACHE:
        return _LPR_CACHE[key]
    if basis.dim == 1:
        offsets = [0, -1, +1]
    else:
        offsets = [(0, 0), (-1, 0), (+1, 0), (0, -1), (0, +1)]
    r, w = (basis.nodes[:, 0], basis.weights) if basis.dim == 1 \
        else (basis.nodes, basis.weights)
    rows_x, rows_y, ix, iy, gxx, gxy, gyy = [], [], [], [], 0.0, 0.0, 0.0
    for off in offsets:
        if basis.dim == 1:
            xr = off * dx + (dx / 2.0) * r
            jac = dx / 2.0
            phi = basis.phi
            rows_x.append(jac * (phi * (w * xr)[:, None]).sum(axis=0))
            ix.append(jac * np.sum(w * xr))
            gxx += jac * np.sum(w * xr * xr)
        else:
            xr = off[0] * dx + (dx / 2.0) * r[:, 0]
            yr = off[1] * dy + (dy / 2.0) * r[:, 1]
            jac = dx * dy / 4.0
            phi = basis.phi
            rows_x.append(jac * (phi * (w * xr)[:, None]).sum(axis=0))
            rows_y.append(jac * (phi * (w * yr)[:, None]).sum(axis=0))
            ix.append(jac * np.sum(w * xr))
            iy.append(jac * np.sum(w * yr))
            gxx += jac * np.sum(w * xr * xr)
            gyy += jac * np.sum(w * yr * yr)
            gxy += jac * np.sum(w * xr * yr)
    tables = {"offsets": offsets, "rows_x": np.array(rows_x),
              "ix": np.array(ix), "gxx": gxx}
    if basis.dim == 2:
        tables.update(rows_y=np.array(rows_y), iy=np.array(iy),
                      gyy=gyy, gxy=gxy)
    _LPR_CACHE[key] = tables
    return tables


def detect_lpr(field, config=None, bcs=None, time=None):
    """Two-stage detector: inflow-face jumps, then an anchored linear fit."""
    config = config or IndicatorConfig(kind="lpr")
    basis, mesh = field.basis, field.mesh
    v = config.variable
    time = field.time if time is None else time
    c1 = config.lpr_c1 if config.lpr_c1 is not None else (1.0 if mesh.dim == 1 else 2.0)
    c2 = config.lpr_c2 if config.lpr_c2 is not None else (1.0 if mesh.dim == 1 else 2.0)
    padded = padded_coefficients(field, _resolve_bcs(field, bcs), time)
    neighbors = _neighbor_slices(padded, mesh.dim)
    averages = basis.avg_coeff * field.coefficients[:, 0, :]
    vel = averages[:, 1:1 + mesh.dim] / averages[:, 0:1]
    own_avg_v = averages[:, v]
    h = mesh.dx

    if mesh.dim == 1:
        own_l = field.coefficients[:, :, v] @ basis.face_phi[0, 0]
        own_r = field.coefficients[:, :, v] @ basis.face_phi[1, 0]
        nb_l = neighbors[0][:, :, v] @ basis.face_phi[1, 0]
        nb_r = neighbors[1][:, :, v] @ basis.face_phi[0, 0]
        inflow_l = vel[:, 0] > 0.0
        inflow_r = vel[:, 0] < 0.0
        num = np.abs(np.where(inflow_l, own_l - nb_l, 0.0)
                     + np.where(inflow_r, own_r - nb_r, 0.0))
        measure = inflow_l.astype(float) + inflow_r.astype(float)
        denom = h * measure * np.abs(own_avg_v)
        t1 = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0.0)
    else:
        fw, fl = basis.face_weights, mesh.face_measures
        num = np.zeros(mesh.n_elements)
        measure = np.zeros(mesh.n_elements)
        for f, nb in enumerate(neighbors):
            own_tr = field.coefficients[:, :, v] @ basis.face_phi[f].T
            nb_tr = nb[:, :, v] @ basis.face_phi[_OPP[f]].T
            un = vel @ mesh.face_normals[f]
            inflow = un < 0.0
            jump = (fl[f] / 2.0) * ((own_tr - nb_tr) @ fw)
            num += np.where(inflow, jump, 0.0)
            measure += np.where(inflow, fl[f], 0.0)
        num = np.abs(num)
        denom = h * measure * np.abs(own_avg_v)
        t1 = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0.0)

    flags = np.zeros(mesh.n_elements, dtype=bool)
    cand = np.nonzero(t1 > c1)[0]
    if cand.size:
        tables = _lpr_tables(basis, mesh.dx, mesh.dy if mesh.dim == 2 else None)
        stencil = [field.coefficients[cand][:, :, v]] \
            + [nb[cand][:, :, v] for nb in neighbors]
        stencil_avgs = [basis.avg_coeff * s[:, 0] for s in stencil]
        anchor = own_avg_v[cand]
        rx = sum(s @ tables["rows_x"][j] - anchor * tables["ix"][j]
                 for j, s in enumerate(stencil))
        max_avg = np.abs(stencil_avgs[0])
        for s in stencil_avgs[1:]:
            max_avg = np.maximum(max_avg, np.abs(s))
        if mesh.dim == 1:
            a = rx / tables["gxx"]
            t2 = np.zeros(cand.size)
            for j, off in enumerate(tables["offsets"][1:], start=1):
                t2 += np.abs(anchor + a * off * mesh.dx - stencil_avgs[j])
        else:
            ry = sum(s @ tables["rows_y"][j] - anchor * tables["iy"][j]
                     for j, s in enumerate(stencil))
            det = tables["gxx"] * tables["gyy"] - tables["gxy"] ** 2
            a = (rx * tables["gyy"] - ry * tables["gxy"]) / det
            b = (ry * tables["gxx"] - rx * tables["gxy"]) / det
            t2 = np.zeros(cand.size)
            for j, off in enumerate(tables["offsets"][1:], start=1):
                fit = anchor + a * off[0] * mesh.dx + b * off[1] * mesh.dy
                t2 += np.abs(fit - stencil_avgs[j])
        denom2 = h * max_avg
        t2 = np.divide(t2, denom2, out=np.zeros_like(t2), where=denom2 > 0.0)
        flags[cand] = t2 > c2
    return TroubledFlags(flags=flags, time=field.time if time is None else time)


_OPP = (1, 0, 3, 2)


# ---------------------------------------------------------------- rh

def normalize_features(features):
    """Per-sample shift to zero median and scale to unit max magnitude.

    A spread at roundoff level relative to the raw magnitude is a constant
    stencil; those rows collapse to the zero vector instead of having
    machine noise amplified to unit scale.
    """
    raw = np.asarray(features, dtype=float)
    x = raw - np.median(raw, axis=-1, keepdims=True)
    scale = np.max(np.abs(x), axis=-1, keepdims=True)
    floor = 1e-12 * np.max(np.abs(raw), axis=-1, keepdims=True)
    return np.divide(x, scale, out=np.zeros_like(x), where=scale > floor)


def rh_features(field, bcs=None, time=None, variable=0):
    """Network input rows for every element (unnormalized)."""
    basis, mesh = field.basis, field.mesh
    padded = padded_coefficients(field, _resolve_bcs(field, bcs),
                                 field.time if time is None else time)
    neighbors = _neighbor_slices(padded, mesh.dim)
    v = variable
    if mesh.dim == 1:
        avg = basis.avg_coeff
        own = field.coefficients[:, :, v]
        return np.column_stack([
            avg * neighbors[0][:, 0, v],
            avg * own[:, 0],
            avg * neighbors[1][:, 0, v],
            own @ basis.face_phi[0, 0],
            own @ basis.face_phi[1, 0]])
    sel = np.array([0, 1, basis.degree + 1])
    own = field.coefficients[:, sel, v]
    return np.hstack([own] + [neighbors[d][:, sel, v] for d in (0, 1, 2)])


def detect_rh(field, config=None, bcs=None, time=None):
    """Trained-MLP detector; flags where the troubled-class probability wins."""
    config = config or IndicatorConfig(kind="rh")
    network = config.network
    if network is None:
        from .ann import default_network
        network = default_network(field.mesh.dim)
    features = rh_features(field, bcs, time, config.variable)
    if features.shape[1] != network.layer_sizes[0]:
        raise ConfigurationError(
            f"network expects {network.layer_sizes[0]} inputs, "
            f"features have {features.shape[1]}")
    probs = network.predict_proba(normalize_features(features))
    return TroubledFlags(flags=probs[:, 1] > config.rh_threshold,
                         time=field.time if time is None else time)


# ---------------------------------------------------------------- ppl

def detect_ppl(field, config=None, bcs=None, time=None):
    """PP ratio applied to every local characteristic field."""
    config = config or IndicatorConfig(kind="ppl")
    basis = field.basis
    averages = field.cell_averages()
    direction = euler.characteristic_direction(averages)
    left, _ = euler.eigensystem(averages, direction)
    nodal = np.einsum("qm,kmv->kqv", basis.phi, field.coefficients)
    char_nodal = np.einsum("kij,kqj->kqi", left, nodal)
    char_modal = np.einsum("mq,kqi->kmi", basis.nodal_to_modal, char_nodal)
    threshold = _pp_threshold(config, basis.degree)
    drop = _pp_drop_mask(basis)
    total = np.sum(char_modal ** 2, axis=1)
    high = np.sum(char_modal[:, drop, :] ** 2, axis=1)
    degenerate_fields = total <= _DEGENERATE_EPS ** 2
    ratio = np.divide(high, total, out=np.zeros_like(total),
                      where=~degenerate_fields)
    flags = np.any(ratio > threshold, axis=-1)
    return TroubledFlags(flags=flags, time=field.time if time is None else time,
                         degenerate=int(np.count_nonzero(
                             np.all(degenerate_fields, axis=-1))))


# ---------------------------------------------------------------- mh

def _mh_ratio_fire(own, nbr, fc):
    ratio = own / nbr
    f = np.minimum(ratio, 1.0 / ratio) ** 3
    return f < fc


def detect_mh(field, config=None, bcs=None, time=None):
    """Pressure/density ratio shock test over face and corner neighbors.

    On quads an optional sonic-crossing gate (config.mh_sonic_gate) can
    restrict the pressure pass to pairs whose connecting segment straddles
    a sonic point. It is off by default: the gate needs supersonic flow on
    one side of the pair, so it mutes the pressure pass entirely on
    subsonic fields where the ratio test is expected to fire.
    """
    config = config or IndicatorConfig(kind="mh")
    basis, mesh = field.basis, field.mesh
    fc = config.mh_fc
    padded = padded_coefficients(field, _resolve_bcs(field, bcs),
                                 field.time if time is None else time)
    pad_avgs = basis.avg_coeff * padded[..., 0, :]
    prim = euler.primitive_from_conservative(pad_avgs, check=False)

    if mesh.dim == 1:
        rho, p = prim[:, 0], prim[:, -1]
        flags = np.zeros(mesh.n_elements, dtype=bool)
        for sl_own, sl_nb in ((slice(1, -1), slice(0, -2)),
                              (slice(1, -1), slice(2, None))):
            flags |= _mh_ratio_fire(p[sl_own], p[sl_nb], fc)
            flags |= _mh_ratio_fire(rho[sl_own], rho[sl_nb], fc)
        return TroubledFlags(flags=flags,
                             time=field.time if time is None else time)

    rho = prim[..., 0]
    u, vvel = prim[..., 1], prim[..., 2]
    p = prim[..., 3]
    c = np.sqrt(euler.GAMMA * p / rho)
    own = (slice(1, -1), slice(1, -1))
    flags = np.zeros((mesh.ny, mesh.nx), dtype=bool)
    for ox, oy in ((-1, 0), (1, 0), (0, -1), (0, 1),
                   (-1, -1), (1, -1), (-1, 1), (1, 1)):
        nb = (slice(1 + oy, (-1 + oy) or None), slice(1 + ox, (-1 + ox) or None))
        pressure_fire = _mh_ratio_fire(p[own], p[nb], fc)
        if config.mh_sonic_gate:
            # Sonic gate: a shock implies a sonic crossing along the segment
            # joining the pair. Both branches need a supersonic side, so on
            # fully subsonic flows the gate silences the pressure pass.
            beta = np.arctan2(oy * mesh.dy, ox * mesh.dx)
            sb, cb = np.sin(beta), np.cos(beta)
            vn_l = u[own] * sb - vvel[own] * cb
            vn_r = u[nb] * sb - vvel[nb] * cb
            sonic = ((vn_l - c[own] > 0.0) & (vn_r - c[nb] < 0.0)) \
                | ((vn_l + c[own] > 0.0) & (vn_r + c[nb] < 0.0))
            pressure_fire &= sonic
        flags |= pressure_fire
        flags |= _mh_ratio_fire(rho[own], rho[nb], fc)
    return TroubledFlags(flags=flags.ravel(),
                         time=field.time if time is None else time)


# ---------------------------------------------------------------- dispatch

_DETECTORS = {"pp": detect_pp, "sj": detect_sj, "fs1": detect_fs1,
              "fs2": detect_fs2, "lpr": detect_lpr, "rh": detect_rh,
              "ppl": detect_ppl, "mh": detect_mh}


def detect(field, config, bcs=None, time=None):
    """Run the detector selected by config.kind."""
    if config.kind == "none":
        return TroubledFlags(flags=np.zeros(field.mesh.n_elements, dtype=bool),
                             time=field.time if time is None else time)
    if config.kind == "all":
        return detect_all(field, config, bcs, time)
    fn = _DETECTORS.get(config.kind)
    if fn is None:
        raise ConfigurationError(f"unknown indicator '{config.kind}'")
    return fn(field, config, bcs, time)


def detect_all(field, config, bcs=None, time=None):
    """Run every detector; union flags, per-detector counts in extras."""
    union = np.zeros(field.mesh.n_elements, dtype=bool)
    counts = {}
    for kind in KINDS:
        sub = _DETECTORS[kind](field, _with_kind(config, kind), bcs, time)
        counts[kind] = sub.count
        union |= sub.flags
    return TroubledFlags(flags=union, time=field.time if time is None else time,
                         extras={"counts": counts})


def _with_kind(config, kind):
    from dataclasses import replace
    return replace(config, kind=kind, fs_thresholds=dict(config.fs_thresholds))


def make_detector(config, bcs=None, degree=None):
    """Bind a validated config (and boundary set) into a detector callable."""
    config.validate(degree)

    def detector(field, time=None):
        return detect(field, config, bcs, time)

    return detector
