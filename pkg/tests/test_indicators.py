"""Troubled-cell indicators: silence on resolved data, jump localization,
scale invariance, threshold pinning, and config validation."""

import numpy as np
import pytest

from dgdetect import euler
from dgdetect.discretization import (make_basis, structured_mesh_2d,
                                     uniform_mesh_1d)
from dgdetect.errors import ConfigurationError
from dgdetect.indicators import (KINDS, IndicatorConfig, TroubledFlags,
                                 detect, detect_all, detect_fs1, detect_fs2,
                                 detect_lpr, detect_mh, detect_pp,
                                 make_detector, normalize_features,
                                 rh_features)
from dgdetect.solver import ModalField, project_initial_condition

ALL_KINDS = ("pp", "sj", "fs1", "fs2", "lpr", "rh", "ppl", "mh")


def constant_field_1d(degree, n_cells=12, prim=(1.0, 0.4, 1.0)):
    mesh = uniform_mesh_1d(0.0, 1.0, n_cells)
    basis = make_basis(1, degree)
    q = euler.conservative_from_primitive(np.asarray(prim))

    def ic(pts):
        return np.broadcast_to(q, pts.shape[:-1] + (q.size,)).copy()
    return project_initial_condition(mesh, basis, ic)


def constant_field_2d(degree, prim=(1.0, 0.3, -0.2, 2.0)):
    mesh = structured_mesh_2d(0.0, 1.0, 0.0, 1.0, 6, 5)
    basis = make_basis(2, degree)
    q = euler.conservative_from_primitive(np.asarray(prim))

    def ic(pts):
        return np.broadcast_to(q, pts.shape[:-1] + (q.size,)).copy()
    return project_initial_condition(mesh, basis, ic)


def step_field_1d(degree, n_cells=20, jump_cell=10, frac=0.3,
                  left=(1.0, 0.0, 1.0), right=(0.125, 0.0, 0.1)):
    mesh = uniform_mesh_1d(0.0, 1.0, n_cells)
    basis = make_basis(1, degree)
    x0 = mesh.centers[jump_cell, 0] + frac * mesh.dx
    wl = np.asarray(left, dtype=float)
    wr = np.asarray(right, dtype=float)

    def ic(pts):
        x = pts[..., 0]
        w = np.where(x[..., None] < x0, wl, wr)
        return euler.conservative_from_primitive(w)
    return project_initial_condition(mesh, basis, ic)


# ------------------------------------------------------------- silence


def test_all_indicators_silent_on_constants_1d():
    for degree in range(1, 5):
        field = constant_field_1d(degree)
        for kind in ALL_KINDS:
            flags = detect(field, IndicatorConfig(kind=kind))
            assert flags.count == 0, (kind, degree)


def test_all_indicators_silent_on_constants_2d():
    for degree in range(1, 5):
        field = constant_field_2d(degree)
        for kind in ALL_KINDS:
            flags = detect(field, IndicatorConfig(kind=kind))
            assert flags.count == 0, (kind, degree)


def test_gentle_smooth_data_mostly_quiet():
    # a well-resolved wave: deterministic detectors stay silent at degree 3
    mesh = uniform_mesh_1d(0.0, 1.0, 24)
    basis = make_basis(1, 3)

    def ic(pts):
        x = pts[..., 0]
        w = np.stack([1.0 + 0.05 * np.sin(2 * np.pi * x),
                      0.2 * np.ones_like(x),
                      1.0 + 0.02 * np.cos(2 * np.pi * x)], axis=-1)
        return euler.conservative_from_primitive(w)

    field = project_initial_condition(mesh, basis, ic)
    for kind in ("pp", "sj", "fs1", "fs2", "lpr", "mh"):
        flags = detect(field, IndicatorConfig(kind=kind))
        assert flags.count == 0, kind


# ------------------------------------------------------------- localization


def test_jump_localization_1d():
    # flags must appear at the jump and nowhere far from it
    for degree in (2, 3):
        field = step_field_1d(degree)
        for kind in ALL_KINDS:
            flags = detect(field, IndicatorConfig(kind=kind))
            hit = np.nonzero(flags.flags)[0]
            assert hit.size > 0, (kind, degree)
            assert np.all(np.abs(hit - 10) <= 2), (kind, degree, hit)


def _dense_avg(coeffs_var, basis, interval_offset):
    # average of a cell polynomial over a neighboring unit interval,
    # by 24-point Gauss quadrature in the cell's own reference coords
    r, w = np.polynomial.legendre.leggauss(24)
    pts = (2.0 * interval_offset + r)[:, None]
    vals = basis.eval_modes(pts) @ coeffs_var
    return 0.5 * np.sum(w * vals)


def test_fs_measures_match_quadrature_oracle():
    # pin each variant's mismatch sum by probing the flag boundary with
    # thresholds bracketing an independently integrated t value
    rng = np.random.default_rng(21)
    for degree in (1, 3):
        mesh = uniform_mesh_1d(0.0, 1.0, 3)
        basis = make_basis(1, degree)
        for _ in range(10):
            coeffs = np.zeros((3, degree + 1, 3))
            coeffs[:, 0, 0] = rng.uniform(1.0, 3.0, size=3) / basis.avg_coeff
            coeffs[:, 1:, 0] = 0.4 * rng.standard_normal((3, degree))
            coeffs[:, 0, 2] = 2.5 / basis.avg_coeff  # p = 1, u = 0
            field = ModalField(mesh, basis, coeffs)
            avgs = basis.avg_coeff * coeffs[:, 0, 0]
            denom = np.max(np.abs(avgs))

            t1 = (abs(_dense_avg(coeffs[0, :, 0], basis, +1) - avgs[1])
                  + abs(_dense_avg(coeffs[2, :, 0], basis, -1) - avgs[1])) / denom
            t2 = (abs(_dense_avg(coeffs[1, :, 0], basis, -1) - avgs[0])
                  + abs(_dense_avg(coeffs[1, :, 0], basis, +1) - avgs[2])) / denom
            for variant, fn, t in ((1, detect_fs1, t1), (2, detect_fs2, t2)):
                for factor, expect in ((1.001, False), (0.999, True)):
                    cfg = IndicatorConfig(
                        kind=f"fs{variant}",
                        fs_thresholds={degree: t * factor})
                    assert fn(field, cfg).flags[1] == expect, (variant, degree)


def test_lpr_flags_only_downwind_of_jump():
    # inflow faces decide stage one: with u > 0 the cell right of the jump
    # sees the jump on its inflow (left) face; with u < 0 it is the cell
    # on the left
    for u, expected in ((0.5, 11), (-0.5, 10)):
        field = step_field_1d(2, left=(1.0, u, 1.0), right=(0.125, u, 0.1))
        flags = detect_lpr(field, IndicatorConfig(kind="lpr"))
        hit = np.nonzero(flags.flags)[0]
        assert expected in hit, (u, hit)
        assert np.all(np.abs(hit - expected) <= 1), (u, hit)


# ------------------------------------------------------------- invariance


def test_flags_invariant_under_global_scaling():
    field = step_field_1d(2)
    for kind in ALL_KINDS:
        base = detect(field, IndicatorConfig(kind=kind)).flags
        for factor in (1e-6, 1e6):
            scaled = field.with_coefficients(field.coefficients * factor)
            got = detect(scaled, IndicatorConfig(kind=kind)).flags
            assert np.array_equal(base, got), (kind, factor)


def test_normalize_features_properties():
    rng = np.random.default_rng(12)
    for _ in range(200):
        x = rng.standard_normal(5) * rng.uniform(1e-8, 1e8)
        n = normalize_features(x[None, :])[0]
        assert abs(np.median(n)) < 1e-12
        assert abs(np.max(np.abs(n)) - 1.0) < 1e-12
        a, b = rng.uniform(0.5, 100.0), rng.uniform(-5.0, 5.0)
        m = normalize_features((a * x + b)[None, :])[0]
        assert np.max(np.abs(m - n)) < 1e-9
    assert np.all(normalize_features(np.zeros((2, 5))) == 0.0)


# ------------------------------------------------------------- pp / ppl


def _field_from_density_modes(coeffs_rho, degree, n_cells=None):
    n_cells = n_cells or len(coeffs_rho)
    mesh = uniform_mesh_1d(0.0, 1.0, n_cells)
    basis = make_basis(1, degree)
    coeffs = np.zeros((n_cells, degree + 1, 3))
    coeffs[:, 0, 0] = np.sqrt(2.0)         # density average 1
    coeffs[:, 0, 2] = 2.5 * np.sqrt(2.0)   # pressure 1, u = 0
    for k, row in enumerate(coeffs_rho):
        coeffs[k, :len(row), 0] = row
    return ModalField(mesh, basis, coeffs)


def test_pp_threshold_degree_two_boundary():
    # top-mode energy fraction 1/101 ~ 0.0099 stays below the 1/16
    # degree-2 threshold; fraction 1/9 is above it
    quiet = [np.sqrt(2.0), 10.0, 1.0]
    loud = [np.sqrt(2.0), 2.0 * np.sqrt(2.0), np.sqrt(2.0) * 1.1]
    field = _field_from_density_modes([quiet, loud], 2, n_cells=3)
    flags = detect_pp(field, IndicatorConfig(kind="pp"))
    ratio_quiet = quiet[2] ** 2 / sum(c ** 2 for c in quiet)
    ratio_loud = loud[2] ** 2 / sum(c ** 2 for c in loud)
    assert ratio_quiet < 1.0 / 16.0 < ratio_loud
    assert not flags.flags[0]
    assert flags.flags[1]


def test_pp_degree_one_uses_tau1():
    cfg = IndicatorConfig(kind="pp", pp_tau1=1e-2)
    lo = [1.0, 0.09]   # slope-energy fraction ~ 0.8% < 1e-2
    hi = [1.0, 0.11]   # ~ 1.2% > 1e-2
    field = _field_from_density_modes([lo, hi], 1, n_cells=3)
    flags = detect_pp(field, cfg)
    assert list(flags.flags[:2]) == [False, True]


def test_pp_scale_raises_threshold():
    loud = [np.sqrt(2.0), 2.0 * np.sqrt(2.0), np.sqrt(2.0) * 1.1]
    field = _field_from_density_modes([loud], 2, n_cells=3)
    assert detect_pp(field, IndicatorConfig(kind="pp")).flags[0]
    relaxed = IndicatorConfig(kind="pp", pp_scale=16.0)  # threshold 1.0
    assert not detect_pp(field, relaxed).flags[0]


def test_pp_degenerate_cells_counted_not_flagged():
    field = _field_from_density_modes([[0.0, 0.0]], 1, n_cells=3)
    field.coefficients[0, :, 0] = 0.0  # zero density polynomial in cell 0
    flags = detect_pp(field, IndicatorConfig(kind="pp"))
    assert flags.degenerate == 1
    assert not flags.flags[0]


def test_ppl_sees_cross_variable_trouble():
    # top-mode energy hidden in velocity: pp on density misses it, the
    # characteristic-field variant must catch it
    field = constant_field_1d(2, n_cells=6)
    field.coefficients[3, 2, 1] = 0.4  # momentum curvature only
    pp = detect(field, IndicatorConfig(kind="pp"))
    ppl = detect(field, IndicatorConfig(kind="ppl"))
    assert not pp.flags[3]
    assert ppl.flags[3]


# ------------------------------------------------------------- mh


def _three_state_field(prims):
    mesh = uniform_mesh_1d(0.0, 1.0, len(prims))
    basis = make_basis(1, 1)
    coeffs = np.zeros((len(prims), 2, 3))
    q = euler.conservative_from_primitive(np.asarray(prims, dtype=float))
    coeffs[:, 0, :] = q * np.sqrt(2.0)
    return ModalField(mesh, basis, coeffs)


def test_mh_pressure_ratio_boundary_1d():
    # fires when (p_min/p_max)^3 < 0.5, i.e. ratio below 0.7937
    fire = _three_state_field([(1, 0, 1.0), (1, 0, 0.78), (1, 0, 1.0)])
    calm = _three_state_field([(1, 0, 1.0), (1, 0, 0.81), (1, 0, 1.0)])
    assert detect_mh(fire, IndicatorConfig(kind="mh")).count == 3
    assert detect_mh(calm, IndicatorConfig(kind="mh")).count == 0


def test_mh_density_ratio_fires_independently():
    # pressure uniform, density ratio 0.5: the density pass must fire
    fire = _three_state_field([(1.0, 0, 1.0), (0.5, 0, 1.0), (1.0, 0, 1.0)])
    assert detect_mh(fire, IndicatorConfig(kind="mh")).count == 3


def test_mh_fc_config_is_honored():
    field = _three_state_field([(1, 0, 1.0), (1, 0, 0.78), (1, 0, 1.0)])
    tight = IndicatorConfig(kind="mh", mh_fc=0.4)  # ratio bound 0.737
    assert detect_mh(field, tight).count == 0


def _mh_2d_field(v_left=0.0, v_right=0.0):
    mesh = structured_mesh_2d(0.0, 1.0, 0.0, 1.0, 4, 3)
    basis = make_basis(2, 1)
    prim = np.empty((3, 4, 4))
    prim[..., 0] = 1.0
    prim[..., 1] = 0.0
    prim[..., 2] = np.where(np.arange(4)[None, :] < 2, v_left, v_right)
    prim[..., 3] = np.where(np.arange(4)[None, :] < 2, 1.0, 0.3)
    coeffs = np.zeros((12, basis.n_modes, 4))
    coeffs[:, 0, :] = euler.conservative_from_primitive(
        prim.reshape(12, 4)) / basis.avg_coeff
    return ModalField(mesh, basis, coeffs)


def test_mh_2d_sonic_gate_toggle():
    # subsonic pressure jump: ungated pressure pass fires, gated stays out
    still = _mh_2d_field()
    assert detect_mh(still, IndicatorConfig(kind="mh")).count > 0
    gated = IndicatorConfig(kind="mh", mh_sonic_gate=True)
    assert detect_mh(still, gated).count == 0
    # supersonic crossing perpendicular to the pair direction satisfies the
    # gate's orientation convention (vn = u sin(beta) - v cos(beta))
    fast = _mh_2d_field(v_left=-2.0, v_right=-0.05)
    assert detect_mh(fast, gated).count > 0


# ------------------------------------------------------------- rh plumbing


def test_rh_features_layout_1d():
    field = constant_field_1d(2, n_cells=5)
    field.coefficients[2, :, 0] = [3.0, 0.5, 0.2]
    feats = rh_features(field)
    basis = field.basis
    avg = basis.avg_coeff
    own = field.coefficients[2, :, 0]
    expected = [avg * field.coefficients[1, 0, 0],
                avg * own[0],
                avg * field.coefficients[3, 0, 0],
                own @ basis.face_phi[0, 0],
                own @ basis.face_phi[1, 0]]
    assert np.max(np.abs(feats[2] - expected)) < 1e-14
    assert feats.shape == (5, 5)


def test_rh_feature_width_matches_default_networks():
    from dgdetect.ann import default_network
    assert default_network(1).layer_sizes[0] == rh_features(
        constant_field_1d(1)).shape[1]
    assert default_network(2).layer_sizes[0] == rh_features(
        constant_field_2d(1)).shape[1]


def test_rh_rejects_mismatched_network():
    from dgdetect.ann import default_network
    field = constant_field_2d(1)
    cfg = IndicatorConfig(kind="rh", network=default_network(1))
    with pytest.raises(ConfigurationError):
        detect(field, cfg)


# ------------------------------------------------------------- dispatch


def test_detect_none_and_unknown():
    field = constant_field_1d(1)
    silent = detect(field, IndicatorConfig(kind="none"))
    assert silent.count == 0
    with pytest.raises(ConfigurationError):
        detect(field, IndicatorConfig(kind="nope"))


def test_detect_all_is_union_with_counts():
    field = step_field_1d(2)
    combined = detect_all(field, IndicatorConfig(kind="all"))
    union = np.zeros(field.mesh.n_elements, dtype=bool)
    for kind in KINDS:
        sub = detect(field, IndicatorConfig(kind=kind))
        union |= sub.flags
        assert combined.extras["counts"][kind] == sub.count
    assert np.array_equal(combined.flags, union)


def test_make_detector_validates_and_binds():
    cfg = IndicatorConfig(kind="fs1")
    with pytest.raises(ConfigurationError):
        make_detector(cfg, degree=7)  # no fs threshold for that degree
    detector = make_detector(IndicatorConfig(kind="pp"), degree=2)
    flags = detector(step_field_1d(2), time=1.5)
    assert flags.time == 1.5


def test_config_validation_rejects_bad_values():
    for kwargs in (dict(pp_tau1=0.0), dict(sj_threshold=-1.0),
                   dict(mh_fc=0.0), dict(rh_threshold=1.5),
                   dict(lpr_c1=-2.0)):
        with pytest.raises(ConfigurationError):
            IndicatorConfig(kind="pp", **kwargs).validate()


def test_troubled_flags_bookkeeping():
    flags = TroubledFlags(flags=np.array([True, False, True, False]))
    assert flags.count == 2
    assert flags.percent() == 50.0
