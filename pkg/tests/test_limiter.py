"""WENO rebuild: identity guarantees, average preservation, linear
exactness, oscillation damping, and the extreme-front bounds gate."""

import numpy as np
import numpy.polynomial.legendre as npleg

from dgdetect import euler
from dgdetect.discretization import (make_basis, structured_mesh_2d,
                                     uniform_mesh_1d)
from dgdetect.indicators import TroubledFlags
from dgdetect.limiter import (apply_weno_limiter, extreme_front_mask,
                              smoothness_matrix)
from dgdetect.solver import ModalField, project_initial_condition


def noisy_field_1d(n_cells=16, degree=2, seed=0, noise=0.05):
    mesh = uniform_mesh_1d(0.0, 1.0, n_cells)
    basis = make_basis(1, degree)
    rng = np.random.default_rng(seed)

    def ic(pts):
        x = pts[..., 0]
        w = np.stack([1.0 + 0.1 * np.sin(2 * np.pi * x),
                      0.3 * np.ones_like(x),
                      1.0 + 0.1 * np.cos(2 * np.pi * x)], axis=-1)
        return euler.conservative_from_primitive(w)

    field = project_initial_condition(mesh, basis, ic)
    field.coefficients[:, 1:, :] += noise * rng.standard_normal(
        field.coefficients[:, 1:, :].shape)
    return field


def linear_ic_1d(pts):
    x = pts[..., 0]
    out = np.empty(x.shape + (3,))
    out[..., 0] = 2.0 + 0.5 * x      # conserved components, each linear in x
    out[..., 1] = 0.3 - 0.2 * x
    out[..., 2] = 5.0 + 1.0 * x
    return out


def test_unflagged_cells_bit_identical():
    field = noisy_field_1d()
    flags = np.zeros(field.mesh.n_elements, dtype=bool)
    flags[[3, 7]] = True
    out = apply_weno_limiter(field, flags)
    keep = ~flags
    assert np.array_equal(out[keep], field.coefficients[keep])
    assert not np.array_equal(out[3], field.coefficients[3])


def test_no_flags_returns_equal_copy():
    field = noisy_field_1d()
    out = apply_weno_limiter(field, np.zeros(field.mesh.n_elements, bool))
    assert np.array_equal(out, field.coefficients)
    out[0, 0, 0] += 1.0
    assert out[0, 0, 0] != field.coefficients[0, 0, 0]


def test_flag_container_and_array_agree():
    field = noisy_field_1d(seed=3)
    flags = np.zeros(field.mesh.n_elements, dtype=bool)
    flags[5] = True
    wrapped = TroubledFlags(flags=flags, time=0.0)
    assert np.array_equal(apply_weno_limiter(field, flags),
                          apply_weno_limiter(field, wrapped))


def test_averages_preserved_exactly():
    field = noisy_field_1d(seed=1, noise=0.2)
    flags = np.ones(field.mesh.n_elements, dtype=bool)
    out = apply_weno_limiter(field, flags, bounds_gate=False)
    assert np.array_equal(out[:, 0, :], field.coefficients[:, 0, :])


def test_rebuilt_cells_are_linear():
    field = noisy_field_1d(degree=4, seed=2, noise=0.1)
    basis = field.basis
    high = np.nonzero(basis.mode_degrees.sum(axis=1) > 1)[0]
    flags = np.zeros(field.mesh.n_elements, dtype=bool)
    flags[[2, 9, 13]] = True
    out = apply_weno_limiter(field, flags, bounds_gate=False)
    assert np.max(np.abs(out[flags][:, high, :])) == 0.0


def test_linear_data_is_reproduced():
    # every candidate for a globally linear field is the same line, so the
    # rebuild must return the original polynomial
    for degree in (1, 2, 3):
        mesh = uniform_mesh_1d(0.0, 1.0, 12)
        basis = make_basis(1, degree)
        field = project_initial_condition(mesh, basis, linear_ic_1d,
                                          check=False)
        flags = np.ones(mesh.n_elements, dtype=bool)
        flags[[0, -1]] = False  # boundary cells lack a neighbor candidate
        out = apply_weno_limiter(field, flags, bounds_gate=False)
        assert np.max(np.abs(out - field.coefficients)) < 1e-11


def test_linear_data_is_reproduced_2d():
    mesh = structured_mesh_2d(0.0, 1.0, 0.0, 2.0, 6, 5)
    basis = make_basis(2, 2)

    def ic(pts):
        x, y = pts[..., 0], pts[..., 1]
        out = np.empty(x.shape + (4,))
        out[..., 0] = 2.0 + 0.3 * x - 0.1 * y
        out[..., 1] = 0.2 * x
        out[..., 2] = -0.1 * y
        out[..., 3] = 6.0 + 0.5 * x + 0.2 * y
        return out

    field = project_initial_condition(mesh, basis, ic, check=False)
    flags = np.zeros((mesh.ny, mesh.nx), dtype=bool)
    flags[1:-1, 1:-1] = True  # interior cells have all four neighbors
    out = apply_weno_limiter(field, flags.ravel(), bounds_gate=False)
    assert np.max(np.abs(out - field.coefficients)) < 1e-11


def test_oscillatory_cell_flattens():
    field = noisy_field_1d(degree=1, seed=4, noise=0.0)
    k = 8
    field.coefficients[k, 1, 0] = 5.0  # wild density slope amid smooth data
    flags = np.zeros(field.mesh.n_elements, dtype=bool)
    flags[k] = True
    out = apply_weno_limiter(field, flags, bounds_gate=False)
    assert abs(out[k, 1, 0]) < 0.05 * 5.0
    assert out[k, 0, 0] == field.coefficients[k, 0, 0]


def test_characteristic_toggle_changes_result_but_not_averages():
    field = noisy_field_1d(degree=2, seed=5, noise=0.15)
    flags = np.zeros(field.mesh.n_elements, dtype=bool)
    flags[4:12] = True
    char = apply_weno_limiter(field, flags, characteristic=True,
                              bounds_gate=False)
    comp = apply_weno_limiter(field, flags, characteristic=False,
                              bounds_gate=False)
    assert not np.allclose(char, comp)
    assert np.max(np.abs(char[:, 0, :] - field.coefficients[:, 0, :])) == 0.0
    assert np.max(np.abs(comp[:, 0, :] - field.coefficients[:, 0, :])) < 1e-12


def _front_field_1d():
    # monotone 1e6-ratio density/energy front through the middle cell,
    # momentum passive; polynomial stays inside the stencil envelope
    mesh = uniform_mesh_1d(0.0, 1.0, 3)
    basis = make_basis(1, 1)
    coeffs = np.zeros((3, 2, 3))
    root2 = np.sqrt(2.0)
    slope_mode = np.sqrt(2.0 / 3.0)  # trace swing of +-1 in mode units
    for var, lo, hi in ((0, 1e-6, 1.0), (2, 2.5e-6, 2.5)):
        coeffs[0, 0, var] = lo * root2
        coeffs[2, 0, var] = hi * root2
        mid = 0.5 * (lo + hi)
        coeffs[1, 0, var] = mid * root2
        coeffs[1, 1, var] = 0.9 * (hi - mid) * slope_mode
    return ModalField(mesh, basis, coeffs)


def test_extreme_front_mask_accepts_clean_monotone_front():
    field = _front_field_1d()
    assert extreme_front_mask(field, np.array([1]))[0]


def test_extreme_front_mask_rejects_crest():
    field = _front_field_1d()
    # make the middle cell a local maximum: no straddle, no protection
    field.coefficients[1, 0, 0] = 3.0 * np.sqrt(2.0)
    field.coefficients[1, 0, 2] = 7.5 * np.sqrt(2.0)
    assert not extreme_front_mask(field, np.array([1]))[0]


def test_extreme_front_mask_rejects_overshoot():
    field = _front_field_1d()
    # push the trace far outside the stencil-average envelope
    field.coefficients[1, 1, 0] = 5.0
    assert not extreme_front_mask(field, np.array([1]))[0]


def test_bounds_gate_skips_protected_front():
    field = _front_field_1d()
    flags = np.array([False, True, False])
    gated = apply_weno_limiter(field, flags)
    assert np.array_equal(gated, field.coefficients)
    rebuilt = apply_weno_limiter(field, flags, bounds_gate=False)
    assert abs(rebuilt[1, 1, 0]) < abs(field.coefficients[1, 1, 0])


def test_smoothness_matrix_matches_quadrature_oracle():
    # beta = sum_s dx^(2s-1) * integral of (d^s p / dx^s)^2 over the cell,
    # evaluated here with numpy.polynomial machinery only
    rng = np.random.default_rng(7)
    for degree in (1, 2, 3, 4):
        basis = make_basis(1, degree)
        dx = 0.37
        bmat = smoothness_matrix(basis, dx)
        for _ in range(5):
            q = rng.standard_normal(basis.n_modes)
            # Legendre-series coefficients of p(r): orthonormal scale factor
            scale = np.sqrt((2.0 * np.arange(degree + 1) + 1.0) / 2.0)
            series = q * scale
            beta = 0.0
            for s in range(1, degree + 1):
                ds = npleg.legder(series, s)  # d^s/dr^s as a series
                r, w = npleg.leggauss(degree + 2)
                vals = npleg.legval(r, ds) * (2.0 / dx) ** s
                beta += dx ** (2 * s - 1) * (dx / 2.0) * np.sum(w * vals ** 2)
            got = q @ bmat @ q
            assert abs(got - beta) < 1e-10 * max(1.0, beta)
