"""Quadrature, basis, mesh, and cross-cell extension checks.

Every expected value here is computed by an independent oracle: closed-form
monomial integrals for quadrature, dense-quadrature inner products for
orthonormality and shift operators, and brute-force evaluation for the
extrapolated cell averages.
"""

import numpy as np
import pytest

from dgdetect.discretization import (
    Basis, cell_average, cell_averages, extrapolated_cell_average,
    gauss_legendre, make_basis, orthonormal_legendre,
    orthonormal_legendre_derivative, shift_operator, structured_mesh_2d,
    uniform_mesh_1d)
from dgdetect.solver import ModalField


def test_gauss_legendre_exact_on_monomials():
    # n points integrate monomials up to degree 2n-1 exactly on [-1, 1]
    for n in range(1, 9):
        x, w = gauss_legendre(n)
        assert abs(np.sum(w) - 2.0) < 1e-14
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            got = np.sum(w * x ** k)
            assert abs(got - exact) < 1e-13, (n, k)


def test_gauss_legendre_not_exact_beyond_order():
    x, w = gauss_legendre(3)
    k = 6  # first non-integrated even degree for n = 3
    assert abs(np.sum(w * x ** k) - 2.0 / 7.0) > 1e-4


def test_orthonormal_legendre_gram_identity():
    x, w = gauss_legendre(12)
    for deg in range(5):
        phi = orthonormal_legendre(x, deg)
        gram = phi.T * w @ phi
        assert np.max(np.abs(gram - np.eye(deg + 1))) < 1e-13


def test_legendre_derivative_matches_finite_difference():
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.uniform(-0.95, 0.95, size=7)
        eps = 1e-6
        for deg in (1, 2, 3, 4):
            d = orthonormal_legendre_derivative(r, deg)
            fd = (orthonormal_legendre(r + eps, deg)
                  - orthonormal_legendre(r - eps, deg)) / (2 * eps)
            assert np.max(np.abs(d - fd)) < 1e-7


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_basis_mass_matrix_orthonormal(dim, degree):
    basis = make_basis(dim, degree)
    w = basis.weights
    gram = basis.phi.T * w @ basis.phi
    assert gram.shape == (basis.n_modes, basis.n_modes)
    assert np.max(np.abs(gram - np.eye(basis.n_modes))) < 1e-12


@pytest.mark.parametrize("dim", [1, 2])
def test_nodal_modal_round_trip(dim):
    rng = np.random.default_rng(11)
    for degree in (1, 2, 3, 4):
        basis = make_basis(dim, degree)
        modal = rng.normal(size=(basis.n_modes, 3))
        nodal = basis.phi @ modal
        back = basis.nodal_to_modal @ nodal
        assert np.max(np.abs(back - modal)) < 1e-12


def test_cell_average_is_constant_mode():
    # the orthonormal constant mode is 1/sqrt(|ref|); averages follow
    rng = np.random.default_rng(5)
    for dim in (1, 2):
        basis = make_basis(dim, 2)
        coeffs = rng.normal(size=(4, basis.n_modes, 3))
        avg = cell_averages(coeffs, basis)
        dense = np.einsum("q,kqv->kv", basis.weights,
                          np.einsum("qm,kmv->kqv", basis.phi, coeffs))
        dense /= 2.0 ** dim
        assert np.max(np.abs(avg - dense)) < 1e-13
        one = cell_average(coeffs[0], basis)
        assert np.max(np.abs(one - dense[0])) < 1e-13


def test_uniform_mesh_1d_layout():
    mesh = uniform_mesh_1d(0.0, 1.0, 10)
    assert mesh.n_elements == 10
    assert abs(mesh.dx - 0.1) < 1e-15
    assert abs(mesh.centers[0, 0] - 0.05) < 1e-15
    # interior neighbors and boundary sentinels
    assert mesh.neighbors[0, 0] == -1 and mesh.neighbors[-1, 1] == -1
    assert mesh.neighbors[3, 0] == 2 and mesh.neighbors[3, 1] == 4


def test_structured_mesh_2d_layout():
    mesh = structured_mesh_2d(0.0, 1.0, 0.0, 0.75, 4, 3)
    assert mesh.n_elements == 12
    assert abs(mesh.dx - 0.25) < 1e-15 and abs(mesh.dy - 0.25) < 1e-15
    k = 2 * mesh.nx + 2  # ix = 2, iy = 2 (top row)
    west, east, south, north = mesh.neighbors[k]
    assert west == k - 1 and east == k + 1
    assert south == k - mesh.nx and north == -1


def _dense_shifted_average(coeffs, basis, offset, n_q=24):
    # brute force: evaluate the polynomial on the shifted reference cell
    x, w = gauss_legendre(n_q)
    if basis.dim == 1:
        pts = (x + 2.0 * offset[0])[:, None]
        phi = basis.eval_modes(pts)
        return np.einsum("q,qm,mv->v", w, phi, coeffs) / 2.0
    xx, yy = np.meshgrid(x + 2.0 * offset[0], x + 2.0 * offset[1],
                         indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    phi = basis.eval_modes(pts)
    ww = np.outer(w, w).ravel()
    return np.einsum("q,qm,mv->v", ww, phi, coeffs) / 4.0


@pytest.mark.parametrize("dim", [1, 2])
def test_shift_operator_matches_dense_quadrature(dim):
    rng = np.random.default_rng(17)
    offsets = [(1, 0), (-1, 0)] if dim == 1 else \
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
    for degree in (1, 2, 3, 4):
        basis = make_basis(dim, degree)
        for off in offsets:
            op = shift_operator(basis, off if dim == 2 else off[0])
            for _ in range(5):
                coeffs = rng.normal(size=(basis.n_modes, 2))
                shifted = op @ coeffs
                # row 0 of the shifted expansion carries the shifted average
                avg = shifted[0] * basis.phi[0, 0]
                oracle = _dense_shifted_average(coeffs, basis, off)
                assert np.max(np.abs(avg - oracle)) < 1e-11


def test_extrapolated_cell_average_adjacent_oracle():
    # the acceptance suite runs the full 1000-pair sweep; spot check here
    rng = np.random.default_rng(23)
    for dim in (1, 2):
        for degree in (1, 3):
            basis = make_basis(dim, degree)
            if dim == 1:
                mesh = uniform_mesh_1d(0.0, 1.0, 6)
                pairs = [(2, 3), (4, 3)]
                offs = [(1, 0), (-1, 0)]
            else:
                mesh = structured_mesh_2d(0.0, 1.0, 0.0, 1.0, 3, 3)
                k = 1 * mesh.nx + 1  # center element
                pairs = [(k, k + 1), (k, k - mesh.nx)]
                offs = [(1, 0), (0, -1)]
            coeffs = rng.normal(size=(mesh.n_elements, basis.n_modes, 3))
            field = ModalField(mesh, basis, coeffs)
            for (src, tgt), off in zip(pairs, offs):
                got = extrapolated_cell_average(field, src, tgt)
                oracle = _dense_shifted_average(coeffs[src], basis, off)
                assert np.max(np.abs(got - oracle)) < 1e-12


def test_eval_modes_agrees_with_tabulated_phi():
    for dim in (1, 2):
        basis = make_basis(dim, 3)
        phi = basis.eval_modes(basis.nodes)
        assert np.max(np.abs(phi - basis.phi)) < 1e-13
