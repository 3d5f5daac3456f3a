import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_circulant, gaussian_norm_sq, shift_periodic
from tramor.numerics import (
    BOUNDED,
    D1_6TH,
    D2_6TH,
    PERIODIC_SHIFT,
    VIRTUAL_SHIFT,
    DiffOp,
    DimensionError,
    DomainExceededError,
    Grid,
    TransformFamily,
    apply_diff,
    gram,
    inner_product,
    norm,
    transform,
    transform_derivative,
    virtual_grid_for,
)

G200 = Grid(200)


def gauss(x, c=0.5, w=0.1):
    return np.exp(-(((x - c) / w) ** 2))


# grid --------------------------------------------------------------------------------


def test_grid_spacing_and_nodes():
    assert G200.dxi == 1 / 200
    assert G200.nodes[-1] == pytest.approx(1 - 1 / 200)
    b = Grid(11, topology=BOUNDED)
    assert b.dxi == pytest.approx(0.1)
    assert b.nodes[-1] == pytest.approx(1.0)
    assert b.weights[0] == pytest.approx(0.05) and b.weights[5] == pytest.approx(0.1)


@pytest.mark.parametrize("n", [0, 7])
def test_grid_needs_eight_nodes(n):
    with pytest.raises(ValueError):
        Grid(n)


# inner product ---------------------------------------------------------------------------


def test_constant_one_has_unit_norm():
    assert inner_product(np.ones(200), np.ones(200), G200) == pytest.approx(1.0, abs=1e-14)


def test_discrete_fourier_modes_orthogonal():
    x = G200.nodes
    assert abs(inner_product(np.sin(2 * np.pi * x), np.cos(2 * np.pi * x), G200)) < 1e-12


def test_gaussian_norm_against_closed_form():
    val = norm(gauss(G200.nodes), G200) ** 2
    assert val == pytest.approx(gaussian_norm_sq(0.1), rel=1e-6)


def test_gaussian_norm_against_refined_trapezoid():
    fine = Grid(2000)
    assert norm(gauss(G200.nodes), G200) ** 2 == pytest.approx(norm(gauss(fine.nodes), fine) ** 2, rel=1e-6)


def test_inner_product_grid_mismatch():
    with pytest.raises(DimensionError):
        inner_product(np.ones(200), np.ones(100), G200)
    with pytest.raises(DimensionError):
        inner_product(np.ones((2, 200)), np.ones(200), G200)


def test_gram_matches_pairwise_products(rng):
    a = rng.standard_normal((3, 2, 200))
    b = rng.standard_normal((4, 2, 200))
    g = gram(a, b, G200)
    ref = np.array([[inner_product(x, y, G200) for y in b] for x in a])
    assert np.allclose(g, ref, atol=1e-13)


# difference operators ----------------------------------------------------------------------


@pytest.mark.parametrize("order,stencil,k", [("D1_6th", D1_6TH, 1), ("D2_6th", D2_6TH, 2)])
def test_periodic_operator_equals_dense_circulant(order, stencil, k, rng):
    u = rng.standard_normal(64)
    g = Grid(64)
    ref = dense_circulant(stencil, 64, g.dxi, k) @ u
    op = DiffOp(order, g)
    assert np.allclose(apply_diff(op, u), ref, atol=1e-9)
    assert np.allclose(op.matrix.toarray() @ u, ref, atol=1e-9)


def test_d1_sine_accuracy():
    x = G200.nodes
    err = np.max(np.abs(apply_diff(DiffOp("D1_6th", G200), np.sin(2 * np.pi * x)) - 2 * np.pi * np.cos(2 * np.pi * x)))
    assert err <= 1e-9


def _observed_order(order, f, df):
    errs = []
    for n in (25, 50, 100):
        g = Grid(n)
        errs.append(np.max(np.abs(apply_diff(DiffOp(order, g), f(g.nodes)) - df(g.nodes))))
    return math.log2(errs[-2] / errs[-1])


def test_sixth_order_observed():
    f = lambda x: np.exp(np.sin(2 * np.pi * x))
    d1 = lambda x: 2 * np.pi * np.cos(2 * np.pi * x) * f(x)
    d2 = lambda x: (2 * np.pi) ** 2 * (np.cos(2 * np.pi * x) ** 2 - np.sin(2 * np.pi * x)) * f(x)
    assert _observed_order("D1_6th", f, d1) >= 5.8
    assert _observed_order("D2_6th", f, d2) >= 5.8


def test_stencils_annihilate_constants():
    for order in ("D1_6th", "D2_6th"):
        assert np.max(np.abs(apply_diff(DiffOp(order, G200), np.full(200, 3.7)))) < 1e-9


def test_stencil_symmetry():
    assert np.allclose(D1_6TH, -D1_6TH[::-1])
    assert np.allclose(D2_6TH, D2_6TH[::-1])


def test_d1_summation_by_parts(rng):
    op = DiffOp("D1_6th", G200)
    u, v = rng.standard_normal(200), rng.standard_normal(200)
    lhs = inner_product(apply_diff(op, u), v, G200)
    rhs = -inner_product(u, apply_diff(op, v), G200)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_bounded_d1_exact_on_linear():
    g = Grid(41, topology=BOUNDED)
    u = 3.0 * g.nodes - 1.0
    assert np.allclose(apply_diff(DiffOp("D1_2nd", g), u), 3.0, atol=1e-10)
    assert np.allclose(apply_diff(DiffOp("D2_2nd", g), g.nodes**2), 2.0, atol=1e-7)


def test_bounded_grid_rejects_sixth_order():
    with pytest.raises(ValueError):
        DiffOp("D1_6th", Grid(20, topology=BOUNDED))


# shifts -------------------------------------------------------------------------------------

FAM = TransformFamily(PERIODIC_SHIFT, G200)


def test_zero_shift_is_bit_identical(rng):
    phi = rng.standard_normal((2, 200))
    assert np.array_equal(transform(FAM, 0.0, phi), phi)


def test_lattice_shift_is_rotation(rng):
    phi = rng.standard_normal(200)
    assert np.array_equal(transform(FAM, 7 * G200.dxi, phi), np.roll(phi, 7))
    assert np.array_equal(transform(FAM, -3 * G200.dxi, phi), np.roll(phi, -3))


def test_offgrid_shift_matches_lagrange_oracle(rng):
    phi = rng.standard_normal(200)
    for eta in (0.0123, -0.3071, 2.5 * G200.dxi):
        assert np.allclose(transform(FAM, eta, phi), shift_periodic(phi, eta, G200.dxi), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.integers(-400, 400), b=st.integers(-400, 400))
def test_lattice_group_action(a, b):
    phi = gauss(G200.nodes)
    h = G200.dxi
    lhs = transform(FAM, a * h, transform(FAM, b * h, phi))
    assert np.array_equal(lhs, transform(FAM, (a + b) * h, phi))


@settings(max_examples=40, deadline=None)
@given(eta=st.floats(-2.0, 2.0, allow_nan=False))
def test_shift_near_isometry(eta):
    phi = gauss(G200.nodes, w=0.05)
    n0 = norm(phi, G200) ** 2
    assert abs(norm(transform(FAM, eta, phi), G200) ** 2 - n0) <= 1e-3 * n0


@settings(max_examples=30, deadline=None)
@given(k=st.integers(-1000, 1000))
def test_lattice_shift_exact_isometry(k):
    phi = gauss(G200.nodes, w=0.05)
    assert norm(transform(FAM, k * G200.dxi, phi), G200) == pytest.approx(norm(phi, G200), rel=1e-14)


def test_transform_derivative_of_sine():
    x = G200.nodes
    eta = 0.1234
    got = transform_derivative(FAM, eta, np.sin(2 * np.pi * x))
    ref = -2 * np.pi * np.cos(2 * np.pi * (x - eta))
    assert np.max(np.abs(got - ref)) < 1e-5


def test_transform_derivative_of_constant():
    assert np.max(np.abs(transform_derivative(FAM, 0.3, np.ones(200)))) < 1e-12


def test_transform_derivative_sign_by_difference_quotient():
    phi = gauss(G200.nodes)
    eta, d = 0.2, 1e-4
    fd = (transform(FAM, eta + d, phi) - transform(FAM, eta - d, phi)) / (2 * d)
    assert np.max(np.abs(fd - transform_derivative(FAM, eta, phi))) < 1e-2
    assert np.max(np.abs(fd - transform_derivative(FAM, eta, phi))) < 1e-3 * np.max(np.abs(fd))


# virtual domain --------------------------------------------------------------------------------


def _virtual_family():
    g = Grid(101, topology=BOUNDED)
    path = np.linspace(0.0, 1.0, 11)
    return TransformFamily(VIRTUAL_SHIFT, g, virtual_grid_for(g, path), diff_order="D1_2nd"), path


def test_virtual_grid_covers_path():
    fam, path = _virtual_family()
    vg = fam.virtual_grid
    assert vg.dxi == pytest.approx(fam.grid.dxi)
    assert vg.xi0 <= fam.grid.xi0 - path.max() - 3 * vg.dxi + 1e-12


def test_virtual_shift_restricts_and_reproduces_nodes():
    fam, _ = _virtual_family()
    vg = fam.virtual_grid
    phi = gauss(vg.nodes, 0.3, 0.05)
    out = transform(fam, 0.2, phi)
    assert np.allclose(out, gauss(fam.grid.nodes - 0.2, 0.3, 0.05), atol=1e-14)
    assert np.allclose(transform(fam, 0.0, phi), gauss(fam.grid.nodes, 0.3, 0.05), atol=1e-14)


def test_virtual_shift_outside_hull_names_shift():
    fam, _ = _virtual_family()
    phi = np.ones(fam.virtual_grid.n)
    with pytest.raises(DomainExceededError, match="eta=1.5"):
        transform(fam, 1.5, phi)


def test_virtual_derivative_sign():
    fam, _ = _virtual_family()
    vg = fam.virtual_grid
    phi = gauss(vg.nodes, 0.3, 0.1)
    d = 1e-5
    fd = (transform(fam, 0.4 + d, phi) - transform(fam, 0.4 - d, phi)) / (2 * d)
    assert np.max(np.abs(fd - transform_derivative(fam, 0.4, phi))) < 2e-2 * np.max(np.abs(fd))
