"""Form calculus: type projectors, wedge, exterior derivative, Dolbeault split."""

import numpy as np
import pytest

from bck.errors import StructuralError
from bck.forms import (
    Form0,
    Form1,
    Form2,
    cauchy_riemann_residual,
    del_delbar,
    exterior_derivative,
    form_norm,
    split_bilinear,
    split_linear,
    wedge,
    wirtinger_first,
)
from bck.polys import MatrixPolynomial

from _fields import cmat


# -- split of real-linear maps ------------------------------------------------


def test_split_linear_identity_is_already_complex_linear():
    t10, t01 = split_linear(lambda v: np.asarray(v[0]), 1)
    assert abs(t10.p[0] - 1.0) <= 1e-15
    assert abs(t01.q[0]) <= 1e-15


def test_split_linear_conjugation_is_already_conjugate_linear():
    t10, t01 = split_linear(lambda v: np.asarray(np.conj(v[0])), 1)
    assert abs(t10.p[0]) <= 1e-15
    assert abs(t01.q[0] - 1.0) <= 1e-15


def test_split_linear_mixed_map():
    # T(v) = v + 2 conj(v): the projectors give back the two pieces exactly
    t10, t01 = split_linear(lambda v: np.asarray(v[0] + 2.0 * np.conj(v[0])), 1)
    assert abs(t10.p[0] - 1.0) <= 1e-12
    assert abs(t01.q[0] - 2.0) <= 1e-12


def test_split_linear_rejects_non_finite():
    with pytest.raises(ValueError):
        split_linear(lambda v: np.asarray(complex("nan")), 1)


def test_split_linear_round_trip_and_idempotence():
    rng = np.random.default_rng(11)
    dim, n = 3, 2
    a, b = cmat(rng, dim, n, n), cmat(rng, dim, n, n)

    def t(v):
        v = np.asarray(v, dtype=complex)
        return np.tensordot(v, a, (0, 0)) + np.tensordot(v.conj(), b, (0, 0))

    t10, t01 = split_linear(t, dim)
    for _ in range(4 * 2 * dim):
        v = cmat(rng, dim)
        assert np.linalg.norm(t10(v) + t01(v) - t(v)) <= 1e-12
        # components have the right linearity type
        assert np.linalg.norm(t10(1j * v) - 1j * t10(v)) <= 1e-12
        assert np.linalg.norm(t01(1j * v) + 1j * t01(v)) <= 1e-12
    again10, again01 = split_linear(lambda v: t10(v), dim)
    assert np.max(np.abs(again10.p - t10.p)) <= 1e-12
    assert np.max(np.abs(again01.q)) <= 1e-12


# -- split of skew bilinear maps ----------------------------------------------


def test_split_bilinear_mixed_type_example():
    # phi(v, w) = conj(v) w - conj(w) v is purely of mixed type
    phi = lambda v, w: np.asarray(np.conj(v[0]) * w[0] - np.conj(w[0]) * v[0])
    form = split_bilinear(phi, 1)
    assert abs(form.r11[0, 0] - 1.0) <= 1e-12
    assert np.max(np.abs(form.c20)) <= 1e-12
    assert np.max(np.abs(form.c02)) <= 1e-12


def test_split_bilinear_vanishing_symmetric_combinations():
    for phi in (
        lambda v, w: np.asarray(v[0] * w[0] - w[0] * v[0]),
        lambda v, w: np.asarray(np.conj(v[0] * w[0]) - np.conj(w[0] * v[0])),
    ):
        form = split_bilinear(phi, 1)
        assert form_norm(form) <= 1e-12


def test_split_bilinear_rejects_non_skew():
    with pytest.raises(StructuralError, match="asymmetry"):
        split_bilinear(lambda v, w: np.asarray(v[0] * w[0]), 1)


def test_split_bilinear_reassembles_random_two_forms():
    rng = np.random.default_rng(5)
    dim, n = 2, 2
    c20 = cmat(rng, dim, dim, n, n)
    c20 = c20 - np.swapaxes(c20, 0, 1)
    c02 = cmat(rng, dim, dim, n, n)
    c02 = c02 - np.swapaxes(c02, 0, 1)
    reference = Form2(c20, cmat(rng, dim, dim, n, n), c02)
    recovered = split_bilinear(reference, dim)
    assert np.max(np.abs(recovered.c20 - reference.c20)) <= 1e-12
    assert np.max(np.abs(recovered.r11 - reference.r11)) <= 1e-12
    assert np.max(np.abs(recovered.c02 - reference.c02)) <= 1e-12
    for _ in range(8):
        v, w = cmat(rng, dim), cmat(rng, dim)
        assert np.linalg.norm(recovered(v, w) - reference(v, w)) <= 1e-12


# -- wedge products -----------------------------------------------------------


def test_wedge_dzbar_dz():
    dzbar = Form1(np.array([0.0 + 0j]), np.array([1.0 + 0j]))
    dz = Form1(np.array([1.0 + 0j]), np.array([0.0 + 0j]))
    product = wedge(dzbar, dz)
    assert abs(product.r11[0, 0] - 1.0) <= 1e-15
    v, w = 0.3 + 0.7j, -0.2 + 0.4j
    expected = np.conj(v) * w - np.conj(w) * v
    assert abs(product(np.array([v]), np.array([w])) - expected) <= 1e-15


def test_wedge_scalar_zero_form_scales_pointwise():
    rng = np.random.default_rng(3)
    beta = Form1(cmat(rng, 2, 2, 2), cmat(rng, 2, 2, 2))
    scaled = wedge(Form0(np.asarray(2.5 + 0j)), beta, multiply=np.multiply)
    assert np.max(np.abs(scaled.p - 2.5 * beta.p)) == 0.0


def test_wedge_dz_dz_vanishes():
    dz = Form1(np.array([1.0 + 0j]), np.array([0.0 + 0j]))
    assert form_norm(wedge(dz, dz)) == 0.0


def test_wedge_rejects_degree_overflow():
    dz = Form1(np.array([1.0 + 0j]), np.array([0.0 + 0j]))
    two = wedge(dz, dz)
    with pytest.raises(ValueError, match="degree"):
        wedge(two, dz)
    with pytest.raises(ValueError, match="degree"):
        wedge(dz, two)


def test_wedge_skewness_exact():
    rng = np.random.default_rng(7)
    dim, n = 2, 2
    alpha = Form1(cmat(rng, dim, n, n), cmat(rng, dim, n, n))
    beta = Form1(cmat(rng, dim, n, n), cmat(rng, dim, n, n))
    product = wedge(alpha, beta)
    for _ in range(10):
        v, w = cmat(rng, dim), cmat(rng, dim)
        assert np.max(np.abs(product(v, w) + product(w, v))) == 0.0


# -- exterior derivative ------------------------------------------------------


def test_exterior_derivative_of_constant_vanishes():
    rng = np.random.default_rng(1)
    value = cmat(rng, 2, 2)
    df = exterior_derivative(lambda z: value, np.array([0.1 + 0.2j, -0.3j]), 1e-5)
    assert form_norm(df) <= 1e-10


def test_exterior_derivative_zbar_dz():
    field = lambda z: Form1(np.array([np.conj(z[0])]), np.array([0.0 + 0j]))
    two = exterior_derivative(field, np.array([0.2 + 0.1j]), 1e-5)
    assert abs(two.r11[0, 0] - 1.0) <= 1e-10
    assert abs(two.c20[0, 0]) <= 1e-10 and abs(two.c02[0, 0]) <= 1e-10


def test_exterior_derivative_z_dz_vanishes():
    field = lambda z: Form1(np.array([z[0]]), np.array([0.0 + 0j]))
    two = exterior_derivative(field, np.array([0.2 + 0.1j]), 1e-5)
    assert form_norm(two) <= 1e-10


def test_exterior_derivative_matches_alternating_sum():
    # directional-derivative definition: (d sigma)(v, w) = D_v[sigma(.)(w)] - D_w[sigma(.)(v)]
    rng = np.random.default_rng(9)
    dim, n = 2, 2
    ps = [MatrixPolynomial.random(rng, dim, (n, n), degree=2) for _ in range(dim)]
    qs = [MatrixPolynomial.random(rng, dim, (n, n), degree=2) for _ in range(dim)]

    def field(z):
        return Form1(np.stack([p(z) for p in ps]), np.stack([q(z) for q in qs]))

    z0 = np.array([0.2 - 0.1j, 0.05 + 0.3j])
    two = exterior_derivative(field, z0, 1e-5, richardson=True)
    eps = 1e-5
    for _ in range(4):
        v, w = cmat(rng, dim), cmat(rng, dim)
        dv = (field(z0 + eps * v)(w) - field(z0 - eps * v)(w)) / (2 * eps)
        dw = (field(z0 + eps * w)(v) - field(z0 - eps * w)(v)) / (2 * eps)
        assert np.linalg.norm(two(v, w) - (dv - dw)) <= 1e-5


def test_d_squared_and_dolbeault_squares_vanish():
    rng = np.random.default_rng(21)
    dim, n = 2, 2
    for _ in range(3):
        poly = MatrixPolynomial.random(rng, dim, (n, n), degree=3)
        z0 = 0.3 * cmat(rng, dim)

        def first(w):
            return exterior_derivative(poly, w, 1e-5, richardson=True)

        def only_q(w):
            df = first(w)
            return Form1(np.zeros_like(df.q), df.q)

        def only_p(w):
            df = first(w)
            return Form1(df.p, np.zeros_like(df.p))

        assert form_norm(exterior_derivative(first, z0, 1e-4)) <= 1e-5
        ddbar = exterior_derivative(only_q, z0, 1e-4)
        ddel = exterior_derivative(only_p, z0, 1e-4)
        assert np.max(np.abs(ddbar.c02)) <= 1e-5  # delbar^2 = 0
        assert np.max(np.abs(ddel.c20)) <= 1e-5  # del^2 = 0


def test_graded_product_rule():
    rng = np.random.default_rng(31)
    dim, n = 2, 2
    f = MatrixPolynomial.random(rng, dim, (n, n), degree=2)
    g = MatrixPolynomial.random(rng, dim, (n, n), degree=2)
    ps = [MatrixPolynomial.random(rng, dim, (n, n), degree=2) for _ in range(dim)]
    qs = [MatrixPolynomial.random(rng, dim, (n, n), degree=2) for _ in range(dim)]
    one_form = lambda z: Form1(np.stack([p(z) for p in ps]), np.stack([q(z) for q in qs]))
    z0 = np.array([0.15 + 0.2j, -0.1 + 0.05j])

    df = exterior_derivative(f, z0, 1e-5, richardson=True)
    dg = exterior_derivative(g, z0, 1e-5, richardson=True)
    dbeta = exterior_derivative(one_form, z0, 1e-5, richardson=True)

    lhs0 = exterior_derivative(lambda w: Form0(f(w) @ g(w)), z0, 1e-5, richardson=True)
    rhs0 = wedge(df, Form0(g(z0))) + wedge(Form0(f(z0)), dg)
    assert form_norm(lhs0 - rhs0) <= 1e-5

    lhs1 = exterior_derivative(lambda w: wedge(Form0(f(w)), one_form(w)), z0, 1e-4)
    rhs1 = wedge(df, one_form(z0)) + wedge(Form0(f(z0)), dbeta)
    assert form_norm(lhs1 - rhs1) <= 1e-5

    # degree-1 left factor flips the sign of the second term
    lhs2 = exterior_derivative(lambda w: wedge(one_form(w), Form0(g(w))), z0, 1e-4)
    rhs2 = wedge(dbeta, Form0(g(z0))) - wedge(one_form(z0), dg)
    assert form_norm(lhs2 - rhs2) <= 1e-5


# -- Wirtinger operators ------------------------------------------------------


def test_del_delbar_holomorphic_monomial():
    delf, delbarf = del_delbar(lambda z: np.asarray(z[0]), np.array([0.3 + 0.4j]), 1e-5)
    assert abs(delf.p[0] - 1.0) <= 1e-12
    assert abs(delbarf.q[0]) <= 1e-12


def test_del_delbar_modulus_squared():
    z0 = 0.3 - 0.2j
    delf, delbarf = del_delbar(
        lambda z: np.asarray(abs(z[0]) ** 2), np.array([z0]), 1e-5
    )
    assert abs(delf.p[0] - np.conj(z0)) <= 1e-11
    assert abs(delbarf.q[0] - z0) <= 1e-11


def test_del_delbar_antiholomorphic():
    delf, delbarf = del_delbar(
        lambda z: np.asarray(np.conj(z[0])), np.array([0.1 + 0.7j]), 1e-5
    )
    assert abs(delbarf.q[0] - 1.0) <= 1e-11
    assert abs(delf.p[0]) <= 1e-11


def test_del_plus_delbar_is_full_differential():
    rng = np.random.default_rng(17)
    poly = MatrixPolynomial.random(rng, 2, (2, 2), degree=3)
    z0 = np.array([0.2 + 0.1j, -0.3 + 0.05j])
    delf, delbarf = del_delbar(poly, z0, 1e-5)
    p, q = wirtinger_first(poly, z0, 1e-5)
    assert np.max(np.abs(delf.p - p)) <= 1e-12
    assert np.max(np.abs(delbarf.q - q)) <= 1e-12


def test_cauchy_riemann_residual_values():
    grid = np.linspace(-0.5, 0.5, 5)
    pts = np.array([[x + 1j * y] for x in grid for y in grid])
    assert cauchy_riemann_residual(lambda z: np.asarray(z[0] ** 2), pts, 1e-5) <= 1e-9
    resid = cauchy_riemann_residual(lambda z: np.asarray(np.conj(z[0])), pts, 1e-5)
    assert abs(resid - 1.0) <= 1e-9
    resid = cauchy_riemann_residual(lambda z: np.asarray(z[0].real), pts, 1e-5)
    assert abs(resid - 0.5) <= 1e-9


def test_cauchy_riemann_residual_rejects_empty_sample():
    with pytest.raises(ValueError, match="empty"):
        cauchy_riemann_residual(lambda z: np.asarray(z[0]), np.empty((0, 1)), 1e-5)


def test_exterior_derivative_stencil_domain_guard():
    from bck.errors import DomainError
    from bck.kernels import DiscPowerKernel

    disc = DiscPowerKernel(1)
    field = lambda z: np.asarray(z[0] ** 2)
    with pytest.raises(DomainError, match="stencil"):
        exterior_derivative(field, np.array([0.999]), 1e-2, domain=disc)
    with pytest.raises(DomainError, match="outside"):
        exterior_derivative(field, np.array([1.5]), 1e-5, domain=disc)


def test_form1_evaluation_additive_and_real_homogeneous():
    rng = np.random.default_rng(91)
    form = Form1(cmat(rng, 2, 2, 2), cmat(rng, 2, 2, 2))
    for _ in range(6):
        v, w = cmat(rng, 2), cmat(rng, 2)
        assert np.max(np.abs(form(v + w) - (form(v) + form(w)))) <= 1e-12
        for a in (-1.5, 0.25, 3.0):  # real scalars only; i mixes p and q
            assert np.max(np.abs(form(a * v) - a * form(v))) <= 1e-12
