"""Built-in invariant suite for the form calculus and the triple correspondence.

Runs a deterministic corpus of random polynomial fields through the
structural identities the calculus must satisfy: projector round trips,
wedge skewness, d d = 0 and its Dolbeault refinements on 0-form fields,
the graded product rule, and the Herm/Symm/Skew round trips.  Each entry
reports a residual against a published tolerance; the command-line
`selftest` task and the test suite both consume the same list.
"""

from __future__ import annotations

import numpy as np

from . import forms
from .forms import Form0, Form1, exterior_derivative, form_norm, split_bilinear, split_linear
from .linalg import frob
from .polys import MatrixPolynomial
from .positivity import BilinearSamples, triple_join, triple_split

__all__ = ["run_selfcheck"]

_STEP1 = 1e-5
_STEP2 = 1e-4


def _entry(name, residual, tolerance):
    return {
        "name": name,
        "residual": float(residual),
        "tolerance": float(tolerance),
        "passed": bool(residual <= tolerance),
    }


def _random_linear_map(rng, dim, n):
    a = rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n))
    b = rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n))

    def t(v):
        v = np.asarray(v, dtype=complex)
        return np.tensordot(v, a, axes=(0, 0)) + np.tensordot(v.conj(), b, axes=(0, 0))

    return t, a, b


def _random_probe(rng, dim):
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def _check_projectors(rng, results):
    dim, n = 2, 2
    worst_split = 0.0
    worst_idem = 0.0
    for _ in range(4):
        t, a, b = _random_linear_map(rng, dim, n)
        t10, t01 = split_linear(t, dim)
        for _ in range(4 * dim):
            v = _random_probe(rng, dim)
            worst_split = max(worst_split, frob(t10(v) + t01(v) - t(v)))
        again10, again01 = split_linear(lambda v: t10(v), dim)
        worst_idem = max(
            worst_idem,
            float(np.max(np.abs(again10.p - t10.p))),
            float(np.max(np.abs(again01.q))),
        )
    results.append(_entry("split_linear round trip", worst_split, 1e-12))
    results.append(_entry("split_linear idempotence", worst_idem, 1e-12))


def _check_bilinear_split(rng, results):
    dim, n = 2, 2
    worst = 0.0
    for _ in range(4):
        c20 = rng.standard_normal((dim, dim, n, n)) + 1j * rng.standard_normal((dim, dim, n, n))
        c20 = c20 - np.swapaxes(c20, 0, 1)
        r11 = rng.standard_normal((dim, dim, n, n)) + 1j * rng.standard_normal((dim, dim, n, n))
        c02 = rng.standard_normal((dim, dim, n, n)) + 1j * rng.standard_normal((dim, dim, n, n))
        c02 = c02 - np.swapaxes(c02, 0, 1)
        reference = forms.Form2(c20, r11, c02)
        recovered = split_bilinear(lambda v, w: reference(v, w), dim)
        for _ in range(8):
            v, w = _random_probe(rng, dim), _random_probe(rng, dim)
            worst = max(worst, frob(recovered(v, w) - reference(v, w)))
    results.append(_entry("split_bilinear reassembly", worst, 1e-12))


def _check_wedge_skewness(rng, results):
    dim, n = 2, 2
    worst = 0.0
    for _ in range(4):
        alpha = Form1(
            rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n)),
            rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n)),
        )
        beta = Form1(
            rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n)),
            rng.standard_normal((dim, n, n)) + 1j * rng.standard_normal((dim, n, n)),
        )
        product = forms.wedge(alpha, beta)
        for _ in range(6):
            v, w = _random_probe(rng, dim), _random_probe(rng, dim)
            worst = max(worst, frob(product(v, w) + product(w, v)))
    results.append(_entry("wedge skewness", worst, 1e-12))


def _check_d_squared(rng, results):
    dim, n = 2, 2
    worst_dd = 0.0
    worst_delbar = 0.0
    worst_del = 0.0
    for _ in range(3):
        poly = MatrixPolynomial.random(rng, dim, (n, n), degree=3)
        z0 = 0.3 * _random_probe(rng, dim)

        def first(w):
            return exterior_derivative(poly, w, _STEP1, richardson=True)

        dd = exterior_derivative(first, z0, _STEP2)
        worst_dd = max(worst_dd, form_norm(dd))
        # Dolbeault refinements: the (0,2) block of d(delbar f) and the
        # (2,0) block of d(del f) are delbar^2 f and del^2 f.
        flat02 = dd.c02.reshape((-1, n, n))
        flat20 = dd.c20.reshape((-1, n, n))

        def only_q(w):
            df = exterior_derivative(poly, w, _STEP1, richardson=True)
            return Form1(np.zeros_like(df.q), df.q)

        def only_p(w):
            df = exterior_derivative(poly, w, _STEP1, richardson=True)
            return Form1(df.p, np.zeros_like(df.p))

        ddbar = exterior_derivative(only_q, z0, _STEP2)
        ddel = exterior_derivative(only_p, z0, _STEP2)
        worst_delbar = max(
            worst_delbar, max(frob(m) for m in ddbar.c02.reshape((-1, n, n)))
        )
        worst_del = max(worst_del, max(frob(m) for m in ddel.c20.reshape((-1, n, n))))
    results.append(_entry("d squared vanishes", worst_dd, 1e-5))
    results.append(_entry("delbar squared vanishes", worst_delbar, 1e-5))
    results.append(_entry("del squared vanishes", worst_del, 1e-5))


def _check_leibniz(rng, results):
    dim, n = 2, 2
    worst = 0.0
    for _ in range(3):
        f = MatrixPolynomial.random(rng, dim, (n, n), degree=2)
        g = MatrixPolynomial.random(rng, dim, (n, n), degree=2)
        one_form = _poly_one_form(rng, dim, n, degree=2)
        z0 = 0.3 * _random_probe(rng, dim)

        # degree (0,0)
        product = lambda w: Form0(f(w) @ g(w))
        lhs = exterior_derivative(product, z0, _STEP1, richardson=True)
        df = exterior_derivative(f, z0, _STEP1, richardson=True)
        dg = exterior_derivative(g, z0, _STEP1, richardson=True)
        rhs = forms.wedge(df, Form0(g(z0))) + forms.wedge(Form0(f(z0)), dg)
        worst = max(worst, form_norm(lhs - rhs))

        # degree (0,1)
        product01 = lambda w: forms.wedge(Form0(f(w)), one_form(w))
        lhs01 = exterior_derivative(product01, z0, _STEP2)
        dbeta = exterior_derivative(one_form, z0, _STEP1, richardson=True)
        rhs01 = forms.wedge(df, one_form(z0)) + forms.wedge(Form0(f(z0)), dbeta)
        worst = max(worst, form_norm(lhs01 - rhs01))

        # degree (1,0) picks up the sign of the graded product rule
        product10 = lambda w: forms.wedge(one_form(w), Form0(g(w)))
        lhs10 = exterior_derivative(product10, z0, _STEP2)
        rhs10 = forms.wedge(dbeta, Form0(g(z0))) - forms.wedge(one_form(z0), dg)
        worst = max(worst, form_norm(lhs10 - rhs10))
    results.append(_entry("graded product rule", worst, 1e-5))


def _poly_one_form(rng, dim, n, degree):
    ps = [MatrixPolynomial.random(rng, dim, (n, n), degree=degree) for _ in range(dim)]
    qs = [MatrixPolynomial.random(rng, dim, (n, n), degree=degree) for _ in range(dim)]

    def field(w):
        return Form1(np.stack([p(w) for p in ps]), np.stack([q(w) for q in qs]))

    return field


def _check_triple(rng, results):
    dim, n = 2, 2
    worst_split_join = 0.0
    worst_join_split = 0.0
    for _ in range(6):
        c = rng.standard_normal((dim, dim, n, n)) + 1j * rng.standard_normal((dim, dim, n, n))
        for j in range(dim):  # Hermitian sesquilinear symmetry of the coefficients
            c[j, j] = 0.5 * (c[j, j] + c[j, j].conj().T)
            for k in range(j + 1, dim):
                c[k, j] = c[j, k].conj().T

        def herm(v, w):
            out = np.zeros((n, n), dtype=complex)
            for j in range(dim):
                for k in range(dim):
                    out += c[j, k] * v[j] * np.conj(w[k])
            return out

        triple = triple_split(herm, dim)
        rebuilt = triple_join(triple.skew, dim)
        worst_split_join = max(
            worst_split_join,
            rebuilt.herm.combine(triple.herm, 1.0, -1.0).norm(),
            rebuilt.skew.combine(triple.skew, 1.0, -1.0).norm(),
        )
        again = triple_split(rebuilt.herm, dim)
        worst_join_split = max(
            worst_join_split, again.skew.combine(triple.skew, 1.0, -1.0).norm()
        )
    results.append(_entry("triple join after split", worst_split_join, 1e-12))
    results.append(_entry("triple split after join", worst_join_split, 1e-12))


def run_selfcheck(seed: int = 0) -> list[dict]:
    """Run the invariant corpus; returns one pass/fail entry per check."""
    rng = np.random.default_rng(seed)
    results: list[dict] = []
    _check_projectors(rng, results)
    _check_bilinear_split(rng, results)
    _check_wedge_skewness(rng, results)
    _check_d_squared(rng, results)
    _check_leibniz(rng, results)
    _check_triple(rng, results)
    return results
