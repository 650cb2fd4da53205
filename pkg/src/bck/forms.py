"""Vector- and operator-valued differential forms on complex coordinate charts.

Forms live at a point of an open set in C^d and take values in complex
matrices (or vectors).  They are stored by their coefficients on the
dz_j / dzbar_k basis:

* degree 1:  T(v) = sum_j P_j v_j + sum_k Q_k conj(v_k)
* degree 2:  split into a (2,0) block on dz_j ^ dz_k, a (1,1) block on
  dzbar_k ^ dz_j, and a (0,2) block on dzbar_j ^ dzbar_k.

The (1,1) block is stored in the dzbar ^ dz orientation, so the curvature
of the unit-disc weight (1 - |z|^2)^(-nu) comes out with the positive
coefficient nu / (1 - |z|^2)^2.

Derivatives are central finite differences on the 2d underlying real
coordinates (Wirtinger combinations), with optional Richardson
extrapolation for one extra order pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, StructuralError
from .linalg import frob

__all__ = [
    "Form0",
    "Form1",
    "Form2",
    "form_norm",
    "split_linear",
    "split_bilinear",
    "wedge",
    "wirtinger_first",
    "wirtinger_mixed",
    "exterior_derivative",
    "del_delbar",
    "cauchy_riemann_residual",
    "as_point",
]


def as_point(z, dim: int | None = None) -> np.ndarray:
    """Coerce a chart point to a finite complex vector of shape (d,)."""
    p = np.atleast_1d(np.asarray(z, dtype=complex))
    if p.ndim != 1 or p.size < 1:
        raise ValueError("chart point must be a vector of complex coordinates")
    if dim is not None and p.size != dim:
        raise ValueError(f"chart point has {p.size} coordinates, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise ValueError("chart point has non-finite coordinates")
    return p


# ---------------------------------------------------------------------------
# point forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Form0:
    """Degree-0 form value: a matrix (or vector) at one chart point."""

    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=complex))

    degree = 0

    def __call__(self) -> np.ndarray:
        return self.value


@dataclass(frozen=True)
class Form1:
    """Degree-1 form value with coefficients p on dz_j and q on dzbar_k.

    Evaluation on a tangent vector v in C^d is
    sum_j p[j] v_j + sum_k q[k] conj(v_k), which is additive and
    real-homogeneous in v.
    """

    p: np.ndarray  # (d, ...) coefficients of dz_j
    q: np.ndarray  # (d, ...) coefficients of dzbar_k

    def __post_init__(self):
        p = np.asarray(self.p, dtype=complex)
        q = np.asarray(self.q, dtype=complex)
        if p.shape != q.shape:
            raise ValueError("p and q coefficient stacks must share a shape")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    degree = 1

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    @classmethod
    def zero(cls, dim: int, value_shape: tuple[int, ...]) -> "Form1":
        z = np.zeros((dim, *value_shape), dtype=complex)
        return cls(z, z.copy())

    def __call__(self, v) -> np.ndarray:
        v = as_point(v, self.dim)
        return np.tensordot(v, self.p, axes=(0, 0)) + np.tensordot(
            v.conj(), self.q, axes=(0, 0)
        )

    def __add__(self, other: "Form1") -> "Form1":
        return Form1(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "Form1") -> "Form1":
        return Form1(self.p - other.p, self.q - other.q)

    def __mul__(self, scalar) -> "Form1":
        return Form1(self.p * scalar, self.q * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Form2:
    """Degree-2 form value split by type.

    c20[j, k] multiplies dz_j ^ dz_k and is antisymmetric in (j, k);
    r11[k, j] multiplies dzbar_k ^ dz_j; c02[j, k] multiplies
    dzbar_j ^ dzbar_k and is antisymmetric.  Evaluation is real-bilinear
    and skew; the (1,1) block is invariant under (v, w) -> (iv, iw).
    """

    c20: np.ndarray  # (d, d, ...)
    r11: np.ndarray  # (d, d, ...)
    c02: np.ndarray  # (d, d, ...)

    def __post_init__(self):
        c20 = np.asarray(self.c20, dtype=complex)
        r11 = np.asarray(self.r11, dtype=complex)
        c02 = np.asarray(self.c02, dtype=complex)
        if not (c20.shape == r11.shape == c02.shape):
            raise ValueError("coefficient blocks must share a shape")
        object.__setattr__(self, "c20", c20)
        object.__setattr__(self, "r11", r11)
        object.__setattr__(self, "c02", c02)

    degree = 2

    @property
    def dim(self) -> int:
        return self.c20.shape[0]

    @classmethod
    def zero(cls, dim: int, value_shape: tuple[int, ...]) -> "Form2":
        z = np.zeros((dim, dim, *value_shape), dtype=complex)
        return cls(z, z.copy(), z.copy())

    def _raw(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        def pair(t, a, b):
            return np.tensordot(b, np.tensordot(a, t, axes=(0, 0)), axes=(0, 0))

        out = pair(self.c20, v, w)
        out = out + pair(self.r11, v.conj(), w) - pair(self.r11, w.conj(), v)
        out = out + pair(self.c02, v.conj(), w.conj())
        return out

    def __call__(self, v, w) -> np.ndarray:
        v = as_point(v, self.dim)
        w = as_point(w, self.dim)
        # antisymmetrized evaluation: skewness holds exactly, not just to roundoff
        return 0.5 * (self._raw(v, w) - self._raw(w, v))

    def __add__(self, other: "Form2") -> "Form2":
        return Form2(self.c20 + other.c20, self.r11 + other.r11, self.c02 + other.c02)

    def __sub__(self, other: "Form2") -> "Form2":
        return Form2(self.c20 - other.c20, self.r11 - other.r11, self.c02 - other.c02)

    def __mul__(self, scalar) -> "Form2":
        return Form2(self.c20 * scalar, self.r11 * scalar, self.c02 * scalar)

    __rmul__ = __mul__


def form_norm(form) -> float:
    """Max Frobenius norm over the coefficient matrices of a form."""
    if isinstance(form, Form0):
        return frob(form.value)
    if isinstance(form, Form1):
        return max(
            max((frob(m) for m in form.p), default=0.0),
            max((frob(m) for m in form.q), default=0.0),
        )
    if isinstance(form, Form2):
        worst = 0.0
        for block in (form.c20, form.r11, form.c02):
            flat = block.reshape((-1, *block.shape[2:]))
            worst = max(worst, max((frob(m) for m in flat), default=0.0))
        return worst
    raise TypeError(f"not a form: {type(form)!r}")


# ---------------------------------------------------------------------------
# type projectors
# ---------------------------------------------------------------------------


def split_linear(t: Callable[[np.ndarray], np.ndarray], dim: int) -> tuple[Form1, Form1]:
    """Split a real-linear map C^d -> values into C-linear and conjugate-linear parts.

    Uses the projectors T10(v) = (T(v) - i T(iv)) / 2 and
    T01(v) = (T(v) + i T(iv)) / 2, probed on the canonical basis
    directions e_j and i e_j.

    Returns
    -------
    (t10, t01)
        Two Form1 values with t01.p = 0 and t10.q = 0, satisfying
        t10(v) + t01(v) = t(v) for every v.
    """
    basis = np.eye(dim, dtype=complex)
    te = [np.asarray(t(basis[j]), dtype=complex) for j in range(dim)]
    tie = [np.asarray(t(1j * basis[j]), dtype=complex) for j in range(dim)]
    for m in (*te, *tie):
        if not np.all(np.isfinite(m)):
            raise ValueError("map returned non-finite values on probe directions")
    p = np.stack([0.5 * (te[j] - 1j * tie[j]) for j in range(dim)])
    q = np.stack([0.5 * (te[j] + 1j * tie[j]) for j in range(dim)])
    zero = np.zeros_like(p)
    return Form1(p, zero), Form1(zero.copy(), q)


def split_bilinear(
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dim: int,
    skew_tol: float = 1e-12,
) -> Form2:
    """Decompose a skew real-bilinear map into its (2,0), (1,1), (0,2) blocks.

    The mixed block is the +1 eigenspace of the rotation
    (Q phi)(v, w) = phi(iv, iw); the pure block (its -1 eigenspace) is
    further split by C-linearity in the first argument.

    Raises
    ------
    StructuralError
        If phi is not skew on the probe basis (the measured asymmetry is
        included in the message).
    """
    basis = np.eye(dim, dtype=complex)
    probes = [basis[j] for j in range(dim)] + [1j * basis[j] for j in range(dim)]
    m = len(probes)
    samples = np.empty((m, m), dtype=object)
    for a in range(m):
        for b in range(m):
            samples[a, b] = np.asarray(phi(probes[a], probes[b]), dtype=complex)

    scale = max(1.0, max(frob(samples[a, b]) for a in range(m) for b in range(m)))
    asym = max(
        frob(samples[a, b] + samples[b, a]) for a in range(m) for b in range(m)
    )
    if asym > skew_tol * scale:
        raise StructuralError(
            f"bilinear map is not skew: measured asymmetry {asym:.3e}"
        )

    def rho(a):  # index and sign of i * basis_a within the probe list
        return (a + dim, 1.0) if a < dim else (a - dim, -1.0)

    vshape = samples[0, 0].shape
    mixed = np.empty((m, m, *vshape), dtype=complex)
    pure = np.empty_like(mixed)
    for a in range(m):
        for b in range(m):
            ra, sa = rho(a)
            rb, sb = rho(b)
            rotated = sa * sb * samples[ra, rb]
            mixed[a, b] = 0.5 * (samples[a, b] + rotated)
            pure[a, b] = 0.5 * (samples[a, b] - rotated)

    r11 = np.empty((dim, dim, *vshape), dtype=complex)
    c20 = np.empty_like(r11)
    c02 = np.empty_like(r11)
    for k in range(dim):
        for j in range(dim):
            r11[k, j] = 0.5 * (mixed[k, j] + 1j * mixed[dim + k, j])
            # rotate the first argument only: phi_p(i e_k, e_j)
            rot1 = pure[dim + k, j]
            c20[k, j] = 0.5 * (pure[k, j] - 1j * rot1)
            c02[k, j] = 0.5 * (pure[k, j] + 1j * rot1)
    c20 = 0.5 * (c20 - np.swapaxes(c20, 0, 1))
    c02 = 0.5 * (c02 - np.swapaxes(c02, 0, 1))
    return Form2(c20, r11, c02)


# ---------------------------------------------------------------------------
# wedge product
# ---------------------------------------------------------------------------


def _default_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim == 0 or y.ndim == 0:
        return x * y
    return x @ y


def wedge(a, b, multiply: Callable | None = None):
    """Exterior product of two point forms of total degree <= 2.

    `multiply` combines a value of `a` with a value of `b`; the default is
    operator composition (matrix product), with scalar values multiplied
    pointwise.  For 1-forms the normalization is
    (a ^ b)(v, w) = a(v) b(w) - a(w) b(v), and a degree-0 factor acts
    pointwise on every coefficient.
    """
    mul = multiply or _default_mul
    da, db = a.degree, b.degree
    if da > db:
        # degree-0 factor on the right: multiply every coefficient from the right
        if db == 0:
            if da == 1:
                return Form1(
                    np.stack([mul(m, b.value) for m in a.p]),
                    np.stack([mul(m, b.value) for m in a.q]),
                )
            blocks = [
                np.stack([np.stack([mul(m, b.value) for m in row]) for row in blk])
                for blk in (a.c20, a.r11, a.c02)
            ]
            return Form2(*blocks)
        raise ValueError(f"unsupported degree combination ({da}, {db})")
    if da == 0:
        if db == 0:
            return Form0(mul(a.value, b.value))
        if db == 1:
            return Form1(
                np.stack([mul(a.value, m) for m in b.p]),
                np.stack([mul(a.value, m) for m in b.q]),
            )
        blocks = [
            np.stack([np.stack([mul(a.value, m) for m in row]) for row in blk])
            for blk in (b.c20, b.r11, b.c02)
        ]
        return Form2(*blocks)
    if da == 1 and db == 1:
        d = a.dim
        if d != b.dim:
            raise ValueError("forms live on charts of different dimension")
        vshape = mul(a.p[0], b.p[0]).shape
        c20 = np.zeros((d, d, *vshape), dtype=complex)
        r11 = np.zeros_like(c20)
        c02 = np.zeros_like(c20)
        for j in range(d):
            for k in range(d):
                c20[j, k] = mul(a.p[j], b.p[k]) - mul(a.p[k], b.p[j])
                c02[j, k] = mul(a.q[j], b.q[k]) - mul(a.q[k], b.q[j])
                r11[k, j] = mul(a.q[k], b.p[j]) - mul(a.p[j], b.q[k])
        return Form2(c20, r11, c02)
    raise ValueError(f"unsupported degree combination ({da}, {db})")


# ---------------------------------------------------------------------------
# finite differences on the underlying real coordinates
# ---------------------------------------------------------------------------


def _steps_array(step, dim: int) -> np.ndarray:
    s = np.broadcast_to(np.asarray(step, dtype=float), (dim,)).copy()
    if np.any(s <= 0):
        raise ValueError("finite-difference steps must be positive")
    return s


def _check_stencil(domain, z: np.ndarray, radius: float) -> None:
    if domain is None:
        return
    if not domain.contains(z):
        raise DomainError(f"point {z} is outside the chart domain")
    if domain.boundary_distance(z) <= radius:
        raise DomainError(
            f"finite-difference stencil of radius {radius:.3e} around {z} "
            "leaves the chart domain"
        )


def wirtinger_first(
    f: Callable[[np.ndarray], np.ndarray],
    z,
    step,
    richardson: bool = False,
    domain=None,
) -> tuple[np.ndarray, np.ndarray]:
    """First Wirtinger derivatives of a field by central differences.

    Returns (p, q) of shape (d, ...) with p[j] ~ df/dz_j and
    q[k] ~ df/dzbar_k, i.e. the coefficients of the 1-form df.  With
    `richardson` the h and h/2 stencils are combined for fourth-order
    accuracy.
    """
    z = as_point(z)
    d = z.size
    steps = _steps_array(step, d)
    _check_stencil(domain, z, 2.0 * float(np.max(steps)))

    def central(j, h):
        e = np.zeros(d, dtype=complex)
        e[j] = h
        fx = (np.asarray(f(z + e)) - np.asarray(f(z - e))) / (2.0 * h)
        fy = (np.asarray(f(z + 1j * e)) - np.asarray(f(z - 1j * e))) / (2.0 * h)
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)

    ps, qs = [], []
    for j in range(d):
        h = steps[j]
        pj, qj = central(j, h)
        if richardson:
            pj2, qj2 = central(j, h / 2.0)
            pj = (4.0 * pj2 - pj) / 3.0
            qj = (4.0 * qj2 - qj) / 3.0
        ps.append(pj)
        qs.append(qj)
    return np.stack(ps), np.stack(qs)


def wirtinger_mixed(
    f: Callable[[np.ndarray], np.ndarray],
    z,
    k: int,
    j: int,
    step,
    richardson: bool = False,
    domain=None,
) -> np.ndarray:
    """Mixed second Wirtinger derivative d^2 f / dzbar_k dz_j.

    Assembled from second central differences on the real coordinates of
    axes k and j.  For k == j the cross terms cancel exactly and only the
    quarter-Laplacian on that axis survives.
    """
    z = as_point(z)
    d = z.size
    steps = _steps_array(step, d)
    _check_stencil(domain, z, 2.0 * float(max(steps[k], steps[j])))

    def offset(axis, h, imag):
        e = np.zeros(d, dtype=complex)
        e[axis] = 1j * h if imag else h
        return e

    def same_axis(h):
        ex = offset(j, h, False)
        ey = offset(j, h, True)
        f0 = np.asarray(f(z))
        dxx = (np.asarray(f(z + ex)) - 2.0 * f0 + np.asarray(f(z - ex))) / h**2
        dyy = (np.asarray(f(z + ey)) - 2.0 * f0 + np.asarray(f(z - ey))) / h**2
        return 0.25 * (dxx + dyy)

    def cross(u, v, hk, hj):
        return (
            np.asarray(f(z + u + v))
            - np.asarray(f(z + u - v))
            - np.asarray(f(z - u + v))
            + np.asarray(f(z - u - v))
        ) / (4.0 * hk * hj)

    def distinct(hk, hj):
        xk, yk = offset(k, hk, False), offset(k, hk, True)
        xj, yj = offset(j, hj, False), offset(j, hj, True)
        return 0.25 * (
            cross(xk, xj, hk, hj)
            + 1j * cross(yk, xj, hk, hj)
            - 1j * cross(xk, yj, hk, hj)
            + cross(yk, yj, hk, hj)
        )

    def estimate(scale):
        if k == j:
            return same_axis(steps[j] * scale)
        return distinct(steps[k] * scale, steps[j] * scale)

    val = estimate(1.0)
    if richardson:
        val = (4.0 * estimate(0.5) - val) / 3.0
    return val


# ---------------------------------------------------------------------------
# exterior derivative and Dolbeault operators
# ---------------------------------------------------------------------------


def _as_field_value(value):
    if isinstance(value, (Form0, Form1)):
        return value
    return Form0(np.asarray(value, dtype=complex))


def exterior_derivative(
    field: Callable[[np.ndarray], object],
    z,
    step,
    richardson: bool = False,
    domain=None,
):
    """Exterior derivative of a 0- or 1-form field at one point.

    The field maps chart points to Form0/Form1 values (bare arrays count
    as 0-forms); its coefficient fields are differentiated by central
    differences and reassembled into the degree p+1 coefficients.
    """
    z = as_point(z)
    probe = _as_field_value(field(z))
    if probe.degree == 0:
        p, q = wirtinger_first(
            lambda w: _as_field_value(field(w)).value,
            z,
            step,
            richardson=richardson,
            domain=domain,
        )
        return Form1(p, q)

    d = z.size
    dp_p, dq_p = wirtinger_first(
        lambda w: np.asarray(field(w).p), z, step, richardson=richardson, domain=domain
    )
    dp_q, dq_q = wirtinger_first(
        lambda w: np.asarray(field(w).q), z, step, richardson=richardson, domain=domain
    )
    # dp_p[m, j] ~ d P_j / dz_m ; dq_p[k, j] ~ d P_j / dzbar_k ; etc.
    vshape = probe.p.shape[1:]
    c20 = np.zeros((d, d, *vshape), dtype=complex)
    r11 = np.zeros_like(c20)
    c02 = np.zeros_like(c20)
    for m in range(d):
        for j in range(d):
            c20[m, j] = dp_p[m, j] - dp_p[j, m]
            r11[m, j] = dq_p[m, j] - dp_q[j, m]
            c02[m, j] = dq_q[m, j] - dq_q[j, m]
    return Form2(c20, r11, c02)


def del_delbar(
    f: Callable[[np.ndarray], np.ndarray],
    z,
    step,
    richardson: bool = False,
    domain=None,
) -> tuple[Form1, Form1]:
    """The operators d = del + delbar split for a 0-form field.

    Returns (del f, delbar f): the first carries only dz coefficients,
    the second only dzbar coefficients, and their sum is the full
    differential df.
    """
    p, q = wirtinger_first(f, z, step, richardson=richardson, domain=domain)
    zero = np.zeros_like(p)
    return Form1(p, zero), Form1(zero.copy(), q)


def cauchy_riemann_residual(
    f: Callable[[np.ndarray], np.ndarray],
    points,
    step,
    richardson: bool = False,
    domain=None,
) -> float:
    """Max over sample points of || delbar f ||.

    Vanishes (up to finite-difference noise) exactly when f is
    numerically holomorphic on the sample.  `points` is an (N, d) array
    or anything with a points() method.
    """
    if hasattr(points, "points"):
        points = points.points()
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[0] == 0:
        raise ValueError("empty point sample")
    worst = 0.0
    for zz in pts:
        _, q = wirtinger_first(f, zz, step, richardson=richardson, domain=domain)
        worst = max(worst, max(frob(m) for m in q))
    return worst
