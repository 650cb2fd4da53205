"""Operator-valued reproducing kernels on complex chart domains.

A kernel assigns to each ordered pair of chart points an n x n matrix
kappa(z, w), the block of the kernel in a fixed trivialization.  The
fiber inner product at z is (xi | eta)_z = eta* h0(z) xi with h0 the
base fiber metric (identity for the trivial-bundle families); the kernel
symmetry h0(t) kappa(t, s) = kappa(s, t)* h0(s) makes the weighted
block matrix [h0(t_l) kappa(t_l, t_j)]_{l,j} Hermitian, and that matrix
is exactly the quadratic form whose nonnegativity defines kernel
positivity.

Built-in families:

* ``disc_power(nu)`` - the scalar weight (1 - z conj(w))**(-nu) on the
  open unit disc (Hardy space at nu = 1, Bergman spaces at nu > 1).
* ``from_sections(E, G)`` - kappa(z, w) = E(z) G^{-1} E(w)* for a
  holomorphic n x m section matrix E and a Hermitian positive Gram G.
* ``universal_grassmann(N, k)`` - restriction of orthogonal projections
  between k-planes in C^N, written in the graph chart B -> span[I; B].
* ``constant(M)`` - a fixed block; non-PSD blocks are accepted so that
  negative positivity tests have something to chew on.
* user hooks wrapping arbitrary callables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, StructuralError
from .forms import as_point
from .linalg import (
    eig_margin,
    frob,
    hermitize,
    mgs_orthonormalize,
    relative_rank,
    smallest_singular_value,
)

__all__ = [
    "KernelSpec",
    "DiscPowerKernel",
    "ConstantKernel",
    "SectionKernel",
    "GrassmannKernel",
    "UserKernel",
    "DualKernel",
    "disc_power",
    "constant_kernel",
    "from_sections",
    "universal_grassmann",
    "dual_kernel",
    "eval_kernel",
    "GramMatrix",
    "gram",
    "psd_check",
    "rkhs_inner",
    "RkhsModel",
    "reproducing_check",
    "AdmissibilityResult",
    "admissibility",
    "smoothness_residual",
    "Lemma51Report",
    "lemma51_consistency",
    "evaluation_adjoint_check",
    "Subspace",
    "universal_kernel",
]


class KernelSpec:
    """Base class for operator-valued kernels on a chart domain in C^d."""

    variant: str = "abstract"
    fiber_dim: int = 1
    base_dim: int = 1
    holomorphic: bool = False  # whether sections z -> kappa(z, t) xi should be

    def eval(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fiber_metric(self, z: np.ndarray) -> np.ndarray:
        """Base Hermitian structure h0(z) of the underlying bundle."""
        return np.eye(self.fiber_dim, dtype=complex)

    def contains(self, z) -> bool:
        return True

    def boundary_distance(self, z) -> float:
        return np.inf

    def params(self) -> dict:
        return {}

    # -- helpers -----------------------------------------------------------

    def point(self, z) -> np.ndarray:
        z = as_point(z, self.base_dim)
        if not self.contains(z):
            raise DomainError(f"point {z} lies outside the {self.variant} domain")
        return z

    def describe(self) -> dict:
        out = {"variant": self.variant, "fiber_dim": self.fiber_dim, "base_dim": self.base_dim}
        out.update(self.params())
        return out


def eval_kernel(spec: KernelSpec, z, w) -> np.ndarray:
    """Evaluate kappa(z, w) with domain and finiteness checks."""
    zz = spec.point(z)
    ww = spec.point(w)
    out = np.asarray(spec.eval(zz, ww), dtype=complex)
    if out.shape != (spec.fiber_dim, spec.fiber_dim):
        raise StructuralError(
            f"kernel block has shape {out.shape}, expected "
            f"({spec.fiber_dim}, {spec.fiber_dim})"
        )
    if not np.all(np.isfinite(out)):
        raise StructuralError("kernel block has non-finite entries")
    return out


class DiscPowerKernel(KernelSpec):
    """(1 - z conj(w))**(-nu) on the open unit disc; nu >= 1."""

    variant = "disc_power"
    holomorphic = True

    def __init__(self, nu: float):
        if nu < 1:
            raise ValueError("disc_power requires nu >= 1")
        self.nu = float(nu)
        self.fiber_dim = 1
        self.base_dim = 1

    def eval(self, z, w):
        val = (1.0 - z[0] * np.conj(w[0])) ** (-self.nu)
        return np.array([[val]], dtype=complex)

    def contains(self, z):
        return bool(np.abs(np.asarray(z, dtype=complex)).max() < 1.0)

    def boundary_distance(self, z):
        return float(1.0 - np.abs(np.asarray(z, dtype=complex)).max())

    def params(self):
        return {"nu": self.nu}


class ConstantKernel(KernelSpec):
    """kappa(z, w) = M everywhere; M need not be positive (pseudo-kernels)."""

    variant = "constant"
    holomorphic = True

    def __init__(self, matrix, base_dim: int = 1):
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if m.shape[0] != m.shape[1]:
            raise ValueError("constant kernel block must be square")
        self.matrix = m
        self.fiber_dim = m.shape[0]
        self.base_dim = int(base_dim)

    def eval(self, z, w):
        return self.matrix.copy()

    def params(self):
        return {"matrix": self.matrix.tolist()}


class SectionKernel(KernelSpec):
    """kappa(z, w) = E(z) G^{-1} E(w)* from an n x m section matrix field."""

    variant = "from_sections"
    holomorphic = True

    def __init__(
        self,
        sections: Callable[[np.ndarray], np.ndarray],
        base_dim: int = 1,
        gram: np.ndarray | None = None,
        params: dict | None = None,
    ):
        self.sections = sections
        self.base_dim = int(base_dim)
        probe = np.asarray(sections(np.zeros(self.base_dim, dtype=complex)), dtype=complex)
        if probe.ndim == 1:
            probe = probe[None, :]
        if probe.ndim != 2:
            raise ValueError("section field must return an n x m matrix")
        self.fiber_dim, self.section_count = probe.shape
        if gram is None:
            gram = np.eye(self.section_count, dtype=complex)
        gram = np.asarray(gram, dtype=complex)
        if gram.shape != (self.section_count, self.section_count):
            raise ValueError("Gram matrix shape does not match the section count")
        if frob(gram - gram.conj().T) > 1e-12 * max(1.0, frob(gram)):
            raise ValueError("Gram matrix must be Hermitian")
        if np.linalg.eigvalsh(hermitize(gram))[0] <= 0:
            raise ValueError("Gram matrix must be positive definite")
        self.gram_matrix = gram
        self._params = dict(params or {})

    def section_values(self, z) -> np.ndarray:
        e = np.asarray(self.sections(as_point(z, self.base_dim)), dtype=complex)
        if e.ndim == 1:
            e = e[None, :]
        return e

    def eval(self, z, w):
        ez = self.section_values(z)
        ew = self.section_values(w)
        return ez @ np.linalg.solve(self.gram_matrix, ew.conj().T)

    def evaluation_kernel_basis(self, z, tol: float = 1e-10) -> np.ndarray:
        """Orthonormal basis of the coefficient vectors whose section vanishes at z.

        These are the directions of the generating space invisible to the
        evaluation at z; the returned matrix is m x (m - rank E(z)).
        """
        e = self.section_values(z)
        _, svals, vh = np.linalg.svd(e)
        cutoff = tol * (svals[0] if svals.size and svals[0] > 0 else 1.0)
        rank = int(np.sum(svals > cutoff))
        return vh[rank:].conj().T

    def params(self):
        out = dict(self._params)
        out["section_count"] = self.section_count
        return out


class GrassmannKernel(KernelSpec):
    """Restriction-of-projection kernel between k-planes of C^N.

    Chart coordinates are the entries of the (N-k) x k graph matrix B,
    the plane being the column span of F(B) = [I_k; B].  In the frame
    F the kernel block is kappa(z, w) = (F(z)* F(z))^{-1} F(z)* F(w) and
    the base fiber metric is F(z)* F(z); at z = w the kernel block is
    the identity.
    """

    variant = "universal_grassmann"
    holomorphic = False  # the projection sections are not holomorphic

    def __init__(self, ambient_dim: int, rank: int):
        if not 1 <= rank < ambient_dim:
            raise ValueError("need 1 <= rank < ambient_dim")
        self.ambient_dim = int(ambient_dim)
        self.rank = int(rank)
        self.fiber_dim = self.rank
        self.base_dim = (self.ambient_dim - self.rank) * self.rank

    def frame(self, z) -> np.ndarray:
        b = np.asarray(z, dtype=complex).reshape(
            self.ambient_dim - self.rank, self.rank
        )
        return np.vstack([np.eye(self.rank, dtype=complex), b])

    def eval(self, z, w):
        fz = self.frame(z)
        fw = self.frame(w)
        return np.linalg.solve(fz.conj().T @ fz, fz.conj().T @ fw)

    def fiber_metric(self, z):
        fz = self.frame(z)
        return fz.conj().T @ fz

    def params(self):
        return {"ambient_dim": self.ambient_dim, "rank": self.rank}


class UserKernel(KernelSpec):
    """Wrap arbitrary callables as a kernel."""

    variant = "user_hook"

    def __init__(
        self,
        eval_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
        fiber_dim: int,
        base_dim: int,
        fiber_metric_fn=None,
        contains_fn=None,
        boundary_distance_fn=None,
        holomorphic: bool = False,
        variant: str = "user_hook",
    ):
        self._eval = eval_fn
        self.fiber_dim = int(fiber_dim)
        self.base_dim = int(base_dim)
        self._metric = fiber_metric_fn
        self._contains = contains_fn
        self._distance = boundary_distance_fn
        self.holomorphic = bool(holomorphic)
        self.variant = variant

    def eval(self, z, w):
        return np.atleast_2d(np.asarray(self._eval(z, w), dtype=complex))

    def fiber_metric(self, z):
        if self._metric is None:
            return super().fiber_metric(z)
        return np.asarray(self._metric(z), dtype=complex)

    def contains(self, z):
        return True if self._contains is None else bool(self._contains(z))

    def boundary_distance(self, z):
        if self._distance is None:
            return np.inf if self._contains is None else 0.0
        return float(self._distance(z))


class DualKernel(KernelSpec):
    """Kernel of the dual bundle, expressed in the conjugated chart.

    The dual of a holomorphic Hermitian bundle carries the conjugate
    complex structure on fibers and base; in the conjugated holomorphic
    coordinates the kernel reads conj(kappa(conj z, conj w)), which is
    again holomorphic in its first argument whenever kappa is.  The point
    of the dual chart matching a point z of the original chart is
    conj(z).
    """

    def __init__(self, base: KernelSpec):
        self.base = base
        self.variant = f"dual({base.variant})"
        self.fiber_dim = base.fiber_dim
        self.base_dim = base.base_dim
        self.holomorphic = base.holomorphic

    def eval(self, z, w):
        return np.conj(self.base.eval(np.conj(z), np.conj(w)))

    def fiber_metric(self, z):
        return np.conj(self.base.fiber_metric(np.conj(z)))

    def contains(self, z):
        return self.base.contains(np.conj(np.asarray(z, dtype=complex)))

    def boundary_distance(self, z):
        return self.base.boundary_distance(np.conj(np.asarray(z, dtype=complex)))

    def params(self):
        return {"base": self.base.describe()}


# -- constructor shorthands used by the config layer ------------------------


def disc_power(nu: float) -> DiscPowerKernel:
    return DiscPowerKernel(nu)


def constant_kernel(matrix, base_dim: int = 1) -> ConstantKernel:
    return ConstantKernel(matrix, base_dim=base_dim)


def from_sections(sections, base_dim: int = 1, gram=None, params=None) -> SectionKernel:
    return SectionKernel(sections, base_dim=base_dim, gram=gram, params=params)


def universal_grassmann(ambient_dim: int, rank: int) -> GrassmannKernel:
    return GrassmannKernel(ambient_dim, rank)


def dual_kernel(spec: KernelSpec) -> DualKernel:
    """The kernel of the dual bundle; see DualKernel."""
    return DualKernel(spec)


# ---------------------------------------------------------------------------
# Gram matrices and positivity
# ---------------------------------------------------------------------------


@dataclass
class GramMatrix:
    """Kernel blocks over a finite point set and their Hermitian assembly.

    `blocks[l, j]` holds kappa(t_l, t_j); `assembled` is the
    (N n) x (N n) matrix of the positivity quadratic form, i.e. the
    blocks weighted by the fiber metrics h0(t_l).  For the trivial-bundle
    families the two coincide.
    """

    points: np.ndarray  # (N, d)
    blocks: np.ndarray  # (N, N, n, n)
    assembled: np.ndarray  # (N n, N n)


def gram(spec: KernelSpec, points) -> GramMatrix:
    """Assemble kernel blocks over a point list."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[0] < 1:
        raise ValueError("need at least one sample point")
    if pts.shape[1] != spec.base_dim:
        raise ValueError(
            f"points have dimension {pts.shape[1]}, kernel expects {spec.base_dim}"
        )
    n = spec.fiber_dim
    npts = pts.shape[0]
    blocks = np.empty((npts, npts, n, n), dtype=complex)
    assembled = np.empty((npts * n, npts * n), dtype=complex)
    metrics = [spec.fiber_metric(pts[l]) for l in range(npts)]
    for l in range(npts):
        for j in range(npts):
            blk = eval_kernel(spec, pts[l], pts[j])
            blocks[l, j] = blk
            assembled[l * n : (l + 1) * n, j * n : (j + 1) * n] = metrics[l] @ blk
    return GramMatrix(points=pts, blocks=blocks, assembled=assembled)


def psd_check(gram_matrix: GramMatrix, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of the Hermitianized Gram assembly.

    A margin >= -tol counts as positive semidefinite.  Raises
    StructuralError if the assembly is not Hermitian within 1e-10
    (relative), which signals broken kernel symmetry rather than
    curable noise.
    """
    return eig_margin(gram_matrix.assembled, herm_tol=1e-10)


def rkhs_inner(spec: KernelSpec, left: tuple, right: tuple) -> complex:
    """Inner product of two kernel sections K_xi, K_eta.

    `left` is (xi, s) and `right` is (eta, t); the value is the fiber
    pairing (kappa(t, s) xi | eta)_t, conjugate-symmetric in the two
    arguments.
    """
    xi, s = left
    eta, t = right
    xi = np.asarray(xi, dtype=complex).reshape(spec.fiber_dim)
    eta = np.asarray(eta, dtype=complex).reshape(spec.fiber_dim)
    block = eval_kernel(spec, t, s)
    h = spec.fiber_metric(spec.point(t))
    return complex(eta.conj() @ (h @ (block @ xi)))


class RkhsModel:
    """Finite-sample model of the section space spanned by kernel sections.

    The generators are K_(e_a, t_j) for the sample points t_j and fiber
    basis vectors e_a; their pairwise inner products are exactly the
    entries of the assembled Gram matrix, whose spectral factorization
    stands in for the completion.  Span elements are coefficient arrays
    of shape (N, n).
    """

    def __init__(self, spec: KernelSpec, points):
        self.spec = spec
        self.gram = gram(spec, points)
        self.points = self.gram.points
        sym = hermitize(self.gram.assembled)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(sym)

    @property
    def generator_count(self) -> int:
        return self.gram.assembled.shape[0]

    def rank(self, tol: float = 1e-10) -> int:
        """Numerical dimension of the generator span (the finite-rank
        stand-in for the section-space geometry)."""
        top = max(float(self.eigenvalues[-1]), 0.0)
        if top == 0.0:
            return 0
        return int(np.sum(self.eigenvalues > tol * top))

    def _coeffs(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=complex)
        return c.reshape(self.generator_count)

    def gram_inner(self, c1, c2) -> complex:
        """<f, g> for span elements via the assembled Gram quadratic form."""
        c1 = self._coeffs(c1)
        c2 = self._coeffs(c2)
        return complex(c2.conj() @ (self.gram.assembled @ c1))

    def evaluate(self, c, t) -> np.ndarray:
        """Pointwise value of the span element sum c_(j,a) K_(e_a, t_j)."""
        c = self._coeffs(c).reshape(-1, self.spec.fiber_dim)
        out = np.zeros(self.spec.fiber_dim, dtype=complex)
        for j in range(self.points.shape[0]):
            out += eval_kernel(self.spec, t, self.points[j]) @ c[j]
        return out


def reproducing_check(model: RkhsModel, coeffs, eta, t) -> float:
    """Residual of the reproducing identity <f, K_eta> = (f(t) | eta)_t.

    The left side is accumulated generator by generator from the kernel
    pairing values; the right side evaluates the span element first and
    then takes the fiber inner product.
    """
    spec = model.spec
    eta = np.asarray(eta, dtype=complex).reshape(spec.fiber_dim)
    c = np.asarray(coeffs, dtype=complex).reshape(-1, spec.fiber_dim)
    basis = np.eye(spec.fiber_dim, dtype=complex)
    lhs = 0.0 + 0.0j
    for j in range(model.points.shape[0]):
        for a in range(spec.fiber_dim):
            lhs += c[j, a] * rkhs_inner(spec, (basis[a], model.points[j]), (eta, t))
    value = model.evaluate(c, t)
    h = spec.fiber_metric(spec.point(t))
    rhs = complex(eta.conj() @ (h @ value))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# admissibility and the four-way consistency report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityResult:
    invertible: bool
    smallest_singular_value: float
    norm: float


def admissibility(spec: KernelSpec, s, tol: float = 1e-10) -> AdmissibilityResult:
    """Invertibility margin of the diagonal block kappa(s, s)."""
    block = eval_kernel(spec, s, s)
    smin, smax = smallest_singular_value(block)
    invertible = smax > 0.0 and smin >= tol * smax
    return AdmissibilityResult(invertible, smin, smax)


def smoothness_residual(spec: KernelSpec, s, step: float = 1e-3) -> float:
    """Finite-difference consistency of z -> kappa(z, s) at s.

    Compares central-difference first derivatives at steps h and h/2,
    relative to the derivative scale; for a twice-differentiable kernel
    the defect shrinks like h^2, while a kink leaves it order one.  A
    spot check for user-supplied kernels, whose smoothness the rest of
    the machinery takes on trust.
    """
    from .forms import wirtinger_first  # local import: forms does not need kernels

    s = spec.point(s)

    def block_field(z):
        return spec.eval(z, s)

    coarse = np.concatenate(wirtinger_first(block_field, s, step))
    fine = np.concatenate(wirtinger_first(block_field, s, step / 2.0))
    scale = max(1.0, float(np.max(np.abs(fine))))
    return float(np.max(np.abs(coarse - fine))) / scale


@dataclass(frozen=True)
class Lemma51Report:
    injective: bool
    invertible: bool
    surjective: bool
    evaluation_surjective: bool
    details: dict

    @property
    def consistent(self) -> bool:
        flags = (
            self.injective,
            self.invertible,
            self.surjective,
            self.evaluation_surjective,
        )
        return len(set(flags)) == 1


def lemma51_consistency(
    spec: KernelSpec,
    s,
    tol: float = 1e-10,
    extra_points=None,
    seed: int = 0,
) -> Lemma51Report:
    """Cross-check four finite-dimensional invertibility criteria at s.

    (1) injectivity of xi -> K_xi through the norm form h0(s) kappa(s, s)
    (its eigenvalue margin), (2) invertibility of kappa(s, s) by singular
    values, (3) surjectivity of kappa(s, s) by numerical row rank, and
    (4) surjectivity of the evaluation at s of the sampled section span
    by the rank of [kappa(s, t_1) ... kappa(s, t_m)].  In finite fiber
    dimension the four answers must agree.
    """
    s = spec.point(s)
    n = spec.fiber_dim
    block = eval_kernel(spec, s, s)
    h = spec.fiber_metric(s)

    norm_form = hermitize(h @ block)
    evals = np.linalg.eigvalsh(norm_form)
    injective = bool(evals[-1] > 0.0 and evals[0] >= tol * abs(evals[-1]))

    adm = admissibility(spec, s, tol=tol)
    invertible = adm.invertible

    surjective = relative_rank(block, tol=tol) == n

    if extra_points is None:
        rng = np.random.default_rng(seed)
        extra = []
        for _ in range(max(4, n + 2)):
            step = 0.1 * (rng.standard_normal(spec.base_dim) + 1j * rng.standard_normal(spec.base_dim))
            cand = s + step
            while not spec.contains(cand):
                step = step / 2.0
                cand = s + step
            extra.append(cand)
        extra_points = extra
    sample = [s] + [spec.point(p) for p in extra_points]
    ev_matrix = np.hstack([eval_kernel(spec, s, t) for t in sample])
    evaluation_surjective = relative_rank(ev_matrix, tol=tol) == n

    return Lemma51Report(
        injective=injective,
        invertible=invertible,
        surjective=surjective,
        evaluation_surjective=evaluation_surjective,
        details={
            "norm_form_margin": float(evals[0]),
            "smallest_singular_value": adm.smallest_singular_value,
            "evaluation_rank": relative_rank(ev_matrix, tol=tol),
            "sample_size": len(sample),
        },
    )


def evaluation_adjoint_check(spec: KernelSpec, s, t, xi, eta) -> float:
    """Residual of the adjoint identity <K_xi, K_eta> = (xi | kappa(s, t) eta)_s.

    Both sides are computed independently: the left through the kernel
    block at (t, s) and the fiber metric at t, the right through the
    block at (s, t) and the metric at s.
    """
    xi = np.asarray(xi, dtype=complex).reshape(spec.fiber_dim)
    eta = np.asarray(eta, dtype=complex).reshape(spec.fiber_dim)
    lhs = rkhs_inner(spec, (xi, s), (eta, t))
    hs = spec.fiber_metric(spec.point(s))
    rhs = complex((eval_kernel(spec, s, t) @ eta).conj() @ (hs @ xi))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# subspaces and the universal kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """A k-plane of C^N carried by an orthonormal column basis."""

    basis: np.ndarray  # (N, k), basis*.basis = identity

    def __post_init__(self):
        u = np.asarray(self.basis, dtype=complex)
        if u.ndim != 2:
            raise ValueError("basis must be an N x k matrix")
        defect = frob(u.conj().T @ u - np.eye(u.shape[1]))
        if defect > 1e-12 * max(1.0, u.shape[1]):
            raise StructuralError(
                f"basis columns are not orthonormal (defect {defect:.3e})"
            )
        object.__setattr__(self, "basis", u)

    @classmethod
    def from_columns(cls, a) -> "Subspace":
        """Orthonormalize a spanning set (modified Gram-Schmidt, two passes)."""
        q, _ = mgs_orthonormalize(np.asarray(a, dtype=complex))
        return cls(q)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projection(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def universal_kernel(s1: Subspace, s2: Subspace) -> np.ndarray:
    """Matrix of the orthogonal projection of s2 into s1, in the given bases.

    This is the restriction p_{S1}|_{S2}: S2 -> S1; in orthonormal
    bases it is simply U1* U2.
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    if s1.rank != s2.rank:
        raise ValueError("subspaces have different ranks")
    return s1.basis.conj().T @ s2.basis
