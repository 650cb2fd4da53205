"""Hermitian/symmetric/skew correspondence and curvature positivity verdicts.

A real-bilinear map on C^d with matrix values is captured by its sample
tensor over the 2d probe directions e_j, i e_j.  Three classes of such
maps determine each other:

* Herm  - sesquilinear with Psi(v1, v2)* = Psi(v2, v1),
* Symm  - symmetric and invariant under (v1, v2) -> (i v1, i v2),
* Skew  - antisymmetric, i-invariant, with self-adjoint values,

linked by Psi = psi + i omega, psi = (Psi + flip)/2,
omega = (Psi - flip)/(2i) and omega(v1, v2) = psi(v1, i v2).

The positivity verdict of a curvature form applies this correspondence
to omega = i h Theta: the associated Hermitian form at a tangent
direction x is G(x) = -i h(z) Theta(x, i x), an n x n Hermitian matrix
whose smallest eigenvalue over sampled points and directions decides
positive / nonnegative / indefinite.  The sign convention is pinned so
the unit-disc weights (1 - |z|^2)^(-nu) come out strictly positive, and
it inherits the dzbar ^ dz orientation of the curvature coefficients;
sampled directions can over-report positivity for adversarial curvature,
which the report states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chern import CurvatureAtPoint, MetricField
from .errors import StructuralError
from .forms import Form2, as_point, cauchy_riemann_residual
from .kernels import SectionKernel
from .linalg import frob, hermitize

__all__ = [
    "BilinearSamples",
    "SesquiTriple",
    "triple_split",
    "triple_join",
    "griffiths_form",
    "GriffithsReport",
    "griffiths_verdict",
    "direction_samples",
    "GlobalGenerationReport",
    "global_generation_check",
]


# ---------------------------------------------------------------------------
# sampled real-bilinear maps
# ---------------------------------------------------------------------------


class BilinearSamples:
    """A real-bilinear map C^d x C^d -> matrices, held by its probe tensor.

    tensor[a, b] is the value on (basis_a, basis_b) where the 2d probes
    are e_0..e_{d-1}, i e_0..i e_{d-1}.  Real-bilinearity makes this a
    faithful representation.
    """

    def __init__(self, tensor: np.ndarray, dim: int):
        self.tensor = np.asarray(tensor, dtype=complex)
        self.dim = dim
        if self.tensor.shape[:2] != (2 * dim, 2 * dim):
            raise ValueError("sample tensor must be (2d, 2d, ...)")

    @classmethod
    def from_callable(cls, fn: Callable, dim: int) -> "BilinearSamples":
        basis = np.eye(dim, dtype=complex)
        probes = [basis[j] for j in range(dim)] + [1j * basis[j] for j in range(dim)]
        first = np.asarray(fn(probes[0], probes[0]), dtype=complex)
        tensor = np.empty((2 * dim, 2 * dim, *first.shape), dtype=complex)
        for a, va in enumerate(probes):
            for b, vb in enumerate(probes):
                tensor[a, b] = np.asarray(fn(va, vb), dtype=complex)
        return cls(tensor, dim)

    def __call__(self, v, w) -> np.ndarray:
        v = as_point(v, self.dim)
        w = as_point(w, self.dim)
        rv = np.concatenate([v.real, v.imag])
        rw = np.concatenate([w.real, w.imag])
        return np.tensordot(rw, np.tensordot(rv, self.tensor, axes=(0, 0)), axes=(0, 0))

    def flip(self) -> "BilinearSamples":
        return BilinearSamples(np.swapaxes(self.tensor, 0, 1), self.dim)

    def rotate_first(self) -> "BilinearSamples":
        """(v, w) -> value at (i v, w)."""
        d = self.dim
        out = np.empty_like(self.tensor)
        out[:d] = self.tensor[d:]
        out[d:] = -self.tensor[:d]
        return BilinearSamples(out, d)

    def rotate_second(self) -> "BilinearSamples":
        """(v, w) -> value at (v, i w)."""
        d = self.dim
        out = np.empty_like(self.tensor)
        out[:, :d] = self.tensor[:, d:]
        out[:, d:] = -self.tensor[:, :d]
        return BilinearSamples(out, d)

    def rotate_both(self) -> "BilinearSamples":
        """(v, w) -> value at (i v, i w)."""
        return self.rotate_first().rotate_second()

    def norm(self) -> float:
        flat = self.tensor.reshape((-1, *self.tensor.shape[2:]))
        return max((frob(m) for m in flat), default=0.0)

    def combine(self, other: "BilinearSamples", ca, cb) -> "BilinearSamples":
        return BilinearSamples(ca * self.tensor + cb * other.tensor, self.dim)

    def adjoint_values(self) -> "BilinearSamples":
        if self.tensor.ndim < 4:
            return BilinearSamples(np.conj(self.tensor), self.dim)
        return BilinearSamples(np.conj(np.swapaxes(self.tensor, -1, -2)), self.dim)


@dataclass(frozen=True)
class SesquiTriple:
    """Matched (Psi, psi, omega) triple with membership residuals.

    Invariants: Psi(v1,v2)* = Psi(v2,v1); psi symmetric and i-invariant;
    omega skew, i-invariant, self-adjoint values; Psi = psi + i omega.
    """

    herm: BilinearSamples
    symm: BilinearSamples
    skew: BilinearSamples
    residuals: dict

    @property
    def dim(self) -> int:
        return self.herm.dim


def _herm_membership_defect(psi: BilinearSamples) -> float:
    # Herm membership: Psi(v1,v2)* = Psi(v2,v1) and Psi(v2,v1) = i Psi(v2, i v1);
    # as maps of (v1,v2) the second reads flip(Psi) = i rotate_first(flip(Psi)).
    flipped = psi.flip()
    adjoint = psi.combine(flipped.adjoint_values(), 1.0, -1.0).norm()
    sesqui = flipped.combine(flipped.rotate_first(), 1.0, -1j).norm()
    return max(adjoint, sesqui)


def triple_split(psi_map, dim: int, tol: float = 1e-10) -> SesquiTriple:
    """Split a Hermitian sesquilinear map into its Symm and Skew parts.

    psi = (Psi + flip)/2, omega = (Psi - flip)/(2i).  The input may be a
    callable or a BilinearSamples tensor; membership of the input in the
    Herm class is checked on the probe basis and rejection reports the
    measured defect.
    """
    psi = (
        psi_map
        if isinstance(psi_map, BilinearSamples)
        else BilinearSamples.from_callable(psi_map, dim)
    )
    scale = max(1.0, psi.norm())
    defect = _herm_membership_defect(psi)
    if defect > tol * scale:
        raise StructuralError(
            f"map is not Hermitian sesquilinear: defect {defect:.3e}"
        )
    flipped = psi.flip()
    symm = psi.combine(flipped, 0.5, 0.5)
    skew = psi.combine(flipped, 1.0 / 2j, -1.0 / 2j)
    residuals = _triple_residuals(psi, symm, skew)
    return SesquiTriple(herm=psi, symm=symm, skew=skew, residuals=residuals)


def triple_join(omega_map, dim: int, tol: float = 1e-10) -> SesquiTriple:
    """Rebuild the Hermitian form from its Skew component.

    Psi(v1, v2) = -omega(v1, i v2) + i omega(v1, v2); the input must be
    in the Skew class (antisymmetric, i-invariant, self-adjoint values).
    """
    skew = (
        omega_map
        if isinstance(omega_map, BilinearSamples)
        else BilinearSamples.from_callable(omega_map, dim)
    )
    scale = max(1.0, skew.norm())
    anti = skew.combine(skew.flip(), 1.0, 1.0).norm()
    rot = skew.combine(skew.rotate_both(), 1.0, -1.0).norm()
    sa = skew.combine(skew.adjoint_values(), 1.0, -1.0).norm()
    defect = max(anti, rot, sa)
    if defect > tol * scale:
        raise StructuralError(f"map is not in the Skew class: defect {defect:.3e}")
    herm = skew.rotate_second().combine(skew, -1.0, 1j)
    symm = herm.combine(herm.flip(), 0.5, 0.5)
    residuals = _triple_residuals(herm, symm, skew)
    return SesquiTriple(herm=herm, symm=symm, skew=skew, residuals=residuals)


def _triple_residuals(herm, symm, skew) -> dict:
    recomposed = symm.combine(skew, 1.0, 1j)
    return {
        "recomposition": herm.combine(recomposed, 1.0, -1.0).norm(),
        "symm_flip": symm.combine(symm.flip(), 1.0, -1.0).norm(),
        "symm_rotation": symm.combine(symm.rotate_both(), 1.0, -1.0).norm(),
        "skew_flip": skew.combine(skew.flip(), 1.0, 1.0).norm(),
        "skew_rotation": skew.combine(skew.rotate_both(), 1.0, -1.0).norm(),
        "skew_self_adjoint": skew.combine(skew.adjoint_values(), 1.0, -1.0).norm(),
        "omega_from_symm": skew.combine(symm.rotate_second(), 1.0, -1.0).norm(),
    }


# ---------------------------------------------------------------------------
# Griffiths forms and verdicts
# ---------------------------------------------------------------------------


def griffiths_form(
    h: np.ndarray,
    theta,
    x,
    herm_tol: float = 1e-6,
    purity_tol: float = 1e-5,
) -> np.ndarray:
    """Hermitian form G(x) = -i h Theta(x, i x) of a (1,1) curvature value.

    `theta` may be a CurvatureAtPoint (its purity residual is gated) or a
    bare Form2.  G scales as |lambda|^2 under x -> lambda x; its
    hermiticity defect beyond `herm_tol` (relative) raises, since that
    signals a curvature block inconsistent with the metric pairing.
    """
    if isinstance(theta, CurvatureAtPoint):
        if theta.purity_residual > purity_tol * max(1.0, frob(theta.form.r11)):
            raise StructuralError(
                f"curvature is not (1,1)-pure: residual {theta.purity_residual:.3e}"
            )
        form = theta.form
    elif isinstance(theta, Form2):
        form = theta
    else:
        raise TypeError("theta must be a CurvatureAtPoint or a Form2")
    x = as_point(x)
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    g = -1j * h @ form(x, 1j * x)
    defect = frob(g - g.conj().T) / max(1.0, frob(g))
    if defect > herm_tol:
        raise StructuralError(
            f"Griffiths form is not Hermitian: relative defect {defect:.3e}"
        )
    return g


def direction_samples(dim: int, count: int, seed: int) -> np.ndarray:
    """Unit tangent directions: canonical axes, their i-rotations, and
    `count` seeded uniform points on the unit sphere of C^d."""
    basis = np.eye(dim, dtype=complex)
    dirs = [basis[j] for j in range(dim)] + [1j * basis[j] for j in range(dim)]
    rng = np.random.default_rng(seed)
    for _ in range(count):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        nrm = np.linalg.norm(v)
        while nrm < 1e-8:  # essentially never; keeps the draw well defined
            v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            nrm = np.linalg.norm(v)
        dirs.append(v / nrm)
    return np.asarray(dirs)


@dataclass
class GriffithsReport:
    """Spectral margins of the Griffiths form over a point/direction sample.

    The verdict quantifies only over the sampled rank-one directions;
    `sampled_only` records that a sampled positive verdict is not a
    certificate against adversarial curvature between samples.
    """

    points: np.ndarray  # (N, d)
    directions: np.ndarray  # (M, d)
    seed: int
    margins: np.ndarray  # (N, M) lambda_min(G) per point and direction
    min_margins: np.ndarray  # (N,) min over directions
    min_margin: float
    witness_point: np.ndarray
    witness_direction: np.ndarray
    witness_eigenvector: np.ndarray
    max_hermiticity_residual: float
    max_purity_residual: float
    verdict: str
    pos_tol: float
    neg_tol: float
    sampled_only: bool = True


def griffiths_verdict(
    metric: MetricField,
    curvature_field: Callable[[np.ndarray], CurvatureAtPoint],
    points,
    directions: int = 64,
    seed: int = 0,
    pos_tol: float = 1e-6,
    neg_tol: float = 1e-6,
    herm_tol: float = 1e-6,
) -> GriffithsReport:
    """Spectral verdict of the curvature's Griffiths form over a grid.

    Deterministic for a fixed seed: the direction sample and the
    iteration order are pinned, and the reduction is a minimum with the
    first witness kept on ties.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[0] == 0:
        raise ValueError("empty point sample")
    dirs = direction_samples(metric.dim, directions, seed)
    if dirs.shape[0] == 0:
        raise ValueError("empty direction sample")

    margins = np.empty((pts.shape[0], dirs.shape[0]))
    best = None
    max_herm = 0.0
    max_purity = 0.0
    for i, z in enumerate(pts):
        h = metric(z)
        curv = curvature_field(z)
        max_purity = max(max_purity, curv.purity_residual)
        for m, x in enumerate(dirs):
            g = -1j * h @ curv.form(x, 1j * x)
            max_herm = max(max_herm, frob(g - g.conj().T) / max(1.0, frob(g)))
            evals, evecs = np.linalg.eigh(hermitize(g))
            lam = float(evals[0])
            margins[i, m] = lam
            if best is None or lam < best[0]:
                best = (lam, z.copy(), x.copy(), evecs[:, 0].copy())
    min_margins = margins.min(axis=1)
    if max_herm > herm_tol:
        raise StructuralError(
            f"Griffiths forms are not Hermitian: worst relative defect {max_herm:.3e}"
        )

    overall = float(best[0])
    if overall > pos_tol:
        verdict = "positive"
    elif overall < -neg_tol:
        verdict = "indefinite"
    else:
        verdict = "nonnegative"
    return GriffithsReport(
        points=pts,
        directions=dirs,
        seed=seed,
        margins=margins,
        min_margins=min_margins,
        min_margin=overall,
        witness_point=best[1],
        witness_direction=best[2],
        witness_eigenvector=best[3],
        max_hermiticity_residual=max_herm,
        max_purity_residual=max_purity,
        verdict=verdict,
        pos_tol=pos_tol,
        neg_tol=neg_tol,
    )


# ---------------------------------------------------------------------------
# global generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlobalGenerationReport:
    generated: bool
    min_rank_margin: float
    cr_residual: float
    metric_margin: float


def global_generation_check(
    sections: Callable[[np.ndarray], np.ndarray],
    points,
    cr_step: float = 1e-5,
    cr_tol: float = 1e-6,
    rank_tol: float = 1e-10,
) -> GlobalGenerationReport:
    """Do the given holomorphic sections span every sampled fiber?

    Gates holomorphy of the n x m section matrix by its Cauchy-Riemann
    residual, then tests sigma_min(E(z)) >= rank_tol * ||E(z)|| at every
    sample point.  The induced section kernel's metric E G^{-1} E* is the
    Hermitian structure attached to a globally generated bundle, and its
    smallest eigenvalue over the sample is reported as `metric_margin`
    (equal to min sigma_min(E)^2 when G is the identity).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[0] == 0:
        raise ValueError("empty point sample")

    def field(z):
        e = np.asarray(sections(z), dtype=complex)
        return e[None, :] if e.ndim == 1 else e

    cr = cauchy_riemann_residual(field, pts, cr_step)
    if cr > cr_tol:
        raise StructuralError(
            f"section matrix is not holomorphic: Cauchy-Riemann residual {cr:.3e}"
        )

    spec = SectionKernel(sections, base_dim=pts.shape[1])
    generated = True
    min_sigma = np.inf
    metric_margin = np.inf
    for z in pts:
        e = field(z)
        svals = np.linalg.svd(e, compute_uv=False)
        smin = float(svals[-1]) if e.shape[0] <= e.shape[1] else 0.0
        smax = float(svals[0]) if svals.size else 0.0
        if smax == 0.0 or smin < rank_tol * smax:
            generated = False
        min_sigma = min(min_sigma, smin)
        block = spec.eval(z, z)
        metric_margin = min(metric_margin, float(np.linalg.eigvalsh(hermitize(block))[0]))
    return GlobalGenerationReport(
        generated=generated,
        min_rank_margin=float(min_sigma),
        cr_residual=float(cr),
        metric_margin=float(metric_margin),
    )
