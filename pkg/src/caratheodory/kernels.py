"""Caratheodory kernels, Gram matrices and finite sections of L(phi).

The kernel of an L(B, B*)-valued function phi on a neighbourhood of 0 is

    k_phi(z, w) = (phi(z) + phi(w)^H) / (2 (1 - z conj(w)))

and phi is a Caratheodory function when every Gram matrix of this kernel is
positive.  Gram matrices are laid out so that the quadratic form
``c^H G c`` equals ``sum_{i,j} <k(w_i, w_j) b_j, b_i>`` for the stacked
vector ``c = (b_1, ..., b_N)``, i.e. block (i, j) is ``k(w_i, w_j)``.  For
two points ``{0, 1/2}`` and the function that is 1 at the origin and 0
elsewhere this gives ``[[1, 1/2], [1/2, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import DualityTag, OperatorError


class FunctionDomainError(ValueError):
    """phi cannot be evaluated at a requested point."""


class IndefiniteKernelError(ValueError):
    def __init__(self, message, n_negative=0, witness=None):
        super().__init__(message)
        self.n_negative = n_negative
        self.witness = witness


# ---------------------------------------------------------------------------
# function sources


class FunctionSource:
    """Base for matrix-valued functions evaluable on arrays of points.

    Subclasses implement ``_values(z)`` for a 1-d complex array ``z`` and
    return an array of shape ``(len(z), dim, dim)``.
    """

    dim: int
    tag: DualityTag = DualityTag.B_TO_BSTAR
    analytic: bool = True

    def _values(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        out = self._values(flat)
        return out.reshape(z.shape + (self.dim, self.dim))


@dataclass(frozen=True, eq=False)
class RationalFunction(FunctionSource):
    """phi(z) = P(z) Q(z)^{-1} with matrix polynomial coefficients (lowest
    degree first).  Scalar coefficients in ``denominator`` are broadcast to
    multiples of the identity."""

    numerator: np.ndarray
    denominator: np.ndarray
    tag: DualityTag = DualityTag.B_TO_BSTAR

    def __post_init__(self):
        num = np.asarray(self.numerator, dtype=complex)
        if num.ndim == 2:
            num = num[None]
        if num.ndim != 3 or num.shape[1] != num.shape[2]:
            raise OperatorError(f"numerator must be a list of square matrices, got shape {num.shape}")
        n = num.shape[1]
        den = np.asarray(self.denominator, dtype=complex)
        if den.ndim == 1:
            den = den[:, None, None] * np.eye(n)
        if den.ndim != 3 or den.shape[1:] != (n, n):
            raise OperatorError(f"denominator shape {den.shape} incompatible with dim {n}")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        object.__setattr__(self, "tag", DualityTag(self.tag))

    @property
    def dim(self) -> int:
        return self.numerator.shape[1]

    @staticmethod
    def _horner(coef, z):
        out = np.zeros((z.size,) + coef.shape[1:], dtype=complex)
        for c in coef[::-1]:
            out = out * z[:, None, None] + c
        return out

    def _values(self, z):
        P = self._horner(self.numerator, z)
        Q = self._horner(self.denominator, z)
        cond = np.linalg.cond(Q) if z.size else np.zeros(0)
        bad = ~np.isfinite(cond) | (cond > 1e12)
        if np.any(bad):
            raise FunctionDomainError(f"denominator singular at z={complex(z[np.argmax(bad)])}")
        # P Q^{-1} = (Q^{-H} P^H)^H
        X = np.linalg.solve(np.swapaxes(Q, 1, 2).conj(), np.swapaxes(P, 1, 2).conj())
        return np.swapaxes(X, 1, 2).conj()


def constant(value, tag: DualityTag = DualityTag.B_TO_BSTAR) -> RationalFunction:
    value = np.atleast_2d(np.asarray(value, dtype=complex))
    return RationalFunction(value[None], [1.0], tag)


def mobius_atom(theta: float = 0.0, mass=1.0) -> RationalFunction:
    """``mass * (e^{i theta} + z) / (e^{i theta} - z)``, the function of a single atom."""
    mass = np.atleast_2d(np.asarray(mass, dtype=complex))
    e = np.exp(1j * theta)
    return RationalFunction(np.stack([e * mass, mass]), [e, -1.0])


@dataclass(frozen=True, eq=False)
class TableFunction(FunctionSource):
    """Explicitly tabulated values, for point-supported pathologies.

    Off the tabulated points the value is ``default``; with ``default=None``
    evaluation there is an error.  Table functions are never analytic and are
    refused by the realization and measure routines.
    """

    points: np.ndarray
    values: np.ndarray
    default: np.ndarray | None = None
    tag: DualityTag = DualityTag.B_TO_BSTAR
    analytic = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).reshape(-1)
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        if vals.shape[0] != pts.size or vals.shape[1] != vals.shape[2]:
            raise OperatorError("table points and values disagree")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        if self.default is not None:
            object.__setattr__(self, "default", np.atleast_2d(np.asarray(self.default, dtype=complex)))
        object.__setattr__(self, "tag", DualityTag(self.tag))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def _values(self, z):
        out = np.empty((z.size, self.dim, self.dim), dtype=complex)
        for k, zk in enumerate(z):
            hit = np.flatnonzero(np.abs(self.points - zk) <= 1e-15)
            if hit.size:
                out[k] = self.values[hit[0]]
            elif self.default is not None:
                out[k] = self.default
            else:
                raise FunctionDomainError(f"table function undefined at z={complex(zk)}")
        return out


def point_mass_counterexample() -> TableFunction:
    """Scalar function equal to 1 at the origin and 0 elsewhere; its kernel has
    exactly one negative square."""
    return TableFunction([0.0], [1.0], default=[[0.0]])


def evaluate(phi, points) -> np.ndarray:
    """phi at a 1-d array of points, shape ``(N, n, n)``."""
    points = np.asarray(points, dtype=complex).reshape(-1)
    vals = np.asarray(phi(points), dtype=complex)
    if vals.shape[:1] != points.shape:
        raise OperatorError(f"function returned shape {vals.shape} for {points.size} points")
    if not np.all(np.isfinite(vals)):
        raise FunctionDomainError("function returned non-finite values")
    return vals


# ---------------------------------------------------------------------------
# sample sets and Gram matrices


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct points of the open unit disk, with optional direction vectors
    ``b_i`` and optional function values ``phi(w_i)``."""

    points: np.ndarray
    vectors: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).reshape(-1)
        if np.any(~np.isfinite(pts)) or np.any(np.abs(pts) >= 1):
            raise ValueError("sample points must lie in the open unit disk")
        if pts.size > 1:
            d = np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)
            if np.min(d) == 0:
                raise ValueError("sample points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        if self.vectors is not None:
            vec = np.asarray(self.vectors, dtype=complex)
            if vec.ndim != 2 or vec.shape[0] != pts.size:
                raise ValueError("need one direction vector per point")
            object.__setattr__(self, "vectors", vec)
        if self.values is not None:
            vals = np.asarray(self.values, dtype=complex)
            if vals.ndim == 1:
                vals = vals[:, None, None]
            if vals.shape[0] != pts.size or vals.shape[1] != vals.shape[2]:
                raise ValueError("need one square value per point")
            object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.points.size

    @property
    def include_origin(self) -> bool:
        return bool(np.any(self.points == 0))

    @property
    def origin_index(self) -> int:
        hit = np.flatnonzero(self.points == 0)
        if not hit.size:
            raise ValueError("sample set does not contain the origin")
        return int(hit[0])

    @classmethod
    def from_points(cls, points, include_origin=True, **kw):
        pts = np.asarray(points, dtype=complex).reshape(-1)
        if include_origin and not np.any(pts == 0):
            pts = np.concatenate([[0.0], pts])
        return cls(pts, **kw)

    def with_values(self, phi) -> "SampleSet":
        return SampleSet(self.points, self.vectors, evaluate(phi, self.points))

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx)
        return SampleSet(
            self.points[idx],
            None if self.vectors is None else self.vectors[idx],
            None if self.values is None else self.values[idx],
        )


def random_sample_set(rng, size, radius=0.9, include_origin=True) -> SampleSet:
    r = radius * np.sqrt(rng.uniform(0, 1, size))
    t = rng.uniform(0, 2 * np.pi, size)
    return SampleSet.from_points(r * np.exp(1j * t), include_origin=include_origin)


def kernel_from_values(z, w, phi_z, phi_w) -> np.ndarray:
    return (np.asarray(phi_z) + np.asarray(phi_w).conj().T) / (2 * (1 - z * np.conj(w)))


def kernel_eval(phi, z, w) -> np.ndarray:
    """k_phi(z, w) as an n x n matrix."""
    if abs(z) >= 1 or abs(w) >= 1:
        raise FunctionDomainError("kernel points must lie in the open unit disk")
    vals = evaluate(phi, [z, w])
    return kernel_from_values(complex(z), complex(w), vals[0], vals[1])


def kernel_blocks(points, values, points_w=None, values_w=None) -> np.ndarray:
    """Array ``K[i, j] = k(z_i, w_j)`` of shape ``(N, M, n, n)``."""
    z = np.asarray(points, dtype=complex)
    F = np.asarray(values, dtype=complex)
    w = z if points_w is None else np.asarray(points_w, dtype=complex)
    G = F if values_w is None else np.asarray(values_w, dtype=complex)
    num = F[:, None] + np.swapaxes(G, 1, 2).conj()[None, :]
    den = 2 * (1 - z[:, None] * w[None, :].conj())
    return num / den[:, :, None, None]


def blocks_to_matrix(K: np.ndarray) -> np.ndarray:
    N, M, n, m = K.shape
    return K.transpose(0, 2, 1, 3).reshape(N * n, M * m)


def zero_cutoff(eigenvalues) -> float:
    lam_max = float(np.max(eigenvalues)) if len(eigenvalues) else 0.0
    return 1e-10 * (1 + max(lam_max, 0.0))


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    n_negative: int
    n_zero: int
    n_positive: int
    hermiticity_defect: float = 0.0

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0


def gram_from_matrix(G: np.ndarray) -> GramMatrix:
    defect = float(np.linalg.norm(G - G.conj().T)) if G.size else 0.0
    scale = max(1.0, float(np.linalg.norm(G))) if G.size else 1.0
    if defect > 1e-10 * scale:
        raise OperatorError(f"Gram matrix not Hermitian (defect {defect:.3e})")
    H = (G + G.conj().T) / 2
    lam = np.linalg.eigvalsh(H) if H.size else np.zeros(0)
    cut = zero_cutoff(lam)
    return GramMatrix(
        H,
        lam,
        int(np.sum(lam < -cut)),
        int(np.sum(np.abs(lam) <= cut)),
        int(np.sum(lam > cut)),
        defect,
    )


def gram_assemble(phi, samples: SampleSet) -> GramMatrix:
    """Gram matrix of k_phi on the sample points.

    Without direction vectors the result is the full ``N n x N n`` block
    matrix; with vectors ``b_i`` it is the ``N x N`` matrix of
    ``b_i^H k(w_i, w_j) b_j``.
    """
    if len(samples) == 0:
        return gram_from_matrix(np.zeros((0, 0), complex))
    values = samples.values if samples.values is not None else evaluate(phi, samples.points)
    K = kernel_blocks(samples.points, values)
    if samples.vectors is None:
        return gram_from_matrix(blocks_to_matrix(K))
    b = samples.vectors
    return gram_from_matrix(np.einsum("ik,ijkl,jl->ij", b.conj(), K, b))


@dataclass(frozen=True)
class KernelReport:
    passed: bool
    worst_eigenvalue: float
    worst_relative: float
    worst_set: int
    witness: np.ndarray | None
    n_negative: int
    n_sets: int


def certify_positive_kernel(phi, family: Sequence[SampleSet], tol: float = 1e-10) -> KernelReport:
    """PASS iff every Gram in the family has ``min eig >= -tol (1 + lambda_max)``."""
    worst = (np.inf, np.inf, -1, None)
    n_neg = 0
    passed = True
    for k, S in enumerate(family):
        g = gram_assemble(phi, S)
        n_neg = max(n_neg, g.n_negative)
        if g.eigenvalues.size == 0:
            continue
        rel = g.min_eigenvalue / (1 + max(g.max_eigenvalue, 0.0))
        if rel < -tol:
            passed = False
        if rel < worst[1]:
            lam, Q = np.linalg.eigh(g.matrix)
            worst = (float(lam[0]), float(rel), k, Q[:, 0].copy())
    if worst[2] < 0:
        return KernelReport(True, 0.0, 0.0, -1, None, 0, len(family))
    return KernelReport(passed, worst[0], worst[1], worst[2], None if passed else worst[3], n_neg, len(family))


def negative_squares_estimate(phi, family: Sequence[SampleSet]) -> int:
    """Largest negative-eigenvalue count over the family.

    This is a lower bound for the number of negative squares of k_phi, never
    the true index, which is a supremum over all finite sections.
    """
    return max((gram_assemble(phi, S).n_negative for S in family), default=0)


# ---------------------------------------------------------------------------
# finite sections of L(phi)


@dataclass(frozen=True, eq=False)
class RKHSSection:
    """Orthonormal coordinates on span{k_phi(., w_i) b}.

    An element ``f = sum_j k(., w_j) x_j`` is stored by its stacked
    coefficient vector x; ``coords(x)`` maps it isometrically to C^rank.
    """

    samples: SampleSet
    values: np.ndarray
    gram: GramMatrix
    W: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    phi: object = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.W.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def condition(self) -> float:
        if self.rank == 0:
            return 1.0
        return float(self.eigenvalues[0] / self.eigenvalues[-1])

    def coords(self, x) -> np.ndarray:
        h = self.eigenvectors.conj().T @ np.asarray(x, dtype=complex)
        return (np.sqrt(self.eigenvalues) * h.T).T

    def inner(self, x, y) -> complex:
        """<f_x, f_y> in L(phi) from coefficient vectors."""
        return complex(np.vdot(self.coords(y), self.coords(x)))

    def cross_kernel(self, z) -> np.ndarray:
        """``[k(z, w_1) ... k(z, w_N)]``, shape (n, N n)."""
        z = complex(z)
        phi_z = self._phi_at(z)
        K = kernel_blocks([z], phi_z[None], self.samples.points, self.values)
        return blocks_to_matrix(K)

    def _phi_at(self, z):
        hit = np.flatnonzero(self.samples.points == z)
        if hit.size:
            return self.values[hit[0]]
        if self.phi is None:
            raise FunctionDomainError(f"section built from values only; phi({z}) unknown")
        return evaluate(self.phi, [z])[0]

    def evaluate(self, x, z) -> np.ndarray:
        """f_x(z) = sum_j k(z, w_j) x_j."""
        return self.cross_kernel(z) @ np.asarray(x, dtype=complex)

    def kernel_coords(self, w, B=None) -> np.ndarray:
        """Coordinates of the orthogonal projection of ``k(., w) B`` on the
        section (exact when w is a sample point)."""
        Kw = self.cross_kernel(w)
        B = np.eye(self.dim) if B is None else np.asarray(B, dtype=complex)
        return self.W.conj().T @ (Kw.conj().T @ B)

    def point_coefficients(self, index: int, B=None) -> np.ndarray:
        """Coefficient vector(s) of ``k(., w_index) B``."""
        n = self.dim
        B = np.eye(n) if B is None else np.asarray(B, dtype=complex).reshape(n, -1)
        x = np.zeros((len(self.samples) * n, B.shape[1]), dtype=complex)
        x[index * n:(index + 1) * n] = B
        return x


def rkhs_section(phi, samples: SampleSet, rank_tol: float = 1e-10) -> RKHSSection:
    """Finite section of L(phi) spanned by the kernel functions at the samples.

    Raises :class:`IndefiniteKernelError` when the Gram matrix has negative
    squares.
    """
    values = samples.values if samples.values is not None else evaluate(phi, samples.points)
    S = SampleSet(samples.points, None, values)
    G = gram_from_matrix(blocks_to_matrix(kernel_blocks(S.points, values)))
    if G.n_negative:
        lam, Q = np.linalg.eigh(G.matrix)
        raise IndefiniteKernelError(
            f"Gram matrix has {G.n_negative} negative eigenvalue(s), min {lam[0]:.3e}",
            n_negative=G.n_negative,
            witness=Q[:, 0],
        )
    lam, Q = np.linalg.eigh(G.matrix)
    lam_max = float(lam[-1]) if lam.size else 0.0
    keep = np.flatnonzero(lam > rank_tol * lam_max) if lam_max > 0 else np.zeros(0, int)
    keep = keep[::-1]
    lam_r, Q_r = lam[keep], Q[:, keep]
    W = Q_r / np.sqrt(lam_r)[None, :]
    return RKHSSection(S, values, G, W, lam_r, Q_r, phi=phi)


# ---------------------------------------------------------------------------
# Cayley transform


@dataclass(frozen=True)
class CayleyResult:
    values: np.ndarray
    condition: np.ndarray


def cayley(phi_values) -> CayleyResult:
    """Schur values ``s = (I - phi)(I + phi)^{-1}``; batched over leading axes."""
    F = np.asarray(phi_values, dtype=complex)
    single = F.ndim == 2
    if single:
        F = F[None]
    eye = np.eye(F.shape[-1])
    A = eye + F
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e14):
        raise FunctionDomainError("I + phi(z) is singular")
    # (I - F)(I + F)^{-1} = ((I + F)^{-H} (I - F)^H)^H
    X = np.linalg.solve(np.swapaxes(A, -1, -2).conj(), np.swapaxes(eye - F, -1, -2).conj())
    S = np.swapaxes(X, -1, -2).conj()
    return CayleyResult(S[0] if single else S, cond[0] if single else cond)


def schur_gram(points, s_values) -> GramMatrix:
    """Gram of ``(I - s(z) s(w)^H) / (1 - z conj(w))``."""
    z = np.asarray(points, dtype=complex)
    S = np.asarray(s_values, dtype=complex)
    n = S.shape[-1]
    num = np.eye(n)[None, None] - np.einsum("iab,jcb->ijac", S, S.conj())
    K = num / (1 - z[:, None] * z[None, :].conj())[:, :, None, None]
    return gram_from_matrix(blocks_to_matrix(K))
