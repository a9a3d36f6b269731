"""Positive operators on a finite-dimensional model of a Banach space B.

B is modelled as C^n and the conjugate dual B* as the same coordinate space,
with the antilinear duality ``<b_*, b> = b_*^H b``.  An operator A: B -> B*
is then a square complex matrix and ``<Ab, c> = c^H A b``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class DualityTag(str, enum.Enum):
    """Which side of the duality an operator-valued object maps between."""

    B_TO_BSTAR = "B_to_Bstar"
    BSTAR_TO_B = "Bstar_to_B"

    def flipped(self) -> "DualityTag":
        if self is DualityTag.B_TO_BSTAR:
            return DualityTag.BSTAR_TO_B
        return DualityTag.B_TO_BSTAR


class OperatorError(ValueError):
    pass


class NotHermitianError(OperatorError):
    pass


class NotPositiveError(OperatorError):
    def __init__(self, message, witness=None, min_eigenvalue=None):
        super().__init__(message)
        self.witness = witness
        self.min_eigenvalue = min_eigenvalue


def as_matrix(A, square: bool = True) -> np.ndarray:
    """Validate and return A as a finite complex 2-d array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise OperatorError(f"expected a 2-d matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise OperatorError("matrix has non-finite entries")
    return A


def herm_tol(A: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.linalg.norm(A)))


def psd_tol(A: np.ndarray) -> float:
    return 1e-10 * max(1.0, float(np.linalg.norm(A, 2)) if A.size else 1.0)


@dataclass(frozen=True)
class HermitianOperator:
    """Self-adjoint A: B -> B*, i.e. ``<Ab, c> = conj(<Ac, b>)``."""

    matrix: np.ndarray
    tag: DualityTag = DualityTag.B_TO_BSTAR
    hermiticity_defect: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def hermitian(A, tag: DualityTag = DualityTag.B_TO_BSTAR, tol: float | None = None) -> HermitianOperator:
    """Symmetrize A if its Hermiticity defect is below ``tol``, otherwise raise.

    The default tolerance is ``1e-12 * max(1, ||A||_F)``.
    """
    if isinstance(A, HermitianOperator):
        return A
    A = as_matrix(A)
    defect = float(np.linalg.norm(A - A.conj().T))
    if tol is None:
        tol = herm_tol(A)
    if defect > tol:
        raise NotHermitianError(f"Hermiticity defect {defect:.3e} exceeds tolerance {tol:.3e}")
    return HermitianOperator((A + A.conj().T) / 2, DualityTag(tag), defect)


def _coerce(A, tag=None) -> HermitianOperator:
    if isinstance(A, HermitianOperator):
        return A
    return hermitian(A, tag or DualityTag.B_TO_BSTAR)


@dataclass(frozen=True)
class PositiveOperator:
    base: HermitianOperator
    min_eigenvalue: float

    @property
    def matrix(self) -> np.ndarray:
        return self.base.matrix

    @property
    def tag(self) -> DualityTag:
        return self.base.tag

    @property
    def dim(self) -> int:
        return self.base.dim

    def __bool__(self):
        return True

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class NotPositive:
    """Failure certificate: ``pairing(A, witness, witness) < 0``."""

    base: HermitianOperator
    min_eigenvalue: float
    witness: np.ndarray

    def __bool__(self):
        return False


@dataclass(frozen=True)
class FactorizationResult:
    T: np.ndarray
    rank: int
    residual: float
    eigenvalues: np.ndarray = field(repr=False)


def pairing(A, b, c) -> complex:
    """``<Ab, c>_B = c^H A b``."""
    A = np.asarray(A.matrix if isinstance(A, (HermitianOperator, PositiveOperator)) else A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if A.ndim != 2 or b.shape != (A.shape[1],) or c.shape != (A.shape[0],):
        raise OperatorError(f"dimension mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
    return complex(np.vdot(c, A @ b))


def is_positive(A, tol: float | None = None):
    """Certify ``<Ab, b> >= 0`` for all b.

    Returns a :class:`PositiveOperator` on success and a :class:`NotPositive`
    certificate carrying a witness vector otherwise.  The default tolerance
    is ``1e-10 * max(1, ||A||_2)``.
    """
    H = _coerce(A)
    if tol is None:
        tol = psd_tol(H.matrix)
    if H.dim == 0:
        return PositiveOperator(H, 0.0)
    w, Q = np.linalg.eigh(H.matrix)
    lam = float(w[0])
    if lam >= -tol:
        return PositiveOperator(H, lam)
    return NotPositive(H, lam, Q[:, 0].copy())


def require_positive(A, tol: float | None = None) -> PositiveOperator:
    if isinstance(A, PositiveOperator):
        return A
    res = is_positive(A, tol)
    if not res:
        raise NotPositiveError(
            f"operator is not positive: min eigenvalue {res.min_eigenvalue:.3e}",
            witness=res.witness,
            min_eigenvalue=res.min_eigenvalue,
        )
    return res


def factorize(A, tol: float | None = None) -> FactorizationResult:
    """Factor a positive operator as ``A = T^H T`` with T of minimal rank.

    T is ``Lambda^{1/2} Q^H`` restricted to eigenvalues above
    ``1e-12 * lambda_max``; its row space is the finite section of the
    Hilbert space H_A.
    """
    P = require_positive(A, tol)
    M = P.matrix
    n = M.shape[0]
    if n == 0:
        return FactorizationResult(np.zeros((0, 0), complex), 0, 0.0, np.zeros(0))
    w, Q = np.linalg.eigh(M)
    cutoff = 1e-12 * max(float(w[-1]), 0.0)
    keep = w > cutoff
    # largest eigenvalues first
    idx = np.flatnonzero(keep)[::-1]
    T = np.sqrt(w[idx])[:, None] * Q[:, idx].conj().T
    residual = float(np.linalg.norm(M - T.conj().T @ T))
    return FactorizationResult(T, int(idx.size), residual, w)


@dataclass(frozen=True)
class CauchySchwarz:
    lhs: float
    rhs: float
    holds: bool


def cauchy_schwarz_check(A, b, c) -> CauchySchwarz:
    """Check ``|<Ab, c>| <= <Ab, b>^{1/2} <Ac, c>^{1/2}``."""
    lhs = abs(pairing(A, b, c))
    bb = max(pairing(A, b, b).real, 0.0)
    cc = max(pairing(A, c, c).real, 0.0)
    rhs = float(np.sqrt(bb) * np.sqrt(cc))
    return CauchySchwarz(lhs, rhs, lhs <= rhs + 1e-12 * (1 + rhs))


def order_leq(A, B, tol: float | None = None):
    """A <= B iff B - A is positive.

    Returns the positivity certificate of ``B - A``; it is truthy exactly
    when the ordering holds.
    """
    HA, HB = _coerce(A), _coerce(B)
    if HA.matrix.shape != HB.matrix.shape:
        raise OperatorError(f"shape mismatch: {HA.matrix.shape} vs {HB.matrix.shape}")
    if HA.tag != HB.tag:
        raise OperatorError(f"duality tag mismatch: {HA.tag.value} vs {HB.tag.value}")
    diff = HermitianOperator(HB.matrix - HA.matrix, HA.tag)
    if tol is None:
        tol = psd_tol(diff.matrix) if diff.dim else 0.0
    return is_positive(diff, tol)


def dual_flip(A, tag: DualityTag):
    """Apply the natural injection tau: in coordinates the matrix is unchanged
    and only the duality tag switches sides."""
    A = as_matrix(A)
    return A.copy(), DualityTag(tag).flipped()


def spectral_norm(A) -> float:
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def psd_project(A: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (batched over leading axes)."""
    A = np.asarray(A, dtype=complex)
    H = (A + np.swapaxes(A, -1, -2).conj()) / 2
    w, Q = np.linalg.eigh(H)
    w = np.clip(w, 0.0, None)
    return (Q * w[..., None, :]) @ np.swapaxes(Q, -1, -2).conj()
