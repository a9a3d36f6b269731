"""Isometric colligations (D, C, V) and their synthesis from samples.

A realization represents

    phi(z) = D + C^H (I + z V^H)(I - z V^H)^{-1} C

with V an isometry on a finite state space, C: C^n -> C^d and D
skew-Hermitian.  ``synthesize`` builds one from samples of phi through the
finite section of L(phi): V solves the relation

    k(., w) conj(w) b  ->  k(., w) b - k(., 0) b

on the sample points, C b is k(., 0) b and D is the skew part of phi(0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import FunctionDomainError, FunctionSource, RKHSSection, SampleSet, rkhs_section
from .operators import DualityTag


class RelationDefectError(ValueError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


@dataclass(frozen=True, eq=False)
class Realization(FunctionSource):
    V: np.ndarray
    C: np.ndarray
    D: np.ndarray
    tag: DualityTag = DualityTag.B_TO_BSTAR

    def __post_init__(self):
        V = np.asarray(self.V, dtype=complex)
        D = np.atleast_2d(np.asarray(self.D, dtype=complex))
        C = np.asarray(self.C, dtype=complex).reshape(V.shape[0], D.shape[0])
        if V.ndim != 2 or V.shape[0] != V.shape[1] or D.shape[0] != D.shape[1]:
            raise ValueError("V and D must be square")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "tag", DualityTag(self.tag))

    @property
    def state_dim(self) -> int:
        return self.V.shape[0]

    @property
    def dim(self) -> int:
        return self.D.shape[0]

    @property
    def isometry_defect(self) -> float:
        return float(np.linalg.norm(self.V.conj().T @ self.V - np.eye(self.state_dim)))

    @property
    def skew_defect(self) -> float:
        return float(np.linalg.norm(self.D + self.D.conj().T))

    def _values(self, z):
        return _evaluate(self, z)


def _evaluate(R: Realization, z: np.ndarray) -> np.ndarray:
    if np.any(np.abs(z) >= 1):
        raise FunctionDomainError("realizations are evaluated in the open unit disk only")
    out = np.broadcast_to(R.D, (z.size, R.dim, R.dim)).copy()
    d = R.state_dim
    if d == 0 or z.size == 0:
        return out
    Vh = R.V.conj().T
    A = np.eye(d) - z[:, None, None] * Vh
    X = np.linalg.solve(A, np.broadcast_to(R.C, (z.size, d, R.dim)))
    Y = X + z[:, None, None] * (Vh @ X)
    return out + R.C.conj().T @ Y


def evaluate(R: Realization, z):
    """phi(z) from a realization; solves with ``I - z V^H`` (never inverts)."""
    return R(z)


@dataclass(frozen=True)
class RelationData:
    domain: np.ndarray = field(repr=False)
    range: np.ndarray = field(repr=False)
    defect: float
    isometry_mismatch: float


@dataclass(frozen=True)
class SynthesisInfo:
    rank: int
    gram_condition: float
    relation: RelationData
    section: RKHSSection = field(repr=False)


def synthesize(samples: SampleSet, rank_tol=1e-10, defect_tol=1e-6, full_output=False):
    """Colligation reproducing phi from its values on ``samples``.

    The samples must contain 0 and carry values.  V is the unitary
    least-squares solution of the relation in section coordinates (the
    orthogonal Procrustes problem), which is a unitary completion off the
    relation's domain.  Raises ``IndefiniteKernelError`` when the Gram matrix
    has negative squares and :class:`RelationDefectError` when the relation
    is not isometric within ``defect_tol``.
    """
    if samples.values is None:
        raise ValueError("samples carry no function values")
    if not samples.include_origin:
        raise ValueError("sample set must contain the origin (C and D are defined there)")
    section = rkhs_section(None, samples, rank_tol=rank_tol)
    pts = section.samples.points
    n = section.dim
    o = samples.origin_index
    others = [i for i in range(pts.size) if i != o]
    N = pts.size

    dom = np.zeros((N * n, len(others) * n), dtype=complex)
    ran = np.zeros_like(dom)
    eye = np.eye(n)
    for col, i in enumerate(others):
        sl = slice(col * n, (col + 1) * n)
        dom[i * n:(i + 1) * n, sl] = np.conj(pts[i]) * eye
        ran[i * n:(i + 1) * n, sl] = eye
        ran[o * n:(o + 1) * n, sl] = -eye
    X, Y = section.coords(dom), section.coords(ran)

    r = section.rank
    if r:
        U, _, Wh = np.linalg.svd(Y @ X.conj().T)
        V = U @ Wh
    else:
        V = np.zeros((0, 0), dtype=complex)
    scale = max(1.0, float(np.linalg.norm(Y)))
    defect = float(np.linalg.norm(V @ X - Y)) / scale if r else 0.0
    gx, gy = X.conj().T @ X, Y.conj().T @ Y
    mismatch = float(np.linalg.norm(gx - gy)) / max(1.0, float(np.linalg.norm(gx)))
    if defect > defect_tol:
        raise RelationDefectError(
            f"relation is not isometric: defect {defect:.3e} > {defect_tol:.1e}; "
            "the samples are not those of a Caratheodory function",
            defect=defect,
        )

    C = section.coords(section.point_coefficients(o))
    phi0 = samples.values[o]
    D = (phi0 - phi0.conj().T) / 2
    R = Realization(V, C, D)
    if not full_output:
        return R
    info = SynthesisInfo(r, section.condition, RelationData(X, Y, defect, mismatch), section)
    return R, info


def realize(phi, points, **kw):
    """Sample an analytic source at ``points`` (origin added) and synthesize."""
    if not getattr(phi, "analytic", True):
        raise ValueError("non-analytic (table) functions admit no realization")
    S = SampleSet.from_points(points, include_origin=True).with_values(phi)
    return synthesize(S, **kw)


def holdout_points(points, copies=1):
    """Deterministic validation points: the nonzero inputs rotated by half the
    mean angular gap (and further multiples for more copies)."""
    pts = np.asarray(points, dtype=complex)
    pts = pts[pts != 0]
    if not pts.size:
        return np.zeros(0, complex)
    step = np.pi / pts.size
    return np.concatenate([pts * np.exp(1j * step * (k + 1) / copies) for k in range(copies)])


# ---------------------------------------------------------------------------
# random colligations


def random_unitary(rng, d):
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_realization(rng, n, d, c_scale=1.0, d_scale=1.0) -> Realization:
    V = random_unitary(rng, d)
    C = c_scale * (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / np.sqrt(2 * d)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    D = d_scale * (A - A.conj().T) / 2
    return Realization(V, C, D)


def herglotz_from_realization(R: Realization, **kw):
    """Measure whose Herglotz integral reproduces the realization."""
    from .herglotz import recover

    return recover(R, **kw)
