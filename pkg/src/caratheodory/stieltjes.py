"""Stieltjes integrals of scalar functions against increasing operator functions.

For a continuous scalar f and an increasing M: [a, b] -> PSD matrices the
integral is the limit of the sums ``sum_j f(xi_j) (M(t_j) - M(t_{j-1}))`` as
the mesh goes to zero.  The refinement bound used throughout is

    ||S(P') - S(P)|| <= osc_delta(f) * ||M(b) - M(a)||

for any refinement P' of a partition P of mesh <= delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import spectral_norm


class NotIncreasingError(ValueError):
    def __init__(self, message, t=None, witness=None):
        super().__init__(message)
        self.t = t
        self.witness = witness


class IntegrationError(RuntimeError):
    pass


def _herm(A):
    return (A + np.swapaxes(A, -1, -2).conj()) / 2


def _min_eigs(A):
    return np.linalg.eigvalsh(_herm(A))[..., 0]


@dataclass(frozen=True, eq=False)
class IncreasingOperatorFunction:
    """t -> M(t), PSD-valued and increasing on [a, b].

    ``func`` takes a 1-d float array and returns shape ``(len(t), n, n)``.
    ``jumps`` lists known discontinuities; ``None`` means unknown (they are
    then detected numerically when integrating).  Construction certifies
    positivity and monotonicity on an ``n_check``-point grid.
    """

    a: float
    b: float
    func: Callable[[np.ndarray], np.ndarray]
    dim: int
    jumps: tuple | None = None
    check: bool = field(default=True, repr=False)
    n_check: int = field(default=257, repr=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")
        if self.jumps is not None:
            object.__setattr__(self, "jumps", tuple(sorted(float(t) for t in self.jumps)))
        if self.check:
            self.certify(self.n_check)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.func(t.reshape(-1)), dtype=complex)
        return out.reshape(t.shape + (self.dim, self.dim))

    @property
    def total(self) -> np.ndarray:
        """M(b) - M(a)."""
        v = self([self.a, self.b])
        return v[1] - v[0]

    def certify(self, n=257, tol=None):
        grid = np.linspace(self.a, self.b, n)
        if self.jumps:
            grid = np.union1d(grid, [j for j in self.jumps if self.a <= j <= self.b])
        vals = self(grid)
        scale = spectral_norm(vals[-1] - vals[0])
        if tol is None:
            tol = 1e-10 * max(1.0, scale)
        lam = _min_eigs(vals)
        if np.min(lam) < -tol:
            k = int(np.argmin(lam))
            raise NotIncreasingError(f"M({grid[k]:.6g}) is not positive (min eig {lam[k]:.3e})", t=grid[k])
        inc = np.diff(vals, axis=0)
        lam = _min_eigs(inc)
        if lam.size and np.min(lam) < -tol:
            k = int(np.argmin(lam))
            raise NotIncreasingError(
                f"M decreases on [{grid[k]:.6g}, {grid[k + 1]:.6g}] (min eig {lam[k]:.3e})", t=grid[k]
            )
        return grid

    @classmethod
    def from_grid(cls, knots, values, kind="linear", check=True, jumps=None):
        """Grid-backed function.

        ``kind="linear"`` interpolates linearly between knots (continuous);
        ``kind="step"`` is the right-continuous step function with jumps at
        the knots.
        """
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=complex)
        if kind == "linear":
            def func(t):
                t = np.clip(t, knots[0], knots[-1])
                j = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 2)
                w = (t - knots[j]) / (knots[j + 1] - knots[j])
                return values[j] + w[:, None, None] * (values[j + 1] - values[j])
        elif kind == "step":
            def func(t):
                j = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 1)
                return values[j]
            if jumps is None:
                d = np.linalg.norm(np.diff(values, axis=0), axis=(1, 2))
                jumps = tuple(knots[1:][d > 0])
        else:
            raise ValueError(f"unknown interpolation kind {kind!r}")
        return cls(float(knots[0]), float(knots[-1]), func, values.shape[1], jumps=jumps, check=check)


def scalar_function(mu: Callable, a: float, b: float, **kw) -> IncreasingOperatorFunction:
    """Wrap an increasing scalar function as a 1 x 1 operator function."""
    return IncreasingOperatorFunction(a, b, lambda t: np.asarray(mu(t), dtype=complex)[:, None, None], 1, **kw)


def diagonal_function(mus, a: float, b: float, **kw) -> IncreasingOperatorFunction:
    def func(t):
        d = np.stack([np.asarray(mu(t), dtype=complex) for mu in mus], axis=-1)
        return d[:, :, None] * np.eye(len(mus))
    return IncreasingOperatorFunction(a, b, func, len(mus), **kw)


@dataclass(frozen=True, eq=False)
class Partition:
    """``a = t_0 <= xi_1 <= t_1 <= ... <= xi_m <= t_m = b``."""

    knots: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float)
        xi = np.asarray(self.tags, dtype=float)
        if t.ndim != 1 or t.size < 2 or xi.shape != (t.size - 1,):
            raise ValueError("partition needs m+1 knots and m tags")
        if np.any(np.diff(t) < 0) or np.any(xi < t[:-1]) or np.any(xi > t[1:]):
            raise ValueError("knots must be sorted and tags interleaved")
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "tags", xi)

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.knots)))

    def __len__(self):
        return self.tags.size

    @classmethod
    def from_knots(cls, knots, tags="mid"):
        t = np.asarray(knots, dtype=float)
        return cls(t, _tags(t, tags))

    @classmethod
    def uniform(cls, a, b, m, tags="mid"):
        return cls.from_knots(np.linspace(a, b, m + 1), tags)

    def refine(self, tags="mid") -> "Partition":
        """Halve every interval."""
        t = self.knots
        new = np.empty(2 * t.size - 1)
        new[0::2] = t
        new[1::2] = (t[:-1] + t[1:]) / 2
        return Partition.from_knots(new, tags)


def _tags(t, rule):
    if rule == "mid":
        return (t[:-1] + t[1:]) / 2
    if rule == "left":
        return t[:-1].copy()
    if rule == "right":
        return t[1:].copy()
    raise ValueError(f"unknown tag rule {rule!r}")


@dataclass(frozen=True)
class RiemannStieltjesSum:
    value: np.ndarray
    partition: Partition
    mesh: float


def _increments(M, knots, check=True):
    vals = M(knots)
    inc = np.diff(vals, axis=0)
    if check and inc.shape[0]:
        tol = 1e-10 * max(1.0, spectral_norm(vals[-1] - vals[0]))
        lam = _min_eigs(inc)
        if np.min(lam) < -tol:
            k = int(np.argmin(lam))
            raise NotIncreasingError(
                f"non-monotone increment on [{knots[k]:.6g}, {knots[k + 1]:.6g}] (min eig {lam[k]:.3e})",
                t=knots[k],
            )
    return vals, inc


def _fvals(f, tags):
    fv = np.asarray(f(tags), dtype=complex)
    if fv.shape == ():
        fv = np.full(tags.shape, fv)
    if fv.shape[: tags.ndim] != tags.shape:
        raise ValueError(f"integrand returned shape {fv.shape} for {tags.size} points")
    if not np.all(np.isfinite(fv)):
        raise IntegrationError("integrand is not finite on the partition")
    return fv


def rs_sum(f, M: IncreasingOperatorFunction, P: Partition, check=True) -> RiemannStieltjesSum:
    """The sum ``sum_j f(xi_j) (M(t_j) - M(t_{j-1}))`` with every increment
    certified PSD."""
    if not (np.isclose(P.knots[0], M.a) and np.isclose(P.knots[-1], M.b)):
        raise ValueError("partition does not subdivide the domain of M")
    _, inc = _increments(M, P.knots, check)
    value = np.tensordot(_fvals(f, P.tags), inc, axes=(0, 0))
    return RiemannStieltjesSum(value, P, P.mesh)


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool


def brod_bound_check(alpha, beta, H) -> BoundCheck:
    """``||sum a_j H_j|| <= ||sum |b_j| H_j||`` for PSD H_j and ``|a_j| <= |b_j|``."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    beta = np.asarray(beta, dtype=complex).reshape(-1)
    H = np.asarray(H, dtype=complex)
    if H.ndim == 2:
        H = H[None]
    if not (alpha.size == beta.size == H.shape[0]):
        raise ValueError("alpha, beta and H must have equal length")
    if np.any(np.abs(alpha) > np.abs(beta) * (1 + 1e-15)):
        raise ValueError("precondition |alpha_j| <= |beta_j| violated")
    lam = _min_eigs(H)
    tol = 1e-10 * max(1.0, max(spectral_norm(h) for h in H))
    if np.any(lam < -tol) or np.linalg.norm(H - np.swapaxes(H, 1, 2).conj()) > tol:
        raise ValueError("H_j must be positive")
    lhs = spectral_norm(np.tensordot(alpha, H, axes=(0, 0)))
    rhs = spectral_norm(np.tensordot(np.abs(beta), H, axes=(0, 0)))
    return BoundCheck(lhs, rhs, lhs <= rhs + 1e-12 * (1 + rhs))


# ---------------------------------------------------------------------------
# jump detection and adaptive integration


def detect_jumps(M: IncreasingOperatorFunction, n_grid=4097, iters=48, rel=1e-12) -> np.ndarray:
    """Locations of jumps of M.

    Every grid cell with a non-negligible increment is bisected (keeping the
    half with the larger increment); a jump is reported where the increment
    fails to shrink.  Locations are right endpoints of the final brackets.
    """
    grid = np.linspace(M.a, M.b, n_grid)
    vals = M(grid)
    total = spectral_norm(vals[-1] - vals[0])
    if total == 0:
        return np.zeros(0)
    g = np.linalg.norm(np.diff(vals, axis=0), ord=2, axis=(1, 2))
    cells = np.flatnonzero(g > rel * total)
    if not cells.size:
        return np.zeros(0)
    lo, hi = grid[cells].copy(), grid[cells + 1].copy()
    Mlo, Mhi = vals[cells].copy(), vals[cells + 1].copy()
    for _ in range(iters):
        mid = (lo + hi) / 2
        active = (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        Mm = M(mid)
        left = np.linalg.norm(Mm - Mlo, ord=2, axis=(1, 2))
        right = np.linalg.norm(Mhi - Mm, ord=2, axis=(1, 2))
        go_right = (right > left) & active
        go_left = ~go_right & active
        lo = np.where(go_right, mid, lo)
        Mlo = np.where(go_right[:, None, None], Mm, Mlo)
        hi = np.where(go_left, mid, hi)
        Mhi = np.where(go_left[:, None, None], Mm, Mhi)
    final = np.linalg.norm(Mhi - Mlo, ord=2, axis=(1, 2))
    is_jump = (final > 1e-6 * g[cells]) & (final > rel * total)
    return hi[is_jump]


def modulus_of_continuity(f, a, b, n=4097):
    """Sampled modulus ``omega(k h) = max_i max_{j<=k} |f(t_{i+j}) - f(t_i)|``
    at dyadic lags k; returns ``(lags_in_t, omega)``."""
    t = np.linspace(a, b, n)
    fv = _fvals(f, t)
    lags, om = [], []
    k = 1
    while k < n:
        lags.append(k * (b - a) / (n - 1))
        d = np.max(np.abs(fv[k:] - fv[:-k]))
        om.append(max(d, om[-1]) if om else d)
        k *= 2
    return np.array(lags), np.array(om)


@dataclass(frozen=True)
class IntegrationInfo:
    certified: bool
    delta: float
    n_intervals: int
    last_change: float
    refinement_bound: float
    partition: Partition = field(repr=False)


def _bracket_knots(jumps, a, b, eta):
    extra = []
    for y in jumps:
        if y <= a:
            extra.append(a + eta)
        elif y <= b:
            extra += [max(a, y - eta), y]
    return np.asarray(extra, dtype=float)


def integrate(f, M: IncreasingOperatorFunction, eps: float = 1e-8, *, tags="mid",
              max_intervals: int = 2 ** 17, base_intervals: int = 256, full_output=False):
    """Stieltjes integral of the scalar function f against M.

    f may return shape ``(len(t), K)`` for a batch of K integrands; the
    result then has shape ``(K, n, n)`` and convergence is judged on the
    worst member.

    The mesh delta is chosen from f's sampled modulus of continuity so that
    ``osc_delta(f) * ||M(b) - M(a)|| <= eps``, which bounds the change under
    any refinement by eps.  When that partition would exceed
    ``max_intervals`` the result is instead obtained by uniform halving until
    successive sums differ by at most eps/2, and is reported uncertified.
    In both cases halving continues until the eps/2 backstop holds.  Knots are
    placed at the jumps of M.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = M.a, M.b
    total = spectral_norm(M.total)
    if total == 0:
        probe = _fvals(f, np.array([a, b]))
        zero = np.zeros(probe.shape[1:] + (M.dim, M.dim), dtype=complex)
        if full_output:
            P = Partition.uniform(a, b, 1, tags)
            return zero, IntegrationInfo(True, b - a, 1, 0.0, 0.0, P)
        return zero

    lags, om = modulus_of_continuity(f, a, b)
    target = eps / total
    if om[0] > target and om[0] > 0.5 * om[min(3, om.size - 1)] and om[0] > 1e-6 * (1 + np.max(om)):
        raise IntegrationError(
            f"integrand oscillation does not shrink with the mesh (osc {om[0]:.3e}); f looks discontinuous"
        )
    ok = np.flatnonzero(om <= target)
    if ok.size:
        delta = float(lags[ok[-1]])
    else:
        delta = float(lags[0] * target / om[0])
    m_cert = math.ceil((b - a) / delta)
    certified = m_cert <= max_intervals
    m0 = m_cert if certified else base_intervals

    jumps = np.asarray(M.jumps if M.jumps is not None else detect_jumps(M), dtype=float)
    eta = (b - a) * 2.0 ** -40
    knots = np.union1d(np.linspace(a, b, m0 + 1), _bracket_knots(jumps, a, b, eta))
    Mk = M(knots)

    def total_sum(knots, Mk):
        inc = np.diff(Mk, axis=0)
        return np.tensordot(_fvals(f, _tags(knots, tags)), inc, axes=(0, 0))

    S = total_sum(knots, Mk)
    change = np.inf
    while True:
        if knots.size - 1 > max_intervals:
            raise IntegrationError(
                f"no convergence to eps={eps:.1e} within {max_intervals} intervals (last change {change:.3e})"
            )
        mids = (knots[:-1] + knots[1:]) / 2
        new_knots = np.empty(2 * knots.size - 1)
        new_knots[0::2], new_knots[1::2] = knots, mids
        new_M = np.empty((new_knots.size,) + Mk.shape[1:], dtype=complex)
        new_M[0::2], new_M[1::2] = Mk, M(mids)
        S_new = total_sum(new_knots, new_M)
        change = _batch_norm(S_new - S)
        knots, Mk, S = new_knots, new_M, S_new
        if change <= eps / 2:
            break

    _check_increments(Mk, total)
    if not full_output:
        return S
    mesh = float(np.max(np.diff(knots)))
    k = np.searchsorted(lags, mesh)
    osc = om[min(k, om.size - 1)] if k < om.size else om[-1]
    if mesh < lags[0]:
        osc = om[0] * mesh / lags[0]
    info = IntegrationInfo(certified, delta, knots.size - 1, float(change), float(osc * total),
                           Partition.from_knots(knots, tags))
    return S, info


def _batch_norm(A):
    if A.ndim == 2:
        return spectral_norm(A)
    return float(np.max(np.linalg.norm(A.reshape((-1,) + A.shape[-2:]), ord=2, axis=(1, 2)), initial=0.0))


def _check_increments(Mk, total):
    inc = np.diff(Mk, axis=0)
    lam = _min_eigs(inc)
    if lam.size and np.min(lam) < -1e-10 * max(1.0, total):
        raise NotIncreasingError(f"M is not increasing (increment min eig {np.min(lam):.3e})")
