"""Helly selection for bounded sequences of increasing operator functions.

Given F_n(t) <= F_0 on [0, 2 pi], a diagonal process over a countable probe
family E and a dyadic grid extracts a subsequence along which every quadratic
form ``<F_n(t) u, u>`` is Cauchy; the limit is reassembled from those forms by
polarization.  A finite budget of members stands in for the infinite
sequence, so "convergent" means Cauchy within a stage tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .operators import spectral_norm
from .stieltjes import IncreasingOperatorFunction, integrate, modulus_of_continuity

DEFAULT_SEED = 0x48454C4C59


class HellyError(RuntimeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def dyadic_grid(depth=10, a=0.0, b=2 * np.pi):
    """Dyadic points of [a, b] to the given depth, plus their enumeration
    order (endpoints first, then by increasing depth)."""
    N = 2 ** depth
    grid = a + (b - a) * np.arange(N + 1) / N
    order = [0, N]
    step = N
    while step > 1:
        order.extend(range(step // 2, N, step))
        step //= 2
    return grid, np.asarray(order)


# ---------------------------------------------------------------------------
# scalar case


@dataclass(frozen=True)
class ScalarSelection:
    indices: np.ndarray
    limit: np.ndarray
    residuals: np.ndarray
    converged: bool
    uniform_bound: float
    variation_bound: float


def _refine(v, cur, tol, min_len, rule="majority"):
    """Bolzano-Weierstrass bisection on the values of one stage.

    With ``rule="majority"`` keeps the more populated half (ties go to the
    half holding the earliest index); with ``rule="tail"`` keeps the half
    holding the latest member.  Stops when the spread is within tol or the
    next half would drop below ``min_len`` members.
    """
    sel = np.arange(v.size)
    while True:
        vv = v[sel]
        lo, hi = vv.min(), vv.max()
        if hi - lo <= tol:
            return cur[sel]
        mid = (lo + hi) / 2
        left, right = sel[vv <= mid], sel[vv > mid]
        if rule == "tail":
            cand = left if left.size and (not right.size or left[-1] > right[-1]) else right
        elif left.size != right.size:
            cand = left if left.size > right.size else right
        else:
            cand = left if left[0] < right[0] else right
        if cand.size < min_len:
            # the tail half is too short to bisect further: keep the tail itself
            return cur[sel[-min_len:]] if rule == "tail" else cur[sel]
        sel = cand


def scalar_helly_select(values, tol, indices=None, order=None, min_len=3, strict=False,
                        rule="majority") -> ScalarSelection:
    """Select a subsequence of real functions sampled on a grid.

    ``values[k, g]`` is member ``indices[k]`` at grid point g.  Grid points
    are processed in ``order`` (the diagonal process); the limit at each grid
    point is the value of the last selected member.
    """
    values = np.asarray(values, dtype=float)
    N, G = values.shape
    cur = np.arange(N) if indices is None else np.asarray(indices)
    pos = {int(k): i for i, k in enumerate(np.arange(N) if indices is None else indices)}
    order = np.arange(G) if order is None else np.asarray(order)
    for g in order:
        rows = np.array([pos[int(k)] for k in cur])
        cur = _refine(values[rows, g], cur, tol, min_len, rule)
    rows = np.array([pos[int(k)] for k in cur])
    sub = values[rows]
    residuals = sub.max(axis=0) - sub.min(axis=0)
    converged = bool(np.max(residuals, initial=0.0) <= tol)
    if strict and not converged:
        g = int(np.argmax(residuals))
        raise HellyError(f"no Cauchy subsequence at grid point {g} (residual {residuals[g]:.3e} > {tol:.3e})")
    return ScalarSelection(
        cur,
        sub[-1].copy(),
        residuals,
        converged,
        float(np.max(np.abs(values))),
        float(np.max(np.sum(np.abs(np.diff(values, axis=1)), axis=1))),
    )


# ---------------------------------------------------------------------------
# operator case


@dataclass(frozen=True, eq=False)
class MonotoneSequence:
    """Members ``n -> F_n`` (n < budget) of increasing functions on [0, 2 pi]
    with ``F_n(t) <= bound``."""

    members: Callable[[int], IncreasingOperatorFunction] | Sequence[IncreasingOperatorFunction]
    bound: np.ndarray
    budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "bound", np.asarray(self.bound, dtype=complex))
        if self.budget is None:
            if callable(self.members):
                raise ValueError("a budget is required for generator sequences")
            object.__setattr__(self, "budget", len(self.members))

    def member(self, n: int) -> IncreasingOperatorFunction:
        if callable(self.members):
            return self.members(n)
        return self.members[n]

    @property
    def dim(self) -> int:
        return self.bound.shape[0]

    def sample(self, grid) -> np.ndarray:
        return np.stack([self.member(n)(grid) for n in range(self.budget)])


def probe_family(n, n_random=None, seed=DEFAULT_SEED) -> np.ndarray:
    """Standard basis plus a seeded batch of random unit vectors, as columns."""
    n_random = n if n_random is None else n_random
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n_random)) + 1j * rng.standard_normal((n, n_random))
    R /= np.linalg.norm(R, axis=0)
    return np.concatenate([np.eye(n), R], axis=1)


def polarization_vectors(n):
    """Vectors u whose quadratic forms determine a matrix: e_i, and
    e_j + i^k e_i for j < i, k = 0..3."""
    eye = np.eye(n)
    us, keys = [], []
    for i in range(n):
        us.append(eye[i])
        keys.append((i, i, 0))
    for i in range(n):
        for j in range(i):
            for k in range(4):
                us.append(eye[j] + 1j ** k * eye[i])
                keys.append((i, j, k))
    return np.array(us).T, keys


def depolarize(q, keys, n):
    """Rebuild matrices ``A[..., i, j] = <A e_j, e_i>`` from quadratic forms."""
    A = np.zeros(q.shape[:-1] + (n, n), dtype=complex)
    for col, (i, j, k) in enumerate(keys):
        if i == j:
            A[..., i, i] += q[..., col]
        else:
            A[..., i, j] += 0.25 * 1j ** k * q[..., col]
    low = np.tril(np.ones((n, n), bool), -1)
    A = A + np.where(low, A, 0).swapaxes(-1, -2).conj()
    return A


@dataclass(frozen=True, eq=False)
class SelectionResult:
    indices: np.ndarray
    limit: IncreasingOperatorFunction
    grid: np.ndarray
    grid_values: np.ndarray = field(repr=False)
    convergence_log: np.ndarray = field(repr=False)
    residual: float
    tol: float
    converged: bool
    bound_norm: float
    first_inequality: float
    second_inequality: float
    probes: np.ndarray = field(repr=False)
    sequence: MonotoneSequence = field(repr=False)


def helly_select(F: MonotoneSequence, probes=None, tol=None, depth=10, seed=DEFAULT_SEED,
                 min_len=3, strict=True, samples=None, rule="majority") -> SelectionResult:
    """Extract a weakly convergent subsequence of F on the dyadic grid.

    ``tol`` defaults to ``1e-7 * ||F_0||``.  Raises :class:`HellyError` if
    the bound hypothesis fails, if either probe inequality fails, or (when
    ``strict``) if the selected subsequence is not Cauchy within ``tol``.
    ``samples`` may carry the members pre-sampled on the grid; ``rule`` is
    the bisection rule of :func:`scalar_helly_select`.
    """
    grid, order = dyadic_grid(depth)
    n = F.dim
    F0 = F.bound
    nF0 = spectral_norm(F0)
    if tol is None:
        tol = 1e-7 * max(nF0, 1e-300)
    E = probe_family(n, seed=seed) if probes is None else np.asarray(probes, dtype=complex)

    vals = F.sample(grid) if samples is None else np.asarray(samples)
    herm = (vals + vals.swapaxes(-1, -2).conj()) / 2
    slack = 1e-10 * max(1.0, nF0)
    lam_pos = np.linalg.eigvalsh(herm)[..., 0]
    lam_gap = np.linalg.eigvalsh(F0 - herm)[..., 0]
    for lam, what in ((lam_pos, "F_n(t) >= 0"), (lam_gap, "F_n(t) <= F_0")):
        if np.min(lam) < -slack:
            k, g = np.unravel_index(int(np.argmin(lam)), lam.shape)
            raise HellyError(f"bound hypothesis {what} fails for n={k}, t={grid[g]:.6g} (min eig {lam[k, g]:.3e})",
                             witness=(int(k), float(grid[g])))

    # probe inequalities: |<F_n(t) x, y>| <= ||F_0|| |x||y|, sum_l |<dF x, y>| <= 2 ||F_0|| |x||y|
    norms = np.linalg.norm(E, axis=0)
    scale = nF0 * np.outer(norms, norms) + slack
    pair = np.einsum("ay,ngab,bx->ngyx", E.conj(), herm, E)
    first = float(np.max(np.abs(pair) / scale))
    second = float(np.max(np.sum(np.abs(np.diff(pair, axis=1)), axis=1) / scale))
    if first > 1 + 1e-9 or second > 2 + 1e-9:
        raise HellyError(f"probe inequality violated (ratios {first:.6g}, {second:.6g})")

    U, keys = polarization_vectors(n)
    stage_vectors = np.concatenate([U, E[:, n:]], axis=1)
    q = np.einsum("au,ngab,bu->ngu", stage_vectors.conj(), herm, stage_vectors).real

    cur = np.arange(F.budget)
    for u in range(stage_vectors.shape[1]):
        cur = scalar_helly_select(q[cur, :, u], tol, indices=cur, order=order, min_len=min_len,
                                  rule=rule).indices

    sub = q[cur]
    log = np.max(sub.max(axis=0) - sub.min(axis=0), axis=-1)
    residual = float(np.max(log))
    converged = residual <= tol
    if strict and not converged:
        g = int(np.argmax(log))
        raise HellyError(f"subsequence not Cauchy at t={grid[g]:.6g}: residual {residual:.3e} > {tol:.3e}")

    limit_vals = depolarize(sub[-1][:, : len(keys)], keys, n)
    limit = IncreasingOperatorFunction.from_grid(grid, limit_vals, kind="step")
    return SelectionResult(cur, limit, grid, limit_vals, log, residual, float(tol), converged, nF0,
                           first, second, E, F)


def pass_to_limit(f, selection: SelectionResult, eps=1e-8, tail=3):
    """Integral of f against the selected limit, checked in weak pairings
    against the tail of the subsequence.

    The admissible disagreement is ``2 eps`` plus the selection residual
    (scaled by ``2 sup|f| + var f``) plus the grid discretization bound
    ``osc_w(f) ||F(2 pi) - F(0)||`` of the step-function limit.
    """
    value = integrate(f, selection.limit, eps)
    lags, om = modulus_of_continuity(f, 0.0, 2 * np.pi)
    t = np.linspace(0, 2 * np.pi, 4097)
    fv = np.asarray(f(t), dtype=complex) * np.ones_like(t)
    f_sup, f_var = float(np.max(np.abs(fv))), float(np.sum(np.abs(np.diff(fv))))
    w = float(np.max(np.diff(selection.grid)))
    osc_w = float(np.interp(w, lags, om))
    n = selection.limit.dim
    E = selection.probes
    norms = np.linalg.norm(E, axis=0)
    for k in selection.indices[-tail:]:
        member = selection.sequence.member(int(k))
        other = integrate(f, member, eps)
        allowed = 2 * eps + n * selection.residual * (2 * f_sup + f_var) \
            + osc_w * spectral_norm(member.total)
        diff = np.abs(E.conj().T @ (value - other) @ E) / np.outer(norms, norms)
        if np.max(diff) > allowed:
            y, x = np.unravel_index(int(np.argmax(diff)), diff.shape)
            raise HellyError(
                f"limit integral disagrees with member {k} on probe pair ({x}, {y}): "
                f"{diff[y, x]:.3e} > {allowed:.3e}",
                witness=(E[:, x], E[:, y]),
            )
    return value
