"""Herglotz integrals of operator measures on the circle, and their recovery.

A measure is stored as finitely many atoms ``(t_k, Delta_k)`` plus a
piecewise-constant density on cells ``[t0, t1]``.  Its distribution is
normalized by ``M(0) = 0`` and is right-continuous on (0, 2 pi], so an atom
at 0 shows up as a jump just to the right of 0 (equivalently at 2 pi).

    phi(z) = D + int (e^{it} + z)/(e^{it} - z) dM(t)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from .helly import MonotoneSequence, SelectionResult, dyadic_grid, helly_select
from .kernels import FunctionDomainError, FunctionSource, kernel_from_values
from .operators import DualityTag, psd_project, spectral_norm
from .stieltjes import IncreasingOperatorFunction, integrate

TWO_PI = 2 * np.pi


class NotCaratheodoryError(ValueError):
    """Re phi fails to be positive at a sampled point."""

    def __init__(self, message, radius=None, angle=None, min_eigenvalue=None):
        super().__init__(message)
        self.radius = radius
        self.angle = angle
        self.min_eigenvalue = min_eigenvalue


class RecoveryError(RuntimeError):
    pass


def _skew(A):
    return (A - np.swapaxes(A, -1, -2).conj()) / 2


def _real(A):
    return (A + np.swapaxes(A, -1, -2).conj()) / 2


@dataclass(frozen=True, eq=False)
class HerglotzMeasure(FunctionSource):
    """Operator measure on [0, 2 pi) together with the constant D.

    ``density`` holds the PSD density on each cell (mass per unit angle).
    Calling the measure evaluates its Herglotz integral.
    """

    atom_t: np.ndarray
    atom_mass: np.ndarray
    cell_t0: np.ndarray
    cell_t1: np.ndarray
    density: np.ndarray
    D: np.ndarray
    tag: DualityTag = DualityTag.B_TO_BSTAR

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=complex))
        n = D.shape[0]
        at = np.asarray(self.atom_t, dtype=float).reshape(-1)
        am = np.asarray(self.atom_mass, dtype=complex).reshape(at.size, n, n)
        t0 = np.asarray(self.cell_t0, dtype=float).reshape(-1)
        t1 = np.asarray(self.cell_t1, dtype=float).reshape(-1)
        m = np.asarray(self.density, dtype=complex).reshape(t0.size, n, n)
        if t1.size != t0.size:
            raise ValueError("cell edge arrays differ in length")
        if np.any((at < 0) | (at >= TWO_PI)):
            raise ValueError("atom locations must lie in [0, 2 pi)")
        if np.any(t1 <= t0) or np.any(t0 < 0) or np.any(t1 > TWO_PI * (1 + 1e-15)):
            raise ValueError("density cells must be nonempty subintervals of [0, 2 pi]")
        o = np.argsort(t0, kind="stable")
        if np.any(t0[o][1:] < t1[o][:-1] - 1e-15):
            raise ValueError("density cells overlap")
        scale = 1e-10 * max(1.0, float(np.max(np.abs(am), initial=0)), float(np.max(np.abs(m), initial=0)))
        for what, A in (("atom mass", am), ("density", m)):
            if A.size:
                if np.max(np.abs(A - np.swapaxes(A, 1, 2).conj())) > scale:
                    raise ValueError(f"{what} is not Hermitian")
                if np.min(np.linalg.eigvalsh(_real(A))) < -scale:
                    raise ValueError(f"{what} is not positive semidefinite")
        if np.linalg.norm(D + D.conj().T) > 1e-10 * max(1.0, np.linalg.norm(D)):
            raise ValueError("D must be skew-Hermitian")
        for name, v in (("atom_t", at), ("atom_mass", _real(am)), ("cell_t0", t0), ("cell_t1", t1),
                        ("density", _real(m)), ("D", D)):
            object.__setattr__(self, name, v)
        object.__setattr__(self, "tag", DualityTag(self.tag))

    @property
    def dim(self) -> int:
        return self.D.shape[0]

    @classmethod
    def from_cells(cls, edges, density, atoms=(), D=None, tag=DualityTag.B_TO_BSTAR):
        """Contiguous cells ``[edges[j], edges[j+1]]`` and atoms ``[(t, mass)]``."""
        edges = np.asarray(edges, dtype=float)
        density = np.asarray(density, dtype=complex)
        if D is not None:
            n = np.atleast_2d(np.asarray(D)).shape[0]
        elif density.ndim == 3:
            n = density.shape[-1]
        elif density.size or not atoms:
            n = 1
        else:
            n = np.atleast_2d(np.asarray(atoms[0][1])).shape[0]
        at = np.array([float(t) for t, _ in atoms])
        am = np.array([np.atleast_2d(np.asarray(mass, dtype=complex)) for _, mass in atoms]).reshape(-1, n, n)
        D = np.zeros((n, n), complex) if D is None else D
        return cls(at, am, edges[:-1], edges[1:], density.reshape(-1, n, n), D, tag)

    @property
    def atoms(self):
        return list(zip(self.atom_t.tolist(), self.atom_mass))

    @property
    def total(self) -> np.ndarray:
        return self.atom_mass.sum(axis=0) + np.einsum("j,jab->ab", self.cell_t1 - self.cell_t0, self.density)

    @cached_property
    def _atom_tables(self):
        o = np.argsort(self.atom_t, kind="stable")
        t = self.atom_t[o]
        cum = np.concatenate([np.zeros((1, self.dim, self.dim), complex), np.cumsum(self.atom_mass[o], axis=0)])
        return t, cum

    @cached_property
    def _cell_tables(self):
        """Cells completed by zero-density gaps into a partition of [0, 2 pi]."""
        o = np.argsort(self.cell_t0, kind="stable")
        t0, t1, m = self.cell_t0[o], self.cell_t1[o], self.density[o]
        edges, dens = [0.0], []
        zero = np.zeros((self.dim, self.dim), complex)
        for a, b, d in zip(t0, t1, m):
            if a > edges[-1]:
                edges.append(a)
                dens.append(zero)
            edges.append(b)
            dens.append(d)
        if edges[-1] < TWO_PI:
            edges.append(TWO_PI)
            dens.append(zero)
        edges = np.asarray(edges)
        dens = np.asarray(dens).reshape(-1, self.dim, self.dim)
        cum = np.concatenate([np.zeros((1, self.dim, self.dim), complex),
                              np.cumsum(np.diff(edges)[:, None, None] * dens, axis=0)])
        return edges, dens, cum

    def distribution_values(self, t) -> np.ndarray:
        t = np.clip(np.asarray(t, dtype=float).reshape(-1), 0.0, TWO_PI)
        at, acum = self._atom_tables
        k = np.searchsorted(at, t, side="right")
        out = acum[np.where(t > 0, k, 0)]
        edges, dens, cum = self._cell_tables
        if dens.shape[0]:
            j = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, dens.shape[0] - 1)
            out = out + cum[j] + (t - edges[j])[:, None, None] * dens[j]
        return out

    def distribution(self, check=True) -> IncreasingOperatorFunction:
        """M(t) on [0, 2 pi] with its jumps registered."""
        jumps = tuple(t if t > 0 else TWO_PI * 2.0 ** -40 for t in self.atom_t)
        return IncreasingOperatorFunction(0.0, TWO_PI, self.distribution_values, self.dim,
                                          jumps=jumps, check=check)

    def _values(self, z):
        return evaluate(self, z)


def herglotz_kernel(t, z):
    e = np.exp(1j * np.asarray(t, dtype=float))
    return (e + z) / (e - z)


def cell_integrals(edges, z) -> np.ndarray:
    """``int_{e_j}^{e_{j+1}} (e^{it} + z)/(e^{it} - z) dt`` in closed form,
    shape (len(z), len(edges) - 1)."""
    L = np.exp(1j * np.asarray(edges, dtype=float))[None, :] - np.asarray(z)[:, None]
    ratio = L[:, 1:] / L[:, :-1]
    # arg(e^{it} - z) increases strictly with t when |z| < 1
    darg = np.mod(np.angle(ratio), TWO_PI)
    width = np.diff(edges)[None, :]
    return -width + 2 * darg - 2j * np.log(np.abs(ratio))


def evaluate(mu: HerglotzMeasure, z, chunk=2048) -> np.ndarray:
    """Herglotz integral of mu at points of the open disk."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    if np.any(np.abs(flat) >= 1):
        raise FunctionDomainError("the Herglotz integral is evaluated in the open unit disk only")
    n = mu.dim
    out = np.empty((flat.size, n, n), dtype=complex)
    edges = np.concatenate([[c0, c1] for c0, c1 in zip(mu.cell_t0, mu.cell_t1)]) if mu.cell_t0.size else None
    dens = mu.density.reshape(-1, n * n)
    am = mu.atom_mass.reshape(-1, n * n)
    for s in range(0, flat.size, chunk):
        zz = flat[s:s + chunk]
        acc = np.broadcast_to(mu.D.reshape(-1), (zz.size, n * n)).astype(complex)
        if mu.atom_t.size:
            acc = acc + herglotz_kernel(mu.atom_t[None, :], zz[:, None]) @ am
        if edges is not None:
            G = cell_integrals(edges, zz)[:, 0::2]
            acc = acc + G @ dens
        out[s:s + chunk] = acc.reshape(-1, n, n)
    return out.reshape(z.shape + (n, n))


# ---------------------------------------------------------------------------
# checks through the Stieltjes integral


@dataclass(frozen=True)
class KernelIntegralReport:
    passed: bool
    max_deviation: float
    worst_pair: tuple
    tol: float


def kernel_integral_check(mu: HerglotzMeasure, points, eps=1e-8, tol=1e-7) -> KernelIntegralReport:
    """Compare the kernel of the Herglotz integral with

        k(z, w) = int 1/((e^{it} - z) conj(e^{it} - w)) dM(t)

    evaluated by Riemann-Stieltjes sums, over all pairs of points."""
    pts = np.asarray(points, dtype=complex).reshape(-1)
    vals = evaluate(mu, pts)
    zi, wi = np.meshgrid(np.arange(pts.size), np.arange(pts.size), indexing="ij")
    zi, wi = zi.ravel(), wi.ravel()
    z, w = pts[zi], pts[wi]

    def f(t):
        e = np.exp(1j * t)[:, None]
        return 1.0 / ((e - z[None, :]) * np.conj(e - w[None, :]))

    K_int = integrate(f, mu.distribution(), eps)
    dev = np.array([
        spectral_norm(kernel_from_values(z[p], w[p], vals[zi[p]], vals[wi[p]]) - K_int[p])
        for p in range(z.size)
    ])
    p = int(np.argmax(dev))
    return KernelIntegralReport(bool(dev[p] <= tol), float(dev[p]), (complex(z[p]), complex(w[p])), tol)


def trig_moments(mu: HerglotzMeasure, k_max, eps=1e-7) -> np.ndarray:
    """``c_k = int e^{-ikt} dM(t)`` for k = 0..k_max, shape (k_max + 1, n, n)."""
    ks = np.arange(k_max + 1)
    return integrate(lambda t: np.exp(-1j * np.outer(t, ks)), mu.distribution(), eps)


def moments_from_taylor(phi, k_max, radius=0.5, n_nodes=256) -> np.ndarray:
    """c_0 = Re phi(0) and c_k = a_k / 2 from the Taylor coefficients a_k of
    phi, computed by the trapezoid rule on a circle of the given radius."""
    th = TWO_PI * np.arange(n_nodes) / n_nodes
    vals = phi(radius * np.exp(1j * th))
    coef = np.fft.fft(vals, axis=0) / n_nodes
    k = np.arange(k_max + 1)
    a = coef[k] / radius ** k[:, None, None]
    out = a / 2
    out[0] = _real(phi(0.0))
    return out


# ---------------------------------------------------------------------------
# recovery from phi


@dataclass(frozen=True, eq=False)
class RadialStage:
    """Distribution of ``(phi + phi^H)(r e^{it}) dt / (4 pi)`` on the grid."""

    r: float
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @cached_property
    def function(self) -> IncreasingOperatorFunction:
        return IncreasingOperatorFunction.from_grid(self.grid, self.values, kind="linear", check=False)

    def __call__(self, t):
        return self.function(t)


@dataclass(frozen=True, eq=False)
class RecoveryInfo:
    radii: np.ndarray
    stages: list = field(repr=False)
    selection: SelectionResult = field(repr=False)
    extrapolated_from: tuple
    validation_points: np.ndarray = field(repr=False)
    validation_error: float
    atom_count: int
    bound_slack: float


def default_radii(n_min=3, n_max=12):
    return 1.0 - 2.0 ** -np.arange(n_min, n_max + 1)


def radial_stage(phi, r, grid, nodes_per_panel=8, tol=1e-10) -> RadialStage:
    """Cell masses of ``Re phi(r e^{it}) dt / 2 pi`` by composite Gauss-Legendre
    with panels no wider than ``1 - r``; certifies ``Re phi >= 0`` at every node."""
    x, wq = np.polynomial.legendre.leggauss(nodes_per_panel)
    width = float(grid[1] - grid[0])
    p = max(1, math.ceil(width / (1 - r)))
    pw = width / p
    local = (np.arange(p)[:, None] + (x[None, :] + 1) / 2) * pw
    t = grid[:-1, None] + local.reshape(1, -1)
    F = np.asarray(phi(r * np.exp(1j * t.reshape(-1))))
    n = F.shape[-1]
    H = _real(F)
    lam = np.linalg.eigvalsh(H)[:, 0]
    scale = tol * (1 + float(np.max(np.abs(H))))
    if lam.min() < -scale:
        k = int(np.argmin(lam))
        tt = float(t.reshape(-1)[k])
        raise NotCaratheodoryError(
            f"Re phi is not positive at r={r:.6g}, t={tt:.6g} (min eig {lam[k]:.3e})",
            radius=float(r), angle=tt, min_eigenvalue=float(lam[k]),
        )
    weights = np.tile(wq * pw / 2, p) / TWO_PI
    masses = np.einsum("q,cqab->cab", weights, H.reshape(grid.size - 1, -1, n, n))
    values = np.concatenate([np.zeros((1, n, n), complex), np.cumsum(masses, axis=0)])
    return RadialStage(float(r), grid, values)


def _clusters(s, floor, ratio=10.0, halo=3):
    """Cells carrying concentrated trace mass.

    Returns ``(core, window, lo, hi)`` per cluster: the peak cell plus a
    neighbour holding a split atom, the core widened by ``halo`` cells to
    each side (where the Poisson tail of the stages extrapolates worst), and
    the two flank cells used for the background level.
    """
    K = s.size
    cores, taken = [], np.zeros(K, bool)
    peaks = np.flatnonzero((s >= np.roll(s, 1)) & (s > np.roll(s, -1)) & (s > floor))
    for c in peaks[np.argsort(-s[peaks])]:
        if taken[c]:
            continue
        left, right = (c - 1) % K, (c + 1) % K
        nb, beyond = (left, (c - 2) % K) if s[left] >= s[right] else (right, (c + 2) % K)
        core = [c]
        if s[nb] > floor and s[nb] > ratio * s[beyond] and not taken[nb]:
            core.append(nb)
        first = min(core, key=lambda j: (j - c + 1) % K)
        lo, hi = (first - 1) % K, (first + len(core)) % K
        bg = 0.5 * (s[lo] + s[hi])
        if np.mean(s[core]) > ratio * bg and s[core].sum() - bg * len(core) > floor:
            cores.append((first, len(core)))
            taken[core] = True
    cores.sort()
    out = []
    for k, (first, m) in enumerate(cores):
        # stop halfway to the neighbouring cores
        gap_l = (first - (cores[k - 1][0] + cores[k - 1][1])) % K if len(cores) > 1 else K
        gap_r = (cores[(k + 1) % len(cores)][0] - (first + m)) % K if len(cores) > 1 else K
        a, b = min(halo, (gap_l - 1) // 2), min(halo, (gap_r - 1) // 2)
        window = [(first - a + j) % K for j in range(a + m + b)]
        core = [(first + j) % K for j in range(m)]
        out.append((core, window, (window[0] - 1) % K, (window[-1] + 1) % K))
    return out


def _locate_peak(phi, r, t_lo, t_hi, h):
    """Angle maximizing tr Re phi(r e^{it}) on [t_lo, t_hi]."""
    def p(t):
        F = np.asarray(phi(r * np.exp(1j * np.atleast_1d(t))))
        return np.trace(_real(F), axis1=-2, axis2=-1).real

    ts = np.arange(t_lo, t_hi, max(h / 4, 1e-9))
    k = int(np.argmax(p(ts)))
    res = minimize_scalar(lambda t: -p(t)[0], bounds=(ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]),
                          method="bounded", options={"xatol": 1e-13})
    return float(np.mod(res.x, TWO_PI))


def recover(phi, radii=None, depth=10, sel_tol=None, nodes_per_panel=8, atom_floor=1e-6,
            validation_tol=1e-2, full_output=False):
    """Measure and D with ``phi = D + Herglotz integral``.

    Radial stages ``M_r`` are built on the dyadic grid of the given depth, a
    subsequence is selected by Helly's theorem, and the last two selected
    stages are extrapolated linearly in ``1 - r``.  Cells carrying a
    concentrated mass are converted to atoms located at the peak of
    ``Re phi`` near the circle.  Raises :class:`NotCaratheodoryError` if
    ``Re phi`` is negative somewhere on the sampled circles.
    """
    if not getattr(phi, "analytic", True):
        raise ValueError("recovery needs an analytic source; tables are not Caratheodory functions")
    radii = default_radii() if radii is None else np.sort(np.asarray(radii, dtype=float))
    if np.any((radii <= 0) | (radii >= 1)):
        raise ValueError("radii must lie in (0, 1)")
    phi0 = np.asarray(phi(0.0))
    n = phi0.shape[-1]
    F0 = _real(phi0)
    lam0 = np.linalg.eigvalsh(F0)[0]
    if lam0 < -1e-10 * max(1.0, spectral_norm(F0)):
        raise NotCaratheodoryError(f"Re phi(0) is not positive (min eig {lam0:.3e})", radius=0.0, angle=0.0,
                                   min_eigenvalue=float(lam0))
    D = _skew(phi0)

    grid, _ = dyadic_grid(depth)
    stages = [radial_stage(phi, r, grid, nodes_per_panel) for r in radii]
    samples = np.stack([s.values for s in stages])
    slack = max(spectral_norm(samples[k, -1] - F0) for k in range(len(stages)))
    bound = F0 + (slack + 1e-12 * max(1.0, spectral_norm(F0))) * np.eye(n)
    seq = MonotoneSequence([s.function for s in stages], bound)
    if sel_tol is None:
        sel_tol = 1e-7 * max(spectral_norm(F0), 1e-300)
    # a finite budget cannot tell which half holds infinitely many members;
    # the finest radii are the honest proxy for the tail
    sel = helly_select(seq, tol=sel_tol, depth=depth, strict=False, samples=samples, rule="tail")

    idx = [int(i) for i in sel.indices[-2:]]
    if len(idx) == 2:
        i, j = idx
        hi_, hj = 1 - radii[i], 1 - radii[j]
        L = (hi_ * samples[j] - hj * samples[i]) / (hi_ - hj)
    else:
        L = samples[idx[-1]]
    masses = psd_project(np.diff(L, axis=0))
    widths = np.diff(grid)

    r_peak = float(radii[idx[-1]])
    h = 1 - r_peak
    s = np.trace(masses, axis1=1, axis2=2).real
    floor = atom_floor * max(float(np.trace(F0).real), 1e-300)
    atoms = []
    dens = masses / widths[:, None, None]
    for core, window, lo, hi in _clusters(s, floor):
        bg = 0.5 * (dens[lo] + dens[hi])
        atom = psd_project(masses[window].sum(axis=0) - bg * widths[window].sum())
        start = grid[core[0]] - widths[0]
        t_star = _locate_peak(phi, r_peak, start, start + (len(core) + 2) * widths[0], h)
        atoms.append((t_star, atom))
        dens[window] = bg
    mu = HerglotzMeasure.from_cells(grid, dens, atoms, D)
    if atoms:
        mu = HerglotzMeasure(mu.atom_t, mu.atom_mass, mu.cell_t0, mu.cell_t1, mu.density, D)

    vpts = np.concatenate([[0.0], 0.5 * np.exp(1j * TWO_PI * (np.arange(8) + 0.5) / 8)])
    ref = np.asarray(phi(vpts))
    err = max(spectral_norm(a - b) for a, b in zip(evaluate(mu, vpts), ref)) / (1 + max(spectral_norm(a) for a in ref))
    if err > validation_tol:
        raise RecoveryError(f"recovered measure reproduces phi only to {err:.3e} at |z| = 0.5")
    if not full_output:
        return mu
    info = RecoveryInfo(radii, stages, sel, tuple(idx), vpts, float(err), len(atoms), float(slack))
    return mu, info


# ---------------------------------------------------------------------------
# random measures


def _random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T / (2 * rank)


def random_measure(rng, n, n_atoms=2, n_cells=64, density_scale=1.0, with_D=True) -> HerglotzMeasure:
    """Atoms at uniform angles with random PSD masses plus a smooth density
    ``B_0 + sum_j (1 + cos(t - theta_j)) B_j`` sampled at cell midpoints."""
    edges = np.linspace(0.0, TWO_PI, n_cells + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    dens = np.broadcast_to(_random_psd(rng, n), (n_cells, n, n)).copy()
    for _ in range(2):
        th = rng.uniform(0, TWO_PI)
        dens += (1 + np.cos(mid - th))[:, None, None] * _random_psd(rng, n, 1)
    dens *= density_scale / TWO_PI
    atoms = [(float(rng.uniform(0, TWO_PI)), _random_psd(rng, n, 1 + int(rng.integers(n))))
             for _ in range(n_atoms)]
    D = np.zeros((n, n), complex)
    if with_D:
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        D = (A - A.conj().T) / 4
    return HerglotzMeasure.from_cells(edges, dens, atoms, D)
