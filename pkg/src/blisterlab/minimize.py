"""Brute-force oracle: direct minimisation of the discretised 1D energy.

The torus ``[0, 1)`` carries ``n`` nodes ``x_i = i / n``. First differences
live on the staggered midpoints ``x_{i+1/2}``:

* membrane ``alpha_m h sum_i (Dw_i + (Du_i)^2 / 2 - eta)^2 dx``
* bending ``h^3 sum_i (Lu_i)^2 dx`` with the three-point Laplacian at nodes
* substrate ``alpha_s sqrt(a) sqrt(b)`` with ``a = sum (Dw_i)^2 dx`` and
  ``b = sum ((w_i + w_{i+1}) / 2)^2 dx`` over midpoints inside ``Omega``.

The optimiser works on ``W = w / eta`` and ``U = u / sqrt(eta)`` with the
objective divided by the flat energy ``alpha_m h eta^2``. For the gradient
the substrate product is regularised as ``sqrt(a + eps) sqrt(b + eps) - eps``.
Bound constraints ``u >= 0`` and ``u = 0`` on ``Omega`` are enforced by the
projected quasi-Newton method L-BFGS-B.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import BondedSet1D, EnergyBreakdown, GeometryError, Params

SUBSTRATE_EPS = 1e-14
MIN_NODES_PER_PIECE = 4


@dataclass(frozen=True)
class MinimizeOptions:
    max_iter: int = 20000
    #: tolerance on the sup norm of the projected gradient density
    gtol: float = 1e-2
    warm_start: bool = True
    #: noise amplitude on ``u`` relative to ``sqrt(eta)``; ``None`` means 1/10
    noise: float | None = None


@dataclass
class Discretization:
    """Grid, bonded masks and the scaling of the discrete problem."""

    params: Params
    omega: BondedSet1D
    n: int
    pinned: np.ndarray = field(init=False)  # nodes in Omega (u fixed to 0)
    bonded_mid: np.ndarray = field(init=False)  # midpoints in Omega

    def __post_init__(self):
        if self.n < 64:
            raise ValueError("n must be at least 64")
        x = self.x
        self.pinned = self.omega.contains(x)
        self.bonded_mid = self.omega.contains(x + 0.5 * self.dx, tol=0.0)
        if not self.bonded_mid.any():
            raise GeometryError("bonded set not resolvable on the grid")
        for mask in (self.bonded_mid, ~self.bonded_mid):
            runs = _run_lengths(mask)
            if runs.size and runs.min() < MIN_NODES_PER_PIECE:
                raise GeometryError("bonded set not resolvable on the grid "
                                    f"(a piece spans fewer than {MIN_NODES_PER_PIECE} cells)")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    @property
    def free(self) -> np.ndarray:
        """Mask over the packed vector ``[W, U]`` of the optimisation variables."""
        return np.concatenate([np.ones(self.n, dtype=bool), ~self.pinned])

    # scaled objective -------------------------------------------------------
    def coefficients(self) -> tuple[float, float]:
        """Bending and substrate weights of the scaled objective."""
        p = self.params
        return p.h ** 2 / (p.alpha_m * p.eta), p.alpha_s / (p.alpha_m * p.h)

    def objective(self, W, U, eps: float = SUBSTRATE_EPS):
        """Scaled energy and its gradient with respect to ``W`` and ``U``."""
        dx = self.dx
        cb, cs = self.coefficients()
        chi = self.bonded_mid
        DW = (np.roll(W, -1) - W) / dx
        DU = (np.roll(U, -1) - U) / dx
        m = DW + 0.5 * DU ** 2 - 1.0
        LU = (np.roll(U, -1) - 2 * U + np.roll(U, 1)) / dx ** 2
        avg = 0.5 * (W + np.roll(W, -1))
        a = float(np.sum(DW[chi] ** 2)) * dx
        b = float(np.sum(avg[chi] ** 2)) * dx
        ra, rb = np.sqrt(a + eps), np.sqrt(b + eps)
        F = float(np.sum(m ** 2)) * dx + cb * float(np.sum(LU ** 2)) * dx + cs * (ra * rb - eps)

        gW = 2 * (np.roll(m, 1) - m)
        mDU = m * DU
        gU = 2 * (np.roll(mDU, 1) - mDU)
        gU += 2 * cb * (np.roll(LU, -1) - 2 * LU + np.roll(LU, 1)) / dx ** 2 * dx
        cDW = np.where(chi, DW, 0.0)
        cavg = np.where(chi, avg, 0.0)
        da = 2 * (np.roll(cDW, 1) - cDW)
        db = dx * (np.roll(cavg, 1) + cavg)
        gW += cs * (0.5 * rb / ra * da + 0.5 * ra / rb * db)
        return F, gW, gU

    def packed(self, z):
        n = self.n
        W = z[:n]
        U = np.zeros(n)
        U[~self.pinned] = z[n:]
        return W, U

    def pack(self, W, U) -> np.ndarray:
        return np.concatenate([W, U[~self.pinned]])

    def fun(self, z):
        W, U = self.packed(z)
        F, gW, gU = self.objective(W, U)
        return F, np.concatenate([gW, gU[~self.pinned]])

    def bounds(self):
        return [(None, None)] * self.n + [(0.0, None)] * int((~self.pinned).sum())

    # physical quantities ----------------------------------------------------
    def energy(self, w, u) -> EnergyBreakdown:
        """Unscaled, unregularised discrete energy of nodal ``w``, ``u``."""
        p, dx, chi = self.params, self.dx, self.bonded_mid
        Dw = (np.roll(w, -1) - w) / dx
        Du = (np.roll(u, -1) - u) / dx
        Lu = (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / dx ** 2
        avg = 0.5 * (w + np.roll(w, -1))
        mem = p.alpha_m * p.h * float(np.sum((Dw + 0.5 * Du ** 2 - p.eta) ** 2)) * dx
        bend = p.h ** 3 * float(np.sum(Lu ** 2)) * dx
        sub = p.alpha_s * np.sqrt(float(np.sum(Dw[chi] ** 2)) * dx) * np.sqrt(float(np.sum(avg[chi] ** 2)) * dx)
        return EnergyBreakdown(mem, bend, float(sub))

    def unscale(self, W, U):
        return self.params.eta * W, np.sqrt(self.params.eta) * U

    def flat_membrane_gradient(self) -> np.ndarray:
        """Analytic membrane gradient in ``w`` at ``w = u = 0`` (unscaled).

        The integrand is the constant ``eta^2``, so the gradient is
        ``-2 alpha_m h eta`` times the discrete divergence weights
        ``(e_{i} - e_{i-1})`` summed against the unit field, which vanish.
        """
        p = self.params
        ones = np.ones(self.n)
        weights = ones - np.roll(ones, 1)  # discrete divergence of the constant field
        return -2 * p.alpha_m * p.h * p.eta * weights


def _run_lengths(mask) -> np.ndarray:
    """Lengths of the cyclic runs of ``True`` in ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.all():
        return np.array([mask.size])
    if not mask.any():
        return np.array([], dtype=int)
    start = int(np.argmin(mask))  # a False entry: unroll there
    m = np.roll(mask, -start)
    edges = np.diff(np.concatenate([[0], m.astype(int), [0]]))
    return np.nonzero(edges == -1)[0] - np.nonzero(edges == 1)[0]


@dataclass
class MinimizeResult:
    energy: EnergyBreakdown
    iterations: int
    converged: bool
    gradient_norm: float
    w: np.ndarray
    u: np.ndarray
    n_blisters: int | None = None

    def as_dict(self) -> dict:
        return {**self.energy.as_dict(), "iterations": self.iterations,
                "converged": self.converged, "gradient_norm": self.gradient_norm}


def warm_start(disc: Discretization) -> tuple[np.ndarray, np.ndarray]:
    """Nodal ``(w, u)`` of a zero-membrane blister in every gap of ``Omega``.

    Each gap ``(a, a + G)`` between bonded intervals ``I_j`` and ``I_{j+1}``
    carries ``u = A (1 - cos(2 pi s / G))`` and ``w' = eta - u'^2 / 2``; on
    ``Omega``, ``w = eta (x - m_j)`` with ``m_j`` the interval centre. The
    amplitude ``A^2 = G eta (G + (|I_j| + |I_{j+1}|) / 2) / pi^2`` makes the
    pieces join continuously. For equispaced ``Omega`` this is the periodic
    array sampled on the grid.
    """
    p, x = disc.params, disc.x
    ivs = sorted((a % 1.0, a % 1.0 + (b - a)) for a, b in disc.omega.intervals)
    w = np.zeros(disc.n)
    u = np.zeros(disc.n)
    k = len(ivs)
    for j, (a, b) in enumerate(ivs):
        mid = 0.5 * (a + b)
        s = np.mod(x - a, 1.0)
        on = s <= b - a
        w[on] = p.eta * (s[on] - (mid - a))
        a1, b1 = ivs[(j + 1) % k]
        if j + 1 == k:
            a1, b1 = a1 + 1.0, b1 + 1.0
        G = a1 - b
        if G <= 0:
            continue
        A = np.sqrt(G * p.eta * (G + 0.5 * ((b - a) + (b1 - a1)))) / np.pi
        s = np.mod(x - b, 1.0)
        gap = (s > 0) & (s < G)
        sg = s[gap]
        k2 = 2 * np.pi / G
        u[gap] = A * (1 - np.cos(k2 * sg))
        integral = sg / 2 - np.sin(2 * k2 * sg) / (4 * k2)  # int_0^s sin^2(k2 t) dt
        w[gap] = p.eta * (b - a) / 2 + p.eta * sg - 0.5 * A ** 2 * k2 ** 2 * integral
    return w, u


def canonical_shift(mask) -> int:
    """Smallest ``k`` such that ``roll(mask, -k)`` is the lexicographically least rotation."""
    m = np.asarray(mask, dtype=np.uint8).tobytes()
    doubled = m + m
    return min(range(len(m)), key=lambda k: doubled[k:k + len(m)])


def minimize_profile(params: Params, omega: BondedSet1D, n: int = 512, seed: int = 0,
                     opts: MinimizeOptions = MinimizeOptions()) -> MinimizeResult:
    """Local minimiser of the discrete energy for a fixed bonded set.

    Deterministic given ``seed``. The start is the warm start (or zero) plus
    noise of amplitude ``sqrt(eta) / 10`` on the free ``u`` nodes. Without
    convergence the best iterate is returned with ``converged = False``.
    """
    disc = Discretization(params, omega, n)
    rng = np.random.default_rng(seed)
    if opts.warm_start:
        w0, u0 = warm_start(disc)
    else:
        w0, u0 = np.zeros(n), np.zeros(n)
    W0 = w0 / params.eta
    U0 = u0 / np.sqrt(params.eta)
    amp = 0.1 if opts.noise is None else opts.noise
    # the noise is anchored to the bonded pattern, so translating Omega by whole
    # grid cells translates the whole run
    noise = np.roll(rng.standard_normal(n), canonical_shift(disc.pinned))
    U0 = np.where(disc.pinned, 0.0, np.abs(U0 + amp * noise))
    res = minimize(disc.fun, disc.pack(W0, U0), jac=True, method="L-BFGS-B", bounds=disc.bounds(),
                   options={"maxiter": opts.max_iter, "maxfun": 4 * opts.max_iter,
                            "ftol": 1e-15, "gtol": opts.gtol * disc.dx, "maxcor": 20})
    W, U = disc.packed(res.x)
    gnorm = projected_gradient_norm(disc, res.x)
    w, u = disc.unscale(W, U)
    return MinimizeResult(disc.energy(w, u), int(res.nit), bool(gnorm <= opts.gtol), gnorm, w, u)


def projected_gradient_norm(disc: Discretization, z) -> float:
    _, g = disc.fun(z)
    g = g / disc.dx  # gradient of the energy density, independent of the grid
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in disc.bounds()])
    at_lower = (z <= lo) & (g > 0)
    return float(np.max(np.abs(np.where(at_lower, 0.0, g))))


def gradient_check(params: Params, omega: BondedSet1D, n: int = 128, seed: int = 0,
                   step: float = 1e-6) -> float:
    """Max relative error between the analytic gradient and central differences.

    The check point is random and feasible: ``W`` and ``U`` of order one,
    ``U > 0`` off ``Omega``. The error is measured in the sup norm relative
    to the sup norm of the analytic gradient.
    """
    disc = Discretization(params, omega, n)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal(n)
    U = np.where(disc.pinned, 0.0, rng.uniform(0.1, 1.0, n))
    z = disc.pack(W, U)
    _, g = disc.fun(z)
    fd = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = step
        fd[i] = (disc.fun(z + e)[0] - disc.fun(z - e)[0]) / (2 * step)
    return float(np.max(np.abs(g - fd)) / np.max(np.abs(g)))


def scan_blister_counts(params: Params, n: int, n_max: int, seed: int = 0,
                        opts: MinimizeOptions = MinimizeOptions()) -> list[MinimizeResult]:
    """:func:`minimize_profile` for equispaced ``Omega`` with ``N = 1..n_max`` blisters."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = []
    for N in range(1, n_max + 1):
        r = minimize_profile(params, BondedSet1D.equispaced(N, params.theta), n, seed, opts)
        r.n_blisters = N
        out.append(r)
    return out


def best_over_blister_count(params: Params, n: int, n_max: int, seed: int = 0,
                            opts: MinimizeOptions = MinimizeOptions()) -> tuple[int, MinimizeResult]:
    """Best blister count ``N*`` and its minimiser over equispaced bonded sets."""
    runs = scan_blister_counts(params, n, n_max, seed, opts)
    best = min(runs, key=lambda r: (r.energy.total, r.n_blisters))
    return best.n_blisters, best
