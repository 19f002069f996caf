"""Smoothing curve of the minimal ridge.

The curve ``gamma = (0, gamma2, gamma3)`` on ``[-1, 1]`` interpolates between
the two linear profiles ``(1 - a^2/2) t e2 + a t e3`` with ``a = alphaL`` on
the left and ``a = alphaR`` on the right, while satisfying
``gamma2' + gamma3'^2 / 2 = 1`` exactly. Every component is an exact piecewise
polynomial, so all identities hold to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial as P

from ..core import GeometryError

BUMP_LO, BUMP_HI = 1.0 / 3.0, 2.0 / 3.0
SUPPORT = 1.0 / 3.0


class PiecewisePoly:
    """Piecewise polynomial on sorted breakpoints, evaluated with numpy."""

    def __init__(self, breaks, polys):
        self.breaks = np.asarray(breaks, dtype=float)
        if len(polys) != len(self.breaks) - 1:
            raise ValueError("need one polynomial per interval")
        # each piece lives in the scaled variable of its own interval, which
        # keeps coefficients O(1) and products/antiderivatives accurate
        self.polys = [p.convert(domain=[a, b]) for a, b, p in
                      zip(self.breaks[:-1], self.breaks[1:], polys)]

    def _index(self, t):
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        return np.clip(idx, 0, len(self.polys) - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._index(t)
        out = np.empty_like(t)
        for k, p in enumerate(self.polys):
            m = idx == k
            if np.any(m):
                out[m] = p(t[m])
        return out

    def deriv(self, m: int = 1) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, [p.deriv(m) for p in self.polys])

    def integ(self, value_at_start: float = 0.0) -> "PiecewisePoly":
        """Continuous antiderivative taking ``value_at_start`` at the first breakpoint."""
        out, c = [], value_at_start
        for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.polys):
            q = p.integ()
            q = q - q(a) + c
            out.append(q)
            c = q(b)
        return PiecewisePoly(self.breaks, out)

    def __mul__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        self._same(other)
        return PiecewisePoly(self.breaks, [p * q for p, q in zip(self.polys, other.polys)])

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        self._same(other)
        return PiecewisePoly(self.breaks, [p + q for p, q in zip(self.polys, other.polys)])

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        self._same(other)
        return PiecewisePoly(self.breaks, [p - q for p, q in zip(self.polys, other.polys)])

    def scale(self, c: float) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, [c * p for p in self.polys])

    def times_t(self) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, [P([0.0, 1.0]).convert(domain=p.domain) * p
                                           for p in self.polys])

    def definite(self) -> float:
        return float(sum(p.integ()(b) - p.integ()(a) for a, b, p in
                         zip(self.breaks[:-1], self.breaks[1:], self.polys)))

    def _same(self, other):
        if not np.array_equal(self.breaks, other.breaks):
            raise ValueError("breakpoints differ")


@lru_cache(maxsize=None)
def mollifier() -> tuple[P, P]:
    """Even bump ``rho(xi) = c (1 - 9 xi^2)^4`` on ``|xi| < 1/3`` with unit mass, and its CDF.

    Returns polynomials valid on ``[-1/3, 1/3]``; ``rho`` vanishes outside.
    The bump is C^3 at the support boundary.
    """
    base = P([1.0, 0.0, -1.0], domain=[-SUPPORT, SUPPORT]) ** 4
    mass = base.integ()(SUPPORT) - base.integ()(-SUPPORT)
    rho = base / mass
    cdf = rho.integ()
    cdf = cdf - cdf(-SUPPORT)
    return rho, cdf


def _breaks():
    # the bump occupies [1/3, 2/3], right after the mollified kink ends
    return np.array([-1.0, -SUPPORT, SUPPORT, BUMP_HI, 1.0])


@lru_cache(maxsize=None)
def _bump_polys() -> tuple[P, P, float]:
    """``rho(2t - 1)`` and its derivative in ``t`` on ``[1/3, 2/3]``, plus ``int rho'(2t-1)^2 dt``."""
    rho, _ = mollifier()
    # rho(2t - 1) has the same coefficients as rho in the scaled variable
    b = P(rho.coef, domain=[BUMP_LO, BUMP_HI])
    db = b.deriv()
    sq = (db * db).integ()
    return b, db, float(sq(BUMP_HI) - sq(BUMP_LO)) / 4.0


@dataclass(frozen=True)
class GammaCurve:
    """Exact piecewise-polynomial smoothing curve for fold slopes ``(alphaL, alphaR)``."""

    alphaL: float
    alphaR: float
    lam: float
    g2: PiecewisePoly = field(repr=False)
    g3: PiecewisePoly = field(repr=False)
    omega_pp: PiecewisePoly = field(repr=False)
    width: float = SUPPORT

    @property
    def phi(self) -> float:
        return max(abs(self.alphaL), abs(self.alphaR))

    @property
    def E(self) -> float:
        """``int_{-1}^{1} gamma' . eta`` (the defect removed from beta)."""
        return float(self.omega_pp.polys[-1](1.0))

    def gamma2(self, t):
        return self.g2(t)

    def gamma3(self, t):
        return self.g3(t)

    def d(self, comp: int, order: int, t):
        """``order``-th derivative of component ``comp`` (2 or 3)."""
        g = {2: self.g2, 3: self.g3}[comp]
        return g.deriv(order)(t) if order else g(t)

    def eta(self, comp: int, t):
        """``eta(t) = gamma - t gamma'`` component-wise."""
        t = np.asarray(t, dtype=float)
        return self.d(comp, 0, t) - t * self.d(comp, 1, t)

    def omega(self, t):
        """``omega(t) = int_{-1}^{t} gamma'(s) . eta(s) ds``."""
        return self.omega_pp(t)

    def fvk_residual(self, t):
        """Pointwise ``gamma2' + gamma3'^2 / 2 - 1``."""
        return self.d(2, 1, t) + 0.5 * self.d(3, 1, t) ** 2 - 1.0

    def consistency_residual(self) -> float:
        """``(1/2) int gamma3'^2 - (alphaL^2 + alphaR^2) / 2``."""
        d3 = self.g3.deriv()
        return 0.5 * (d3 * d3).definite() - 0.5 * (self.alphaL ** 2 + self.alphaR ** 2)

    def energy_identity_E(self) -> float:
        """``E`` through integration by parts and ``gamma2' + gamma3'^2 / 2 = 1``:

        ``E = [gamma2^2 + gamma3^2]_{-1}^{1} / 2 - int t (gamma2' - 1)^2``.
        """
        g2m, g2p = self.g2(np.array([-1.0, 1.0]))
        g3m, g3p = self.g3(np.array([-1.0, 1.0]))
        d2 = self.g2.deriv() - PiecewisePoly(self.g2.breaks, [P([1.0])] * len(self.g2.polys))
        tail = (d2 * d2).times_t().definite()
        return 0.5 * (g2p ** 2 - g2m ** 2 + g3p ** 2 - g3m ** 2) - tail


def gamma_curve(alphaL: float, alphaR: float) -> GammaCurve:
    """Build the smoothing curve for one fold.

    ``gamma3`` is the mollified kinked profile plus a bump ``lam rho(2t - 1)``
    on ``[1/3, 2/3]`` restoring ``int gamma3'^2 = alphaL^2 + alphaR^2``;
    ``gamma2`` integrates ``1 - gamma3'^2 / 2`` from ``-(1 - alphaL^2 / 2)``.
    """
    if not (-1.0 <= alphaL <= 1.0 and -1.0 <= alphaR <= 1.0):
        raise ValueError("fold slopes must lie in [-1, 1]")
    rho, cdf = mollifier()
    bump, dbump, bump_sq = _bump_polys()
    br = _breaks()
    aL, aR = float(alphaL), float(alphaR)
    d3_smooth = [P([aL]), aL + (aR - aL) * cdf, P([aR]), P([aR])]
    smooth = PiecewisePoly(br, d3_smooth)
    deficit = aL ** 2 + aR ** 2 - (smooth * smooth).definite()
    lam_sq = deficit / (4.0 * bump_sq)
    if lam_sq < -1e-15:
        raise GeometryError("consistency condition unsolvable: mollifier too narrow")
    lam = float(np.sqrt(max(lam_sq, 0.0)))
    d3 = PiecewisePoly(br, [d3_smooth[0], d3_smooth[1], aR + lam * dbump, P([aR])])
    g3 = d3.integ(-aL)
    one = PiecewisePoly(br, [P([1.0])] * 4)
    d2 = one - (d3 * d3).scale(0.5)
    g2 = d2.integ(-(1.0 - 0.5 * aL ** 2))
    # gamma' . eta = g2' (g2 - t g2') + g3' (g3 - t g3')
    eta2 = g2 - d2.times_t()
    eta3 = g3 - d3.times_t()
    omega = (d2 * eta2 + d3 * eta3).integ(0.0)
    return GammaCurve(aL, aR, lam, g2, g3, omega)
