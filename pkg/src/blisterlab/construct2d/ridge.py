"""Minimal ridge: smoothing of one straight fold of a piecewise-affine field.

Everything here works in the fold frame: the fold runs from ``a = (0, 0)`` to
``c = (l, 0)``, ``y < 0`` is the left (L) side and ``y > 0`` the right (R)
side. Vector fields are expressed in the same frame. The hat field
``(w_hat, u_hat)`` is affine on each side and has zero membrane energy there.
After subtracting ``eta (x, y)`` and an infinitesimal rotation (both leave
the membrane strain unchanged), the smoothed field inside
``D = {|y| < f(x)}``, ``t = y / f(x)``, is

    u  = f gamma3(t) + U x
    w2 = f gamma2(t) - y
    w1 = beta - x - U f gamma3(t) + W x
    beta = x - f f' omega(t) + (y + f) f' E / 2

with ``U = d_x u_hat``, ``W = d_x w1_hat`` and ``gamma`` from
:func:`~blisterlab.construct2d.gamma.gamma_curve`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..core import EnergyBreakdown, FieldValues, GeometryError, Params, gauss_legendre
from ..energy import QuadSpec, membrane_density_2d
from .gamma import GammaCurve, gamma_curve

#: ratio ``sigma / l`` above which the ridge is too thick for its fold
MAX_SIGMA_RATIO = 1.0 / 8.0
#: t-breakpoints of the gamma pieces (plus 0, where the ball cut is symmetric)
T_BREAKS = (-1.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)


class RidgeTooThickError(GeometryError):
    """The smoothing width does not fit the fold (sigma too large for l)."""


def fold_sigma(h: float, alpha_m: float, phi: float) -> float:
    """Optimal smoothing width ``h / (alpha_m^{1/2} phi)``."""
    if phi <= 0:
        raise ValueError("fold angle phi must be positive")
    return h / (np.sqrt(alpha_m) * phi)


@dataclass(frozen=True)
class FoldHat:
    """Affine data of a fold in its own frame.

    ``grad_w_*[i, j] = d_j w_i`` and ``grad_u_*`` on the L (``y < 0``) and R
    sides, values ``w_a``, ``u_a`` at ``a`` and the misfit ``eta``.
    """

    grad_w_L: np.ndarray
    grad_w_R: np.ndarray
    grad_u_L: np.ndarray
    grad_u_R: np.ndarray
    w_a: np.ndarray
    u_a: float
    eta: float

    def __post_init__(self):
        for name in ("grad_w_L", "grad_w_R", "grad_u_L", "grad_u_R", "w_a"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def U(self) -> float:
        return float(0.5 * (self.grad_u_L[0] + self.grad_u_R[0]))

    @property
    def alphaL(self) -> float:
        return float(self.grad_u_L[1])

    @property
    def alphaR(self) -> float:
        return float(self.grad_u_R[1])

    @property
    def skew(self) -> float:
        """Common ``d_x w2_hat``, removed by an infinitesimal rotation."""
        return float(0.5 * (self.grad_w_L[1, 0] + self.grad_w_R[1, 0]))

    @property
    def W(self) -> float:
        return float(0.5 * (self.grad_w_L[0, 0] + self.grad_w_R[0, 0]) - self.eta)

    def compatibility_residual(self) -> float:
        """Mismatch of tangential derivatives across the fold."""
        return float(max(abs(self.grad_u_L[0] - self.grad_u_R[0]),
                         np.max(np.abs(self.grad_w_L[:, 0] - self.grad_w_R[:, 0]))))

    def membrane_residual(self) -> float:
        """Largest membrane-strain entry of the hat on either side."""
        worst = 0.0
        for gw, gu in ((self.grad_w_L, self.grad_u_L), (self.grad_w_R, self.grad_u_R)):
            e = 0.5 * (gw + gw.T) + 0.5 * np.outer(gu, gu) - self.eta * np.eye(2)
            worst = max(worst, float(np.max(np.abs(e))))
        return worst

    def values(self, pts) -> FieldValues:
        """Evaluate the (unsmoothed) hat field at local points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        left = pts[:, 1] < 0
        gw = np.where(left[:, None, None], self.grad_w_L, self.grad_w_R)
        gu = np.where(left[:, None], self.grad_u_L, self.grad_u_R)
        w = self.w_a + np.einsum("nij,nj->ni", gw, pts)
        u = self.u_a + np.einsum("ni,ni->n", gu, pts)
        return FieldValues(w, gw, u, gu, np.zeros((n, 2, 2)))


@dataclass(frozen=True)
class RidgeSpec:
    """Geometry and fold data of one minimal ridge.

    ``b`` and ``d`` are the other two vertices of the quadrilateral
    ``[abcd]`` (R and L side). ``tau`` defaults to the smallest absolute slope
    of its four edges relative to the fold.
    """

    l: float
    sigma: float
    alphaL: float
    alphaR: float
    b: tuple[float, float] | None = None
    d: tuple[float, float] | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.l <= 0 or self.sigma <= 0:
            raise ValueError("l and sigma must be positive")
        if self.sigma >= MAX_SIGMA_RATIO * self.l:
            raise RidgeTooThickError(f"sigma = {self.sigma:.3g} >= l/8 = {self.l / 8:.3g}")
        if not 0 < self.phi <= 1:
            raise ValueError("fold angle phi must lie in (0, 1]")
        if self.tau is None:
            object.__setattr__(self, "tau", self._edge_tau())
        if not self.tau > 0:
            raise GeometryError("degenerate quadrilateral (tau <= 0)")

    def _edge_tau(self) -> float:
        if self.b is None or self.d is None:
            return 1.0
        slopes = []
        for (px, py) in (self.b, self.d):
            if not 0 < px < self.l:
                raise GeometryError("b and d must project inside the fold")
            slopes += [abs(py) / px, abs(py) / (self.l - px)]
        if self.b[1] <= 0 or self.d[1] >= 0:
            raise GeometryError("b must lie on the R side (y > 0) and d on the L side")
        return float(min(slopes))

    @property
    def phi(self) -> float:
        return max(abs(self.alphaL), abs(self.alphaR))

    def inplane_ratio(self) -> float:
        """``phi^4 / (sigma / l)^{2/3}``, bounded by a constant when the in-plane condition holds."""
        return self.phi ** 4 / (self.sigma / self.l) ** (2.0 / 3.0)

    # width of the smoothing region --------------------------------------
    def width(self, x, n: int = 0):
        """``n``-th derivative (n <= 3) of the smooth width ``f``.

        ``f(x) = tau sigma^{1/3} ((p + sigma)^{2/3} - sigma^{2/3})`` with
        ``p = x (l - x) / l``: it vanishes at both ends, is symmetric, and
        agrees with ``f0`` near ``x = 0`` to first order in ``x / l``.
        """
        x = np.asarray(x, dtype=float)
        l, s = self.l, self.sigma
        c = self.tau * s ** (1.0 / 3.0)
        p = x * (l - x) / l
        q = p + s
        if n == 0:
            return c * (q ** (2.0 / 3.0) - s ** (2.0 / 3.0))
        p1 = 1.0 - 2.0 * x / l
        p2 = -2.0 / l
        g1 = (2.0 / 3.0) * q ** (-1.0 / 3.0)
        g2 = -(2.0 / 9.0) * q ** (-4.0 / 3.0)
        g3 = (8.0 / 27.0) * q ** (-7.0 / 3.0)
        if n == 1:
            return c * g1 * p1
        if n == 2:
            return c * (g2 * p1 ** 2 + g1 * p2)
        if n == 3:
            return c * (g3 * p1 ** 3 + 3.0 * g2 * p1 * p2)
        raise ValueError("only derivatives up to order 3")

    def width0(self, x, n: int = 0):
        """``n``-th derivative of ``f0(x) = tau sigma^{1/3} (x + sigma)^{2/3} - tau sigma``."""
        x = np.asarray(x, dtype=float)
        c = self.tau * self.sigma ** (1.0 / 3.0)
        q = x + self.sigma
        coef = {0: 1.0, 1: 2.0 / 3.0, 2: -2.0 / 9.0, 3: 8.0 / 27.0}[n]
        val = c * coef * q ** (2.0 / 3.0 - n)
        return val - self.tau * self.sigma if n == 0 else val


class RidgeField:
    """Smoothed fold field in the fold frame; equals the hat outside ``D``."""

    def __init__(self, spec: RidgeSpec, hat: FoldHat, gamma: GammaCurve | None = None):
        if hat.compatibility_residual() > 1e-9:
            raise GeometryError("hat gradients are not continuous along the fold")
        if abs(hat.alphaL - spec.alphaL) > 1e-12 or abs(hat.alphaR - spec.alphaR) > 1e-12:
            raise ValueError("spec and hat disagree on the fold slopes")
        self.spec = spec
        self.hat = hat
        self.gamma = gamma or gamma_curve(spec.alphaL, spec.alphaR)
        s = hat.skew
        self._frame = hat.eta * np.eye(2) + np.array([[0.0, -s], [s, 0.0]])

    def in_D(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x = pts[:, 0]
        inside = (x > 0) & (x < self.spec.l)
        f = np.where(inside, self.spec.width(np.clip(x, 0, self.spec.l)), 0.0)
        return inside & (np.abs(pts[:, 1]) < f)

    def evaluate(self, pts) -> FieldValues:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = self.hat.values(pts)
        m = self.in_D(pts)
        if np.any(m):
            x, y = pts[m, 0], pts[m, 1]
            out.put(m, self._smooth(x, y / self.spec.width(x)))
        return out

    def evaluate_xt(self, x, t) -> FieldValues:
        """Evaluate inside ``D`` at mapped coordinates ``(x, t = y / f(x))``."""
        return self._smooth(np.asarray(x, dtype=float), np.asarray(t, dtype=float))

    def _smooth(self, x, t) -> FieldValues:
        sp, g, hat = self.spec, self.gamma, self.hat
        U, W, E = hat.U, hat.W, g.E
        f, f1, f2 = sp.width(x), sp.width(x, 1), sp.width(x, 2)
        y = t * f
        g2, g3 = g.d(2, 0, t), g.d(3, 0, t)
        d2, d3 = g.d(2, 1, t), g.d(3, 1, t)
        dd3 = g.d(3, 2, t)
        e2, e3 = g2 - t * d2, g3 - t * d3
        om = g.omega(t)
        dom = d2 * e2 + d3 * e3

        u = f * g3 + U * x
        ux = f1 * e3 + U
        uy = d3
        uyy = dd3 / f
        uxy = -t * f1 * dd3 / f
        uxx = f2 * e3 + t ** 2 * f1 ** 2 * dd3 / f

        beta = x - f * f1 * om + 0.5 * (y + f) * f1 * E
        bx = (1.0 - (f1 ** 2 + f * f2) * om + t * f1 ** 2 * dom
              + (0.5 * f1 ** 2 + 0.5 * (y + f) * f2) * E)
        by = -f1 * dom + 0.5 * f1 * E
        w1 = beta - x - U * f * g3 + W * x
        w2 = f * g2 - y
        w1x = bx - 1.0 - U * f1 * e3 + W
        w1y = by - U * d3
        w2x = f1 * e2
        w2y = d2 - 1.0

        n = x.size
        pts = np.stack([x, y], axis=-1)
        grad_w = np.empty((n, 2, 2))
        grad_w[:, 0, 0], grad_w[:, 0, 1] = w1x, w1y
        grad_w[:, 1, 0], grad_w[:, 1, 1] = w2x, w2y
        grad_w += self._frame
        w = np.stack([w1, w2], axis=-1) + pts @ self._frame.T + hat.w_a
        hess = np.empty((n, 2, 2))
        hess[:, 0, 0], hess[:, 0, 1], hess[:, 1, 0], hess[:, 1, 1] = uxx, uxy, uxy, uyy
        return FieldValues(w, grad_w, u + hat.u_a, np.stack([ux, uy], axis=-1), hess)

    def beta(self, x, y):
        """The tangential correction ``beta(x, y)`` (only meaningful for ``|y| <= f(x)``)."""
        sp, g = self.spec, self.gamma
        x = np.asarray(x, dtype=float)
        f, f1 = sp.width(x), sp.width(x, 1)
        return x - f * f1 * g.omega(np.asarray(y) / f) + 0.5 * (np.asarray(y) + f) * f1 * g.E

    # quadrature -----------------------------------------------------------
    def quadrature(self, order: int = 16, grid2d: int = 32, r_a: float | None = None,
                   r_c: float | None = None):
        """Nodes ``(x, t)`` and weights (including the Jacobian ``f``) on ``D`` minus
        the balls ``B(a, r_a)`` and ``B(c, r_c)`` (default radius ``sigma``)."""
        sp = self.spec
        r_a = sp.sigma if r_a is None else r_a
        r_c = sp.sigma if r_c is None else r_c
        if r_a + r_c >= sp.l:
            raise GeometryError("excluded balls cover the whole fold")
        nx = max(8, grid2d // 2)
        nt = max(6, grid2d // 4)
        xs, wx = _graded_x_nodes(sp, r_a, r_c, nx)
        t0 = np.zeros_like(xs)
        for center, r in ((0.0, r_a), (sp.l, r_c)):
            dx = np.abs(xs - center)
            near = dx < r
            t0[near] = np.sqrt(r ** 2 - dx[near] ** 2) / sp.width(xs[near])
        tn, tw = gauss_legendre(nt)
        X, T, Wt = [], [], []
        for lo, hi in zip(T_BREAKS[:-1], T_BREAKS[1:]):
            for a, b in ((lo, np.minimum(hi, -t0)), (np.maximum(lo, t0), hi)):
                a = np.broadcast_to(a, xs.shape)
                b = np.broadcast_to(b, xs.shape)
                ok = b > a
                if not np.any(ok):
                    continue
                mid, half = 0.5 * (a[ok] + b[ok]), 0.5 * (b[ok] - a[ok])
                X.append(np.repeat(xs[ok], nt))
                T.append((mid[:, None] + half[:, None] * tn).ravel())
                Wt.append(((wx[ok] * half)[:, None] * tw).ravel())
        x = np.concatenate(X)
        t = np.concatenate(T)
        w = np.concatenate(Wt) * sp.width(x)
        return x, t, w


def _graded_x_nodes(sp: RidgeSpec, r_a: float, r_c: float, n: int):
    """Composite Gauss nodes on the part of ``[0, l]`` not swallowed by the balls.

    Panels are geometric away from each end. Next to a ball the cut depth
    behaves like a square root; the substitution ``x = r - (r - x*) s^2``
    removes that singularity.
    """
    xn, wn = gauss_legendre(n)
    nodes, weights = [], []

    def panel(a, b):
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * xn)
        weights.append(0.5 * (b - a) * wn)

    def end(r, sign):
        # distance from the end at which D leaves the ball
        g = lambda s: sp.width(s if sign > 0 else sp.l - s) ** 2 + s ** 2 - r ** 2
        xs = brentq(g, 0.0, r) if g(0.0) < 0 < g(r) else 0.0
        s = 0.5 * (xn + 1.0)
        dist = r - (r - xs) * s ** 2
        nodes.append(dist if sign > 0 else sp.l - dist)
        weights.append(0.5 * wn * 2.0 * (r - xs) * s)
        return r

    mid = 0.5 * sp.l
    for r, sign in ((r_a, 1), (r_c, -1)):
        start = end(r, sign)
        cuts = [start]
        while cuts[-1] * 2.0 < mid:
            cuts.append(cuts[-1] * 2.0)
        if cuts[-1] < mid:
            cuts.append(mid)
        for a, b in zip(cuts[:-1], cuts[1:]):
            if sign > 0:
                panel(a, b)
            else:
                panel(sp.l - b, sp.l - a)
    return np.concatenate(nodes), np.concatenate(weights)


def ridge_deformation(spec: RidgeSpec, hat: FoldHat) -> RidgeField:
    """Smoothed fold field on ``[abcd]`` (fold frame); see module docstring."""
    return RidgeField(spec, hat)


def ridge_energy(spec: RidgeSpec, params: Params, hat: FoldHat | None = None,
                 quad: QuadSpec = QuadSpec(), r_a: float | None = None,
                 r_c: float | None = None) -> EnergyBreakdown:
    """Membrane and bending energy of the ridge over ``[abcd]`` minus the end balls.

    Outside ``D`` the hat has zero membrane and bending energy, so only ``D``
    is integrated. ``hat`` defaults to :func:`standard_hat`.
    """
    hat = hat or standard_hat(spec.alphaL, spec.alphaR, params.eta)
    field = RidgeField(spec, hat)
    x, t, w = field.quadrature(quad.order, quad.grid2d, r_a, r_c)
    v = field.evaluate_xt(x, t)
    mem = float(np.dot(w, membrane_density_2d(v, params.eta)))
    bend = float(np.dot(w, np.sum(v.hess_u ** 2, axis=(-1, -2))))
    return EnergyBreakdown(params.alpha_m * params.h * mem, params.h ** 3 * bend, 0.0)


def standard_hat(alphaL: float, alphaR: float, eta: float, U: float = 0.0) -> FoldHat:
    """A zero-membrane hat with the given fold slopes and tangential slope ``U``.

    Built in the reduced frame (``d_x w2 = 0``) and shifted by ``eta (x, y)``.
    """
    def side(a):
        gw = np.array([[-0.5 * U ** 2, -U * a], [0.0, -0.5 * a ** 2]]) + eta * np.eye(2)
        return gw, np.array([U, a])

    gwL, guL = side(alphaL)
    gwR, guR = side(alphaR)
    return FoldHat(gwL, gwR, guL, guR, np.zeros(2), 0.0, eta)


def deviation_ratios(field: RidgeField, n: int = 64) -> dict:
    """Sup-norm deviations from the hat divided by their predicted sizes.

    Keys: ``u`` (by ``phi l^{2/3} sigma^{1/3}``), ``w`` (same scale),
    ``grad_u`` (by ``phi``), ``grad_w`` (by ``phi^2``), ``hess_u`` (by
    ``phi / sigma``, outside the end balls).
    """
    sp = field.spec
    xs = np.linspace(0, sp.l, n + 2)[1:-1]
    ts = np.linspace(-1, 1, n + 1)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    X, T = X.ravel(), T.ravel()
    Y = T * sp.width(X)
    pts = np.stack([X, Y], axis=-1)
    v = field.evaluate_xt(X, T)
    h = field.hat.values(pts)
    phi = sp.phi
    keep = (np.hypot(X, Y) > sp.sigma) & (np.hypot(X - sp.l, Y) > sp.sigma)
    scale0 = phi * sp.l ** (2 / 3) * sp.sigma ** (1 / 3)
    return {
        "u": float(np.max(np.abs(v.u - h.u)) / scale0),
        "w": float(np.max(np.abs(v.w - h.w)) / scale0),
        "grad_u": float(np.max(np.abs(v.grad_u - h.grad_u)) / phi),
        "grad_w": float(np.max(np.abs(v.grad_w - h.grad_w)) / phi ** 2),
        "hess_u": float(np.max(np.abs(v.hess_u[keep])) / (phi / sp.sigma)),
    }
