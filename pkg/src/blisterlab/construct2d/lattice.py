"""Blister lattice: the piecewise-linear cell with every fold smoothed by a
minimal ridge and every fold vertex blended to a constant.

One periodic cell is made of 13 convex faces on which the unsmoothed field
is affine: the bonded square, four strip trapezoids (strip rectangles merged
with the corner triangles that continue them) and eight corner triangles.
Faces meet along 22 straight folds joining 9 vertices. Each fold gets a
ridge inside a kite ``[abcd]`` whose two halves lie in the fan triangles
``(a, c, centroid)`` of its two faces, so ridges never overlap. Around each
vertex ``v`` the field is blended to its value at ``v`` on the ball
``B(v, 2 sigma_v)`` with a cutoff that equals one on ``B(v, sigma_v)``.

Energy quadrature covers the ridge regions outside the balls and the balls;
the rest of the cell carries the affine field with zero membrane and bending
energy, whose substrate share is added in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from ..core import (AffinePiece, BondedSet2D, EnergyBreakdown, Field2D, FieldValues,
                    GeometryError, Params, QuadRegion, gauss_legendre, point_in_convex,
                    polygon_area)
from ..energy import QuadSpec, energy_2d
from .cell import CellGeometry, cells_for_length, corner_pieces, strip_pieces
from .corner import corner_alpha, corner_map
from .gamma import gamma_curve
from .ridge import T_BREAKS, FoldHat, RidgeField, RidgeSpec, fold_sigma

#: a ball must keep this factor of its radius clear of non-incident ridges
BALL_CLEARANCE = 1.5
_SHIFTS = [np.array([i, j], dtype=float) for i in (0, -1, 1) for j in (0, -1, 1)]


@dataclass
class Face:
    vertices: np.ndarray
    piece: AffinePiece
    tag: str

    @property
    def bonded(self) -> bool:
        return self.piece.bonded

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass
class Fold:
    """A straight fold ``a -> c`` with face ``R`` on its left and ``L`` on its right.

    ``L`` face coordinates are ``point + shift_L`` (the faces of one cell may
    meet across the cell boundary).
    """

    a: np.ndarray
    c: np.ndarray
    R: Face
    L: Face
    shift_L: np.ndarray
    tag: str
    rot: np.ndarray = dc_field(init=False)
    hat: FoldHat | None = None
    spec: RidgeSpec | None = None
    ridge: RidgeField | None = None
    kite: np.ndarray | None = None
    ends: tuple[int, int] = (-1, -1)

    def __post_init__(self):
        e1 = (self.c - self.a) / self.length
        self.rot = np.column_stack([e1, [-e1[1], e1[0]]])

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.c - self.a)))

    @property
    def phi(self) -> float:
        return self.spec.phi

    @property
    def sigma(self) -> float:
        return self.spec.sigma

    @property
    def bonded(self) -> bool:
        return self.L.bonded or self.R.bonded

    def to_local(self, pts) -> np.ndarray:
        return (np.atleast_2d(pts) - self.a) @ self.rot

    def to_global(self, local) -> np.ndarray:
        return self.a + np.atleast_2d(local) @ self.rot.T

    def rotate_values(self, v: FieldValues) -> FieldValues:
        """Express fold-frame values in the cell frame."""
        R = self.rot
        return FieldValues(
            w=v.w @ R.T,
            grad_w=np.einsum("ik,nkl,jl->nij", R, v.grad_w, R),
            u=v.u,
            grad_u=v.grad_u @ R.T,
            hess_u=np.einsum("ik,nkl,jl->nij", R, v.hess_u, R),
        )


@dataclass
class Vertex:
    point: np.ndarray
    incident: list[tuple[int, int]]  # (fold index, 0 for end a / 1 for end c)
    sigma: float = 0.0
    w: np.ndarray | None = None
    u: float = 0.0
    bonded: bool = False


def cutoff(s):
    """``rho(s)``: 1 for ``s <= 1``, 0 for ``s >= 2``, quintic smoothstep between; with
    first and second derivatives (C^2)."""
    s = np.asarray(s, dtype=float)
    x = np.clip(s - 1.0, 0.0, 1.0)
    S = x ** 3 * (10 - 15 * x + 6 * x ** 2)
    dS = 30 * x ** 2 * (1 - x) ** 2
    d2S = 60 * x * (1 - x) * (1 - 2 * x)
    return 1.0 - S, -dS, -d2S


def cell_faces(geo: CellGeometry, eta: float, alpha: float, d: float) -> list[Face]:
    """The 13 affine faces of one cell."""
    l, s, c, a = geo.l, geo.s, geo.c, geo.a
    strips = strip_pieces(geo, eta, alpha)
    lo, hi = -a * (1 - d), s + a * (1 - d)
    quads = {
        "R1": [(s, 0), (c, lo), (c, hi), (s, s)],
        "R2": [(c, lo), (l, 0), (l, s), (c, hi)],
    }
    quads["R3"] = [(y, x) for x, y in reversed(quads["R1"])]
    quads["R4"] = [(y, x) for x, y in reversed(quads["R2"])]
    faces = [Face(strips[0].vertices, strips[0], "bonded")]
    for pc in strips[1:]:
        v = np.array(quads[pc.tag], dtype=float)
        faces.append(Face(v, AffinePiece(v, pc.origin, pc.w0, pc.grad_w, pc.u0, pc.grad_u,
                                         tag=pc.tag), pc.tag))
    for pc in corner_pieces(geo, eta, corner_map(alpha=alpha, d=d)):
        if ".T2." in pc.tag:
            faces.append(Face(pc.vertices, pc, pc.tag))
    return faces


def _match_folds(faces: list[Face], l: float) -> list[Fold]:
    """Pair every face edge with the reversed edge of another face (modulo the cell)."""
    edges = [(fi, k) for fi, f in enumerate(faces) for k in range(len(f.vertices))]
    used = set()
    folds = []
    tol = 1e-9 * l
    for fi, k in edges:
        if (fi, k) in used:
            continue
        f = faces[fi]
        p, q = f.vertices[k], f.vertices[(k + 1) % len(f.vertices)]
        found = None
        for gj, m in edges:
            if gj == fi or (gj, m) in used:
                continue
            g = faces[gj]
            p2, q2 = g.vertices[m], g.vertices[(m + 1) % len(g.vertices)]
            S = p2 - q
            if np.allclose(np.round(S / l) * l, S, atol=tol) and np.allclose(q2 - p, S, atol=tol):
                found = (gj, m, np.round(S / l) * l)
                break
        if found is None:
            raise GeometryError(f"unmatched edge on face {f.tag}")
        gj, m, S = found
        used |= {(fi, k), (gj, m)}
        g = faces[gj]
        if f.bonded:
            # orient so the bonded face is on the L side (y < 0)
            p2, q2 = g.vertices[m], g.vertices[(m + 1) % len(g.vertices)]
            folds.append(Fold(p2, q2, g, f, -S, f"{g.tag}|{f.tag}"))
        else:
            folds.append(Fold(p, q, f, g, S, f"{f.tag}|{g.tag}"))
    return folds


def _fan_apex(a, c, g, n) -> float:
    """Half the distance from the midpoint of ``ac`` along ``n`` to the boundary of triangle ``(a, c, g)``."""
    m = 0.5 * (a + c)
    best = np.inf
    for p, q in ((a, g), (c, g)):
        # solve m + k n = p + s (q - p)
        M = np.column_stack([n, p - q])
        try:
            k, s = np.linalg.solve(M, p - m)
        except np.linalg.LinAlgError:
            continue
        if k > 0 and -1e-12 <= s <= 1 + 1e-12:
            best = min(best, k)
    if not np.isfinite(best):
        raise GeometryError("fan triangle does not contain the fold normal")
    return 0.5 * best


def _build_hat(fold: Fold, eta: float) -> FoldHat:
    R = fold.rot
    pr, pl = fold.R.piece, fold.L.piece
    wa = pr.values(fold.a)
    return FoldHat(grad_w_L=R.T @ pl.grad_w @ R, grad_w_R=R.T @ pr.grad_w @ R,
                   grad_u_L=R.T @ pl.grad_u, grad_u_R=R.T @ pr.grad_u,
                   w_a=R.T @ wa.w[0], u_a=float(wa.u[0]), eta=eta)


def _point_triangle_distance(p, tri) -> float:
    if point_in_convex(p[None, :], tri if polygon_area(tri) > 0 else tri[::-1])[0]:
        return 0.0
    best = np.inf
    for k in range(3):
        a, b = tri[k], tri[(k + 1) % 3]
        e = b - a
        s = np.clip(np.dot(p - a, e) / np.dot(e, e), 0.0, 1.0)
        best = min(best, float(np.hypot(*(a + s * e - p))))
    return best


class LatticeField(Field2D):
    """Smoothed blister lattice on the unit torus (see module docstring)."""

    def __init__(self, params: Params, l: float, theta_eff: float | None = None):
        self.params = params
        self.cells_per_side = cells_for_length(l)
        self.l = 1.0 / self.cells_per_side
        self.theta_eff = params.theta if theta_eff is None else theta_eff
        if not 0 < self.theta_eff < 1:
            raise GeometryError("effective bonded fraction must lie in (0, 1)")
        self.geo = CellGeometry(self.l, np.sqrt(self.theta_eff) * self.l)
        self.alpha = corner_alpha(params.eta, self.theta_eff)
        self.faces = cell_faces(self.geo, params.eta, self.alpha, 3.0 - 2.0 * np.sqrt(2.0))
        self.folds = _match_folds(self.faces, self.l)
        self._gamma_cache: dict = {}
        for fold in self.folds:
            self._setup_fold(fold)
        self.vertices = self._collect_vertices()
        self._check_geometry()

    # construction ------------------------------------------------------------
    def _setup_fold(self, fold: Fold):
        p = self.params
        fold.hat = _build_hat(fold, p.eta)
        if fold.hat.compatibility_residual() > 1e-9 * max(1.0, self.alpha):
            raise GeometryError(f"fold {fold.tag}: faces are not continuous across the fold")
        aL, aR = fold.hat.alphaL, fold.hat.alphaR
        phi = max(abs(aL), abs(aR))
        if not 0 < phi <= 1:
            raise GeometryError(f"fold {fold.tag}: fold angle {phi:.3g} outside (0, 1]")
        n = fold.rot[:, 1]
        gR = fold.R.centroid()
        gL = fold.L.centroid() - fold.shift_L
        kR = _fan_apex(fold.a, fold.c, gR, n)
        kL = _fan_apex(fold.a, fold.c, gL, -n)
        L = fold.length
        fold.spec = RidgeSpec(L, fold_sigma(p.h, p.alpha_m, phi), aL, aR,
                              b=(0.5 * L, kR), d=(0.5 * L, -kL))
        fold.kite = fold.to_global(np.array([[0.0, 0.0], [0.5 * L, -kL], [L, 0.0], [0.5 * L, kR]]))
        key = (aL, aR)
        if key not in self._gamma_cache:
            self._gamma_cache[key] = gamma_curve(aL, aR)
        fold.ridge = RidgeField(fold.spec, fold.hat, self._gamma_cache[key])

    def _collect_vertices(self) -> list[Vertex]:
        l = self.l
        verts: list[Vertex] = []
        for fi, fold in enumerate(self.folds):
            ends = []
            for e, p in enumerate((fold.a, fold.c)):
                q = np.mod(p, l)
                q[np.isclose(q, l, rtol=0.0, atol=1e-9 * l)] = 0.0
                for vi, v in enumerate(verts):
                    if np.allclose(v.point, q, atol=1e-9 * l):
                        break
                else:
                    verts.append(Vertex(q, []))
                    vi = len(verts) - 1
                verts[vi].incident.append((fi, e))
                ends.append(vi)
            fold.ends = tuple(ends)
        for v in verts:
            v.sigma = max(self.folds[fi].sigma for fi, _ in v.incident)
            hv = self.hat_values(v.point[None, :])
            v.w, v.u = hv.w[0], float(hv.u[0])
            v.bonded = any(self.folds[fi].bonded for fi, _ in v.incident)
        return verts

    def _check_geometry(self):
        l = self.l
        for fold in self.folds:
            ra, rc = (2 * self.vertices[i].sigma for i in fold.ends)
            if ra + rc >= fold.length:
                raise GeometryError(f"vertex balls swallow fold {fold.tag}")
        for i, v in enumerate(self.vertices):
            for j, w in enumerate(self.vertices):
                for S in _SHIFTS:
                    if i == j and not S.any():
                        continue
                    dist = np.hypot(*(v.point - w.point - S * l))
                    if dist <= 2 * (v.sigma + w.sigma):
                        raise GeometryError("vertex balls overlap (sigma too large for l)")
            incident = {fi for fi, _ in v.incident}
            for fi, fold in enumerate(self.folds):
                if fi in incident:
                    continue
                for S in _SHIFTS:
                    p = v.point + S * l
                    k = fold.kite
                    dist = min(_point_triangle_distance(p, k[[0, 1, 2]]),
                               _point_triangle_distance(p, k[[0, 2, 3]]))
                    if dist <= BALL_CLEARANCE * 2 * v.sigma:
                        raise GeometryError(f"vertex ball meets the ridge of fold {fold.tag}")

    # evaluation --------------------------------------------------------------
    def hat_values(self, pts) -> FieldValues:
        """The unsmoothed piecewise-affine field."""
        pts = np.mod(np.atleast_2d(np.asarray(pts, dtype=float)), self.l)
        out = FieldValues.zeros(len(pts))
        todo = np.ones(len(pts), dtype=bool)
        for S in _SHIFTS:
            q = pts + S * self.l
            for face in self.faces:
                m = todo & point_in_convex(q, face.vertices, 1e-10)
                if m.any():
                    out.put(m, face.piece.values(q[m]))
                    todo &= ~m
            if not todo.any():
                break
        if todo.any():
            raise GeometryError("points not covered by any face")
        return out

    def ridge_values(self, pts) -> FieldValues:
        """Hat field with every fold's ridge inserted (no vertex blending)."""
        pts = np.mod(np.atleast_2d(np.asarray(pts, dtype=float)), self.l)
        out = self.hat_values(pts)
        for fold in self.folds:
            for S in _SHIFTS:
                loc = fold.to_local(pts + S * self.l)
                m = fold.ridge.in_D(loc)
                if m.any():
                    out.put(m, fold.rotate_values(fold.ridge.evaluate(loc[m])))
        return out

    def _ball_hits(self, pts):
        """For each point: index of the vertex ball containing it (or -1) and the offset ``p - v``."""
        idx = np.full(len(pts), -1)
        off = np.zeros_like(pts)
        for vi, v in enumerate(self.vertices):
            for S in _SHIFTS:
                d = pts + S * self.l - v.point
                m = (np.hypot(d[:, 0], d[:, 1]) < 2 * v.sigma) & (idx < 0)
                idx[m] = vi
                off[m] = d[m]
        return idx, off

    def blend(self, vertex: Vertex, offset, g: FieldValues) -> FieldValues:
        """``c + (1 - rho)(g - c)`` around ``vertex`` with its derivatives."""
        r = np.hypot(offset[:, 0], offset[:, 1])
        rho, d1, d2 = cutoff(r / vertex.sigma)
        safe = np.where(r > 0, r, 1.0)
        e = offset / safe[:, None]
        grad_rho = (d1 / vertex.sigma)[:, None] * e
        ee = e[:, :, None] * e[:, None, :]
        hess_rho = ((d2 / vertex.sigma ** 2)[:, None, None] * ee
                    + (d1 / (vertex.sigma * safe))[:, None, None] * (np.eye(2) - ee))
        k = (1.0 - rho)
        dw = g.w - vertex.w
        du = g.u - vertex.u
        w = vertex.w + k[:, None] * dw
        grad_w = k[:, None, None] * g.grad_w - dw[:, :, None] * grad_rho[:, None, :]
        u = vertex.u + k * du
        grad_u = k[:, None] * g.grad_u - du[:, None] * grad_rho
        hess = (k[:, None, None] * g.hess_u
                - grad_rho[:, :, None] * g.grad_u[:, None, :]
                - g.grad_u[:, :, None] * grad_rho[:, None, :]
                - du[:, None, None] * hess_rho)
        return FieldValues(w, grad_w, u, grad_u, hess)

    def evaluate(self, pts) -> FieldValues:
        pts = np.mod(np.atleast_2d(np.asarray(pts, dtype=float)), self.l)
        out = self.ridge_values(pts)
        idx, off = self._ball_hits(pts)
        for vi, v in enumerate(self.vertices):
            m = idx == vi
            if m.any():
                out.put(m, self.blend(v, off[m], out.take(m)))
        return out

    # quadrature ----------------------------------------------------------------
    def ridge_regions(self, order: int, grid2d: int) -> list[QuadRegion]:
        regs = []
        for fold in self.folds:
            ra, rc = (2 * self.vertices[i].sigma for i in fold.ends)
            x, t, w = fold.ridge.quadrature(order, grid2d, ra, rc)
            loc = np.stack([x, t * fold.spec.width(x)], axis=-1)
            vals = fold.rotate_values(fold.ridge.evaluate_xt(x, t))
            hat = fold.rotate_values(fold.hat.values(loc)) if fold.bonded else None
            regs.append(QuadRegion(fold.to_global(loc), w, vals, fold.bonded,
                                   f"ridge:{fold.tag}", hat))
        return regs

    def _fold_directions(self, v: Vertex):
        """For each fold at ``v``: (fold, direction angle into the fold, sign of local ``y``)."""
        out = []
        for fi, e in v.incident:
            fold = self.folds[fi]
            d = fold.rot[:, 0] * (1 if e == 0 else -1)
            out.append((fold, np.arctan2(d[1], d[0]), 1.0 if e == 0 else -1.0))
        return out

    @staticmethod
    def _ridge_angle(fold: Fold, r: float, t: float, sign: float) -> float:
        """Angle ``chi`` from the fold direction at which the point at distance ``r``
        from the fold end has ridge coordinate ``t`` (fixed point of
        ``r sin chi = sign t f(r cos chi)``)."""
        chi = 0.0
        for _ in range(60):
            new = np.arcsin(np.clip(sign * t * fold.spec.width(r * np.cos(chi)) / r, -1, 1))
            if abs(new - chi) <= 1e-15:
                break
            chi = new
        return float(new)

    def ball_regions(self, order: int, grid2d: int) -> list[QuadRegion]:
        """Polar quadrature on each ball ``B(v, 2 sigma_v)``.

        For every radius the angular range is cut where the incident ridges
        reach the gamma breakpoints ``t_k``, so each angular panel carries a
        smooth integrand (inside a ridge, or on one affine face).
        """
        regs = []
        n = max(6, grid2d // 4)
        rn, rw = gauss_legendre(n)
        pn, pw = gauss_legendre(n)
        for vi, v in enumerate(self.vertices):
            dirs = self._fold_directions(v)
            P, W = [], []
            for r0, r1 in ((0.0, v.sigma), (v.sigma, 2 * v.sigma)):
                for r, wr in zip(0.5 * (r0 + r1) + 0.5 * (r1 - r0) * rn, 0.5 * (r1 - r0) * rw):
                    cuts = []
                    for fold, psi, sign in dirs:
                        if r0 == 0.0:
                            cuts.append(psi)  # inner disk: the field is constant
                            continue
                        cuts += [psi + self._ridge_angle(fold, r, t, sign) for t in T_BREAKS]
                    cuts = np.sort(np.mod(cuts, 2 * np.pi))
                    cuts = np.append(cuts, cuts[0] + 2 * np.pi)
                    lo, hi = cuts[:-1], cuts[1:]
                    keep = hi - lo > 1e-14
                    lo, hi = lo[keep], hi[keep]
                    psi = (0.5 * (lo + hi))[:, None] + (0.5 * (hi - lo))[:, None] * pn
                    P.append(np.stack([r * np.cos(psi.ravel()), r * np.sin(psi.ravel())], -1))
                    W.append((r * wr * (0.5 * (hi - lo))[:, None] * pw).ravel())
            off, w = np.concatenate(P), np.concatenate(W)
            pts = v.point + off
            vals = self.blend(v, off, self.ridge_values(pts))
            hat = self.hat_values(pts) if v.bonded else None
            regs.append(QuadRegion(pts, w, vals, v.bonded, f"vertex:{vi}", hat))
        return regs

    def regions(self, order: int, grid2d: int) -> list[QuadRegion]:
        return self.ridge_regions(order, grid2d) + self.ball_regions(order, grid2d)

    def substrate_baseline(self) -> tuple[float, float]:
        """Bonded square with ``w = eta (x - x_j)``: ``2 eta^2 s^2`` and ``eta^2 s^4 / 6``."""
        eta, s = self.params.eta, self.geo.s
        return 2 * eta ** 2 * s ** 2, eta ** 2 * s ** 4 / 6.0

    def lifted_area_cell(self, order: int = 16, grid2d: int = 32) -> float:
        """Area inside the bonded square where the ridges lift the film (``u > 0``).

        On a bonded fold the film lifts for ``-1/3 < t < 0`` outside the inner
        vertex balls ``B(v, sigma_v)`` (inside them ``u`` is blended to 0).
        """
        total = 0.0
        for fold in self.folds:
            if not fold.bonded:
                continue
            ra, rc = (self.vertices[i].sigma for i in fold.ends)
            x, t, w = fold.ridge.quadrature(order, grid2d, ra, rc)
            total += float(np.sum(w[(t > -1.0 / 3.0) & (t < 0.0)]))
        return total

    def bonded_set(self, order: int = 16, grid2d: int = 32) -> BondedSet2D:
        s = self.geo.s
        return BondedSet2D(((0.0, 0.0, s, s),), self.n_cells * self.lifted_area_cell(order, grid2d),
                           self.cells_per_side)

    # diagnostics ---------------------------------------------------------------
    def fold_summary(self) -> list[dict]:
        return [{"tag": f.tag, "length": f.length, "phi": f.phi, "sigma": f.sigma,
                 "tau": f.spec.tau, "bonded": f.bonded} for f in self.folds]

    def max_sigma_ratio(self) -> float:
        return max(f.sigma / f.length for f in self.folds)


def effective_theta(params: Params, l: float, order: int = 16, grid2d: int = 32) -> float:
    """Enlarged bonded fraction ``theta'`` whose lattice has bonded area exactly ``theta``."""
    target = params.theta * l ** 2

    def excess(th):
        fld = LatticeField(params, l, th)
        return fld.geo.s ** 2 - fld.lifted_area_cell(order, grid2d) - target

    lo = params.theta
    if excess(lo) >= 0:
        return lo
    hi = lo
    for _ in range(60):
        hi = min(0.5 * (hi + 1.0), hi + 0.05 * (1.0 - lo) + 0.5 * (hi - lo))
        if excess(hi) > 0:
            break
    else:
        raise GeometryError("cannot compensate the lifted area")
    return brentq(excess, lo, hi, xtol=1e-15, rtol=1e-14)


def assemble_lattice(params: Params, l: float, quad: QuadSpec = QuadSpec(),
                     correct_area: bool = True) -> tuple[LatticeField, BondedSet2D]:
    """Smoothed lattice with ``1/l`` cells per side and bonded area fraction ``theta``.

    Raises :class:`~blisterlab.core.GeometryError` when ridges or vertex balls
    would overlap (``sigma`` too large for ``l``).
    """
    th = effective_theta(params, l, quad.order, quad.grid2d) if correct_area else params.theta
    fld = LatticeField(params, l, th)
    return fld, fld.bonded_set(quad.order, quad.grid2d)


def lattice_energy(params: Params, l: float, quad: QuadSpec = QuadSpec(),
                   correct_area: bool = True) -> EnergyBreakdown:
    fld, omega = assemble_lattice(params, l, quad, correct_area)
    return energy_2d(fld, omega, params, quad)


def lattice_cell_length(l2: float) -> float:
    """Nearest admissible cell length ``1/N`` to ``l2`` (``N >= 1``)."""
    return 1.0 / max(1, int(round(1.0 / l2)))


def lattice_length_scan(params: Params, factors, quad: QuadSpec = QuadSpec(),
                        correct_area: bool = False) -> list[tuple[float, EnergyBreakdown]]:
    """Lattice energies at ``l = c l2`` for each factor ``c`` (rounded to ``1/N``).

    Along the ``l2`` scaling the ridge and substrate terms keep a fixed ratio,
    so the energy-optimal multiple ``c`` is (up to vertex corrections)
    parameter independent; this scan measures it.
    """
    from .bounds import lattice_length
    l2 = lattice_length(params)
    out = []
    for c in factors:
        l = lattice_cell_length(c * l2)
        out.append((l / l2, lattice_energy(params, l, quad, correct_area)))
    return out
