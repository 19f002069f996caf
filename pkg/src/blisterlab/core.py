"""Shared domain types, bonded-set geometry and quadrature utilities.

Everything here is immutable after construction; the functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

TORUS_TOL = 1e-12
DEFAULT_ORDER = 16


class GeometryError(ValueError):
    """Raised for invalid bonded sets or construction geometry."""


class AdmissibilityError(ValueError):
    """Raised when a configuration violates ``u >= 0`` or ``u = 0`` on the bonded set."""


class QuadratureError(ArithmeticError):
    """Raised when an integrand produces non-finite values."""


@dataclass(frozen=True)
class Params:
    """Dimensionless parameters of one problem instance.

    Parameters
    ----------
    h : float
        Film thickness relative to the period, ``0 < h <= 1``.
    eta : float
        Mismatch strain, ``0 < eta <= 1``.
    alpha_s : float
        Compliance ratio (substrate weight).
    alpha_m : float
        Membrane coefficient.
    theta : float
        Bonded area fraction, strictly inside ``(0, 1)``.
    """

    h: float
    eta: float
    alpha_s: float = 1.0
    alpha_m: float = 1.0
    theta: float = 0.5

    def __post_init__(self):
        for name in ("h", "eta", "alpha_s", "alpha_m", "theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta!r}")
        if self.eta > 1 or self.h > 1:
            raise ValueError("h and eta must not exceed 1 (small-parameter regime)")

    def replace(self, **changes) -> "Params":
        data = self.as_dict()
        data.update(changes)
        return Params(**data)

    def as_dict(self) -> dict:
        return {"h": self.h, "eta": self.eta, "alpha_s": self.alpha_s,
                "alpha_m": self.alpha_m, "theta": self.theta}


@dataclass(frozen=True)
class EnergyBreakdown:
    """Membrane, bending and substrate contributions of one configuration."""

    membrane: float
    bending: float
    substrate: float

    def __post_init__(self):
        for name in ("membrane", "bending", "substrate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} energy must be non-negative")

    @property
    def total(self) -> float:
        return self.membrane + self.bending + self.substrate

    def as_dict(self) -> dict:
        return {"membrane": self.membrane, "bending": self.bending,
                "substrate": self.substrate, "total": self.total}

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(self.membrane + other.membrane,
                               self.bending + other.bending,
                               self.substrate + other.substrate)


def wrap(x):
    """Map points onto ``[0, 1)``, snapping values within ``TORUS_TOL`` of 1 to 0."""
    y = np.mod(x, 1.0)
    return np.where(np.abs(y - 1.0) < TORUS_TOL, 0.0, y)


@dataclass(frozen=True)
class BondedSet1D:
    """Disjoint closed sub-intervals of the unit torus.

    Intervals are stored as ``(start, end)`` with ``start < end``; an
    interval may extend past 1, in which case it wraps around.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        object.__setattr__(self, "intervals", ivs)
        for a, b in ivs:
            if not b - a > 0:
                raise GeometryError(f"interval ({a}, {b}) has non-positive length")
            if b - a > 1 + TORUS_TOL:
                raise GeometryError("interval longer than the torus")
        pieces = sorted(_unwrapped_pieces(ivs))
        for (a0, b0), (a1, b1) in zip(pieces, pieces[1:]):
            if a1 < b0 - TORUS_TOL:
                raise GeometryError("bonded intervals overlap")
        if len(pieces) > 1:
            (a0, _), (_, b1) = pieces[0], pieces[-1]
            if b1 - 1.0 > a0 + TORUS_TOL:
                raise GeometryError("bonded intervals overlap across the seam")

    @classmethod
    def equispaced(cls, n: int, theta: float, offset: float = 0.0) -> "BondedSet1D":
        """``n`` intervals of length ``theta / n``, one at the end of each cell."""
        if n < 1:
            raise GeometryError("need at least one interval")
        cell = 1.0 / n
        return cls(tuple((offset + (k + 1 - theta) * cell, offset + (k + 1) * cell)
                         for k in range(n)))

    def pieces(self) -> list[tuple[float, float]]:
        """Intervals split at the seam so every piece lies in ``[0, 1]``."""
        return sorted(_unwrapped_pieces(self.intervals))

    def contains(self, x, tol: float = 1e-12):
        x = wrap(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.pieces():
            for xs in (x - 1.0, x, x + 1.0):  # closed intervals touching the seam
                out |= (xs >= a - tol) & (xs <= b + tol)
        return out

    def translate(self, shift: float) -> "BondedSet1D":
        ivs = []
        for a, b in self.intervals:
            a2 = float(wrap(a + shift))
            ivs.append((a2, a2 + (b - a)))
        return BondedSet1D(tuple(ivs))

    def endpoints(self) -> list[float]:
        pts = set()
        for a, b in self.pieces():
            pts.update((a, b))
        return sorted(pts)


def _unwrapped_pieces(ivs):
    for a, b in ivs:
        a0 = float(np.mod(a, 1.0))
        b0 = a0 + (b - a)
        if b0 > 1.0 + TORUS_TOL:
            yield (a0, 1.0)
            yield (0.0, b0 - 1.0)
        else:
            yield (a0, min(b0, 1.0))


@dataclass(frozen=True)
class BondedSet2D:
    """Bonded region as disjoint axis-aligned rectangles on the unit torus.

    ``rects`` hold ``(x0, y0, x1, y1)``. With ``cells_per_side = n > 1`` the
    rectangles describe one periodic cell ``[0, 1/n)^2`` and are repeated on
    the ``n x n`` lattice (one entry per cell, stored once). When ridges lift
    the film near the rectangle edges, ``lifted_area`` is the total area
    (over the whole torus) inside the rectangles where the film is detached;
    it is subtracted by :func:`measure`.
    """

    rects: tuple[tuple[float, float, float, float], ...] = ()
    lifted_area: float = 0.0
    cells_per_side: int = 1

    def __post_init__(self):
        rects = tuple(tuple(float(v) for v in r) for r in self.rects)
        object.__setattr__(self, "rects", rects)
        if self.cells_per_side < 1:
            raise GeometryError("cells_per_side must be >= 1")
        p = self.period
        for x0, y0, x1, y1 in rects:
            if not (x1 > x0 and y1 > y0):
                raise GeometryError("rectangle with non-positive side")
            if x1 - x0 > p + TORUS_TOL or y1 - y0 > p + TORUS_TOL:
                raise GeometryError("rectangle larger than the periodic cell")
        # pairwise overlap test, modulo the cell torus
        for i, r in enumerate(rects):
            for q in rects[i + 1:]:
                if _rects_overlap(r, q, p):
                    raise GeometryError("bonded rectangles overlap")
        if self.lifted_area < 0:
            raise GeometryError("lifted area must be non-negative")

    @property
    def period(self) -> float:
        return 1.0 / self.cells_per_side

    def all_rects(self) -> list[tuple[float, float, float, float]]:
        """Every rectangle on the torus (``n^2`` copies of the cell's rectangles)."""
        p, n = self.period, self.cells_per_side
        return [(x0 + i * p, y0 + j * p, x1 + i * p, y1 + j * p)
                for i in range(n) for j in range(n) for x0, y0, x1, y1 in self.rects]

    def contains(self, pts, tol: float = 1e-12):
        pts = np.asarray(pts, dtype=float)
        p = self.period
        x, y = wrap(pts[..., 0]), wrap(pts[..., 1])
        out = np.zeros(x.shape, dtype=bool)
        for x0, y0, x1, y1 in self.rects:
            dx = np.mod(x - x0 + tol, p)
            dy = np.mod(y - y0 + tol, p)
            out |= (dx <= x1 - x0 + 2 * tol) & (dy <= y1 - y0 + 2 * tol)
        return out

    def translate(self, shift) -> "BondedSet2D":
        sx, sy = shift
        p = self.period
        rects = []
        for x0, y0, x1, y1 in self.rects:
            nx, ny = float(np.mod(x0 + sx, p)), float(np.mod(y0 + sy, p))
            rects.append((nx, ny, nx + x1 - x0, ny + y1 - y0))
        return BondedSet2D(tuple(rects), self.lifted_area, self.cells_per_side)


def _rects_overlap(r, q, period: float = 1.0) -> bool:
    def overlap_1d(a0, a1, b0, b1):
        # length of overlap of two arcs on the circle of circumference ``period``
        la, lb = a1 - a0, b1 - b0
        d = np.mod(b0 - a0, period)
        ov = max(0.0, min(la, d + lb) - d) + max(0.0, min(la, d + lb - period))
        return ov > TORUS_TOL
    return overlap_1d(r[0], r[2], q[0], q[2]) and overlap_1d(r[1], r[3], q[1], q[3])


def measure(s) -> float:
    """Length (1D) or area (2D) of a bonded set."""
    if isinstance(s, BondedSet1D):
        return float(sum(b - a for a, b in s.intervals))
    if isinstance(s, BondedSet2D):
        area = sum((x1 - x0) * (y1 - y0) for x0, y0, x1, y1 in s.rects)
        return float(area * s.cells_per_side ** 2 - s.lifted_area)
    raise TypeError(f"not a bonded set: {type(s).__name__}")


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[-1, 1]`` (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_nodes(a, b, order: int = DEFAULT_ORDER):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``.

    ``a`` and ``b`` may be arrays of equal shape; the node axis is appended last.
    """
    x, w = gauss_legendre(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def quad_piecewise(f: Callable, pieces: Sequence[float], order: int = DEFAULT_ORDER) -> float:
    """Composite Gauss-Legendre integral of ``f`` over consecutive breakpoints.

    Parameters
    ----------
    f : callable
        Vectorised integrand, smooth on every ``[pieces[k], pieces[k+1]]``.
    pieces : sequence of float
        Increasing breakpoints; the integral runs from the first to the last.
    order : int
        Nodes per piece.
    """
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    pts = np.asarray(pieces, dtype=float)
    if pts.ndim != 1 or pts.size < 2 or np.any(np.diff(pts) < 0):
        raise ValueError("breakpoints must be an increasing sequence of length >= 2")
    keep = np.diff(pts) > 0
    a, b = pts[:-1][keep], pts[1:][keep]
    if a.size == 0:
        return 0.0
    x, w = gl_nodes(a, b, order)
    vals = np.asarray(f(x), dtype=float)
    vals = np.broadcast_to(vals, x.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.argmax(bad.any(axis=1)))
        raise QuadratureError(f"non-finite integrand on piece [{a[k]}, {b[k]}]")
    return float(np.sum(vals * w))


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed (Duffy) Gauss rule on the reference triangle (0,0),(1,0),(0,1).

    Exact for polynomials of total degree ``2 * order - 2``.
    """
    x, w = gauss_legendre(order)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    xi, eta = np.meshgrid(s, s, indexing="ij")
    wi, we = np.meshgrid(ws, ws, indexing="ij")
    px = xi * (1.0 - eta)
    py = eta
    wt = wi * we * (1.0 - eta)
    return np.stack([px.ravel(), py.ravel()], axis=-1), wt.ravel()


def triangle_nodes(p0, p1, p2, order: int = DEFAULT_ORDER):
    """Quadrature nodes/weights on the triangle with the given vertices."""
    ref, wt = triangle_rule(order)
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
    jac = np.column_stack([p1 - p0, p2 - p0])
    area2 = abs(np.linalg.det(jac))
    return p0 + ref @ jac.T, wt * area2


def polygon_nodes(vertices, order: int = DEFAULT_ORDER):
    """Quadrature on a convex polygon by fanning from its first vertex."""
    v = np.asarray(vertices, dtype=float)
    pts, wts = [], []
    for k in range(1, len(v) - 1):
        p, w = triangle_nodes(v[0], v[k], v[k + 1], order)
        pts.append(p)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


@dataclass(frozen=True)
class Profile1D:
    """Evaluable 1D deformation on the unit torus.

    ``w``, ``dw``, ``u``, ``du``, ``d2u`` are vectorised callables taking
    points in ``[0, 1]``; ``pieces`` are the breakpoints between analytic
    pieces (including 0 and 1).
    """

    w: Callable
    dw: Callable
    u: Callable
    du: Callable
    d2u: Callable
    pieces: tuple[float, ...] = (0.0, 1.0)
    label: str = ""

    def breakpoints(self, extra: Sequence[float] = ()) -> np.ndarray:
        pts = np.concatenate([np.asarray(self.pieces, dtype=float),
                              np.asarray(list(extra), dtype=float), [0.0, 1.0]])
        pts = np.unique(np.clip(pts, 0.0, 1.0))
        return pts

    def translate(self, shift: float) -> "Profile1D":
        """Profile moved by ``shift`` around the torus."""
        def sh(g):
            return lambda x: g(wrap(np.asarray(x, dtype=float) - shift))
        pieces = tuple(sorted(set(float(wrap(p + shift)) for p in self.pieces) | {0.0, 1.0}))
        return Profile1D(sh(self.w), sh(self.dw), sh(self.u), sh(self.du), sh(self.d2u),
                         pieces, self.label)


@dataclass
class FieldValues:
    """Pointwise values of a 2D field: ``w`` (n,2), ``grad_w`` (n,2,2) with
    ``grad_w[:, i, j] = d w_i / d x_j``, ``u`` (n,), ``grad_u`` (n,2),
    ``hess_u`` (n,2,2)."""

    w: np.ndarray
    grad_w: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "FieldValues":
        return cls(np.zeros((n, 2)), np.zeros((n, 2, 2)), np.zeros(n),
                   np.zeros((n, 2)), np.zeros((n, 2, 2)))

    def take(self, idx) -> "FieldValues":
        return FieldValues(self.w[idx], self.grad_w[idx], self.u[idx],
                           self.grad_u[idx], self.hess_u[idx])

    def put(self, idx, other: "FieldValues") -> None:
        self.w[idx] = other.w
        self.grad_w[idx] = other.grad_w
        self.u[idx] = other.u
        self.grad_u[idx] = other.grad_u
        self.hess_u[idx] = other.hess_u


@dataclass
class QuadRegion:
    """Quadrature nodes of one smooth region together with field values there.

    ``bonded_candidate`` marks regions that may intersect the bonded set; the
    energy routine only tests bonded membership on those.
    """

    points: np.ndarray
    weights: np.ndarray
    values: FieldValues
    bonded_candidate: bool = True
    tag: str = ""
    #: values of the unsmoothed reference field at ``points``; when present the
    #: region replaces that field's share of :meth:`Field2D.substrate_baseline`
    hat: FieldValues | None = None


class Field2D:
    """Base class for evaluable 2D fields on the unit torus.

    A field is periodic with ``cells_per_side ** 2`` identical cells.
    Subclasses implement :meth:`evaluate` and :meth:`regions`; ``regions``
    returns quadrature regions covering one cell exactly once, split so that
    no region straddles a kink of the field.
    """

    cells_per_side: int = 1

    @property
    def cell(self) -> float:
        return 1.0 / self.cells_per_side

    @property
    def n_cells(self) -> int:
        return self.cells_per_side ** 2

    def evaluate(self, pts) -> FieldValues:
        raise NotImplementedError

    def regions(self, order: int, grid2d: int) -> list[QuadRegion]:
        raise NotImplementedError

    def substrate_baseline(self) -> tuple[float, float]:
        """Per-cell ``(int_Omega |grad w|^2, int_Omega |w|^2)`` contributed outside
        the quadrature regions (zero unless regions only cover a correction)."""
        return 0.0, 0.0


@dataclass
class AffinePiece:
    """Convex polygon carrying an affine field ``value(p) = v0 + G (p - p0)``."""

    vertices: np.ndarray
    origin: np.ndarray
    w0: np.ndarray
    grad_w: np.ndarray
    u0: float
    grad_u: np.ndarray
    bonded: bool = False
    tag: str = ""

    def values(self, pts) -> FieldValues:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - self.origin
        n = len(pts)
        return FieldValues(
            w=self.w0 + d @ self.grad_w.T,
            grad_w=np.broadcast_to(self.grad_w, (n, 2, 2)).copy(),
            u=self.u0 + d @ self.grad_u,
            grad_u=np.broadcast_to(self.grad_u, (n, 2)).copy(),
            hess_u=np.zeros((n, 2, 2)),
        )

    def contains(self, pts, tol: float = 1e-12):
        return point_in_convex(pts, self.vertices, tol)


def point_in_convex(pts, vertices, tol: float = 1e-12):
    """Mask of points inside a counter-clockwise convex polygon (closed, with tolerance)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    v = np.asarray(vertices, dtype=float)
    inside = np.ones(len(pts), dtype=bool)
    scale = max(1.0, float(np.max(np.abs(v))))
    for k in range(len(v)):
        a, b = v[k], v[(k + 1) % len(v)]
        e = b - a
        cross = e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])
        inside &= cross >= -tol * scale * np.hypot(*e)
    return inside


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class PiecewiseAffineField(Field2D):
    """Continuous piecewise-affine field on a periodic cell of side ``1 / cells_per_side``.

    Pieces are given in cell coordinates and may stick out of ``[0, l]^2``;
    evaluation tries the nine periodic shifts.
    """

    pieces: list[AffinePiece] = field(default_factory=list)
    cells_per_side: int = 1

    def locate(self, pts):
        """Index of the piece containing each point (after periodic reduction) and the shifted points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        l = self.cell
        base = np.mod(pts, l)
        idx = np.full(len(pts), -1)
        local = base.copy()
        for sx in (0, -1, 1):
            for sy in (0, -1, 1):
                q = base + np.array([sx * l, sy * l])
                todo = idx < 0
                if not todo.any():
                    break
                for k, pc in enumerate(self.pieces):
                    m = todo & pc.contains(q, 1e-10)
                    idx[m] = k
                    local[m] = q[m]
                    todo &= ~m
        if (idx < 0).any():
            raise GeometryError("points not covered by any piece")
        return idx, local

    def evaluate(self, pts) -> FieldValues:
        idx, local = self.locate(pts)
        out = FieldValues.zeros(len(local))
        for k, pc in enumerate(self.pieces):
            m = idx == k
            if m.any():
                out.put(m, pc.values(local[m]))
        return out

    def regions(self, order: int, grid2d: int) -> list[QuadRegion]:
        regs = []
        for pc in self.pieces:
            p, w = polygon_nodes(pc.vertices, max(2, order // 2))
            regs.append(QuadRegion(p, w, pc.values(p), bonded_candidate=pc.bonded, tag=pc.tag))
        return regs
