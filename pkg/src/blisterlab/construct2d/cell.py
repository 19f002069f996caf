"""Piecewise-linear zero-membrane periodic cell with a bonded square and an L-shaped blister."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import AffinePiece, BondedSet2D, GeometryError, Params, PiecewiseAffineField
from .corner import CornerMap, corner_alpha, corner_map


def cells_for_length(l: float) -> int:
    n = 1.0 / l
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise GeometryError(f"1/l = {n} is not an integer")
    return k


def rect(x0, y0, x1, y1) -> np.ndarray:
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


@dataclass(frozen=True)
class CellGeometry:
    """Lengths of one cell: side ``l``, bonded side ``s``, corner half-side ``a`` and
    corner centre ``c = (l + s) / 2`` (same in x and y)."""

    l: float
    s: float

    @property
    def a(self) -> float:
        return 0.5 * (self.l - self.s)

    @property
    def c(self) -> float:
        return 0.5 * (self.l + self.s)

    def to_cell(self, X) -> np.ndarray:
        """Map normalised corner coordinates ``[-1, 1]^2`` into the cell."""
        return self.c + self.a * np.asarray(X, dtype=float)


def strip_pieces(geo: CellGeometry, eta: float, alpha: float) -> list[AffinePiece]:
    """Bonded square and the four strips R1..R4 (each strip folds along its midline)."""
    l, s, c = geo.l, geo.s, geo.c
    r = np.sqrt(2 * alpha)
    k = eta - alpha  # in-plane slope across a strip
    pieces = [AffinePiece(rect(0, 0, s, s), np.array([s / 2, s / 2]), np.zeros(2),
                          eta * np.eye(2), 0.0, np.zeros(2), bonded=True, tag="bonded")]
    # vertical strips: w1 = k (x - c), w2 = eta (y - s/2)
    gw = np.array([[k, 0.0], [0.0, eta]])
    pieces.append(AffinePiece(rect(s, 0, c, s), np.array([s, s / 2]), np.array([k * (s - c), 0.0]),
                              gw, 0.0, np.array([r, 0.0]), tag="R1"))
    pieces.append(AffinePiece(rect(c, 0, l, s), np.array([l, s / 2]), np.array([k * (l - c), 0.0]),
                              gw, 0.0, np.array([-r, 0.0]), tag="R2"))
    # horizontal strips: the reflection across x = y
    gw = np.array([[eta, 0.0], [0.0, k]])
    pieces.append(AffinePiece(rect(0, s, s, c), np.array([s / 2, s]), np.array([0.0, k * (s - c)]),
                              gw, 0.0, np.array([0.0, r]), tag="R3"))
    pieces.append(AffinePiece(rect(0, c, s, l), np.array([s / 2, l]), np.array([0.0, k * (l - c)]),
                              gw, 0.0, np.array([0.0, -r]), tag="R4"))
    return pieces


def corner_pieces(geo: CellGeometry, eta: float, cmap: CornerMap) -> list[AffinePiece]:
    """The corner triangles scaled into ``[s, l]^2``: ``w_bar = a w(X) + eta (x - c)``, ``u_bar = a u(X)``."""
    out = []
    for t in cmap.triangles:
        X0 = t.vertices[0]
        out.append(AffinePiece(
            vertices=geo.to_cell(t.vertices),
            origin=geo.to_cell(X0),
            w0=geo.a * t.w[0] + eta * geo.a * X0,
            grad_w=t.grad_w + eta * np.eye(2),
            u0=geo.a * t.u[0],
            grad_u=t.grad_u,
            tag=f"corner.{t.tag}",
        ))
    return out


def cell_assembly(params: Params, l: float, theta: float | None = None
                  ) -> tuple[PiecewiseAffineField, BondedSet2D]:
    """Periodic piecewise-linear field with ``1/l`` cells per side and its bonded set.

    ``theta`` overrides ``params.theta`` for the bonded square side
    ``sqrt(theta) l`` (used by the lattice to compensate lifted area).
    """
    n = cells_for_length(l)
    l = 1.0 / n
    th = params.theta if theta is None else theta
    geo = CellGeometry(l, np.sqrt(th) * l)
    alpha = corner_alpha(params.eta, th)
    pieces = strip_pieces(geo, params.eta, alpha) + corner_pieces(geo, params.eta, corner_map(alpha=alpha))
    field = PiecewiseAffineField(pieces=pieces, cells_per_side=n)
    omega = BondedSet2D(((0.0, 0.0, geo.s, geo.s),), cells_per_side=n)
    return field, omega


def bonded_square_substrate(params: Params, l: float) -> float:
    """Closed-form substrate energy of the cell: bonded squares carry ``w = eta (x - x_j)``.

    Per square of side ``s``: ``int |grad w|^2 = 2 eta^2 s^2`` and
    ``int |w|^2 = eta^2 s^4 / 6``; over ``l^{-2}`` squares the product of
    roots gives ``alpha_s eta^2 theta^{3/2} l / sqrt(3)``.
    """
    return params.alpha_s * params.eta ** 2 * params.theta ** 1.5 * l / np.sqrt(3.0)
