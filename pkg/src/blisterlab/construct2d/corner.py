"""Piecewise-linear, zero-membrane corner deformation on the normalised square ``[-1, 1]^2``.

The fundamental triangles are ``T1 = BDA`` and ``T2 = DCB`` with
``A = (0, -1)``, ``B = (1, -1)``, ``C = (0, 0)``, ``D = (0, -d)``. Vertex
values are fixed by the boundary data ``w = -alpha (x, y)`` on the square's
boundary, ``u = 0`` at its corners and ``u = sqrt(2 alpha)`` at edge
midpoints; ``w(D) = (0, alpha)`` and ``u(D) = sqrt(2 alpha)``. The
reflections across the axes and diagonals extend the two triangles to the
16 triangles covering the square. The in-plane field here already has the
misfit removed, so zero membrane energy means
``e(w) + grad u (x) grad u / 2 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..core import polygon_area

#: the unique fold position making the T2 shear strain vanish
D_CORNER = 3.0 - 2.0 * np.sqrt(2.0)


def bonded_excess(theta: float) -> float:
    """``sqrt(theta) / (1 - sqrt(theta))``, so that ``alpha = eta (1 + bonded_excess)``."""
    r = np.sqrt(theta)
    return r / (1.0 - r)


def corner_alpha(eta: float, theta: float) -> float:
    """``alpha = eta (1 + sqrt(theta) / (1 - sqrt(theta)))``."""
    return eta * (1.0 + bonded_excess(theta))


def t2_shear_residual(d, alpha: float):
    """Shear strain ``alpha - alpha/d + sqrt(2 alpha) sqrt(2 alpha / d)`` on ``T2`` for fold depth ``d``."""
    d = np.asarray(d, dtype=float)
    return alpha - alpha / d + np.sqrt(2 * alpha) * np.sqrt(2 * alpha / d)


def scan_shear_roots(alpha: float, n: int = 4096) -> list[float]:
    """All roots in ``(0, 1)`` of :func:`t2_shear_residual`, by sign-change scan and Brent refinement."""
    grid = np.geomspace(1e-9, 1.0 - 1e-12, n)
    vals = t2_shear_residual(grid, alpha)
    roots = []
    for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(t2_shear_residual, grid[k], grid[k + 1], args=(alpha,),
                            xtol=1e-15, rtol=4 * np.finfo(float).eps))
    roots += [float(g) for g, v in zip(grid, vals) if v == 0.0]
    return sorted(roots)


# symmetry group: (matrix acting on points and on in-plane vectors)
_V = np.array([[-1.0, 0.0], [0.0, 1.0]])
_H = np.array([[1.0, 0.0], [0.0, -1.0]])
_S = np.array([[0.0, 1.0], [1.0, 0.0]])


def symmetry_group() -> list[np.ndarray]:
    """The eight orthogonal symmetries of the square (reflections across axes and diagonals)."""
    group = [np.eye(2)]
    frontier = [np.eye(2)]
    while frontier:
        g = frontier.pop()
        for s in (_V, _H, _S):
            m = s @ g
            if not any(np.allclose(m, q) for q in group):
                group.append(m)
                frontier.append(m)
    return group


@dataclass(frozen=True)
class Triangle:
    """Linear triangle with vertex values; gradients are computed on demand."""

    vertices: np.ndarray  # (3, 2), counter-clockwise
    w: np.ndarray  # (3, 2)
    u: np.ndarray  # (3,)
    tag: str

    def _inv(self):
        p = self.vertices
        m = np.array([p[1] - p[0], p[2] - p[0]])
        return np.linalg.inv(m)

    @property
    def grad_w(self) -> np.ndarray:
        """``grad_w[i, j] = d_j w_i``."""
        dw = np.array([self.w[1] - self.w[0], self.w[2] - self.w[0]])
        return (self._inv() @ dw).T

    @property
    def grad_u(self) -> np.ndarray:
        du = np.array([self.u[1] - self.u[0], self.u[2] - self.u[0]])
        return self._inv() @ du

    def strain(self) -> np.ndarray:
        g, gu = self.grad_w, self.grad_u
        return 0.5 * (g + g.T) + 0.5 * np.outer(gu, gu)

    def area(self) -> float:
        return polygon_area(self.vertices)


@dataclass(frozen=True)
class CornerMap:
    """The 16-triangle corner deformation for a given ``alpha``."""

    alpha: float
    d: float
    triangles: tuple[Triangle, ...]

    @property
    def points(self) -> dict[str, np.ndarray]:
        return {"A": np.array([0.0, -1.0]), "B": np.array([1.0, -1.0]),
                "C": np.zeros(2), "D": np.array([0.0, -self.d])}

    def fundamental(self) -> tuple[Triangle, Triangle]:
        return self.triangles[0], self.triangles[1]

    def membrane_residual(self) -> float:
        """Largest strain entry over all triangles (zero for an exact construction)."""
        return max(float(np.max(np.abs(t.strain()))) for t in self.triangles)

    def continuity_residual(self, samples: int = 7) -> float:
        """Largest jump of ``(w, u)`` across edges shared by two triangles."""
        worst = 0.0
        s = np.linspace(0.0, 1.0, samples)
        for i, ti in enumerate(self.triangles):
            for tj in self.triangles[i + 1:]:
                shared = [(a, b) for a in range(3) for b in range(3)
                          if np.allclose(ti.vertices[a], tj.vertices[b], atol=1e-14)]
                if len(shared) < 2:
                    continue
                (a0, b0), (a1, b1) = shared[:2]
                wi = np.outer(1 - s, ti.w[a0]) + np.outer(s, ti.w[a1])
                wj = np.outer(1 - s, tj.w[b0]) + np.outer(s, tj.w[b1])
                ui = (1 - s) * ti.u[a0] + s * ti.u[a1]
                uj = (1 - s) * tj.u[b0] + s * tj.u[b1]
                worst = max(worst, float(np.max(np.abs(wi - wj))), float(np.max(np.abs(ui - uj))))
        return worst

    def boundary_residual(self, samples: int = 9) -> float:
        """Deviation from ``w = -alpha x`` on the square's boundary and from the edge
        slopes ``+-sqrt(2 alpha)`` of ``u``."""
        worst = 0.0
        r = np.sqrt(2 * self.alpha)
        for t in self.triangles:
            for k in range(3):
                p, q = t.vertices[k], t.vertices[(k + 1) % 3]
                for axis in (0, 1):
                    if abs(abs(p[1 - axis]) - 1) < 1e-14 and abs(p[1 - axis] - q[1 - axis]) < 1e-14:
                        worst = max(worst, float(np.max(np.abs(t.w[k] + self.alpha * p))))
                        worst = max(worst, float(np.max(np.abs(t.w[(k + 1) % 3] + self.alpha * q))))
                        # u rises towards the edge midpoint: slope -sqrt(2 alpha) sign(x)
                        mid = 0.5 * (p + q)
                        worst = max(worst, abs(t.grad_u[axis] + r * np.sign(mid[axis])))
        return worst


def corner_map(params=None, *, alpha: float | None = None, d: float = D_CORNER) -> CornerMap:
    """Build the corner deformation for ``params`` (or an explicit ``alpha``)."""
    if alpha is None:
        if params is None:
            raise ValueError("give params or alpha")
        alpha = corner_alpha(params.eta, params.theta)
    r = np.sqrt(2 * alpha)
    A, B, C, D = (np.array(p) for p in ([0.0, -1.0], [1.0, -1.0], [0.0, 0.0], [0.0, -d]))
    vals = {
        "A": (np.array([0.0, alpha]), r),
        "B": (np.array([-alpha, alpha]), 0.0),
        "C": (np.zeros(2), r * (1.0 + np.sqrt(d))),
        "D": (np.array([0.0, alpha]), r),
    }
    pos = {"A": A, "B": B, "C": C, "D": D}
    base = [("T1", "BDA"), ("T2", "DCB")]
    tris = []
    for gi, g in enumerate(symmetry_group()):
        for tag, names in base:
            v = np.array([g @ pos[c] for c in names])
            w = np.array([g @ vals[c][0] for c in names])
            u = np.array([vals[c][1] for c in names])
            if polygon_area(v) < 0:
                v, w, u = v[::-1], w[::-1], u[::-1]
            tris.append(Triangle(v, w, u, f"{tag}.{gi}"))
    return CornerMap(float(alpha), float(d), tuple(tris))
