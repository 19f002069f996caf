"""Three-term blistering energy in 1D and 2D, and the H^{1/2} diagnostic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (AdmissibilityError, BondedSet1D, BondedSet2D, EnergyBreakdown,
                   Field2D, Params, Profile1D, QuadratureError, quad_piecewise)


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature resolution: Gauss order per smooth 1D piece and nodes per
    dimension on 2D ridge and vertex regions."""

    order: int = 16
    grid2d: int = 32

    def __post_init__(self):
        if self.order < 4:
            raise ValueError("order must be >= 4")
        if self.grid2d < 16:
            raise ValueError("grid2d must be >= 16")


ADMISSIBILITY_TOL = 1e-10


def substrate_term(alpha_s: float, grad_sq: float, val_sq: float) -> float:
    """``alpha_s * sqrt(grad_sq) * sqrt(val_sq)`` with round-off negatives clipped."""
    return float(alpha_s * np.sqrt(max(grad_sq, 0.0)) * np.sqrt(max(val_sq, 0.0)))


def _check_admissible_1d(profile: Profile1D, omega: BondedSet1D, order: int):
    for a, b in omega.pieces():
        x = np.linspace(a, b, 2 * order + 1)
        u = np.asarray(profile.u(x), dtype=float)
        if np.max(np.abs(u)) > ADMISSIBILITY_TOL:
            raise AdmissibilityError(f"u != 0 on bonded interval [{a}, {b}]")
    xs = np.linspace(0.0, 1.0, 8 * order + 1)
    if np.min(profile.u(xs)) < -ADMISSIBILITY_TOL:
        raise AdmissibilityError("u takes negative values")


def energy_1d(profile: Profile1D, omega: BondedSet1D, params: Params,
              quad: QuadSpec = QuadSpec(), check: bool = True) -> EnergyBreakdown:
    """Energy of a 1D profile.

    membrane = alpha_m h int |w' + u'^2/2 - eta|^2,
    bending = h^3 int |u''|^2,
    substrate = alpha_s (int_Omega |w'|^2)^{1/2} (int_Omega |w|^2)^{1/2}.
    """
    if check:
        _check_admissible_1d(profile, omega, quad.order)
    eta = params.eta
    pts = profile.breakpoints(omega.endpoints())

    def memb(x):
        return (profile.dw(x) + 0.5 * profile.du(x) ** 2 - eta) ** 2

    def bend(x):
        return profile.d2u(x) ** 2

    membrane = params.alpha_m * params.h * quad_piecewise(memb, pts, quad.order)
    bending = params.h ** 3 * quad_piecewise(bend, pts, quad.order)
    gsq = vsq = 0.0
    for a, b in omega.pieces():
        inner = pts[(pts > a) & (pts < b)]
        seg = np.concatenate([[a], inner, [b]])
        gsq += quad_piecewise(lambda x: profile.dw(x) ** 2, seg, quad.order)
        vsq += quad_piecewise(lambda x: profile.w(x) ** 2, seg, quad.order)
    substrate = substrate_term(params.alpha_s, gsq, vsq)
    return EnergyBreakdown(max(membrane, 0.0), max(bending, 0.0), substrate)


def substrate_per_component_1d(profile: Profile1D, omega: BondedSet1D, params: Params,
                               quad: QuadSpec = QuadSpec()) -> float:
    """Sum over bonded intervals of ``alpha_s ||w'|| ||w||`` (per-component convention).

    Equal to the global product whenever every component carries the same
    pair of norms.
    """
    total = 0.0
    pts = profile.breakpoints(omega.endpoints())
    for a, b in omega.intervals:
        segs = [(a, min(b, 1.0))] if b <= 1.0 else [(a, 1.0), (0.0, b - 1.0)]
        gsq = vsq = 0.0
        for s0, s1 in segs:
            inner = pts[(pts > s0) & (pts < s1)]
            seg = np.concatenate([[s0], inner, [s1]])
            gsq += quad_piecewise(lambda x: profile.dw(x) ** 2, seg, quad.order)
            vsq += quad_piecewise(lambda x: profile.w(x) ** 2, seg, quad.order)
        total += substrate_term(params.alpha_s, gsq, vsq)
    return total


def membrane_density_2d(values, eta: float) -> np.ndarray:
    """Squared Frobenius norm of ``e(w) + grad u (x) grad u / 2 - eta I``."""
    g = values.grad_w
    e = 0.5 * (g + np.swapaxes(g, -1, -2))
    gu = values.grad_u
    e = e + 0.5 * gu[:, :, None] * gu[:, None, :]
    e[:, 0, 0] -= eta
    e[:, 1, 1] -= eta
    return np.sum(e * e, axis=(-1, -2))


def energy_2d(field: Field2D, omega: BondedSet2D, params: Params,
              quad: QuadSpec = QuadSpec(), check: bool = True) -> EnergyBreakdown:
    """Energy of a periodic 2D field.

    The bonded set is the part of ``omega`` where the film is not lifted
    (``u == 0``). All periodic cells are identical, so membrane and bending
    scale with the cell count and the substrate is the single global product
    of square roots.
    """
    mem = bend = gsq = vsq = 0.0
    for reg in field.regions(quad.order, quad.grid2d):
        v = reg.values
        dens = membrane_density_2d(v, params.eta)
        hess = np.sum(v.hess_u ** 2, axis=(-1, -2))
        if not (np.all(np.isfinite(dens)) and np.all(np.isfinite(hess))):
            raise QuadratureError(f"non-finite energy density in region {reg.tag!r}")
        if check and np.min(v.u) < -ADMISSIBILITY_TOL:
            raise AdmissibilityError(f"u < 0 in region {reg.tag!r}")
        mem += float(np.dot(reg.weights, dens))
        bend += float(np.dot(reg.weights, hess))
        if reg.bonded_candidate:
            inside = omega.contains(reg.points)
            if check and np.any(np.abs(v.u[inside]) > ADMISSIBILITY_TOL) and not omega.lifted_area:
                raise AdmissibilityError(f"u != 0 on the bonded set in region {reg.tag!r}")
            b = inside & (v.u == 0.0)
            wb = reg.weights[b]
            gsq += float(np.dot(wb, np.sum(v.grad_w[b] ** 2, axis=(-1, -2))))
            vsq += float(np.dot(wb, np.sum(v.w[b] ** 2, axis=-1)))
            if reg.hat is not None:
                # the region replaces the reference field counted in the baseline
                hv, wi = reg.hat, reg.weights[inside]
                gsq -= float(np.dot(wi, np.sum(hv.grad_w[inside] ** 2, axis=(-1, -2))))
                vsq -= float(np.dot(wi, np.sum(hv.w[inside] ** 2, axis=-1)))
    g0, v0 = field.substrate_baseline()
    gsq, vsq = gsq + g0, vsq + v0
    n = field.n_cells
    return EnergyBreakdown(
        membrane=params.alpha_m * params.h * n * mem,
        bending=params.h ** 3 * n * bend,
        substrate=substrate_term(params.alpha_s, n * gsq, n * vsq),
    )


def h_half_norm_sq(samples) -> float:
    """Homogeneous H^{1/2} seminorm squared of a periodic sampled field.

    Computes ``sum_{k != 0} |k| |f_hat(k)|^2`` with
    ``f_hat(k) = int_0^1 exp(2 pi i k x) f(x) dx`` approximated by the
    rectangle rule on the ``N`` uniform samples. The mean is discarded.
    """
    f = np.asarray(samples, dtype=float)
    n = f.size
    if f.ndim != 1 or n < 2 or n & (n - 1):
        raise ValueError("need a 1D array whose length is a power of two")
    if not np.all(np.isfinite(f)):
        raise ValueError("samples must be finite")
    fhat = np.fft.fft(f) / n
    k = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    return float(np.sum(k * np.abs(fhat) ** 2))


def l2_and_derivative_norms(samples) -> tuple[float, float]:
    """``(||f||_2, ||f'||_2)`` of a periodic sampled field, derivative taken spectrally."""
    f = np.asarray(samples, dtype=float)
    n = f.size
    fhat = np.fft.fft(f) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    l2 = np.sqrt(np.sum(np.abs(fhat) ** 2))
    d1 = np.sqrt(np.sum((2 * np.pi * k) ** 2 * np.abs(fhat) ** 2))
    return float(l2), float(d1)


def interpolation_ratio(samples) -> float:
    """``||f||^2_{H^{1/2}} / (||f||_2 ||f'||_2)``; zero for constants."""
    l2, d1 = l2_and_derivative_norms(np.asarray(samples) - np.mean(samples))
    if l2 * d1 == 0:
        return 0.0
    return h_half_norm_sq(samples) / (l2 * d1)


def dimensional_energy_1d(profile: Profile1D, omega: BondedSet1D, params: Params, L: float,
                          quad: QuadSpec = QuadSpec()) -> float:
    """Energy of the configuration blown up to period ``L`` with film thickness ``h L``.

    Evaluates the dimensional local-substrate energy directly on
    ``W(X) = L w(X / L)``, ``U(X) = L u(X / L)`` over ``[0, L]``, per unit
    length ``1 / L``. Equals ``L`` times :func:`energy_1d`.
    """
    t = params.h * L
    eta = params.eta
    pts = L * profile.breakpoints(omega.endpoints())

    def W(X):
        return L * profile.w(X / L)

    def dW(X):
        return profile.dw(X / L)

    def dU(X):
        return profile.du(X / L)

    def d2U(X):
        return profile.d2u(X / L) / L

    mem = quad_piecewise(lambda X: (dW(X) + 0.5 * dU(X) ** 2 - eta) ** 2, pts, quad.order)
    bend = quad_piecewise(lambda X: d2U(X) ** 2, pts, quad.order)
    gsq = vsq = 0.0
    for a, b in omega.pieces():
        seg = np.concatenate([[L * a], pts[(pts > L * a) & (pts < L * b)], [L * b]])
        gsq += quad_piecewise(lambda X: dW(X) ** 2, seg, quad.order)
        vsq += quad_piecewise(lambda X: W(X) ** 2, seg, quad.order)
    # per-unit-length normalisation 1/L on each term, as for an L-periodic film
    return (params.alpha_m * t * mem + t ** 3 * bend
            + params.alpha_s * np.sqrt(gsq) * np.sqrt(vsq)) / L
