"""One-dimensional test configurations and closed-form bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BondedSet1D, GeometryError, Params, Profile1D

TWO_SQRT3 = 2.0 * np.sqrt(3.0)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def flat_profile(theta: float) -> tuple[Profile1D, BondedSet1D]:
    """Unbuckled film ``w = u = 0`` with the bonded set ``[0, theta]``."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    prof = Profile1D(_zero, _zero, _zero, _zero, _zero, (0.0, theta, 1.0), "flat")
    return prof, BondedSet1D(((0.0, theta),))


def single_blister(params: Params) -> tuple[Profile1D, BondedSet1D]:
    """One smooth zero-membrane blister on ``[0, 1 - theta]``, bonded elsewhere with ``w = u = 0``."""
    eta, theta = params.eta, params.theta
    b = 1.0 - theta
    se = np.sqrt(eta)

    def inside(x):
        return np.asarray(x, dtype=float) <= b

    def w(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), eta * b / (4 * np.pi) * np.sin(4 * np.pi * x / b), 0.0)

    def dw(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), eta * np.cos(4 * np.pi * x / b), 0.0)

    def u(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), 2 * se * b / np.pi * np.sin(np.pi * x / b) ** 2, 0.0)

    def du(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), 2 * se * np.sin(2 * np.pi * x / b), 0.0)

    def d2u(x):
        x = np.asarray(x, dtype=float)
        return np.where(inside(x), 4 * np.pi * se / b * np.cos(2 * np.pi * x / b), 0.0)

    prof = Profile1D(w, dw, u, du, d2u, (0.0, b, 1.0), "single")
    return prof, BondedSet1D(((b, 1.0),))


def cell_count(l: float) -> int:
    n = 1.0 / l
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise GeometryError(f"1/l = {n} is not an integer")
    return k


def periodic_array(params: Params, l: float) -> tuple[Profile1D, BondedSet1D]:
    """Periodic blisters of cell length ``l`` (``1/l`` integer).

    Each cell ``[k l, (k+1) l]`` has a blister on its first ``(1 - theta) l``
    and a bonded interval with ``w = eta (x - x_k)`` on the rest, ``x_k`` the
    bonded interval's centre. Membrane energy vanishes identically.
    """
    n = cell_count(l)
    l = 1.0 / n
    eta, theta = params.eta, params.theta
    b = 1.0 - theta
    amp = 2.0 * np.sqrt(eta / b) * b / (2 * np.pi)

    def local(x):
        x = np.asarray(x, dtype=float)
        s = np.mod(x, l) / l
        s = np.where(np.isclose(s, 1.0, rtol=0.0, atol=1e-13), 0.0, s)
        return s, s <= b

    def w(x):
        s, blister = local(x)
        wb = eta * (1 - 1 / b) * s + theta * eta / 2 + eta / (4 * np.pi) * np.sin(4 * np.pi * s / b)
        wo = eta * (s - (2 - theta) / 2)
        return l * np.where(blister, wb, wo)

    def dw(x):
        s, blister = local(x)
        return np.where(blister, eta * (1 - 1 / b) + eta / b * np.cos(4 * np.pi * s / b), eta)

    def u(x):
        s, blister = local(x)
        return l * np.where(blister, amp * (1 - np.cos(2 * np.pi * s / b)), 0.0)

    def du(x):
        s, blister = local(x)
        return np.where(blister, 2.0 * np.sqrt(eta / b) * np.sin(2 * np.pi * s / b), 0.0)

    def d2u(x):
        s, blister = local(x)
        return np.where(blister, 4 * np.pi * np.sqrt(eta / b) / b * np.cos(2 * np.pi * s / b), 0.0) / l

    pieces = sorted({k * l for k in range(n + 1)} | {(k + b) * l for k in range(n)})
    prof = Profile1D(w, dw, u, du, d2u, tuple(pieces), "periodic")
    omega = BondedSet1D(tuple(((k + b) * l, (k + 1) * l) for k in range(n)))
    return prof, omega


# closed forms of the constructions above

def single_blister_bending(params: Params) -> float:
    return 8 * np.pi ** 2 * params.h ** 3 * params.eta / (1 - params.theta)


def periodic_bending(params: Params, l: float) -> float:
    return 8 * np.pi ** 2 * params.h ** 3 * params.eta / ((1 - params.theta) ** 2 * l ** 2)


def periodic_substrate(params: Params, l: float) -> float:
    return params.alpha_s * params.eta ** 2 * params.theta ** 2 * l / TWO_SQRT3


def periodic_energy(params: Params, l: float) -> float:
    """Exact total energy of :func:`periodic_array` at cell length ``l``."""
    return periodic_bending(params, l) + periodic_substrate(params, l)


def optimal_length(params: Params) -> float:
    """Minimiser of :func:`periodic_energy` over continuous ``l``."""
    p = params
    return (32 * np.sqrt(3) * np.pi ** 2 * p.h ** 3
            / ((1 - p.theta) ** 2 * p.alpha_s * p.eta * p.theta ** 2)) ** (1 / 3)


def best_cell_count(params: Params) -> int:
    """Integer cell count minimising :func:`periodic_energy` with ``l = 1/N``."""
    lstar = optimal_length(params)
    guess = 1.0 / lstar
    lo = max(1, int(np.floor(guess)))
    cands = {lo, lo + 1, max(1, lo - 1)}
    return min(cands, key=lambda n: (periodic_energy(params, 1.0 / n), n))


def optimal_periodic_array(params: Params) -> tuple[Profile1D, BondedSet1D, float]:
    n = best_cell_count(params)
    prof, omega = periodic_array(params, 1.0 / n)
    return prof, omega, 1.0 / n


@dataclass(frozen=True)
class Bounds1D:
    """Closed-form lower/upper bounds and length scales of the 1D problem."""

    lower: float
    upper_flat: float
    upper_single: float
    upper_periodic: float
    l1_theta: float
    l1_plain: float
    lower_branch: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_K = {"K1": 1.0, "K2": 1.0, "K3": 1.0}


def bounds_1d(params: Params, constants: dict | None = None) -> Bounds1D:
    """Evaluate the 1D bound formulas.

    ``constants`` may provide ``K1``, ``K2``, ``K3`` (default 1).
    """
    k = dict(DEFAULT_K)
    k.update(constants or {})
    if min(k["K1"], k["K2"], k["K3"]) <= 0:
        raise ValueError("constants must be positive")
    h, eta, a_s, a_m, th = params.h, params.eta, params.alpha_s, params.alpha_m, params.theta
    stiff = a_m * eta ** 2 * th ** 2
    lattice = a_s ** (2 / 3) * eta ** (5 / 3) * th ** (5 / 3) / (1 - th) ** (1 / 3)
    return Bounds1D(
        lower=k["K1"] * min(stiff, lattice) * h,
        upper_flat=a_m * eta ** 2 * h,
        upper_single=(a_m * eta ** 2 * th + k["K2"] * h ** 2 * eta / (1 - th)) * h,
        upper_periodic=k["K3"] * th ** (4 / 3) / (1 - th) ** (2 / 3) * a_s ** (2 / 3) * eta ** (5 / 3) * h,
        l1_theta=h / (eta ** (1 / 3) * a_s ** (1 / 3) * (1 - th) ** (2 / 3) * th ** (2 / 3)),
        l1_plain=h / (eta ** (1 / 3) * a_s ** (1 / 3)),
        lower_branch="membrane" if stiff <= lattice else "lattice",
    )


def condition_1d(params: Params, c0: float = 1.0) -> bool:
    """Smallness condition on ``h`` guaranteeing at least one period fits."""
    b = bounds_1d(params)
    return b.l1_plain < c0 * (1 - params.theta) ** (2 / 3) * params.theta ** (2 / 3)
