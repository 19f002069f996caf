"""Closed-form 2D bounds, the lattice length scale ``l2`` and the regime conditions."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import Params

DEFAULT_K = {"K4": 1.0, "K5": 1.0, "K6": 1.0}
#: default regime constants (the theory leaves them abstract)
DEFAULT_C = {"c1": 1.0 / 8.0, "c2": 0.5, "c3": 0.25}


@dataclass(frozen=True)
class Bounds2D:
    lower: float
    upper_flat: float
    upper_single: float
    upper_lattice: float
    l2: float
    cond_2d1a: bool  # l2 < c2: the lattice fits in the unit square
    cond_2d1b: bool  # h / sqrt(alpha_m eta) < c1 l2: ridges fit in their cells
    cond_2d2: bool  # eta < c3 alpha_s^{2/17} / alpha_m^{3/17}: small-slope model valid

    @property
    def lattice_admissible(self) -> bool:
        return self.cond_2d1a and self.cond_2d1b and self.cond_2d2

    def flags(self) -> list[str]:
        names = {"cond_2d1a": self.cond_2d1a, "cond_2d1b": self.cond_2d1b, "cond_2d2": self.cond_2d2}
        return [f"fails_{k[5:]}" for k, ok in names.items() if not ok]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def lattice_length(params: Params) -> float:
    """``l2 = alpha_m^{1/16} h / (eta^{5/16} alpha_s^{3/8})``."""
    return params.alpha_m ** (1 / 16) * params.h / (params.eta ** (5 / 16) * params.alpha_s ** (3 / 8))


def bounds_2d(params: Params, constants: dict | None = None) -> Bounds2D:
    """Evaluate the 2D bound formulas and regime flags.

    ``constants`` may override ``K4``, ``K5``, ``K6`` and ``c1``, ``c2``, ``c3``.
    """
    k = {**DEFAULT_K, **DEFAULT_C, **(constants or {})}
    if min(k[n] for n in (*DEFAULT_K, *DEFAULT_C)) <= 0:
        raise ValueError("constants must be positive")
    h, eta, a_s, a_m, th = params.h, params.eta, params.alpha_s, params.alpha_m, params.theta
    l2 = lattice_length(params)
    return Bounds2D(
        lower=k["K4"] * min(a_m * eta ** 2 * th ** 3, a_s ** (2 / 3) * eta ** (5 / 3) * th ** (8 / 3)) * h,
        upper_flat=a_m * eta ** 2 * h,
        upper_single=(a_m * eta ** 2 * th + k["K5"] * a_m * eta ** 1.5 * h) * h,
        upper_lattice=k["K6"] * a_m ** (1 / 16) * a_s ** (5 / 8) * eta ** (27 / 16) * h,
        l2=l2,
        cond_2d1a=l2 < k["c2"],
        cond_2d1b=h / (a_m * eta) ** 0.5 < k["c1"] * l2,
        cond_2d2=eta < k["c3"] * a_s ** (2 / 17) / a_m ** (3 / 17),
    )
