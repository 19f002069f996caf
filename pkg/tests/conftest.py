"""Shared fixtures and the acceptance-criteria reporter."""

import time
import numpy as np
import pytest

from blisterlab.core import Params
from blisterlab.scaling import BASE_2D, SweepSpec, sweep

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def record():
    """``record(n, ok, detail)`` stores the outcome of acceptance criterion ``n``."""
    def _record(n: int, ok: bool, detail: str = ""):
        _RESULTS[n] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def lattice_tables():
    """Lattice sweeps at l2 in h, eta and alpha_s (region B), grid2d = 32.

    Returns ``(tables, seconds)``."""
    t0 = time.time()
    specs = {
        "h": SweepSpec.geometric("h", 2e-8, 2e-6, 5, BASE_2D, "lattice2d"),
        "eta": SweepSpec.geometric("eta", 1e-4, 1e-2, 5, BASE_2D, "lattice2d"),
        "alpha_s": SweepSpec.geometric("alpha_s", 1e-10, 1e-7, 5, BASE_2D, "lattice2d"),
    }
    tables = {k: sweep(s, workers=1) for k, s in specs.items()}
    return tables, time.time() - t0


@pytest.fixture(scope="session")
def small_params():
    return Params(h=1e-3, eta=1e-2, alpha_s=1e-1, theta=0.5)


ORACLE_ETAS = tuple(float(e) for e in np.geomspace(1e-3, 1e-1, 5))


@pytest.fixture(scope="session")
def oracle_runs():
    """Minimised energies for equispaced Omega with N = 1 .. 2 N_best + 2 blisters,
    at n = 512 over a 2-decade eta sweep. Returns ``({eta: (params, results)}, seconds)``."""
    t0 = time.time()
    from blisterlab.construct1d import best_cell_count
    from blisterlab.minimize import scan_blister_counts
    from blisterlab.scaling import BASE_ORACLE
    out = {}
    for eta in ORACLE_ETAS:
        p = BASE_ORACLE.replace(eta=eta)
        n_max = min(int(512 * p.theta) // 4, 2 * best_cell_count(p) + 2)
        out[eta] = (p, scan_blister_counts(p, 512, n_max, seed=0))
    return out, time.time() - t0
