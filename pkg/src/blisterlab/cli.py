"""Command-line interface.

Commands: ``eval-1d``, ``eval-2d``, ``sweep``, ``fit``, ``minimize``, ``phase``,
``calibrate``. Every output embeds the resolved config and the tool version.
Exit codes: 0 success, 1 validation error or unknown command, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .construct1d import best_cell_count, flat_profile, periodic_array, single_blister
from .construct2d.bounds import bounds_2d
from .construct2d.lattice import lattice_cell_length, lattice_energy
from .core import BondedSet1D, EnergyBreakdown, GeometryError, Params, QuadratureError
from .energy import QuadSpec, energy_1d
from .minimize import MinimizeOptions, best_over_blister_count, minimize_profile
from .scaling import (FAMILIES, PARAM_NAMES, RAW_CONSTANTS, REFERENCE_CONSTANTS, InsufficientDataError,
                      SweepSpec, classify_phase, connected_regions, default_blister_limit,
                      default_phase_axes, fit_exponent, region_grid, resolve_workers,
                      run_calibration, sweep)

COMMANDS = ("eval-1d", "eval-2d", "sweep", "fit", "minimize", "phase", "calibrate")
FAMILY_ALIASES = {"periodic": "periodic1d", "lattice": "lattice2d", "single_blister": "single"}
#: config-file keys beyond the flags: bound constants used by ``phase``
CONSTANT_KEYS = ("K1", "K2", "K3", "K4", "K5", "K6", "c1", "c2", "c3")
OPTION_KEYS = ("h", "eta", "alpha_s", "alpha_m", "theta", "family", "vary", "from", "to",
               "points", "grid", "seed", "workers", "out")
DEFAULTS = {"h": 1e-3, "eta": 1e-2, "alpha_s": 1e-1, "alpha_m": 1.0, "theta": 0.5,
            "family": None, "vary": None, "from": None, "to": None, "points": None, "grid": None,
            "seed": 0, "workers": None, "out": None}
CSV_ENERGY_COLUMNS = ("membrane", "bending", "substrate", "total", "flags")


class UsageError(ValueError):
    """Bad command line or config file (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="blisterlab", description="Blistering thin-film energy toolkit.")
    p.add_argument("--version", action="version", version=f"blisterlab {__version__}")
    p.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    arg = p.add_argument
    arg("--h", type=float)
    arg("--eta", type=float)
    arg("--alpha-s", dest="alpha_s", type=float)
    arg("--alpha-m", dest="alpha_m", type=float)
    arg("--theta", type=float)
    arg("--family")
    arg("--vary")
    arg("--from", dest="from_", type=float)
    arg("--to", type=float)
    arg("--points", type=int)
    arg("--grid", help="quadrature grid (eval-2d, sweep, fit), minimizer nodes "
                       "(minimize, calibrate) or AxB phase grid")
    arg("--seed", type=int)
    arg("--workers", type=int, help="sweep worker processes (default $BLISTERLAB_WORKERS or 1)")
    arg("--out", help="output file (default stdout)")
    arg("--config", help="flat key = value file; flags override it")
    return p


def _coerce(key: str, raw: str):
    if key in ("family", "vary", "out", "grid"):
        return raw
    if key in ("points", "seed", "workers"):
        return int(raw)
    return float(raw)


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments). Keys mirror flag names."""
    out = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in OPTION_KEYS and key not in CONSTANT_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = float(val) if key in CONSTANT_KEYS else _coerce(key, val)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {val!r}") from exc
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in OPTION_KEYS:
        val = getattr(args, "from_" if key == "from" else key)
        if val is not None:
            cfg[key] = val
    cfg["workers"] = resolve_workers(cfg["workers"])
    if cfg["family"] is not None:
        cfg["family"] = FAMILY_ALIASES.get(cfg["family"], cfg["family"])
    cfg["command"] = args.command
    return cfg


def _params(cfg: dict) -> Params:
    return Params(**{k: cfg[k] for k in PARAM_NAMES})


def _grid_int(cfg: dict, default: int) -> int:
    if cfg["grid"] is None:
        return default
    try:
        return int(cfg["grid"])
    except ValueError as exc:
        raise UsageError(f"--grid must be an integer for {cfg['command']}") from exc


def _quad(cfg: dict) -> QuadSpec:
    return QuadSpec(grid2d=_grid_int(cfg, QuadSpec().grid2d))


def _header(cfg: dict) -> dict:
    return {"version": __version__, "config": {k: cfg[k] for k in sorted(cfg)}}


def _record(p: Params, e: EnergyBreakdown | None, flags, extra=None) -> dict:
    rec = {"membrane": None, "bending": None, "substrate": None, "total": None}
    if e is not None:
        rec.update(e.as_dict())
    rec["params"] = p.as_dict()
    rec["flags"] = list(flags)
    if extra:
        rec.update(extra)
    return rec


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _csv(cfg: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# blisterlab {__version__}\n")
    buf.write("# config: " + json.dumps(_header(cfg)["config"], sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (";".join(r[c]) if c == "flags" else repr(r[c])
                                                  if isinstance(r[c], float) else r[c])
                    for c in columns])
    return buf.getvalue()


def _require_family(cfg: dict, allowed) -> str:
    fam = cfg["family"] or allowed[0]
    if fam not in allowed:
        raise UsageError(f"family {fam!r} not valid for {cfg['command']}; choose from {allowed}")
    return fam


# commands -----------------------------------------------------------------------

def cmd_eval_1d(cfg: dict) -> str:
    fam = _require_family(cfg, ("periodic1d", "single", "flat", "minimized"))
    p = _params(cfg)
    flags, extra = [], {}
    if fam == "minimized":
        n = _grid_int(cfg, 512)
        n_star, res = best_over_blister_count(p, n, default_blister_limit(p, n), cfg["seed"])
        e, extra = res.energy, {"N_star": n_star, "converged": res.converged}
    else:
        if fam == "flat":
            prof, om = flat_profile(p.theta)
        elif fam == "single":
            prof, om = single_blister(p)
        else:
            n = best_cell_count(p)
            prof, om = periodic_array(p, 1.0 / n)
            extra = {"l": 1.0 / n}
        e = energy_1d(prof, om, p)
    return _json({**_record(p, e, flags, extra), **_header(cfg)})


def cmd_eval_2d(cfg: dict) -> str:
    _require_family(cfg, ("lattice2d",))
    p = _params(cfg)
    b = bounds_2d(p)
    flags = b.flags()
    if flags:
        raise ValueError(f"lattice preconditions fail: {', '.join(flags)}")
    l = lattice_cell_length(b.l2)
    e = lattice_energy(p, l, _quad(cfg))
    return _json({**_record(p, e, flags, {"l": l, "l2": b.l2}), **_header(cfg)})


def _sweep_spec(cfg: dict) -> SweepSpec:
    fam = cfg["family"]
    if fam not in FAMILIES:
        raise UsageError(f"--family must be one of {FAMILIES}")
    if cfg["vary"] not in PARAM_NAMES or cfg["from"] is None or cfg["to"] is None:
        raise UsageError("sweeps need --vary, --from and --to")
    kw = {"seed": cfg["seed"]}
    if fam == "minimized":
        kw["n"] = _grid_int(cfg, 512)
    else:
        kw["quad"] = _quad(cfg)
    return SweepSpec.geometric(cfg["vary"], cfg["from"], cfg["to"], cfg["points"] or 8,
                               _params(cfg), fam, **kw)


def _rows(table) -> list[dict]:
    out = []
    for r in table:
        rec = dict(r.params.as_dict())
        if r.energy is not None:
            rec.update(r.energy.as_dict())
        rec["flags"] = r.flags
        out.append(rec)
    return out


def cmd_sweep(cfg: dict) -> str:
    table = sweep(_sweep_spec(cfg), cfg["workers"])
    return _csv(cfg, (*PARAM_NAMES, *CSV_ENERGY_COLUMNS), _rows(table))


def cmd_fit(cfg: dict) -> str:
    spec = _sweep_spec(cfg)
    table = sweep(spec, cfg["workers"])
    fit = fit_exponent(table, spec.vary)
    return _json({**fit.as_dict(), "rows": _rows(table), **_header(cfg)})


def cmd_minimize(cfg: dict) -> str:
    p = _params(cfg)
    n = _grid_int(cfg, 512)
    # --points is the number of equispaced blisters; default: the optimal periodic count
    count = cfg["points"] or best_cell_count(p)
    res = minimize_profile(p, BondedSet1D.equispaced(count, p.theta), n, cfg["seed"],
                           MinimizeOptions())
    flags = [] if res.converged else ["note_not_converged"]
    extra = {"n_blisters": count, "iterations": res.iterations, "converged": res.converged,
             "gradient_norm": res.gradient_norm}
    return _json({**_record(p, res.energy, flags, extra), **_header(cfg)})


def _phase_grid(cfg: dict) -> tuple[int, int]:
    g = cfg["grid"] or "64x64"
    try:
        a, e = (int(x) for x in g.lower().split("x"))
    except ValueError as exc:
        raise UsageError("--grid for phase must look like 64x64") from exc
    if min(a, e) < 2:
        raise UsageError("phase grid needs at least 2 points per axis")
    return a, e


def cmd_phase(cfg: dict) -> str:
    base = _params(cfg)
    n_a, n_e = _phase_grid(cfg)
    consts = {**REFERENCE_CONSTANTS, **{k: cfg[k] for k in CONSTANT_KEYS if k in cfg}}
    alphas, etas = default_phase_axes(base, consts, n_a, n_e)
    pts = classify_phase(alphas, etas, base, consts)
    raw = classify_phase(alphas, etas, base, RAW_CONSTANTS)
    comps = connected_regions(region_grid(pts, n_a, n_e))
    cfg = {**cfg, "constants": consts,
           "components": {k: comps[k] for k in sorted(comps)}}
    cols = ("alpha_s", "eta", "h", "alpha_m", "theta", "upper_flat", "upper_single",
            "upper_lattice", "winner", "region", "winner_raw", "region_raw", "flags")
    rows = []
    for q, r in zip(pts, raw):
        rec = q.as_dict()
        rec.update(h=base.h, alpha_m=base.alpha_m, theta=base.theta, winner_raw=r.winner,
                   region_raw=r.region, flags=list(q.flags))
        rows.append(rec)
    return _csv(cfg, cols, rows)


def cmd_calibrate(cfg: dict) -> str:
    consts, _ = run_calibration(points=max(4, cfg["points"] or 5), n=_grid_int(cfg, 512),
                                workers=cfg["workers"])
    return _json({"constants": consts, **_header(cfg)})


HANDLERS = {"eval-1d": cmd_eval_1d, "eval-2d": cmd_eval_2d, "sweep": cmd_sweep, "fit": cmd_fit,
            "minimize": cmd_minimize, "phase": cmd_phase, "calibrate": cmd_calibrate}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command not in HANDLERS:
            raise UsageError(f"unknown command {args.command!r}\n{parser.format_usage()}")
        cfg = resolve_config(args)
        text = HANDLERS[args.command](cfg)
    except (UsageError, InsufficientDataError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
