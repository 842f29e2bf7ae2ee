"""Command-line experiment runner.

Every experiment writes ``result.json`` (configuration, per-scale data, fit
and closed-form comparison), ``result.csv`` (the per-scale rows) and
``meta.json`` (wall time, timestamp, source revision) into the output
directory; some also write an SVG picture.  ``result.json`` and
``result.csv`` depend only on the configuration, so reruns are
byte-identical; everything that varies between runs lives in ``meta.json``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 step budget exhausted, 130 interrupted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import extremal, formulas, loewner, montecarlo, percolation, radial
from .errors import ConfigurationError, DomainError, NonTermination, NumericError, SchemaError
from .paths import sample_driving
from .rng import Seed, as_seed

SCHEMA_VERSION = 1
OUTPUT_ENV = "BROWNEXP_OUTPUT"

__all__ = ["ExperimentConfig", "ResultRecord", "run", "report", "load_record", "main",
           "SCHEMA_VERSION", "OUTPUT_ENV", "load_schema"]


# -- parameter parsing ---------------------------------------------------------------

def parse_scales(text) -> list[float]:
    """``"2:64"`` gives the powers of two from 2 to 64; otherwise a comma list."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if ":" in text:
        a, b = (float(v) for v in text.split(":"))
        if not (a > 0 and b >= a):
            raise ConfigurationError(f"bad range {text!r}")
        out, v = [], a
        while v <= b * (1 + 1e-12):
            out.append(v)
            v *= 2
        return out
    return [float(v) for v in text.split(",") if v.strip()]


def _scales(field_name):
    def conv(text):
        try:
            return parse_scales(text)
        except ValueError as e:
            raise ConfigurationError(str(e), field_name) from None
    return conv


def _ints(field_name):
    def conv(text):
        return [int(v) for v in _scales(field_name)(text)]
    return conv


_DEFAULT_X_GRID = [round(extremal.x_of_L(float(L)), 12) for L in range(3, 11)]

# name -> (converter, default, help)
_P = {
    "j": (int, 1, "paths in the first packet"),
    "k": (int, 1, "paths in the second packet"),
    "lam": (float, 1.0, "moment exponent lambda"),
    "radii": (_scales("radii"), [2.0, 4.0, 8.0, 16.0, 32.0, 64.0], "radii, 'a:b' dyadic or comma list"),
    "trials": (int, 2000, "trials per radius / grid point / size"),
    "dt": (float, 0.01, "time step"),
    "inner": (int, 100, "inner samples per outer trial"),
    "sizes": (_ints("sizes"), [2**k for k in range(14, 21)], "walk lengths, 'a:b' dyadic or comma list"),
    "kappa": (float, 6.0, "SLE parameter"),
    "steps": (int, 4096, "number of drive steps"),
    "stride": (int, 8, "trace every stride-th grid time"),
    "x": (float, 0.5, "marked boundary point in (0, 1)"),
    "x_grid": (_scales("x_grid"), _DEFAULT_X_GRID, "comma list of marked points"),
    "aspect": (float, 1.0, "width over height"),
    "mesh": (int, 64, "lattice sites across the region"),
    "width": (float, 2.0, "rectangle width"),
    "height": (float, 1.0, "rectangle height"),
    "n": (int, 64, "grid cells per unit length"),
    "r": (float, 0.5, "inner radius in (0, 1)"),
    "coords": (str, "logpolar", "'logpolar' or 'cartesian'"),
    "prefix": (str, None, "file prefix of a saved quadrilateral"),
    "name": (str, None, "closed-form function name"),
    "args": (_scales("args"), [], "comma list of arguments"),
}

_COMMANDS = {
    "formulas eval": ["name", "args"],
    "formulas table": [],
    "formulas identities": [],
    "exp nonintersect": ["j", "k", "radii", "trials", "dt"],
    "exp disconnect": ["j", "radii", "trials", "dt"],
    "exp halfplane": ["j", "k", "radii", "trials", "dt"],
    "exp zr-moment": ["j", "lam", "radii", "trials", "dt", "inner"],
    "dims frontier": ["sizes", "trials"],
    "dims cut": ["sizes", "trials"],
    "dims pioneer": ["sizes", "trials"],
    "sle trace": ["kappa", "steps", "dt", "stride"],
    "sle swallow": ["x", "trials", "dt"],
    "sle xi-hat": ["lam", "x_grid", "trials", "dt"],
    "sle radial-xi": ["lam", "radii", "trials", "dt", "kappa"],
    "perc crossing": ["aspect", "mesh", "trials"],
    "perc explore": ["mesh"],
    "modulus rect": ["width", "height", "n"],
    "modulus annulus": ["r", "n", "coords"],
    "modulus numeric": ["prefix"],
}

# per-command defaults that differ from the shared ones
_OVERRIDES = {
    "exp halfplane": {"k": 0},
    "exp disconnect": {"radii": [2.0 ** e for e in range(4, 13)]},
    "dims frontier": {"trials": 32},
    "dims cut": {"trials": 32},
    "dims pioneer": {"trials": 32},
    "sle swallow": {"trials": 10000, "dt": 1e-4},
    "sle xi-hat": {"trials": 4000, "dt": 1e-4},
    "sle radial-xi": {"radii": [0.25, 0.125, 0.0625, 0.03125], "trials": 200, "dt": 1e-3},
    "perc crossing": {"trials": 4000},
    "modulus rect": {"n": 32},
}


@dataclass
class ExperimentConfig:
    command: str
    parameters: dict
    seed: Seed = Seed(0)
    output_dir: Path | None = None
    threads: int = 1

    def to_dict(self) -> dict:
        return {"command": self.command, "parameters": dict(self.parameters),
                "seed": self.seed.to_dict()}

    @classmethod
    def build(cls, command: str, given: dict | None = None, seed=0, output_dir=None,
              threads: int = 1) -> "ExperimentConfig":
        """Fill defaults, convert values and reject unknown parameters."""
        if command not in _COMMANDS:
            raise ConfigurationError(f"unknown experiment {command!r}", "command")
        given = dict(given or {})
        params = {}
        for name in _COMMANDS[command]:
            conv, default, _ = _P[name]
            default = _OVERRIDES.get(command, {}).get(name, default)
            value = given.pop(name, None)
            if value is None:
                value = default
            else:
                try:
                    value = conv(value)
                except (TypeError, ValueError) as e:
                    raise ConfigurationError(f"bad value for {name}: {e}", name) from None
            params[name] = value
        if given:
            bad = sorted(given)[0]
            raise ConfigurationError(f"{command} takes no parameter {bad!r}", bad)
        if int(threads) < 1:
            raise ConfigurationError("threads must be positive", "threads")
        return cls(command, params, as_seed(seed), Path(output_dir) if output_dir else None,
                   int(threads))


@dataclass
class ResultRecord:
    command: str
    config: dict
    columns: list
    rows: list
    summary: dict
    fit: dict | None = None
    version: str = __version__
    schema_version: int = SCHEMA_VERSION
    meta: dict = field(default_factory=dict)
    svg: str | None = None

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "version": self.version,
                "command": self.command, "config": self.config, "columns": self.columns,
                "rows": self.rows, "summary": self.summary, "fit": self.fit}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d) -> "ResultRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema version {d.get('schema_version')!r}")
        return cls(d["command"], d["config"], d["columns"], d["rows"], d["summary"],
                   d.get("fit"), d.get("version", ""), d["schema_version"])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def load_record(path) -> ResultRecord:
    """Read a ``result.json`` (or the directory holding one)."""
    p = Path(path)
    if p.is_dir():
        p = p / "result.json"
    return ResultRecord.from_dict(json.loads(p.read_text()))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_schema() -> dict:
    return json.loads(resources.files("brownexp").joinpath("schema.json").read_text())


# -- experiments ---------------------------------------------------------------------

_PLAN_FIELDS = {"trials_per_radius": "trials", "inner_samples": "inner"}


def _plan(p, seed, inner=None):
    try:
        return montecarlo.ExperimentPlan(tuple(p["radii"]), p["trials"], p["dt"],
                                         inner if inner is not None else 100, seed)
    except ConfigurationError as e:
        raise ConfigurationError(str(e), _PLAN_FIELDS.get(e.field, e.field)) from None


def _radius_rows(tab):
    return [{"scale": R, "estimate": v, "stderr": e, "n": n} for R, v, e, n in tab.rows()]


_SCALE_COLS = ["scale", "estimate", "stderr", "n"]


def _summary(name, fit, expected, **extra):
    d = {"exponent_name": name, "slope": fit.slope, "stderr": fit.stderr,
         "expected": expected,
         "z": (fit.slope - expected) / fit.stderr if fit.stderr > 0 else None}
    d.update(extra)
    return d


def _exp_nonintersect(p, seed, threads):
    if p["j"] < 1 or p["k"] < 1:
        raise ConfigurationError("j and k must be positive", "j" if p["j"] < 1 else "k")
    plan = _plan(p, seed)
    fit, tab = montecarlo.estimate_nonintersection(p["j"], p["k"], plan, threads=threads,
                                                   return_table=True)
    exp = formulas.xi_plane(p["j"], p["k"])
    return _SCALE_COLS, _radius_rows(tab), _summary(f"xi({p['j']},{p['k']})", fit, exp), fit


def _exp_disconnect(p, seed, threads):
    if p["j"] < 1:
        raise ConfigurationError("j must be positive", "j")
    plan = _plan(p, seed)
    fit, tab = montecarlo.estimate_disconnection(p["j"], plan, threads=threads, return_table=True)
    exp = formulas.xi_j_lambda(p["j"], 0)
    return _SCALE_COLS, _radius_rows(tab), _summary(f"xi({p['j']},0)", fit, exp), fit


def _exp_halfplane(p, seed, threads):
    if p["j"] < 1 or p["k"] < 0:
        raise ConfigurationError("need j >= 1 and k >= 0", "j" if p["j"] < 1 else "k")
    plan = _plan(p, seed)
    fit, tab = montecarlo.estimate_halfplane(p["j"], p["k"], plan, threads=threads,
                                             return_table=True)
    args = (p["j"], p["k"]) if p["k"] else (p["j"],)
    exp = formulas.xi_tilde(*args)
    name = "xi~(" + ",".join(str(a) for a in args) + ")"
    return _SCALE_COLS, _radius_rows(tab), _summary(name, fit, exp), fit


def _exp_zr(p, seed, threads):
    if p["inner"] < 100:
        raise ConfigurationError("inner must be at least 100", "inner")
    if not p["lam"] > 0:
        raise ConfigurationError("lam must be positive", "lam")
    plan = _plan(p, seed, p["inner"])
    est = montecarlo.estimate_zr_moment(p["j"], p["lam"], plan, threads=threads)
    exp = formulas.xi_j_lambda(p["j"], p["lam"])
    s = _summary(f"xi({p['j']},{p['lam']:g})", est.fit, exp, jensen_z=est.jensen_z,
                 jensen_ok=est.jensen_ok)
    return _SCALE_COLS, _radius_rows(est.table), s, est.fit


def _dims(kind):
    def go(p, seed, threads):
        est = montecarlo.estimate_dimension(kind, p["sizes"], p["trials"], seed, threads=threads)
        dims = formulas.exponent_table()["dimensions"]
        exp = dims["frontier" if kind == "frontier" else f"{kind}_points"]
        rows = [{"scale": s, "estimate": v, "stderr": None, "n": n} for s, v, n in est.fit.points]
        for row in rows:
            c = np.asarray(est.counts[int(row["scale"])])
            row["stderr"] = float(c.std(ddof=1) / math.sqrt(len(c)))
        s = {"exponent_name": f"dim({kind})", "slope": est.fit.slope,
             "dimension": est.dimension, "stderr": est.stderr, "expected": exp,
             "z": (est.dimension - exp) / est.stderr if est.stderr > 0 else None,
             "box_dimension": est.box_dimension,
             "box_stderr": est.box.stderr if est.box is not None else None}
        return _SCALE_COLS, rows, s, est.fit
    return go


def _sle_trace(p, seed, threads):
    if p["steps"] < 1 or p["stride"] < 1:
        raise ConfigurationError("steps and stride must be positive", "steps")
    drive = sample_driving(p["kappa"], p["steps"], p["dt"], seed)
    path = loewner.chordal_trace(drive, stride=p["stride"])
    rows = [{"t": float(t), "re": float(z.real), "im": float(z.imag)}
            for t, z in zip(path.times, path.points)]
    s = {"points": len(rows), "tip_re": rows[-1]["re"], "tip_im": rows[-1]["im"]}
    from .paths import svg_polyline
    return ["t", "re", "im"], rows, s, None, svg_polyline([path.points])


def _swallow_chunk(args):
    x, dt, seed, start, count = args
    one, u = loewner.swallow_samples(x, dt, seed, count, start=start)
    return np.stack([one.astype(float), u], axis=1)


def _swallow(x, trials, dt, seed, threads):
    out = montecarlo.run_chunks(_swallow_chunk, lambda s, c: (x, dt, seed, s, c), trials, threads,
                                chunk=max(1, min(500, trials)))
    return out[:, 0] > 0.5, out[:, 1]


def _sle_swallow(p, seed, threads):
    if not 0 < p["x"] < 1:
        raise ConfigurationError("x must lie in (0, 1)", "x")
    if p["trials"] < 2:
        raise ConfigurationError("need at least 2 trials", "trials")
    one, _ = _swallow(p["x"], p["trials"], p["dt"], seed, threads)
    q = float(one.mean())
    se = math.sqrt(max(q * (1 - q), 0.0) / len(one))
    exp = formulas.cardy_crossing(p["x"])
    s = {"exponent_name": "P(one side)", "estimate": q, "stderr": se, "expected": exp,
         "z": (q - exp) / se if se > 0 else None}
    rows = [{"scale": p["x"], "estimate": q, "stderr": se, "n": len(one)}]
    return _SCALE_COLS, rows, s, None


def _sle_xi_hat(p, seed, threads):
    xs = sorted(p["x_grid"])
    if any(not 0 < x < 1 for x in xs):
        raise ConfigurationError("x_grid values must lie in (0, 1)", "x_grid")
    if len(xs) < 3:
        raise ConfigurationError("need at least 3 grid points", "x_grid")
    if p["lam"] < 0:
        raise ConfigurationError("lam must be >= 0", "lam")
    if extremal.L_of_x(xs[-1]) < 3 * extremal.L_of_x(xs[0]):
        raise ConfigurationError("x_grid must span a factor 3 in L(x)", "x_grid")
    samples = [_swallow(x, p["trials"], p["dt"], seed.child(j), threads)
               for j, x in enumerate(xs)]
    fit = loewner.xi_hat_estimate(p["lam"], xs, p["trials"], p["dt"], seed, samples=samples)
    rows = [{"scale": L, "estimate": v, "stderr": None, "n": n} for L, v, n in fit.points]
    for row, (one, u), x in zip(rows, samples, xs):
        v = loewner.xi_hat_values(x, p["lam"], one, u)
        row["stderr"] = float(v.std(ddof=1) / math.sqrt(len(v)))
    exp = formulas.xi_hat_sle6(p["lam"])
    return _SCALE_COLS, rows, _summary(f"xi^(SLE6,{p['lam']:g})", fit, exp), fit


def _radial_chunk(args):
    r, dt, seed, kappa, start, count = args
    return radial.radial_samples(r, count, dt, seed, kappa, start)


def _sle_radial(p, seed, threads):
    rs = sorted(p["radii"], reverse=True)
    if any(not 0 < r < 1 for r in rs):
        raise ConfigurationError("radii must lie in (0, 1)", "radii")
    if len(rs) < 3:
        raise ConfigurationError("need at least 3 radii", "radii")
    if p["trials"] < 2:
        raise ConfigurationError("need at least 2 trials", "trials")
    samples = [montecarlo.run_chunks(_radial_chunk,
                                     lambda s, c, r=r, j=j: (r, p["dt"], seed.child(j), p["kappa"], s, c),
                                     p["trials"], threads, chunk=max(1, min(50, p["trials"])))
               for j, r in enumerate(rs)]
    fit = radial.radial_xi_estimate(p["lam"], rs, p["trials"], p["dt"], seed, kappa=p["kappa"],
                                    samples=samples)
    rows = []
    for (sc, v, n), Ls in zip(fit.points, samples):
        w = np.where(np.isnan(Ls), 0.0, np.exp(-p["lam"] * np.nan_to_num(Ls)))
        rows.append({"scale": sc, "estimate": v, "stderr": float(w.std(ddof=1) / math.sqrt(n)),
                     "n": n})
    exp = formulas.xi_radial_sle6(p["lam"]) if p["lam"] >= 1 else float("nan")
    return _SCALE_COLS, rows, _summary(f"xi(SLE6,{p['lam']:g})", fit, exp), fit


def _crossing_chunk(args):
    aspect, mesh, seed, start, count = args
    return percolation.crossing_samples(aspect, mesh, count, seed, start).astype(np.int64)


def _perc_crossing(p, seed, threads):
    if p["mesh"] < 32:
        raise ConfigurationError("mesh must be >= 32", "mesh")
    if p["trials"] < 1000:
        raise ConfigurationError("trials must be >= 1000", "trials")
    if not p["aspect"] > 0:
        raise ConfigurationError("aspect must be positive", "aspect")
    hits = montecarlo.run_chunks(_crossing_chunk,
                                 lambda s, c: (p["aspect"], p["mesh"], seed, s, c),
                                 p["trials"], threads, chunk=1000)
    q = float(hits.mean())
    se = math.sqrt(max(q * (1 - q), 0.0) / len(hits))
    exp = percolation.cardy_rectangle(p["aspect"])
    s = {"exponent_name": "P(crossing)", "estimate": q, "stderr": se, "expected": exp,
         "z": (q - exp) / se if se > 0 else None}
    return _SCALE_COLS, [{"scale": p["aspect"], "estimate": q, "stderr": se, "n": len(hits)}], s, None


def _perc_explore(p, seed, threads):
    if p["mesh"] < 2:
        raise ConfigurationError("mesh must be >= 2", "mesh")
    region = percolation.sample_region("rhombus", p["mesh"], p["mesh"], seed)
    path = percolation.explore(region)
    v = path.vertices
    rows = [{"re": float(z.real), "im": float(z.imag)} for z in v]
    white, black = percolation.crossings(region)
    s = {"vertices": len(rows), "simple": bool(path.is_simple()),
         "white_crossing": bool(white), "black_crossing": bool(black)}
    from .paths import svg_polyline
    return ["re", "im"], rows, s, None, svg_polyline([v])


def _modulus_rows(values):
    return [{"method": k, "L": v} for k, v in values.items()]


def _L_value(L):
    return None if extremal.is_infinite(L) else float(L)


def _modulus_rect(p, seed, threads):
    w, h, n = p["width"], p["height"], p["n"]
    if not (w > 0 and h > 0 and n >= 2):
        raise ConfigurationError("need width, height > 0 and n >= 2", "width")
    nx, ny = max(1, round(w * n)), max(1, round(h * n))
    L = extremal.modulus_numeric(extremal.rectangle_quadrilateral(nx, ny))
    exact = extremal.rectangle_L(w, h)
    vals = {"exact": exact, "numeric": _L_value(L)}
    return ["method", "L"], _modulus_rows(vals), {"exact": exact, "numeric": _L_value(L),
                                                  "cells": [nx, ny]}, None


def _modulus_annulus(p, seed, threads):
    if not 0 < p["r"] < 1:
        raise ConfigurationError("r must lie in (0, 1)", "r")
    if p["coords"] not in ("logpolar", "cartesian"):
        raise ConfigurationError("coords must be 'logpolar' or 'cartesian'", "coords")
    L = extremal.modulus_numeric(extremal.annulus_quadrilateral(p["r"], p["n"], p["coords"]))
    exact = extremal.annulus_L(p["r"])
    vals = {"exact": exact, "numeric": _L_value(L)}
    return ["method", "L"], _modulus_rows(vals), {"exact": exact, "numeric": _L_value(L)}, None


def _modulus_numeric(p, seed, threads):
    if not p["prefix"]:
        raise ConfigurationError("prefix is required", "prefix")
    try:
        q = extremal.Quadrilateral.from_files(p["prefix"])
    except OSError as e:
        raise ConfigurationError(f"cannot read quadrilateral: {e}", "prefix") from None
    L = _L_value(extremal.modulus_numeric(q))
    return ["method", "L"], _modulus_rows({"numeric": L}), {"numeric": L,
                                                            "infinite": L is None}, None


def _formulas_eval(p, seed, threads):
    name = p["name"]
    if name not in formulas.FUNCTIONS:
        raise ConfigurationError(f"unknown function {name!r}; choose from "
                                 + ", ".join(sorted(formulas.FUNCTIONS)), "name")
    args = [float(a) for a in p["args"]]
    try:
        v = formulas.FUNCTIONS[name](*args)
    except TypeError as e:
        raise ConfigurationError(str(e), "args") from None
    return ["name", "args", "value"], [{"name": name, "args": " ".join(repr(a) for a in args),
                                        "value": float(v)}], {"value": float(v)}, None


def _formulas_table(p, seed, threads):
    t = formulas.exponent_table()
    rows = [{"quantity": k, "value": v} for k, v in t["exponents"].items()]
    rows += [{"quantity": f"dim {k}", "value": v} for k, v in t["dimensions"].items()]
    return ["quantity", "value"], rows, t, None


def _formulas_identities(p, seed, threads):
    checks = formulas.identity_checks()
    rows = [{"name": c["name"], "lhs": c["lhs"], "rhs": c["rhs"], "abs_err": c["abs_err"],
             "tol": c["tol"], "ok": bool(c["ok"])} for c in checks]
    failed = [c["name"] for c in checks if not c["ok"]]
    s = {"checks": len(rows), "failed": failed}
    if failed:
        raise NumericError("identity checks failed: " + ", ".join(failed))
    return ["name", "lhs", "rhs", "abs_err", "tol", "ok"], rows, s, None


_RUNNERS = {
    "formulas eval": _formulas_eval,
    "formulas table": _formulas_table,
    "formulas identities": _formulas_identities,
    "exp nonintersect": _exp_nonintersect,
    "exp disconnect": _exp_disconnect,
    "exp halfplane": _exp_halfplane,
    "exp zr-moment": _exp_zr,
    "dims frontier": _dims("frontier"),
    "dims cut": _dims("cut"),
    "dims pioneer": _dims("pioneer"),
    "sle trace": _sle_trace,
    "sle swallow": _sle_swallow,
    "sle xi-hat": _sle_xi_hat,
    "sle radial-xi": _sle_radial,
    "perc crossing": _perc_crossing,
    "perc explore": _perc_explore,
    "modulus rect": _modulus_rect,
    "modulus annulus": _modulus_annulus,
    "modulus numeric": _modulus_numeric,
}


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def default_output_dir(command: str) -> Path:
    base = Path(os.environ.get(OUTPUT_ENV, "brownexp-out"))
    return base / command.replace(" ", "-")


def write_record(rec: ResultRecord, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(rec.to_json())
    (out / "result.csv").write_text(rec.to_csv())
    (out / "meta.json").write_text(json.dumps(_clean(rec.meta), sort_keys=True, indent=2) + "\n")
    if rec.svg is not None:
        (out / "figure.svg").write_text(rec.svg)


def run(config: ExperimentConfig, *, write: bool = True) -> ResultRecord:
    """Run one experiment and (by default) write its files."""
    if config.command not in _RUNNERS:
        raise ConfigurationError(f"unknown experiment {config.command!r}", "command")
    t0 = time.perf_counter()
    try:
        out = _RUNNERS[config.command](config.parameters, config.seed, config.threads)
    except KeyboardInterrupt:
        if write:
            # no estimate survives an interrupt; leave the config and status behind
            d = config.output_dir or default_output_dir(config.command)
            d.mkdir(parents=True, exist_ok=True)
            meta = {"wall_time_s": time.perf_counter() - t0, "status": "interrupted",
                    "version": __version__, "threads": config.threads,
                    "config": config.to_dict()}
            (d / "meta.json").write_text(json.dumps(_clean(meta), sort_keys=True, indent=2) + "\n")
        raise
    columns, rows, summary, fit = out[:4]
    svg = out[4] if len(out) > 4 else None
    rec = ResultRecord(config.command, config.to_dict(), list(columns), _clean(rows),
                       _clean(summary), _clean(fit.to_dict()) if fit is not None else None,
                       svg=svg)
    rec.meta = {"wall_time_s": time.perf_counter() - t0,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "git_describe": _git_describe(), "version": __version__,
                "threads": config.threads, "status": "complete"}
    if write:
        write_record(rec, config.output_dir or default_output_dir(config.command))
    return rec


# -- report --------------------------------------------------------------------------

@dataclass
class ReportRow:
    command: str
    name: str
    estimate: float
    stderr: float
    expected: float | None
    records: int

    @property
    def z(self):
        if self.expected is None or not self.stderr > 0:
            return None
        return (self.estimate - self.expected) / self.stderr


def _estimate_of(rec: ResultRecord):
    s = rec.summary
    if "dimension" in s:
        return s["dimension"], s["stderr"]
    if "slope" in s:
        return s["slope"], s["stderr"]
    if "estimate" in s:
        return s["estimate"], s["stderr"]
    return None


def report(records) -> list[ReportRow]:
    """Compare each estimate with its closed form; pool repeated experiments.

    Records of the same experiment and quantity are combined with
    inverse-variance weights.
    """
    records = list(records)
    if not records:
        raise ConfigurationError("report needs at least one record", "records")
    versions = {r.schema_version for r in records}
    if len(versions) > 1 or versions != {SCHEMA_VERSION}:
        raise SchemaError(f"incompatible schema versions {sorted(versions)}")
    groups: dict = {}
    order = []
    for r in records:
        est = _estimate_of(r)
        if est is None or est[1] is None:
            continue
        key = (r.command, r.summary.get("exponent_name", r.command))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((est[0], est[1], r.summary.get("expected")))
    rows = []
    for key in order:
        g = groups[key]
        if len(g) == 1:
            v, e, x = g[0]
        else:
            w = np.array([1.0 / s**2 if s > 0 else 0.0 for _, s, _ in g])
            if w.sum() == 0:
                v, e = float(np.mean([a for a, _, _ in g])), 0.0
            else:
                v = float(np.sum(w * np.array([a for a, _, _ in g])) / w.sum())
                e = float(1.0 / math.sqrt(w.sum()))
            x = g[0][2]
        rows.append(ReportRow(key[0], key[1], float(v), float(e), x, len(g)))
    return rows


def report_markdown(rows) -> str:
    lines = ["| experiment | quantity | estimate | stderr | expected | z | records |",
             "|---|---|---|---|---|---|---|"]
    for r in rows:
        z = "" if r.z is None else f"{r.z:+.2f}"
        x = "" if r.expected is None else f"{r.expected:.6g}"
        lines.append(f"| {r.command} | {r.name} | {r.estimate:.6g} | {r.stderr:.3g} | {x} | {z} "
                     f"| {r.records} |")
    return "\n".join(lines) + "\n"


REPORT_COLUMNS = ["experiment", "quantity", "estimate", "stderr", "expected", "z", "records"]


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.command, r.name, repr(r.estimate), repr(r.stderr),
                    "" if r.expected is None else repr(r.expected),
                    "" if r.z is None else repr(r.z), r.records])
    return buf.getvalue()


# -- argument parsing ------------------------------------------------------------------

_GROUP_HELP = {
    "formulas": "closed-form exponents and identity checks",
    "exp": "Monte Carlo intersection exponents of Brownian packets",
    "dims": "dimensions of frontier, cut and pioneer points of random walks",
    "sle": "chordal and radial SLE experiments",
    "perc": "critical site percolation on the triangular lattice",
    "modulus": "extremal length of rectangles, annuli and saved domains",
}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed (default 0)")
    common.add_argument("--stream", type=int, default=None, help="seed stream (default 0)")
    common.add_argument("--output", "-o", default=None,
                        help=f"output directory (default ${OUTPUT_ENV}/<experiment>)")
    common.add_argument("--threads", type=int, default=None, help="worker processes")
    common.add_argument("--config", default=None,
                        help="JSON file of parameters; command-line flags override it")
    common.add_argument("--quiet", action="store_true", help="do not print the summary")

    parser = argparse.ArgumentParser(prog="brownexp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"brownexp {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    by_group: dict = {}
    for command in _COMMANDS:
        g, c = command.split(" ")
        by_group.setdefault(g, []).append(c)
    for g, cmds in by_group.items():
        gp = groups.add_parser(g, help=_GROUP_HELP[g]).add_subparsers(dest="cmd", required=True)
        for c in cmds:
            sp = gp.add_parser(c, parents=[common])
            for name in _COMMANDS[f"{g} {c}"]:
                conv, default, helptext = _P[name]
                default = _OVERRIDES.get(f"{g} {c}", {}).get(name, default)
                sp.add_argument(_flag(name), dest=name, default=None, type=str,
                                help=f"{helptext} (default {default})")
    rp = groups.add_parser("report", help="compare result records with closed forms")
    rp.add_argument("records", nargs="*", help="result.json files or directories")
    rp.add_argument("--output", "-o", default=None, help="directory for report.md and report.csv")
    return parser


def _config_from_args(ns) -> ExperimentConfig:
    command = f"{ns.group} {ns.cmd}"
    given: dict = {}
    file_seed = None
    file_threads = None
    if ns.config:
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config: {e}", "config") from None
        if "parameters" in data:
            file_seed = data.get("seed")
            file_threads = data.get("threads")
            data = data["parameters"]
        given.update({k.replace("-", "_"): v for k, v in data.items()})
    for name in _COMMANDS[command]:
        v = getattr(ns, name, None)
        if v is not None:
            given[name] = v
    seed = Seed.from_dict(file_seed) if isinstance(file_seed, dict) else Seed(0)
    if ns.seed is not None or ns.stream is not None:
        seed = Seed(ns.seed if ns.seed is not None else seed.root,
                    ns.stream if ns.stream is not None else seed.stream)
    threads = ns.threads if ns.threads is not None else (file_threads or 1)
    return ExperimentConfig.build(command, given, seed, ns.output, threads)


def _print_summary(rec: ResultRecord, out) -> None:
    print(rec.command, file=out)
    for k in sorted(rec.summary):
        print(f"  {k}: {rec.summary[k]}", file=out)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.group == "report":
            recs = [load_record(p) for p in ns.records]
            rows = report(recs)
            md = report_markdown(rows)
            if ns.output:
                out = Path(ns.output)
                out.mkdir(parents=True, exist_ok=True)
                (out / "report.md").write_text(md)
                (out / "report.csv").write_text(report_csv(rows))
            sys.stdout.write(md)
            return 0
        config = _config_from_args(ns)
        rec = run(config)
        if not ns.quiet:
            _print_summary(rec, sys.stdout)
        return 0
    except (ConfigurationError, DomainError, SchemaError) as e:
        fld = getattr(e, "field", None)
        print(f"brownexp: configuration error{f' [{fld}]' if fld else ''}: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        print(f"brownexp: configuration error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"brownexp: numeric failure: {e}", file=sys.stderr)
        return 3
    except NonTermination as e:
        print(f"brownexp: step budget exhausted: {e}", file=sys.stderr)
        return 4
    except KeyboardInterrupt:
        print("brownexp: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
