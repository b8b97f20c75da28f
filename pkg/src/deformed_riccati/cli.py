"""Command line front end: ``check | solve | resonances | verify | sweep``.

Configuration is JSON (see ``CONFIG_SCHEMA``); complex numbers are written
as ``[re, im]`` pairs, plain numbers are accepted for real entries.
Exit codes: 0 all checks passed, 2 invalid input, 3 a check failed or the
result is uncertified, 4 the fixed-point iteration did not converge.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import blockdiag, contour as ct, schur, solver
from .errors import ConfigInvalid, IoError, NoConvergence, NotContractive, RiccatiError
from .model import FriedrichsModel, Interval, MatrixPolynomial, validate_model

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_NOCONV = 0, 2, 3, 4
TASKS = ("check", "solve", "resonances", "verify", "sweep")
_PREREQ = {"solve": {"check"}, "resonances": {"check", "solve"},
           "verify": {"check", "solve", "resonances"}, "sweep": {"check"}}

THRESHOLDS = {
    "factorization": 1e-8,
    "continuation_jump": 1e-8,
    "riccati": 1e-8,
    "diagonalization": 1e-7,
    "spectral_split": 1e-6,
    "det_zero_match": 1e-8,
    "contour_independence": 1e-9,
}

_number = {"type": "number"}
_complex = {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]}
_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": _complex}}
_contour = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["interval", "semi_ellipse", "polyline"]},
        "depth": {"type": "number", "exclusiveMinimum": 0},
        "sign": {"enum": [-1, 1]},
        "vertices": {"type": "array", "items": _complex, "minItems": 1},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model", "contour"],
    "properties": {
        "model": {
            "type": "object",
            "required": ["alpha", "beta", "a", "b", "c"],
            "properties": {
                "alpha": _number, "beta": _number, "a": _matrix,
                "b": {"type": "array", "minItems": 1, "items": _matrix},
                "c": {"type": "array", "minItems": 1, "items": _matrix},
            },
        },
        "contour": {**_contour, "properties": {**_contour["properties"], "compare": _contour}},
        "quadrature": {
            "type": "object",
            "properties": {
                "order": {"type": "integer", "minimum": 2},
                "panels": {"type": "integer", "minimum": 1},
                "adaptive_tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "force": {"type": "boolean"},
            },
        },
        "tasks": {"type": "array", "items": {"enum": list(TASKS)}, "uniqueItems": True},
        "sweep": {
            "type": "object",
            "properties": {"scales": {"type": "array", "items": _number, "minItems": 1}},
        },
        "outputs": {
            "type": "object",
            "properties": {"plot_data": {"type": "boolean"}, "omega_grid": {"type": "integer", "minimum": 0}},
        },
    },
}

DEFAULTS = {
    "quadrature": {"order": 64, "panels": 4, "adaptive_tol": None},
    "solver": {"tol": 1e-12, "max_iter": 500, "force": False},
    "tasks": ["check", "solve", "resonances", "verify"],
    "sweep": {"scales": [0.0]},
    "outputs": {"plot_data": True, "omega_grid": 0},
}


# ---------------------------------------------------------- serialisation

def fmt(x) -> str:
    return format(float(x), ".17g")


def fmt_c(z) -> list:
    z = complex(z)
    return [fmt(z.real), fmt(z.imag)]


def _cplx(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _matrix_from(rows) -> np.ndarray:
    if len({len(r) for r in rows}) != 1:
        raise ConfigInvalid("ragged matrix in config")
    return np.array([[_cplx(v) for v in r] for r in rows], dtype=complex)


# ----------------------------------------------------------------- config

def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return normalize_config(raw)


def normalize_config(raw: dict) -> dict:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(f"config does not match schema: {exc.message}") from exc
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = copy.deepcopy(value)
    tasks = set(cfg["tasks"])
    for t in list(tasks):
        tasks |= _PREREQ.get(t, set())
    cfg["tasks"] = [t for t in TASKS if t in tasks]
    m = cfg["model"]
    if not m["alpha"] < m["beta"]:
        raise ConfigInvalid("model.alpha must be smaller than model.beta")
    return cfg


def build_model(cfg: dict) -> FriedrichsModel:
    m = cfg["model"]
    try:
        return FriedrichsModel(Interval(m["alpha"], m["beta"]), _matrix_from(m["a"]),
                               MatrixPolynomial([_matrix_from(c) for c in m["b"]]),
                               MatrixPolynomial([_matrix_from(c) for c in m["c"]]))
    except (RiccatiError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def _contour_from(interval, spec) -> ct.Contour:
    spec = dict(spec)
    if "vertices" in spec:
        spec["vertices"] = [_cplx(v) for v in spec["vertices"]]
    spec.pop("compare", None)
    try:
        return ct.build_contour(interval, spec)
    except (RiccatiError, KeyError, ValueError) as exc:
        raise ConfigInvalid(f"bad contour spec: {exc}") from exc


def _sample(cfg, model, contour):
    q = cfg["quadrature"]
    if q.get("adaptive_tol"):
        return ct.sample_adaptive(contour, model, q["order"], q["panels"], q["adaptive_tol"])
    return ct.sample_contour(contour, q["order"], q["panels"])


# ----------------------------------------------------------------- report

@dataclass
class RunReport:
    data: dict
    exit_code: int = EXIT_OK
    model: FriedrichsModel | None = None
    contour: ct.Contour | None = None
    resonance_set: schur.ResonanceSet | None = None
    trajectory: list = field(default_factory=list)
    plot_data: bool = True
    omega_grid: int = 0
    timings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for key, value in _flatten(self.data):
            w.writerow([key, value])
        return buf.getvalue()


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    elif isinstance(obj, list):
        yield prefix, " ".join(str(v) for v in obj)
    else:
        yield prefix, json.dumps(obj) if isinstance(obj, bool) else str(obj)


def _check(passed: bool, **quantities) -> dict:
    return {**quantities, "pass": bool(passed)}


def _admissibility_section(rep: ct.AdmissibilityReport) -> dict:
    return {
        "d": fmt(rep.d), "v_k": fmt(rep.v_k), "enorm_b": fmt(rep.enorm_b),
        "enorm_c": fmt(rep.enorm_c), "omega": fmt(rep.omega), "r_bound": fmt(rep.r_bound),
        "quarter_d_squared": fmt(rep.d ** 2 / 4),
        "pass_vk": rep.pass_vk, "pass_hyp2": rep.pass_hyp2,
    }


def _root_section(root: solver.OperatorRoot, a: np.ndarray) -> dict:
    c = root.certificate
    z = np.asarray(root.z_matrix)
    return {
        "z_matrix": [[fmt_c(v) for v in row] for row in z],
        "iterations": c.iterations,
        "final_update_norm": fmt(c.final_update_norm),
        "fixed_point_residual": fmt(c.fixed_point_residual),
        "distance_from_a": fmt(np.linalg.norm(z - a, 2)),
        "r_bound": fmt(c.r_bound),
        "observed_contraction": fmt(c.observed_contraction),
        "contraction_bound": fmt(c.contraction_bound),
        "certified": c.certified,
        "contour_hash": c.contour_hash,
    }


# --------------------------------------------------------------- pipeline

def run_pipeline(config: dict, out_dir=None, fmt_out: str = "json") -> RunReport:
    """Run the configured tasks in dependency order and (optionally) write
    the report and plot data into ``out_dir``.  The exit code is stored on
    the returned report."""
    report = RunReport({})
    try:
        _run(normalize_config(config), report)
    except ConfigInvalid as exc:
        report.data["error"] = {"kind": "ConfigInvalid", "message": str(exc)}
        report.exit_code = EXIT_INPUT
    except NoConvergence as exc:
        report.data["error"] = {"kind": "NoConvergence", "message": str(exc)}
        report.exit_code = EXIT_NOCONV
    except NotContractive as exc:
        report.data["error"] = {"kind": "Inadmissible", "message": str(exc)}
        report.exit_code = EXIT_FAIL
    if out_dir is not None:
        write_outputs(report, out_dir, fmt_out)
    return report


def _all_pass(obj) -> bool:
    if isinstance(obj, dict):
        if obj.get("pass") is False or obj.get("certified") is False:
            return False
        return all(_all_pass(v) for v in obj.values())
    if isinstance(obj, list):
        return all(_all_pass(v) for v in obj)
    return True


def _run(cfg: dict, report: RunReport) -> None:
    tasks = cfg["tasks"]
    data = report.data
    data["tasks"] = tasks
    model = build_model(cfg)
    interval = model.interval
    contour = _contour_from(interval, cfg["contour"])
    report.model, report.contour = model, contour
    report.plot_data = bool(cfg["outputs"]["plot_data"])
    report.omega_grid = int(cfg["outputs"]["omega_grid"])
    force = bool(cfg["solver"]["force"])
    tol, max_iter = cfg["solver"]["tol"], cfg["solver"]["max_iter"]

    t0 = time.perf_counter()
    try:
        val = validate_model(model)
    except RiccatiError as exc:
        raise ConfigInvalid(str(exc)) from exc
    data["model"] = {"n": model.n, "m": model.m, "eigenvalues_a": [fmt(e) for e in val.eigenvalues],
                     "hermiticity_defect": fmt(val.hermiticity_defect)}
    data["contour"] = {"kind": cfg["contour"]["kind"], "sign": contour.sign, "hash": contour.hash}
    if "sweep" in tasks:
        _sweep(cfg, model, contour, report, force, tol, max_iter)
        report.timings["sweep"] = time.perf_counter() - t0
        report.exit_code = EXIT_OK if _all_pass(data) else EXIT_FAIL
        return

    sampled = _sample(cfg, model, contour)
    adm = ct.admissibility(model, sampled)
    data["quadrature"] = {"order": sampled.order, "panels": sampled.panels, "nodes": sampled.size}
    data["admissibility"] = _admissibility_section(adm)
    data["admissibility"]["pass"] = bool(adm.pass_vk)
    report.timings["check"] = time.perf_counter() - t0
    if not adm.pass_vk and not force and "solve" in tasks:
        raise NotContractive(f"contour is not admissible: V_K = {fmt(adm.v_k)} >= d^2/4 = "
                             f"{fmt(adm.d ** 2 / 4)}")

    if "solve" in tasks:
        t0 = time.perf_counter()
        right = solver.solve_operator_root(model, sampled, solver.RIGHT, tol, max_iter, force, adm)
        left = solver.solve_operator_root(model, sampled, solver.LEFT, tol, max_iter, force, adm)
        x = solver.riccati_solution_x(model, sampled, right, adm)
        y = solver.riccati_solution_y(model, sampled, left, adm)
        res_x, res_y = solver.riccati_residual(model, sampled, x, y)
        data["solve"] = {
            "right_root": _root_section(right, model.a_matrix),
            "left_root": _root_section(left, model.a_matrix),
            "root_ball": _check(np.linalg.norm(right.z_matrix - model.a_matrix, 2)
                                <= adm.r_bound + 1e-10 if adm.pass_vk else False,
                                distance=fmt(np.linalg.norm(right.z_matrix - model.a_matrix, 2)),
                                r_bound=fmt(adm.r_bound)),
            "riccati_residual": _check(max(res_x, res_y) <= THRESHOLDS["riccati"], x=fmt(res_x),
                                       y=fmt(res_y), threshold=fmt(THRESHOLDS["riccati"])),
            "enorm_x": _check(x.within_bound if adm.pass_hyp2 else False, enorm=fmt(x.enorm),
                              bound=fmt(x.enorm_bound)),
            "enorm_y": _check(y.within_bound if adm.pass_hyp2 else False, enorm=fmt(y.enorm),
                              bound=fmt(y.enorm_bound)),
        }
        report.timings["solve"] = time.perf_counter() - t0

    if "resonances" in tasks:
        rs = schur.resonances(right, contour)
        report.resonance_set = rs
        data["resonances"] = [{"value": fmt_c(e.value), "classification": e.classification}
                              for e in rs.entries]

    if "verify" in tasks:
        t0 = time.perf_counter()
        data["verify"] = _verify(cfg, model, contour, sampled, adm, right, left, x, y, tol)
        report.timings["verify"] = time.perf_counter() - t0

    report.exit_code = EXIT_OK if _all_pass(data) else EXIT_FAIL


def _verify(cfg, model, contour, sampled, adm, right, left, x, y, tol) -> dict:
    out = {}
    fac = schur.verify_factorization(model, sampled, (right, left), d=adm.d)
    out["factorization"] = _check(fac.max_residual <= THRESHOLDS["factorization"],
                                  right=fmt(fac.right_residual), left=fmt(fac.left_residual),
                                  points=fac.points, threshold=fmt(THRESHOLDS["factorization"]))

    band = ct.sample_contour(ct.interval_contour(model.interval), sampled.order, sampled.panels)
    pts = schur.random_interior_points(contour, 16, seed=1, guards=(sampled, band))
    errs = [schur.continuation_jump(model, band, sampled, z).error for z in pts]
    out["continuation_jump"] = _check(max(errs) <= THRESHOLDS["continuation_jump"],
                                      max_error=fmt(max(errs)), points=len(errs),
                                      threshold=fmt(THRESHOLDS["continuation_jump"]))

    if adm.pass_hyp2:
        rep = blockdiag.verify_diagonalization(model, sampled, (right, left), x, y)
        flags = rep.passed()
        out["diagonalization"] = {
            name: _check(flags[name], value=fmt(getattr(rep, name)))
            for name in flags
        }
        out["diagonalization"]["graph_residual"]["riccati_residual"] = fmt(rep.riccati_residual)
    else:
        out["diagonalization"] = _check(False, reason="enorm_b * enorm_c is not below d^2/4 on this contour")

    eigs = np.linalg.eigvalsh(model.a_matrix)
    h = adm.d / 2
    box = (float(eigs.min() - h), float(eigs.max() + h), -h, h)
    zeros = schur.det_zero_oracle(model, sampled, box)
    ev = np.linalg.eigvals(np.asarray(right.z_matrix))
    match = blockdiag._hausdorff(np.array(zeros), ev) if len(zeros) == ev.size else math.inf
    out["det_zero_oracle"] = _check(len(zeros) == ev.size and match <= THRESHOLDS["det_zero_match"],
                                    zeros=[fmt_c(z) for z in zeros], count=len(zeros),
                                    eigenvalue_count=int(ev.size), max_mismatch=fmt(match))

    if "compare" in cfg["contour"]:
        other = _contour_from(model.interval, cfg["contour"]["compare"])
        q = cfg["quadrature"]
        ind = blockdiag.contour_independence(model, contour, other, q["order"], q["panels"], tol)
        thr = THRESHOLDS["contour_independence"]
        out["contour_independence"] = _check(
            ind.root_delta <= thr and ind.resonance_delta <= thr,
            root_delta=fmt(ind.root_delta), resonance_delta=fmt(ind.resonance_delta),
            threshold=fmt(thr), compare_hash=other.hash)
    return out


# ------------------------------------------------------------------ sweep

def sweep(model: FriedrichsModel, contour: ct.Contour, scales, order=64, panels=4,
          tol=1e-12, max_iter=500, force=False) -> list:
    """Resonance trajectory under joint scaling of both couplings.

    Returns rows ``(g, index, re, im, certified)``; inadmissible grid points
    give a single row with ``index = None`` and ``certified = "skipped"``.
    """
    rows = []
    for g in scales:
        mg = model.scaled(g)
        sampled = ct.sample_contour(contour, order, panels)
        adm = ct.admissibility(mg, sampled)
        if not adm.pass_vk and not force:
            rows.append((float(g), None, math.nan, math.nan, "skipped"))
            continue
        root = solver.solve_operator_root(mg, sampled, solver.RIGHT, tol, max_iter, force, adm)
        ev = np.linalg.eigvals(np.asarray(root.z_matrix))
        ev = ev[np.lexsort((ev.imag, ev.real))]
        for i, e in enumerate(ev):
            rows.append((float(g), i, float(e.real), float(e.imag), root.certificate.certified))
    return rows


def trajectory_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "index", "re", "im", "certified"])
    for g, i, re, im, cert in rows:
        if cert == "skipped":
            w.writerow([fmt(g), "", "", "", "skipped"])
        else:
            w.writerow([fmt(g), i, fmt(re), fmt(im), "true" if cert else "false"])
    return buf.getvalue()


def _sweep(cfg, model, contour, report, force, tol, max_iter):
    q = cfg["quadrature"]
    rows = sweep(model, contour, cfg["sweep"]["scales"], q["order"], q["panels"], tol, max_iter, force)
    report.trajectory = rows
    report.data["sweep"] = [
        {"g": fmt(g), "skipped": True, "pass": False} if c == "skipped" else
        {"g": fmt(g), "index": i, "value": fmt_c(complex(re, im)), "certified": bool(c)}
        for g, i, re, im, c in rows
    ]


# ------------------------------------------------------------- plot data

def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def emit_plot_data(report: RunReport, out_dir, omega_grid: int = 0) -> list:
    """Write ``contour.csv`` (1024 points), ``sigma_a.csv``,
    ``resonances.csv`` and optionally ``omega_grid.csv`` into ``out_dir``."""
    out = Path(out_dir)
    if not out.is_dir():
        raise IoError(f"output directory {out} does not exist")
    if report.model is None or report.contour is None:
        raise ValueError("report carries no model/contour")
    written = []
    c = report.contour
    t = (np.arange(1024) + 0.0) / 1023 * len(c.segments)
    idx = np.minimum(t.astype(int), len(c.segments) - 1)
    pts = [complex(c.segments[i].point(tt - i)) for i, tt in zip(idx, t)]
    files = {
        "contour.csv": _rows_csv(["re", "im"], [[fmt(p.real), fmt(p.imag)] for p in pts]),
        "sigma_a.csv": _rows_csv(["re", "im"], [[fmt(e), fmt(0.0)]
                                                for e in np.linalg.eigvalsh(report.model.a_matrix)]),
    }
    if report.resonance_set is not None:
        files["resonances.csv"] = _rows_csv(
            ["re", "im", "class"],
            [[fmt(e.value.real), fmt(e.value.imag), e.classification] for e in report.resonance_set.entries])
    if omega_grid and c.sign != 0:
        lo = min(p.imag for p in pts) if c.sign < 0 else 0.0
        hi = 0.0 if c.sign < 0 else max(p.imag for p in pts)
        rows = []
        for re in np.linspace(c.alpha, c.beta, omega_grid):
            for im in np.linspace(lo, hi, omega_grid):
                rows.append([fmt(re), fmt(im), ct.region_membership(c, complex(re, im))])
        files["omega_grid.csv"] = _rows_csv(["re", "im", "class"], rows)
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written


def write_outputs(report: RunReport, out_dir, fmt_out: str = "json") -> None:
    out = Path(out_dir)
    if not out.is_dir():
        raise IoError(f"output directory {out} does not exist")
    if fmt_out == "csv":
        _write(out / "report.csv", report.to_csv())
    else:
        _write(out / "report.json", report.to_json())
    if report.trajectory:
        _write(out / "trajectory.csv", trajectory_csv(report.trajectory))
    if report.plot_data and report.contour is not None and report.exit_code != EXIT_INPUT:
        emit_plot_data(report, out, report.omega_grid)


# ------------------------------------------------------------------- main

_COMMAND_TASKS = {
    "check": ["check"],
    "solve": ["check", "solve"],
    "resonances": ["check", "solve", "resonances"],
    "verify": ["check", "solve", "resonances", "verify"],
    "sweep": ["sweep"],
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deformed-riccati", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(_COMMAND_TASKS))
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--out", help="existing directory for report and plot data")
    p.add_argument("--format", choices=["json", "csv"], default="json", dest="fmt")
    p.add_argument("--nodes", type=int, help="Gauss-Legendre nodes per panel (overrides config)")
    p.add_argument("--tol", type=float, help="fixed-point tolerance (overrides config)")
    p.add_argument("--force", action="store_true", help="iterate even if not contractive (uncertified)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not isinstance(raw, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_INPUT
    raw["tasks"] = _COMMAND_TASKS[args.command]
    if args.nodes is not None:
        raw.setdefault("quadrature", {})["order"] = args.nodes
    if args.tol is not None:
        raw.setdefault("solver", {})["tol"] = args.tol
    if args.force:
        raw.setdefault("solver", {})["force"] = True
    try:
        report = run_pipeline(raw, args.out, args.fmt)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out is None:
        sys.stdout.write(report.to_csv() if args.fmt == "csv" else report.to_json())
        if report.trajectory:
            sys.stdout.write(trajectory_csv(report.trajectory))
    if "error" in report.data:
        print(f"error: {report.data['error']['message']}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
