"""Command-line front end.

Subcommands ``list``, ``scenario`` (alias ``run``), ``decompose``, ``mellin`` and
``regularize``.  Every run writes byte-deterministic files to the output
directory (``--out``, else ``$RESIDUE_LAB_OUT``, else ``./residue_lab_out``):

``<name>.csv``           one row per check
``<name>_samples.csv``   every sampled value (sweeps, grids)
``<name>_report.json``   structured report with the environment stamp
``<name>_timings.txt``   wall-clock runtimes (the only non-deterministic file)

Exit status: 0 all checks pass, 1 a check failed, 2 invalid document or
arguments, 3 execution error.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import scenarios as S
from .decompose import PreconditionError, lemma7_correct, prop9_decompose, verify_decomposition, verify_lemma7
from .forms import parse_form, parse_monomial, serialize
from .integrate import QuadratureSpec
from .mellin import ChartSpec, PoleError, mellin_direct
from .regularize import EpsPath, Regularization, make_cutoff, sweep
from .testforms import (
    Field,
    TestForm,
    compact_bump,
    gaussian_bump,
    inverted_plateau,
    plateau,
    poly_bump,
)

OUT_ENV = "RESIDUE_LAB_OUT"
SCHEMA_VERSION = 1
CSV_COLUMNS = ("scenario", "check", "point", "value_re", "value_im", "err_bound", "status")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_EXEC = 0, 1, 2, 3


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Scenario documents
# ---------------------------------------------------------------------------

_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_PROFILE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "poly", "compact", "plateau", "inverted_plateau"]},
        "value": {"type": "number"},
        "radius": _POS,
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "coeffs": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 3,
                                              "maxItems": 4}},
        "inner": _POS,
        "outer": _POS,
    },
    "additionalProperties": False,
}
_TESTFORM = {
    "type": "object",
    "required": ["q", "components"],
    "properties": {
        "q": {"type": "integer", "minimum": 0},
        "components": {"type": "array", "items": {
            "type": "object",
            "required": ["K"],
            "properties": {
                "K": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "coef": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "poly": {"type": "string"},
                "conj_poly": {"type": "string"},
                "factors": {"type": "array", "items": {
                    "type": "object",
                    "required": ["var", "profile"],
                    "properties": {
                        "var": {"type": "integer", "minimum": 1},
                        "profile": _PROFILE,
                        "derivative": {"enum": [None, "dz", "dbar"]},
                    },
                    "additionalProperties": False,
                }},
            },
            "additionalProperties": False,
        }},
    },
    "additionalProperties": False,
}
_CHART = {
    "type": "object",
    "required": ["exponents"],
    "properties": {
        "exponents": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                      "minItems": 1, "maxItems": 3},
        "dbar_flags": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "name": {"type": "string"},
    },
    "additionalProperties": False,
}
_QUAD = {
    "type": "object",
    "properties": {"nodes": {"type": "integer", "minimum": 4}, "n_theta": {"type": "integer", "minimum": 4},
                   "grading": {"type": "integer", "minimum": 1}, "tol": _POS, "budget": _POS},
    "additionalProperties": False,
}
_PATH = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["parabolic", "iterated", "line"]},
        "exponents": _VEC, "order": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "target": _VEC, "direction": _VEC,
        "start": _POS, "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "count": {"type": "integer", "minimum": 3},
    },
    "additionalProperties": False,
}
_TOLS = {"type": "object", "additionalProperties": _POS}
_CHART_RUN = {
    "properties": {
        "chart": {"oneOf": [{"type": "string"}, _CHART]},
        "test_form": _TESTFORM,
        "quadrature": _QUAD,
        "tolerances": _TOLS,
        "expected": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "name": {"type": "string"},
    },
}
_RUN = {
    "type": "object",
    "oneOf": [
        {"required": ["scenario"], "properties": {
            "scenario": {"type": "string"}, "tolerances": _TOLS, "name": {"type": "string"},
            "lambda_grid": {"oneOf": [{"enum": ["default", "small"]}, {"type": "array", "items": _VEC}]}},
         "additionalProperties": False},
        {"required": ["mellin"], "properties": {"mellin": {
            "type": "object", "required": ["chart", "lambda"],
            "properties": dict(_CHART_RUN["properties"], **{
                "lambda": {"type": "array", "items": _VEC, "minItems": 1},
                "direction": _VEC, "check_direct": {"type": "boolean"}}),
            "additionalProperties": False}}, "additionalProperties": False},
        {"required": ["regularize"], "properties": {"regularize": {
            "type": "object", "required": ["chart"],
            "properties": dict(_CHART_RUN["properties"], **{
                "cutoff": {"enum": ["rational", "exponential", "smoothstep"]},
                "eps": {"type": "array", "items": _VEC}, "paths": {"type": "array", "items": _PATH}}),
            "additionalProperties": False}}, "additionalProperties": False},
    ],
}
DOCUMENT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "runs"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "runs": {"type": "array", "items": _RUN, "minItems": 1},
        "seed": {"type": "integer"},
        "budget": _POS,
        "tolerances": _TOLS,
    },
    "additionalProperties": False,
}


def _path_str(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate_document(doc) -> dict:
    """Validate a scenario document; raise :class:`SchemaError` naming the offending field."""
    if isinstance(doc, dict) and "runs" not in doc and any(k in doc for k in ("scenario", "mellin", "regularize")):
        top = {k: doc[k] for k in ("schema_version", "seed", "budget") if k in doc}
        doc = dict(top, runs=[{k: v for k, v in doc.items() if k not in top}])
    v = jsonschema.Draft7Validator(DOCUMENT_SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        # prefer the deepest concrete error inside a oneOf branch
        e = errors[0]
        while e.context:
            e = max(e.context, key=lambda c: len(c.absolute_path))
        raise SchemaError(_path_str(e.absolute_path), e.message)
    return doc


def load_document(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    return validate_document(doc)


def _profile(d: dict):
    kind = d["kind"]
    c = complex(*d.get("center", (0.0, 0.0)))
    if kind == "gaussian":
        return gaussian_bump(d.get("value", 1.0), d.get("radius", 0.3), c)
    if kind == "poly":
        coeffs = {}
        for row in d.get("coeffs", [[0, 0, 1.0]]):
            p, q, re_ = int(row[0]), int(row[1]), row[2]
            coeffs[(p, q)] = complex(re_, row[3] if len(row) > 3 else 0.0)
        return poly_bump(coeffs, d.get("radius", 0.3), c)
    if kind == "compact":
        return compact_bump(d.get("value", 1.0), d.get("radius", 1.0), c)
    if kind == "plateau":
        return plateau(d["inner"], d["outer"])
    return inverted_plateau(d["inner"], d["outer"])


def testform_from_dict(d: dict, n: int, where: str = "$.test_form") -> TestForm:
    comps = {}
    for ci, comp in enumerate(d["components"]):
        K = tuple(sorted(k - 1 for k in comp["K"]))
        if any(k >= n for k in K) or len(set(K)) != len(K) or len(K) != d["q"]:
            raise SchemaError(f"{where}.components[{ci}].K", f"need {d['q']} distinct indices in 1..{n}")
        F = Field.constant(n, complex(*comp.get("coef", (1.0, 0.0))))
        for fi, fac in enumerate(comp.get("factors", [])):
            if fac["var"] > n:
                raise SchemaError(f"{where}.components[{ci}].factors[{fi}].var", f"variable out of range 1..{n}")
            prof = _profile(fac["profile"])
            if fac.get("derivative") == "dbar":
                prof = prof.dzbar()
            elif fac.get("derivative") == "dz":
                prof = prof.dz()
            F = F * Field.profile(n, prof, fac["var"] - 1)
        for key, conj in (("poly", False), ("conj_poly", True)):
            if key in comp:
                try:
                    P = parse_form(comp[key], n).coefficient(())
                except Exception as exc:  # parse errors are schema errors
                    raise SchemaError(f"{where}.components[{ci}].{key}", str(exc)) from exc
                F = F * Field.poly(P, conjugate=conj)
        comps[K] = comps[K] + F if K in comps else F
    return TestForm(n, d["q"], comps)


def _chart_from_run(run: dict, where: str):
    if isinstance(run["chart"], str):
        try:
            chart, t, spec = S.named_chart(run["chart"])
        except KeyError as exc:
            raise SchemaError(f"{where}.chart", str(exc)) from exc
        if "test_form" in run:
            t = testform_from_dict(run["test_form"], chart.n, f"{where}.test_form")
    else:
        c = run["chart"]
        exps = [tuple(a) for a in c["exponents"]]
        n = len(exps[0])
        if any(len(a) != n for a in exps):
            raise SchemaError(f"{where}.chart.exponents", "exponent vectors must have equal length")
        try:
            # documents count factors from 1, like every other index on the command line
            chart = ChartSpec(n, tuple(exps), dbar_flags=tuple(j - 1 for j in c.get("dbar_flags", ())),
                              name=c.get("name", "inline"))
        except ValueError as exc:
            raise SchemaError(f"{where}.chart", str(exc)) from exc
        if "test_form" not in run:
            raise SchemaError(f"{where}.test_form", "an inline chart needs a test form")
        t = testform_from_dict(run["test_form"], n, f"{where}.test_form")
        spec = QuadratureSpec()
    if "quadrature" in run:
        q = dict(run["quadrature"])
        if "budget" in q:
            q["budget"] = int(q["budget"])
        spec = replace(spec, **q)
    return chart, t, spec


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _tol_kwargs(fn, doc_tols: dict, run_tols: dict, cli_tol) -> dict:
    params = inspect.signature(fn).parameters
    out = {}
    for name in params:
        if name.startswith("tol_"):
            key = name[4:]
            val = run_tols.get(key, doc_tols.get(key))
            if cli_tol is not None:
                val = cli_tol
            if val is not None:
                out[name] = val
    return out


def run_scenario(run: dict, seed: int, budget, doc_tols: dict, cli_tol) -> S.ScenarioReport:
    name = run["scenario"]
    sc = S.get_scenario(name)
    if name == "section3":
        fn = S.run_section3
        kw = _tol_kwargs(fn, doc_tols, run.get("tolerances", {}), cli_tol)
        grid = run.get("lambda_grid", "default")
        if grid == "small":
            kw["grid"] = S.lambda_grid(per_axis=2)
        elif isinstance(grid, list):
            kw["grid"] = [tuple(x) for x in grid]
    elif name.startswith("ci-"):
        kw = _tol_kwargs(S.complete_intersection_demo, doc_tols, run.get("tolerances", {}), cli_tol)
    else:
        kw = {}
    return sc.run(budget=budget, seed=seed, **kw)


def run_mellin(run: dict, where: str, budget, doc_tols: dict, cli_tol) -> S.ScenarioReport:
    chart, t, spec = _chart_from_run(run, where)
    if budget is not None:
        spec = replace(spec, budget=int(budget))
    tols = dict(doc_tols, **run.get("tolerances", {}))
    tol = cli_tol if cli_tol is not None else tols.get("value", 1e-5)
    tol_direct = cli_tol if cli_tol is not None else tols.get("two_path", 1e-5)
    rep = S.ScenarioReport(run.get("name", f"mellin-{chart.name}"))
    t0 = time.perf_counter()
    cont = S.Continuation(chart, t, spec=spec)
    rep.info["prefactor"] = str(cont.prefactor)
    rep.info["pole hyperplanes"] = [list(p.coeffs) for p in cont.pole_factors]
    expected = complex(*run["expected"]) if "expected" in run else None
    direction = tuple(run["direction"]) if "direction" in run else None
    for lam in run["lambda"]:
        lam = tuple(lam)
        label = "lambda=(" + ",".join(f"{x:g}" for x in lam) + ")"
        t1 = time.perf_counter()
        try:
            mv = cont.evaluate(lam, direction)
        except PoleError as exc:
            rep.add(f"continue_eval at {label}", "finite", complex("nan"), 0.0, passed=False, witness=str(exc),
                    point=label)
            continue
        rep.add(f"continue_eval at {label}", expected if expected is not None else "finite", mv.value, tol,
                passed=(rel_ok(mv.value, expected, tol) if expected is not None else bool(np.isfinite(mv.value))),
                runtime=time.perf_counter() - t1, err_bound=mv.error, point=label)
        if run.get("check_direct"):
            t1 = time.perf_counter()
            d = mellin_direct(chart, t, lam, spec=spec)
            rep.add(f"two-path (continued vs direct) at {label}", d, mv.value, tol_direct,
                    runtime=time.perf_counter() - t1, point=label)
    rep.info["runtime"] = time.perf_counter() - t0
    return rep


def rel_ok(a, b, tol) -> bool:
    return S.rel_err(a, b) <= tol


def _parse_path(p: dict) -> EpsPath:
    kw = {k: tuple(p[k]) for k in ("exponents", "order", "target", "direction") if k in p}
    return EpsPath.geometric(p["kind"], start=p.get("start", 0.5), ratio=p.get("ratio", 0.25),
                             count=p.get("count", 12), **kw)


def run_regularize(run: dict, where: str, budget, doc_tols: dict, cli_tol) -> S.ScenarioReport:
    chart, t, spec = _chart_from_run(run, where)
    if budget is not None:
        spec = replace(spec, budget=int(budget))
    tols = dict(doc_tols, **run.get("tolerances", {}))
    tol = cli_tol if cli_tol is not None else tols.get("limit", 1e-3)
    cutoff = run.get("cutoff", "rational")
    rep = S.ScenarioReport(run.get("name", f"regularize-{chart.name}-{cutoff}"))
    reg = Regularization(chart, t, make_cutoff(cutoff), spec=spec)
    expected = complex(*run["expected"]) if "expected" in run else None
    for eps in run.get("eps", []):
        if len(eps) != chart.m:
            raise SchemaError(f"{where}.eps", f"epsilon points need {chart.m} entries")
        label = "eps=(" + ",".join(f"{x:g}" for x in eps) + ")"
        t1 = time.perf_counter()
        v, err = reg.value(tuple(eps))
        rep.add(f"value at {label}", "finite", v, 0.0, passed=bool(np.isfinite(v)), runtime=time.perf_counter() - t1,
                err_bound=err, point=label)
    for i, p in enumerate(run.get("paths", [])):
        try:
            path = _parse_path(p)
        except ValueError as exc:
            raise SchemaError(f"{where}.paths[{i}]", str(exc)) from exc
        t1 = time.perf_counter()
        res = sweep(reg, path=path)
        for dlt, e, val, er in res.samples:
            rep.rows.append((f"path {i} ({path.kind})", "eps=(" + ",".join(f"{x:.6g}" for x in e) + ")", val, er,
                             "info"))
        lim = res.limit if res.limit is not None else complex("nan")
        ok = res.converged and (expected is None or rel_ok(lim, expected, tol))
        rep.add(f"sweep limit, path {i} ({path.kind})", expected if expected is not None else "converged", lim, tol,
                passed=ok, runtime=time.perf_counter() - t1, err_bound=res.limit_error, point="eps->0",
                witness="" if ok else "; ".join(res.warnings) or "no convergence")
        if res.certificate is not None:
            rep.info[f"path {i} resonance certificate"] = list(res.certificate)
    return rep


def execute(doc: dict, seed: int, budget, cli_tol, jobs: int = 1) -> list:
    """Run every entry of a validated document; results keep document order."""
    doc_tols = doc.get("tolerances", {})
    seed = doc.get("seed", seed) if seed is None else seed
    seed = 0 if seed is None else seed
    budget = budget if budget is not None else doc.get("budget")
    np.random.seed(seed)

    def one(i_run):
        i, run = i_run
        where = f"$.runs[{i}]"
        if "scenario" in run:
            if run["scenario"] not in S.REGISTRY:
                raise SchemaError(f"{where}.scenario", f"unknown scenario {run['scenario']!r}")
            return run_scenario(run, seed, budget, doc_tols, cli_tol)
        if "mellin" in run:
            return run_mellin(run["mellin"], f"{where}.mellin", budget, doc_tols, cli_tol)
        return run_regularize(run["regularize"], f"{where}.regularize", budget, doc_tols, cli_tol)

    items = list(enumerate(doc["runs"]))
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, items))
    return [one(x) for x in items]


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _num(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _split(v):
    if isinstance(v, (bool, np.bool_)):
        return None, None
    if isinstance(v, (int, float, complex, np.number)):
        c = complex(v)
        return c.real, c.imag
    return None, None


def report_csv(rep: S.ScenarioReport) -> str:
    """One row per check."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in rep.checks:
        re_, im_ = _split(c.observed)
        w.writerow((rep.scenario, c.name, c.point, _num(re_), _num(im_), _num(c.err_bound),
                    "pass" if c.passed else "fail"))
    return buf.getvalue()


def samples_csv(rep: S.ScenarioReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for name, point, val, err, status in rep.rows:
        c = complex(val)
        w.writerow((rep.scenario, name, point, _num(c.real), _num(c.imag), _num(err), status))
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if math.isnan(x) else float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if x is None or isinstance(x, str):
        return x
    return str(x)


def report_json(rep: S.ScenarioReport, stamp: dict) -> str:
    checks = []
    for c in rep.checks:
        d = c.as_dict()
        d.pop("runtime")
        checks.append(d)
    info = {k: v for k, v in rep.info.items() if k != "runtime"}
    body = {"scenario": rep.scenario, "passed": rep.all_passed, "checks": checks, "info": info, "stamp": stamp}
    return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"


def timings_txt(rep: S.ScenarioReport) -> str:
    return "".join(f"{c.name}\t{c.runtime:.3f}\n" for c in rep.checks)


def export(reports, out_dir: Path, fmt: str, stamp: dict) -> list:
    """Write the report files (serially, in order); return the written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rep in reports:
        stem = rep.scenario.replace("/", "_").replace(" ", "_")
        files = {}
        if fmt in ("csv", "both"):
            files[f"{stem}.csv"] = report_csv(rep)
            files[f"{stem}_samples.csv"] = samples_csv(rep)
        if fmt in ("json", "both"):
            files[f"{stem}_report.json"] = report_json(rep, stamp)
        files[f"{stem}_timings.txt"] = timings_txt(rep)
        for name, text in files.items():
            p = out_dir / name
            p.write_text(text)
            written.append(p)
    return written


def summary_text(reports) -> str:
    lines = []
    for rep in reports:
        for c in rep.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {rep.scenario}: {c.name}"
                         + ("" if c.passed else f"  [{c.witness}]"))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _vec(text: str) -> list:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _common(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=_positive, default=None, help="override every check tolerance")
    p.add_argument("--budget", type=_positive, default=None, help="cap on integrand evaluations per quadrature")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./residue_lab_out)")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs within one document")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="residue-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"residue_lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list scenarios and named charts")

    sc = sub.add_parser("scenario", aliases=["run"], help="run a canned scenario or a JSON scenario document")
    sc.add_argument("target", help="scenario name or path to a .json document")
    sc.add_argument("--lambda-grid", default=None, help="'default' (27 points), 'small' (8 points)")
    _common(sc)

    de = sub.add_parser("decompose", help="correction form (with --sigma/--tau) or layer decomposition (--family)")
    de.add_argument("--form", required=True, help="holomorphic form, e.g. 'z2 dz2' or 'z1*z2 dz1^dz3'")
    de.add_argument("--n", type=int, default=None, help="ambient dimension (default: inferred)")
    de.add_argument("--sigma", help="monomial, e.g. 'z1^2*z3'")
    de.add_argument("--tau", help="coordinate indices (1-based), comma-separated")
    de.add_argument("--family", help="index family for the layer decomposition, comma-separated 1-based indices")
    _common(de)

    for name, helptext in (("mellin", "continue the Mellin integral of a chart"),
                           ("regularize", "evaluate / sweep the regularized integral of a chart")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("document", nargs="?", help="JSON document (alternative to --chart)")
        p.add_argument("--chart", help="named chart: " + ", ".join(S.NAMED_CHARTS))
        if name == "mellin":
            p.add_argument("--lambda", dest="lam", type=_vec, action="append", help="point, e.g. 0.1,0.2,0.3")
            p.add_argument("--direction", type=_vec, default=None)
            p.add_argument("--check-direct", action="store_true", help="compare with the unreduced direct quadrature")
        else:
            p.add_argument("--eps", type=_vec, action="append", help="point of the closed octant")
            p.add_argument("--path", action="append", default=None,
                           help="'parabolic:1,2,3', 'iterated:0,1,2' or 'line:t1,t2,t3'")
            p.add_argument("--cutoff", choices=("rational", "exponential", "smoothstep"), default="rational")
        p.add_argument("--expected", type=_vec, default=None, help="re,im of the expected value")
        _common(p)
    return ap


def _cli_document(args) -> dict:
    """Turn subcommand flags into a one-run document."""
    if args.command in ("scenario", "run"):
        if args.target.endswith(".json") or os.path.sep in args.target:
            doc = load_document(args.target)
            if args.lambda_grid is not None:
                for r in doc["runs"]:
                    if r.get("scenario") == "section3":
                        r["lambda_grid"] = args.lambda_grid
            return doc
        run = {"scenario": args.target}
        if args.lambda_grid is not None:
            if args.lambda_grid not in ("default", "small"):
                raise SchemaError("--lambda-grid", "must be 'default' or 'small'")
            run["lambda_grid"] = args.lambda_grid
        if args.target not in S.REGISTRY:
            raise SchemaError("scenario", f"unknown scenario {args.target!r}; see 'residue-lab list'")
        return validate_document({"schema_version": SCHEMA_VERSION, "runs": [run]})
    if args.document:
        return load_document(args.document)
    if not args.chart:
        raise SchemaError("--chart", "give a named chart or a document")
    body = {"chart": args.chart}
    if args.expected:
        body["expected"] = args.expected[:2] + [0.0] * (2 - len(args.expected[:2]))
    if args.command == "mellin":
        if not args.lam:
            raise SchemaError("--lambda", "at least one lambda point is required")
        body["lambda"] = args.lam
        if args.direction:
            body["direction"] = args.direction
        body["check_direct"] = bool(args.check_direct)
        return validate_document({"schema_version": SCHEMA_VERSION, "runs": [{"mellin": body}]})
    body["cutoff"] = args.cutoff
    body["eps"] = args.eps or []
    paths = []
    for ptxt in args.path or []:
        kind, _, rest = ptxt.partition(":")
        p = {"kind": kind}
        if rest:
            key = {"parabolic": "exponents", "iterated": "order", "line": "direction"}.get(kind, "exponents")
            vals = _vec(rest)
            p[key] = [int(v) for v in vals] if key == "order" else vals
        paths.append(p)
    body["paths"] = paths
    return validate_document({"schema_version": SCHEMA_VERSION, "runs": [{"regularize": body}]})


def _decompose(args) -> S.ScenarioReport:
    try:
        a = parse_form(args.form, args.n)
    except Exception as exc:
        raise SchemaError("--form", str(exc)) from exc
    rep = S.ScenarioReport("decompose")
    rep.info["form"] = serialize(a)
    if args.sigma is not None:
        if args.tau is None:
            raise SchemaError("--tau", "required together with --sigma")
        try:
            sigma = parse_monomial(args.sigma, a.n)
            tau = [int(x) - 1 for x in args.tau.split(",")]
        except ValueError as exc:
            raise SchemaError("--sigma/--tau", str(exc)) from exc
        if any(not 0 <= i < a.n for i in tau):
            raise SchemaError("--tau", f"indices must lie in 1..{a.n}")
        try:
            ap = lemma7_correct(a, sigma, tau)
        except PreconditionError as exc:
            rep.add("correction hypothesis", "satisfied", "violated", 0.0, passed=False, witness=str(exc))
            return rep
        rep.info["alpha_prime"] = serialize(ap)
        rep.info["alpha_prime_is_zero"] = ap.is_zero()
        for c in verify_lemma7(a, sigma, tau, ap).checks:
            rep.add(c.name, True, c.passed, 0.0, passed=c.passed, witness=c.witness)
        return rep
    if args.family is None:
        raise SchemaError("--sigma/--family", "give --sigma and --tau (correction form) or --family (layer decomposition)")
    try:
        fam = [int(x) - 1 for x in args.family.split(",")]
    except ValueError as exc:
        raise SchemaError("--family", str(exc)) from exc
    if any(not 0 <= i < a.n for i in fam):
        raise SchemaError("--family", f"indices must lie in 1..{a.n}")
    try:
        d = prop9_decompose(a, fam)
    except PreconditionError as exc:
        rep.add("decomposition hypothesis", "satisfied", "violated", 0.0, passed=False, witness=str(exc))
        return rep
    rep.info["head"] = serialize(d.head)
    rep.info["layers"] = {f"level {j}": {",".join(str(i + 1) for i in J): serialize(f) for J, f in sorted(lvl.items())}
                          for j, lvl in sorted(d.layers.items())}
    rep.info["tail"] = serialize(d.tail)
    for c in verify_decomposition(d, a, fam).checks:
        rep.add(c.name, True, c.passed, 0.0, passed=c.passed, witness=c.witness)
    return rep


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors, 0 for --help
        return int(exc.code or 0)
    if args.command == "list":
        for name in sorted(S.REGISTRY):
            sc = S.REGISTRY[name]
            print(f"{name:14s} n={sc.dimension}  {sc.description}")
        print("named charts: " + ", ".join(S.NAMED_CHARTS))
        return EXIT_OK
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or "residue_lab_out")
    seed = args.seed
    try:
        if args.command == "decompose":
            reports = [_decompose(args)]
        else:
            doc = _cli_document(args)
            reports = execute(doc, seed, args.budget, args.tol, max(1, args.jobs))
    except SchemaError as exc:
        print(f"schema error at {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:  # pipeline failure
        print(f"execution error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXEC
    stamp = {"package": "residue_lab", "version": __version__, "seed": 0 if seed is None else seed,
             "budget": args.budget, "numpy": np.__version__}
    try:
        export(reports, out_dir, args.format, stamp)
    except OSError as exc:
        print(f"execution error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_EXEC
    print(summary_text(reports))
    print(f"output written to {out_dir}")
    return EXIT_OK if all(r.all_passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
