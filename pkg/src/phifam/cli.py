"""Command-line front end.

Every subcommand reads its inputs from flags and/or a JSON run config
(``--config``), computes, prints a JSON report and optionally writes it to
``--output``.  Exit codes: 0 success, 1 usage or schema error, 2 domain
finding (no normalizing G, divergent integral, singular metric, ...).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from .entropy import divergence, information_content, maxent_check, metric_from_divergence
from .errors import DivergentIntegral, DomainError, PhiFamError
from .family import EscortPair, PhiFamily, as_theta, escort_condition_residual
from .fixtures import FIXTURES, PAIRS, run_fixture
from .geometry import (
    classical_crb_sides,
    crb_sides,
    dual_coordinates,
    duality_residuals,
    fisher_matrix,
    g_matrix,
    legendre_sweep,
    projection_report,
    regularity_residual,
)
from .kernel import DeformedCalculus
from .measure import RandomVariable, default_panels

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2
SIG_DIGITS = 9
COMMANDS = (
    "lnphi", "expphi", "normalize", "escort", "fisher", "metric", "bound", "project",
    "duality", "entropy", "divergence", "maxent", "fixture", "report",
)
DEFAULT_TOLERANCES = {
    "quadrature": 1e-9,
    "inversion": 1e-10,
    "normalization": 1e-10,
    "escort_condition": 2e-5,
    "regularity": 2e-5,
    "bound": 2e-5,
    "duality": 1e-4,
    "legendre": 2e-5,
    "metric_relative": 1e-3,
    "maxent": 1e-7,
}

_DEFORMER = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["power", "scaled_power", "constant", "ceiling", "table"]},
        "q": {"type": "number"},
        "knots": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_MEASURE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["discrete", "lebesgue"]},
        "points": {"type": "array", "items": {"type": "number"}},
        "weights": {"type": "array", "items": {"type": "number"}},
        "a": {"type": "number"},
        "b": {"anyOf": [{"type": "number"}, {"enum": ["inf"]}]},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_VARIABLE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["monomial", "constant", "table"]},
        "scale": {"type": "number"},
        "degree": {"type": "number"},
        "value": {"type": "number"},
        "points": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_VECTOR = {"anyOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}
RUN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": 1},
        "family": {
            "type": "object",
            "properties": {
                "deformer": _DEFORMER,
                "measure": _MEASURE,
                "statistics": {"type": "array", "items": _VARIABLE, "minItems": 1},
            },
            "required": ["deformer", "measure", "statistics"],
            "additionalProperties": False,
        },
        "pair": {"enum": sorted(PAIRS)},
        "deformer": _DEFORMER,
        "u": {"type": "number"},
        "theta": _VECTOR,
        "theta2": _VECTOR,
        "theta_grid": {"type": "array", "items": _VECTOR},
        "x": {"type": "array", "items": {"type": "number"}},
        "u_vec": _VECTOR,
        "v_vec": _VECTOR,
        "variable": _VARIABLE,
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "fixture": {"enum": sorted(FIXTURES)},
        "output": {"type": "string"},
        "panels": {"type": "integer", "minimum": 16},
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
            "additionalProperties": False,
        },
    },
    "required": ["version"],
    "additionalProperties": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(value: Any) -> Any:
    """Round floats to 9 significant digits and make the value JSON-safe."""
    if isinstance(value, (np.ndarray, list, tuple)):
        return [fmt(v) for v in (value.tolist() if isinstance(value, np.ndarray) else value)]
    if isinstance(value, dict):
        return {k: fmt(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.{SIG_DIGITS}g}")
    return value


def _dumps(report: dict) -> str:
    return json.dumps(fmt(report), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def _json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise UsageError(f"--{what}: invalid JSON ({err})") from None


def _load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {"version": 1}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file {args.config!r} not found")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise UsageError(f"config is not valid JSON: {err}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    overrides = {
        "deformer": _json_arg(args.deformer, "deformer") if args.deformer else None,
        "family": _json_arg(args.family, "family") if args.family else None,
        "variable": _json_arg(args.variable, "variable") if args.variable else None,
        "theta": _json_arg(args.theta, "theta") if args.theta else None,
        "theta2": _json_arg(args.theta2, "theta2") if args.theta2 else None,
        "theta_grid": _json_arg(args.theta_grid, "theta-grid") if args.theta_grid else None,
        "x": _json_arg(args.x, "x") if args.x else None,
        "u_vec": _json_arg(args.u_vec, "u-vec") if args.u_vec else None,
        "v_vec": _json_arg(args.v_vec, "v-vec") if args.v_vec else None,
        "u": args.u,
        "pair": args.pair,
        "trials": args.trials,
        "seed": args.seed,
        "output": args.output,
        "panels": args.panels,
        "fixture": getattr(args, "name", None),
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise UsageError(f"schema error at {where}: {err.message}") from None
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"missing required input {key!r}")
    return cfg[key]


def _panels(cfg: dict) -> int:
    return int(cfg.get("panels") or default_panels())


def _family(cfg: dict) -> PhiFamily:
    try:
        return PhiFamily.from_spec(_require(cfg, "family"), _panels(cfg))
    except (ValueError, KeyError) as err:
        raise UsageError(f"invalid family spec: {err}") from None


def _pair(cfg: dict) -> EscortPair:
    if "pair" in cfg:
        return PAIRS[cfg["pair"]](_panels(cfg))
    return _family(cfg).pair()


def _theta(cfg: dict, key: str = "theta") -> np.ndarray:
    return as_theta(_require(cfg, key))


def _tolerances(cfg: dict) -> dict:
    return {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}


def _vec(cfg: dict, key: str, n: int) -> np.ndarray:
    if key in cfg:
        return np.atleast_1d(np.asarray(cfg[key], dtype=float))
    return np.ones(n)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_lnphi(cfg):
    calc = DeformedCalculus.from_spec(_require(cfg, "deformer"))
    return {"value": calc.ln_phi(float(_require(cfg, "u")))}


def _cmd_expphi(cfg):
    calc = DeformedCalculus.from_spec(_require(cfg, "deformer"))
    return {"value": calc.exp_phi(float(_require(cfg, "u"))), "range": list(calc.range_bounds())}


def _cmd_normalize(cfg):
    fam, th = _family(cfg), _theta(cfg)
    G = fam.solve_G(th)
    return {"theta": th, "G": G, "normalization_residual": fam.normalization(th, G) - 1.0}


def _cmd_escort(cfg):
    fam, th = _family(cfg), _theta(cfg)
    out = {"theta": th, "G": fam.solve_G(th), "Z": fam.zet(th)}
    if "x" in cfg:
        x = np.asarray(cfg["x"], dtype=float)
        out["x"] = x
        out["p"] = fam.pdf_at(th, x)
        out["P"] = fam.escort_at(th, x)
    out["escort_condition"] = [escort_condition_residual(fam.pair(), th, k) for k in range(fam.n)]
    return out


def _cmd_fisher(cfg):
    pair, th = _pair(cfg), _theta(cfg)
    return {"theta": th, "fisher": fisher_matrix(pair, th).to_json()}


def _cmd_metric(cfg):
    pair, th = _pair(cfg), _theta(cfg)
    g = g_matrix(pair, th)
    out = {"theta": th, "g": g.entries, "condition": g.condition, "min_eigenvalue": g.min_eigenvalue}
    if "family" in cfg and "pair" not in cfg:
        m = metric_from_divergence(_family(cfg), th)
        out["from_divergence"] = {
            "g_over_Z": m.target,
            "hess_theta": m.hess_theta,
            "cross": m.cross,
            "hess_eta": m.hess_eta,
            "first_theta": m.first_theta,
            "first_eta": m.first_eta,
            "relative_errors": m.relative_errors(),
        }
    return out


def _cmd_bound(cfg):
    pair, th = _pair(cfg), _theta(cfg)
    u, v = _vec(cfg, "u_vec", pair.n), _vec(cfg, "v_vec", pair.n)
    lhs, rhs = crb_sides(pair, pair.estimator(), th, u, v)
    reg = regularity_residual(pair, th)
    out = {
        "theta": th,
        "crb": {"lhs": lhs, "rhs": rhs},
        "regularity_residual": reg,
        "advisory": bool(np.abs(reg).max() > _tolerances(cfg)["regularity"]),
        "g": g_matrix(pair, th).entries,
    }
    try:
        classical = classical_crb_sides(pair, pair.estimator(), th, u, v)
        out["classical_crb"] = {"lhs": classical.lhs, "rhs": classical.rhs}
        out["fisher"] = fisher_matrix(pair, th).to_json()
    except DivergentIntegral:
        out["classical_crb"] = "divergent"
        out["fisher"] = "divergent"
    return out


def _cmd_project(cfg):
    pair, th = _pair(cfg), _theta(cfg)
    A = RandomVariable.from_spec(cfg.get("variable", {"kind": "monomial", "scale": 1.0, "degree": 1.0}))
    return {"theta": th, "projection": projection_report(pair, th, A)}


def _cmd_duality(cfg):
    fam, th = _family(cfg), _theta(cfg)
    dp = dual_coordinates(fam, th)
    res = duality_residuals(fam, th)
    return {
        "theta": th,
        "eta": dp.eta,
        "F": dp.F,
        "E": dp.E,
        "residuals": {"grad_F": res.grad_F, "grad_I": res.grad_I, "jacobian": res.jacobian},
        "residual_norms": res.norms(),
    }


def _cmd_entropy(cfg):
    fam, th = _family(cfg), _theta(cfg)
    p = fam.pdf(th)
    return {
        "theta": th,
        "I_phi": information_content(fam.calc, p),
        "I_phi_direct": information_content(fam.calc, p, route="direct"),
    }


def _cmd_divergence(cfg):
    fam = _family(cfg)
    th, th2 = _theta(cfg), _theta(cfg, "theta2")
    d = divergence(fam.calc, fam.pdf(th), fam.pdf(th2))
    return {"theta": th, "theta2": th2, "divergence": {"value": d.value, "decomposition": d.decomposition}}


def _cmd_maxent(cfg):
    fam, th = _family(cfg), _theta(cfg)
    rep = maxent_check(fam, th, int(cfg.get("trials", 50)), int(cfg.get("seed", 0)), tol=_tolerances(cfg)["maxent"])
    return {"theta": th, "I_phi": rep.entropy, "F": rep.scale, "maxent": rep.to_json(), "passed": rep.passed}


def _cmd_fixture(cfg):
    name = _require(cfg, "fixture")
    rows = run_fixture(name, _panels(cfg))
    width = max(len(r.name) for r in rows)
    lines = [f"{'check':<{width}}  {'value':>16}  {'expected':>16}  {'tol':>8}  result"]
    for r in rows:
        lines.append(
            f"{r.name:<{width}}  {fmt(r.value)!s:>16}  {fmt(r.expected)!s:>16}  {r.tol:>8.1e}  {'PASS' if r.passed else 'FAIL'}"
        )
    return {"fixture": name, "checks": [r.to_json() for r in rows], "passed": all(r.passed for r in rows)}, "\n".join(lines)


REPORT_COLUMNS = (
    "theta_k: natural parameters",
    "status: ok or the domain finding",
    "G: normalizing function",
    "Z: escort normalization",
    "eta_k: E_theta c_k",
    "F: theta.eta - E",
    "E: information content of p_theta",
    "legendre_residual: F_path + E - theta.eta with F_path integrated through the in-domain grid points from the first",
    "g_kl: generalized metric",
    "crb_lhs crb_rhs: bound sides with u = v = 1",
)


def _grid_row(fam: PhiFamily, th: np.ndarray) -> dict:
    row: dict = {"theta": th}
    try:
        G = fam.solve_G(th)
        Z = fam.zet(th)
        dp = dual_coordinates(fam, th)
        g = g_matrix(fam.pair(), th).entries
        ones = np.ones(fam.n)
        lhs, rhs = crb_sides(fam.pair(), fam.estimator, th, ones, ones)
        row.update(status="ok", G=G, Z=Z, eta=dp.eta, F=dp.F, E=dp.E, g=g, lhs=lhs, rhs=rhs)
    except DomainError as err:
        row["status"] = type(err).__name__
    return row


def _cmd_report(cfg):
    fam = _family(cfg)
    grid = [as_theta(t, fam.n) for t in cfg.get("theta_grid", [])]
    n = fam.n
    header = (
        [f"theta_{k + 1}" for k in range(n)]
        + ["status", "G", "Z"]
        + [f"eta_{k + 1}" for k in range(n)]
        + ["F", "E", "legendre_residual"]
        + [f"g_{k + 1}{l + 1}" for k in range(n) for l in range(n)]
        + ["crb_lhs", "crb_rhs"]
    )
    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(lambda t: _grid_row(fam, t), grid))
    # F is integrated along the in-domain points in grid order, starting at the first
    inside = [r for r in rows if r["status"] == "ok"]
    for r, leg in zip(inside, legendre_sweep(fam, [r["theta"] for r in inside])):
        r["legendre"] = leg
    buf = io.StringIO()
    buf.write("# columns: " + "; ".join(REPORT_COLUMNS) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        cells = [fmt(t) for t in row["theta"]] + [row["status"]]
        if row["status"] == "ok":
            cells += [fmt(row["G"]), fmt(row["Z"])] + [fmt(e) for e in row["eta"]]
            cells += [fmt(row["F"]), fmt(row["E"]), fmt(row["legendre"])]
            cells += [fmt(v) for v in np.asarray(row["g"]).ravel()] + [fmt(row["lhs"]), fmt(row["rhs"])]
        else:
            cells += [""] * (len(header) - len(cells))
        writer.writerow(cells)
    text = buf.getvalue()
    ok = sum(r["status"] == "ok" for r in rows)
    summary = {"rows": len(rows), "in_domain": ok, "columns": header}
    if not grid:
        summary["error"] = "theta_grid is empty"
    return summary, text


HANDLERS = {
    "lnphi": _cmd_lnphi,
    "expphi": _cmd_expphi,
    "normalize": _cmd_normalize,
    "escort": _cmd_escort,
    "fisher": _cmd_fisher,
    "metric": _cmd_metric,
    "bound": _cmd_bound,
    "project": _cmd_project,
    "duality": _cmd_duality,
    "entropy": _cmd_entropy,
    "divergence": _cmd_divergence,
    "maxent": _cmd_maxent,
    "fixture": _cmd_fixture,
    "report": _cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phifam", description="Deformed exponential families: kernels, metrics, bounds and entropy.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "fixture":
            p.add_argument("name", choices=sorted(FIXTURES))
        p.add_argument("--config", help="JSON run config (version 1)")
        p.add_argument("--output", help="write the report here")
        p.add_argument("--panels", type=int, help="quadrature panels (default: PHIFAM_PANELS or 256)")
        p.add_argument("--deformer", help="deformer JSON spec")
        p.add_argument("--family", help="family JSON spec")
        p.add_argument("--pair", choices=sorted(PAIRS), help="named escort pair instead of a family")
        p.add_argument("--variable", help="random variable JSON spec")
        p.add_argument("--theta", help="parameter (number or JSON list)")
        p.add_argument("--theta2", help="second parameter for divergences")
        p.add_argument("--theta-grid", dest="theta_grid", help="JSON list of parameters")
        p.add_argument("--x", help="JSON list of sample points")
        p.add_argument("--u", type=float, help="argument of lnphi/expphi")
        p.add_argument("--u-vec", dest="u_vec", help="bound direction u")
        p.add_argument("--v-vec", dest="v_vec", help="bound direction v")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
    return parser


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    try:
        cfg = _load_config(args)
    except UsageError as err:
        stderr.write(f"phifam {command}: {err}\n")
        return EXIT_USAGE

    record: dict = {"command": command, "tolerances": _tolerances(cfg)}
    table = None
    code = EXIT_OK
    try:
        result = HANDLERS[command](cfg)
        if isinstance(result, tuple):
            result, table = result
        record["status"] = "ok"
        record["result"] = result
        if command == "report" and not cfg.get("theta_grid"):
            record["status"] = "empty_grid"
            code = EXIT_USAGE
        elif command == "fixture" and not result["passed"]:
            record["status"] = "fixture_failed"
            code = EXIT_DOMAIN
    except UsageError as err:
        stderr.write(f"phifam {command}: {err}\n")
        return EXIT_USAGE
    except DomainError as err:
        record["status"] = "domain_error"
        record["finding"] = err.as_record()
        code = EXIT_DOMAIN
    except PhiFamError as err:
        record["status"] = "error"
        record["finding"] = err.as_record()
        code = EXIT_DOMAIN
    except ValueError as err:
        stderr.write(f"phifam {command}: {err}\n")
        return EXIT_USAGE

    text = _dumps(record)
    output = cfg.get("output")
    if command == "report":
        if output and table is not None:
            Path(output).write_text(table)
        if table is not None:
            stdout.write(table)
        stderr.write(text + "\n")
    elif command in ("lnphi", "expphi") and code == EXIT_OK:
        stdout.write(f"{fmt(record['result']['value'])}\n")
        if output:
            Path(output).write_text(text + "\n")
    else:
        if table is not None:
            stdout.write(table + "\n")
        stdout.write(text + "\n")
        if output:
            Path(output).write_text(text + "\n")
    return code


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
