"""Command-line front end: scenario JSON in, report JSON and trace CSV out.

Exit codes: 0 every named inequality passes, 2 an inequality failed,
3 a precondition failed, 4 bad input (missing file, schema, values).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import altproj, conditions
from .core import Gauge
from .errors import PreconditionError, SetclashError
from .schema import SCENARIO_SCHEMA
from .sets import set_from_dict

EXIT_OK, EXIT_FAIL, EXIT_PRE, EXIT_INPUT = 0, 2, 3, 4
SAMPLING = {"primal", "dual", "holder", "probe", "delta"}

EXAMPLE_55 = {
    "name": "example-5.5",
    "sets": [
        {"type": "halfspace", "normal": [0.0, 1.0], "offset": 0.0},
        {"type": "abs_epigraph", "shift": 1.0},
    ],
    "params": {"x0": [2.0, 0.0], "max_iter": 100, "tol": 1e-9},
}
DEMOS = {"example-5.5": EXAMPLE_55}


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# scenarios


def validate_scenario(data: dict) -> dict:
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path)
        raise InputError(f"schema error at '{path}': {e.message}") from None
    return data


def normalize_scenario(data: dict) -> dict:
    """Validated scenario with sets re-serialised from the internal model."""
    validate_scenario(data)
    out = copy.deepcopy(data)
    try:
        out["sets"] = [set_from_dict(s).to_dict() for s in data["sets"]]
    except (SetclashError, ValueError) as e:
        raise InputError(f"invalid set: {e}") from None
    for key in ("shifts", "common_point", "base_points"):
        if key in out:
            out[key] = np.asarray(out[key], dtype=float).tolist()
    if "gauge" in out:
        out["gauge"] = Gauge.from_dict(out["gauge"]).to_dict()
    return out


def load_scenario(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise InputError(f"cannot read scenario {p}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{p}: invalid JSON ({e})") from None
    return normalize_scenario(data)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".17g")


def emit_trace_csv(trace: altproj.APTrace, path, decrease=None) -> Path:
    """Write one row per iterate.

    `decrease` is a :func:`altproj.verify_decrease` report whose per-cycle
    sides fill the decrease columns of the even rows.
    """
    path = Path(path)
    dim = trace.iterates.shape[1]
    dec = {} if decrease is None else {2 * c["cycle"]: c for c in decrease["cycles"]}
    s = np.concatenate([[np.nan], trace.step_norms])
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "set", *[f"x{j}" for j in range(dim)], "step_norm", "decrease_lhs",
                        "decrease_rhs", "rate_ratio"])
            for k, (x, lab) in enumerate(zip(trace.iterates, trace.set_labels)):
                c = dec.get(k)
                ratio = s[k] / s[k - 2] if k >= 3 and s[k - 2] > 0 else None
                w.writerow([k, lab, *[_fmt(v) for v in x], _fmt(s[k] if k else None),
                            _fmt(c["lhs"] if c else None), _fmt(c["rhs"] if c else None), _fmt(ratio)])
    except OSError as e:
        raise OSError(f"cannot write trace {path}: {e.strerror}") from None
    return path


def _jsonable(o):
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def _ineq(checks: dict) -> list:
    return [{"name": k, "residual": v["residual"], "pass": bool(v["pass"])} for k, v in checks.items()]


# ---------------------------------------------------------------------------
# commands


def _sets(sc):
    return [set_from_dict(s) for s in sc["sets"]]


def _gauge(sc):
    g = sc.get("gauge", {"kind": "identity"})
    return Gauge.from_dict(g)


def _need(p, *keys):
    missing = [k for k in keys if k not in p]
    if missing:
        raise InputError(f"missing params: {', '.join(missing)}")
    return [p[k] for k in keys]


def _region(p):
    r = p.get("region")
    return None if r is None else (r["center"], r["radius"])


def _collection(sc, tol):
    return conditions.Collection(_sets(sc), sc.get("shifts"), sc.get("common_point"), tol)


def cmd_ap(sc, p, out):
    sets = _sets(sc)
    if len(sets) != 2:
        raise InputError("ap needs exactly two sets (A, B)")
    A, B = sets
    (x0,) = _need(p, "x0")
    tol = p.get("tol", 1e-9)
    trace = altproj.run_ap(A, B, x0, p.get("max_iter", 1000), tol)
    if A.convex and B.convex:
        dAB = conditions.index_details([A, B], "exact2").value
    else:
        dAB = conditions.index_details([A, B], "grid", h=p.get("grid_h", 0.01), region=_region(p)).value
    term = altproj.classify_termination(trace, dAB, tol)
    report = {"trace": trace.to_dict(), "dAB": dAB, "termination": term, "monotone_steps": trace.monotone(tol)}
    inequalities = []
    decrease = None
    if "delta" in p:
        hp = altproj.HolderParams(p.get("q", 1.0), p["delta"])
        if len(trace) >= 3:
            decrease = altproj.verify_decrease(trace, hp, dAB, tol=tol)
            report["decrease"] = decrease
            inequalities += [{"name": f"C5.4-2[cycle {c['cycle']}]", "residual": c["residual"], "pass": c["pass"]}
                             for c in decrease["cycles"]]
            if hp.q == 1.0:
                rate = altproj.verify_linear_rate(trace, hp.delta, tol)
                report["rate"] = rate
                inequalities += [{"name": f"C5.6-1[cycle {c['cycle']}]", "residual": c["residual"],
                                  "pass": c["pass"]} for c in rate["cycles"]]
    emit_trace_csv(trace, out / f"{sc['name']}.trace.csv", decrease)
    report["status"] = term["kind"]
    return report, inequalities


def cmd_index(sc, p, out):
    sets = _sets(sc)
    method = p.get("method") or ("exact2" if len(sets) == 2 and all(s.convex for s in sets) else "grid")
    res = conditions.index_details(sets, method, h=p.get("grid_h", 0.01), budget=p.get("budget", 2000),
                                   region=_region(p))
    return {"index": res.value, "method": res.method, "kind": res.kind, "lower": res.lower,
            "points": [np.asarray(x).tolist() for x in res.points]}, []


def _cert_kwargs(sc, p):
    kw = dict(region=_region(p), h=p.get("grid_h", 0.05), seed=p["seed"], budget=p.get("budget", 30_000),
              tol=p.get("tol", 1e-9))
    if "rho" in p:
        kw["rho"] = p["rho"]
    if "base_points" in sc:
        kw["base_points"] = sc["base_points"]
    return kw


def cmd_primal(sc, p, out):
    eps, lam, eta = _need(p, "eps", "lam", "eta")
    cert = conditions.primal_certificate(_collection(sc, p.get("tol", 1e-9)), _gauge(sc), eps, lam, eta,
                                         p.get("variant", "T12"), **_cert_kwargs(sc, p))
    report = cert.to_dict()
    ineq = _ineq(cert.checks)
    if cert.partial:
        ineq.append({"name": "EVP-iii", "residual": cert.params["ekeland"]["min_slack"], "pass": False})
    return report, ineq


def _dual(sc, p, gauge):
    eps, lam, eta = _need(p, "eps", "lam", "eta")
    cert = conditions.dual_certificate(_collection(sc, p.get("tol", 1e-9)), gauge, eps, lam, eta,
                                       p.get("tau", 0.99), p.get("variant", "T17"),
                                       weights=p.get("weights", "uniform"), **_cert_kwargs(sc, p))
    return cert.to_dict(), _ineq(cert.checks)


def cmd_dual(sc, p, out):
    return _dual(sc, p, _gauge(sc))


def cmd_holder(sc, p, out):
    g = sc.get("gauge", {})
    q = p.get("q", g.get("q"))
    if q is None:
        raise InputError("holder needs params.q or a holder gauge")
    alpha = p.get("alpha", g.get("alpha", 1.0))
    return _dual(sc, p, Gauge.holder(q, alpha))


def cmd_probe(sc, p, out):
    (eps_list,) = _need(p, "eps_list")
    rep = conditions.stationarity_probe(_collection(sc, p.get("tol", 1e-9)), eps_list, _region(p),
                                        p.get("grid_h", 0.05), p["seed"])
    return rep, []


def cmd_delta(sc, p, out):
    sets = _sets(sc)
    if len(sets) != 2:
        raise InputError("delta needs exactly two sets (A, B)")
    est = altproj.estimate_delta(*sets, q=p.get("q", 1.0), region=_region(p), count=p.get("count", 4000),
                                 seed=p["seed"], x0=p.get("x0"), details=True)
    return {"delta": est.value, "pair": [x.tolist() for x in est.pair], "admissible_pairs": est.admissible,
            "dAB": est.dAB, "region": {"center": est.region[0], "radius": est.region[1]},
            "note": "sampled minimum: an upper bound for the infimum"}, []


COMMANDS = {
    "ap": cmd_ap,
    "index": cmd_index,
    "primal": cmd_primal,
    "dual": cmd_dual,
    "holder": cmd_holder,
    "probe": cmd_probe,
    "delta": cmd_delta,
}


# ---------------------------------------------------------------------------
# entry point


def _parser():
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--out", help="output directory (default $SETCLASH_OUT or .)")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--seed", type=int)
    ap = argparse.ArgumentParser(prog="setclash", parents=[common], description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("scenario")
    sp = sub.add_parser("demo", parents=[common])
    sp.add_argument("scenario", choices=sorted(DEMOS))
    return ap


def run_command(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "demo":
            sc = normalize_scenario(copy.deepcopy(DEMOS[args.scenario]))
            command = "ap"
        else:
            sc = load_scenario(args.scenario)
            command = args.command
        p = sc.setdefault("params", {})
        for key in ("tol", "max_iter", "seed"):
            if getattr(args, key, None) is not None:
                p[key] = getattr(args, key)
        validate_scenario(sc)
        if command in SAMPLING and "seed" not in p:
            raise InputError(f"'{command}' samples; the scenario must set params.seed (or pass --seed)")
        out = Path(getattr(args, "out", None) or os.environ.get("SETCLASH_OUT") or ".")
        out.mkdir(parents=True, exist_ok=True)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    report = {"name": sc["name"], "command": command, "scenario": sc}
    try:
        result, inequalities = COMMANDS[command](sc, p, out)
        code = EXIT_OK if all(i["pass"] for i in inequalities) else EXIT_FAIL
        report.update(result=result, inequalities=inequalities, passed=code == EXIT_OK)
        for i in inequalities:
            if not i["pass"]:
                print(f"{i['name']} violated, residual={i['residual']:.6g}", file=sys.stderr)
    except PreconditionError as e:
        report.update(error={"type": "precondition", "inequality": e.inequality, "message": str(e)}, passed=False)
        print(str(e), file=sys.stderr)
        code = EXIT_PRE
    except (InputError, SetclashError, ValueError) as e:
        report.update(error={"type": "input", "message": str(e)}, passed=False)
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_INPUT
    path = out / f"{sc['name']}.report.json"
    try:
        path.write_text(json.dumps(_jsonable(report), indent=2) + "\n")
    except OSError as e:
        print(f"error: cannot write report {path}: {e.strerror}", file=sys.stderr)
        return EXIT_INPUT
    return code


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
