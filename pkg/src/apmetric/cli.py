"""apmetric command line.

Every command prints one JSON report (schema ``apmetric-report/1``) unless
``--format csv`` asks for bulk samples instead.  Exit codes: 0 success,
2 verdict contradicts ``--expect``, 1 error.

Function specs are expressions in ``t`` (``t1..tn`` for n > 1) or
``corpus:<name>``.  ``--config file.json`` supplies the same keys as the
flags (dashes become underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__, corpus
from .errors import ApmetricError, ExprSyntaxError, NonFiniteError
from .funcspace import DomainBox, EvalFunction, WeightFunction

SCHEMA = "apmetric-report/1"

# defaults live here rather than in argparse so that config files can fill gaps
DEFAULTS = {
    "n": None, "metric": "sup", "box": None, "spacing": None, "radius": None, "eps": 0.1,
    "relation": "id", "ladder": "1,10,100", "step": 0.01, "iprime": None, "center_factor": 2.0,
    "threads": None, "expect": None, "N": 10.0, "horizons": "10,100,1000", "seq": None, "tail": 5,
    "strong": False, "T": "25,50,100", "density": 16.0, "shift": None, "lam": "0", "threshold": 0.1,
    "range": "-8,8", "lam_step": None, "kernel": None, "at": "-10,10,201", "t": 1.0, "family": None,
    "thist": 50.0, "G": None, "gamma": None, "eigs": None, "forcing": None, "lipschitz": 0.0, "weight": None,
    "tol": 1e-8, "max_iter": 200, "window": None, "h": 0.05, "route": "wright", "format": "json", "out": None,
    "seed": 0, "fn": None, "fn2": None, "action": "list", "name": None, "suite": "all", "csv": None,
}


# -- argument helpers ------------------------------------------------------------
def floats(text, count: int | None = None) -> list[float]:
    if isinstance(text, (int, float)):
        vals = [float(text)]
    elif isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    if count is not None and len(vals) != count:
        raise ApmetricError(f"expected {count} numbers, got {text!r}")
    return vals


def resolve_function(spec: str, n: int | None = None) -> tuple[EvalFunction, DomainBox | None]:
    """An expression or ``corpus:<name>``; the corpus box is returned as a default truncation."""
    from .exprdsl import compile_expr

    if spec is None:
        raise ApmetricError("missing --fn")
    if spec.startswith("corpus:"):
        entry = corpus.get(spec[7:])
        return entry.function, entry.truncation
    return compile_expr(spec, n or 1), None


def parse_box(text, n: int) -> DomainBox | None:
    if text is None:
        return None
    v = floats(text)
    if len(v) == 2:
        return DomainBox((v[0],) * n, (v[1],) * n)
    if len(v) == 2 * n:
        return DomainBox(tuple(v[0::2]), tuple(v[1::2]))
    raise ApmetricError(f"box needs 2 or {2 * n} numbers")


def parse_weight(text, n: int) -> WeightFunction | None:
    from .exprdsl import compile_expr

    if text is None:
        return None
    if str(text).startswith("corpus:"):
        return corpus.get(str(text)[7:]).weight
    return WeightFunction(compile_expr(str(text), n))


def sample_points(text, n: int) -> np.ndarray:
    lo, hi, count = floats(text, 3)
    ax = np.linspace(lo, hi, int(count))
    if n == 1:
        return ax[:, None]
    return np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _metric(cfg, n: int):
    from .metrics import parse_metric_spec
    return parse_metric_spec(cfg["metric"], n, cfg["radius"], cfg["spacing"])


def clean(obj):
    """JSON-safe copy: complex as [re, im], non-finite floats as strings, arrays as lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(float(obj.real)), clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def samples_csv(points: np.ndarray, values: np.ndarray, header_in: Sequence[str]) -> list[list]:
    m = values.shape[1]
    header = list(header_in) + [f"{part}{j + 1}" for j in range(m) for part in ("re", "im")]
    rows = [header]
    for p, v in zip(points, values):
        rows.append([float(x) for x in p] + [float(f(c)) for c in v for f in (np.real, np.imag)])
    return rows


def _input_names(n: int) -> list[str]:
    return ["t"] if n == 1 else [f"t{k + 1}" for k in range(n)]


# -- commands -----------------------------------------------------------------------
class Outcome:
    def __init__(self, result: dict, boxes: dict | None = None, citations: list | None = None,
                 verdict_ok: bool | None = None, csv_rows: list | None = None):
        self.result, self.boxes, self.citations = result, boxes or {}, citations or []
        self.verdict_ok, self.csv_rows = verdict_ok, csv_rows


def _expect(cfg, positive: bool) -> bool | None:
    if cfg["expect"] is None:
        return None
    want = cfg["expect"] == "positive"
    return want == positive


def cmd_norm(cfg) -> Outcome:
    F, cbox = resolve_function(cfg["fn"], cfg["n"])
    M = _metric(cfg, F.n)
    box = parse_box(cfg["box"], F.n) or cbox
    r = M.measure(F, None, box)
    return Outcome({"value": r.value, "witness": r.witness, "metric": M.describe()}, {"metric": r.box})


def cmd_dist(cfg) -> Outcome:
    F, cbox = resolve_function(cfg["fn"], cfg["n"])
    G, _ = resolve_function(cfg["fn2"], F.n)
    M = _metric(cfg, F.n)
    box = parse_box(cfg["box"], F.n) or cbox
    r = M.measure(F, G, box)
    return Outcome({"value": r.value, "witness": r.witness, "metric": M.describe()}, {"metric": r.box})


def _scan_common(cfg):
    from .periods import parse_relation
    F, cbox = resolve_function(cfg["fn"], cfg["n"])
    M = _metric(cfg, F.n)
    rho = parse_relation(cfg["relation"], F.m)
    return F, cbox, M, rho


def cmd_periods(cfg) -> Outcome:
    from .periods import RELATIVELY_DENSE, scan_bohr_periods
    F, cbox, M, rho = _scan_common(cfg)
    box = parse_box(cfg["box"], F.n) or cbox
    iprime = parse_box(cfg["iprime"], F.n)
    rep = scan_bohr_periods(F, None, float(cfg["eps"]), rho, M, iprime, floats(cfg["ladder"]), float(cfg["step"]),
                            box, float(cfg["center_factor"]), threads=cfg["threads"])
    ok = rep.verdict == RELATIVELY_DENSE
    return Outcome(rep.to_dict(), {"defect": rep.window["box"], "iprime": rep.window["iprime"]},
                   verdict_ok=_expect(cfg, ok))


def cmd_levitan(cfg) -> Outcome:
    from .periods import RELATIVELY_DENSE, scan_levitan_periods
    F, _, M, rho = _scan_common(cfg)
    rep = scan_levitan_periods(F, float(cfg["eps"]), float(cfg["N"]), M, floats(cfg["ladder"]), float(cfg["step"]),
                               rho=rho, threads=cfg["threads"])
    ok = rep.verdict == RELATIVELY_DENSE
    return Outcome(rep.to_dict(), {"defect": rep.window["box"]}, verdict_ok=_expect(cfg, ok))


def cmd_recur(cfg) -> Outcome:
    from .periods import recurrence_search
    F, cbox, M, rho = _scan_common(cfg)
    box = parse_box(cfg["box"], F.n) or cbox
    rep = recurrence_search(F, None, rho, M, floats(cfg["horizons"]), float(cfg["step"]), box)
    return Outcome(rep.to_dict(), {"defect": (box or M.default_box()).to_list()},
                   verdict_ok=_expect(cfg, rep.trending_to_zero))


def cmd_bochner(cfg) -> Outcome:
    from .periods import bochner_subsequence
    F, cbox = resolve_function(cfg["fn"], cfg["n"])
    M = _metric(cfg, F.n)
    if cfg["seq"] is None:
        raise ApmetricError("missing --seq")
    seq = floats(cfg["seq"])
    box = parse_box(cfg["box"], F.n) or cbox
    r = bochner_subsequence(F, None, seq, M, int(cfg["tail"]), float(cfg["eps"]), bool(cfg["strong"]), box)
    return Outcome(r.to_dict(), {"metric": (box or M.default_box()).to_list()},
                   verdict_ok=_expect(cfg, r.cauchy_defect <= float(cfg["eps"])))


def _mean_boxes(T: list[float], n: int) -> dict:
    return {f"T={t:g}": DomainBox.cube(t, n).to_list() for t in T}


def cmd_mean(cfg) -> Outcome:
    from .fourier import mean_value
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    T = floats(cfg["T"])
    shift = floats(cfg["shift"]) if cfg["shift"] is not None else None
    r = mean_value(F, T, float(cfg["density"]), shift)
    return Outcome(r.to_dict(), _mean_boxes(T, F.n))


def cmd_coeff(cfg) -> Outcome:
    from .fourier import bohr_coefficient
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    T = floats(cfg["T"])
    lam = floats(cfg["lam"])
    r = bohr_coefficient(F, lam, T, float(cfg["density"]))
    return Outcome({"lambda": lam, **r.to_dict()}, _mean_boxes(T, F.n))


def cmd_spectrum(cfg) -> Outcome:
    from .fourier import spectrum_scan
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    T = floats(cfg["T"])
    lo, hi = floats(cfg["range"], 2)
    est = spectrum_scan(F, float(cfg["threshold"]), (lo, hi), cfg["lam_step"] and float(cfg["lam_step"]), T,
                        float(cfg["density"]))
    rows = [est.csv_header()] + est.csv_rows()
    boxes = {"scan": DomainBox.cube(est.lattice["T_scan"], F.n).to_list(),
             "confirm": DomainBox.cube(est.lattice["T_confirm"], F.n).to_list()}
    return Outcome(est.to_dict(), boxes, csv_rows=rows)


def _samples_outcome(G: EvalFunction, cfg, extra: dict, boxes: dict) -> Outcome:
    pts = sample_points(cfg["at"], G.n)
    vals = np.asarray(G.raw(pts))
    rows = samples_csv(pts, vals, _input_names(G.n))
    return Outcome({**extra, "points": pts, "values": vals}, boxes, csv_rows=rows)


def cmd_convolve(cfg) -> Outcome:
    from .exprdsl import compile_expr
    from .transforms import convolve
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    if cfg["kernel"] is None:
        raise ApmetricError("missing --kernel")
    h = compile_expr(cfg["kernel"], F.n)
    radius = float(cfg["radius"] or 10.0)
    G = convolve(h, F, radius=radius, spacing=cfg["spacing"])
    return _samples_outcome(G, cfg, {"kernel": cfg["kernel"], "radius": radius},
                            {"kernel": DomainBox.cube(radius, F.n).to_list()})


def cmd_semigroup_heat(cfg) -> Outcome:
    from .transforms import gauss_semigroup
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    t = float(cfg["t"])
    G = gauss_semigroup(F, t, cfg["spacing"])
    return _samples_outcome(G, cfg, {"t": t}, {"kernel": DomainBox.cube(8 * math.sqrt(t), F.n).to_list()})


def cmd_conv_product(cfg) -> Outcome:
    from .exprdsl import compile_expr
    from .transforms import OperatorFamily, conv_product
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    fam = cfg["family"]
    if fam is None or not str(fam).startswith("diag:"):
        raise ApmetricError("--family must look like diag:<expr>;<expr>...")
    entries = [compile_expr(e.strip(), F.n, names=["s"] if F.n == 1 else None) for e in str(fam)[5:].split(";")]
    R = OperatorFamily.diagonal(entries, F.n)
    thist = float(cfg["thist"])
    G = conv_product(R, F, thist, float(cfg["spacing"] or 0.01))
    return _samples_outcome(G, cfg, {"family": fam, "Thist": thist},
                            {"history": DomainBox((0.0,) * F.n, (thist,) * F.n).to_list()})


def cmd_nemytskii(cfg) -> Outcome:
    from .exprdsl import parse
    from .transforms import nemytskii
    F, _ = resolve_function(cfg["fn"], cfg["n"])
    if cfg["G"] is None:
        raise ApmetricError("missing --G")
    ynames = ["y"] if F.m == 1 else [f"y{k + 1}" for k in range(F.m)]
    G = parse(cfg["G"], F.n + F.m, _input_names(F.n) + ynames)
    return _samples_outcome(nemytskii(G, F), cfg, {"G": cfg["G"]}, {})


def cmd_frac_solve(cfg) -> Outcome:
    from .exprdsl import parse
    from .fractional import DiagonalOperator, SolverGrid, solve_fixed_point
    if cfg["gamma"] is None or cfg["eigs"] is None or cfg["forcing"] is None:
        raise ApmetricError("frac-solve needs --gamma, --eigs and --forcing")
    op = DiagonalOperator(tuple(floats(cfg["eigs"])))
    unames = ["u"] if op.m == 1 else [f"u{k + 1}" for k in range(op.m)]
    f = parse(cfg["forcing"], 1 + op.m, ["t"] + unames)
    nu = parse_weight(cfg["weight"], 1)
    a, b = floats(cfg["window"] or "0,3200", 2)
    grid = SolverGrid(a, b, float(cfg["h"]))
    res = solve_fixed_point(f, float(cfg["lipschitz"]), float(cfg["gamma"]), op, grid, nu=nu, tol=float(cfg["tol"]),
                            max_iter=int(cfg["max_iter"]), route=cfg["route"])
    keep = res.times >= res.report_from
    rows = samples_csv(res.times[keep][:, None], res.values[keep], ["t"])
    return Outcome(res.to_dict(), {"window": [[a], [b]], "report": [[res.report_from], [res.report_to]]},
                   csv_rows=rows)


def cmd_corpus(cfg) -> Outcome:
    if cfg["action"] == "list":
        return Outcome({"entries": [{"name": n, "role": corpus.get(n).role, "description": corpus.get(n).description}
                                    for n in corpus.names()]})
    if cfg["action"] == "show":
        if cfg["name"] is None:
            raise ApmetricError("corpus show needs a name")
        e = corpus.get(cfg["name"])
        return Outcome(e.to_dict(), {"truncation": e.truncation.to_list()},
                       sorted({t.citation for t in e.tags.values()}))
    raise ApmetricError(f"unknown corpus action {cfg['action']!r}")


def cmd_verify(cfg) -> Outcome:
    from .verify import run_suite
    rows = run_suite(cfg["suite"])
    table = [r.to_dict() for r in rows]
    passed = all(r.passed for r in rows)
    out = Outcome({"suite": cfg["suite"], "passed": passed, "checks": table}, {},
                  sorted({r.citation for r in rows}))
    out.verdict_ok = passed
    out.csv_rows = [["suite", "check", "passed", "margin"]] + [[r.suite, r.name, r.passed, r.margin] for r in rows]
    return out


COMMANDS = {
    "norm": cmd_norm, "dist": cmd_dist, "periods": cmd_periods, "levitan": cmd_levitan, "recur": cmd_recur,
    "bochner": cmd_bochner, "mean": cmd_mean, "coeff": cmd_coeff, "spectrum": cmd_spectrum,
    "convolve": cmd_convolve, "semigroup-heat": cmd_semigroup_heat, "conv-product": cmd_conv_product,
    "nemytskii": cmd_nemytskii, "frac-solve": cmd_frac_solve, "corpus": cmd_corpus, "verify": cmd_verify,
}


# -- argument parsing -------------------------------------------------------------------
def _add(p, *flags, **kw):
    kw.setdefault("default", None)
    p.add_argument(*flags, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apmetric", description="Metrical almost periodicity toolkit.")
    parser.add_argument("--version", action="version", version=f"apmetric {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        _add(p, "--config", help="JSON file with default values for any flag")
        _add(p, "--out", help="write the report (or CSV) here instead of stdout")
        _add(p, "--format", choices=["json", "csv"])
        _add(p, "--csv", help="also write the CSV table to this path")
        _add(p, "--seed", type=int)
        _add(p, "--expect", choices=["positive", "negative"])

    def fn(p, second=False):
        _add(p, "--fn", help="expression in t (t1..tn) or corpus:<name>")
        if second:
            _add(p, "--fn2")
        _add(p, "--n", type=int, help="input dimension of expression specs")

    def metric(p):
        _add(p, "--metric", help="sup | sup:nu=.. | lux:p=..,nu=.. | var | holder:alpha=.. | "
                                 "stepanov:p=..,omega=.. | prod:[..;..]")
        _add(p, "--box", help="truncation box lo,hi (or lo1,hi1,lo2,hi2)")
        _add(p, "--spacing", type=float)
        _add(p, "--radius", type=float)

    for name in ("norm", "dist"):
        p = sub.add_parser(name)
        common(p), fn(p, name == "dist"), metric(p)
    for name in ("periods", "levitan", "recur"):
        p = sub.add_parser(name)
        common(p), fn(p), metric(p)
        _add(p, "--relation", help="id | scale:re,im | rot:angle | mat:path | fn:expr")
        _add(p, "--step", type=float)
        _add(p, "--threads", type=int)
        if name != "recur":
            _add(p, "--eps", type=float)
            _add(p, "--ladder")
        if name == "periods":
            _add(p, "--iprime", help="allowed tau set as a box")
            _add(p, "--center-factor", type=float)
        if name == "levitan":
            _add(p, "--N", type=float)
        if name == "recur":
            _add(p, "--horizons")
    p = sub.add_parser("bochner")
    common(p), fn(p), metric(p)
    _add(p, "--seq", help="comma separated translation sequence")
    _add(p, "--tail", type=int)
    _add(p, "--eps", type=float)
    _add(p, "--strong", action="store_true", default=None)
    for name in ("mean", "coeff", "spectrum"):
        p = sub.add_parser(name)
        common(p), fn(p)
        _add(p, "--T", help="T ladder, e.g. 25,50,100")
        _add(p, "--density", type=float)
        if name == "mean":
            _add(p, "--shift")
        if name == "coeff":
            _add(p, "--lam")
        if name == "spectrum":
            _add(p, "--threshold", type=float)
            _add(p, "--range")
            _add(p, "--lam-step", type=float)
    for name in ("convolve", "semigroup-heat", "conv-product", "nemytskii"):
        p = sub.add_parser(name)
        common(p), fn(p)
        _add(p, "--at", help="sample points lo,hi,count")
        _add(p, "--spacing", type=float)
        if name == "convolve":
            _add(p, "--kernel", help="kernel expression in t")
            _add(p, "--radius", type=float)
        if name == "semigroup-heat":
            _add(p, "--t", type=float)
        if name == "conv-product":
            _add(p, "--family", help="diag:<expr in s>;<expr in s>...")
            _add(p, "--thist", type=float)
        if name == "nemytskii":
            _add(p, "--G", help="expression in t and y (y1..ym)")
    p = sub.add_parser("frac-solve")
    common(p)
    _add(p, "--gamma", type=float)
    _add(p, "--eigs", help="comma separated negative eigenvalues")
    _add(p, "--forcing", help="expression in t and u (u1..um)")
    _add(p, "--lipschitz", type=float)
    _add(p, "--weight")
    _add(p, "--tol", type=float)
    _add(p, "--max-iter", type=int)
    _add(p, "--window", help="solver window a,b")
    _add(p, "--h", type=float)
    _add(p, "--route", choices=["wright", "ml"])
    p = sub.add_parser("corpus")
    common(p)
    p.add_argument("action", nargs="?", choices=["list", "show"], default=None)
    p.add_argument("name", nargs="?", default=None)
    p = sub.add_parser("verify")
    common(p)
    p.add_argument("suite", nargs="?", default=None)
    return parser


def merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    cfg.pop("config", None)
    return cfg


def _render_csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def run(argv: Sequence[str] | None = None) -> tuple[int, str]:
    """Execute one command; returns (exit code, text written to the output)."""
    args = build_parser().parse_args(argv)
    code, text, path = _execute(args)
    _emit(path, text)
    return code, text


def _execute(args) -> tuple[int, str, str | None]:
    cfg = {}
    try:
        cfg = merge_config(args)
        np.random.seed(int(cfg["seed"]))
        outcome = COMMANDS[args.command](cfg)
    except ExprSyntaxError as exc:
        return 1, _error_text(args, f"syntax error: {exc}", {"offset": exc.offset}), cfg.get("out")
    except NonFiniteError as exc:
        return 1, _error_text(args, str(exc), {"point": exc.point}), cfg.get("out")
    except (ApmetricError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        return 1, _error_text(args, str(exc).strip("'\""), {}), cfg.get("out")
    relevant = set(vars(args)) - {"config"}
    echoed = {k: cfg[k] for k in sorted(relevant) if cfg.get(k) is not None}
    report = {"schema": SCHEMA, "version": __version__, "command": args.command, "config": echoed,
              "boxes": outcome.boxes, "result": outcome.result, "citations": outcome.citations}
    if outcome.verdict_ok is not None:
        report["expectation_met"] = outcome.verdict_ok
    if cfg["format"] == "csv":
        if outcome.csv_rows is None:
            return 1, _error_text(args, f"{args.command} has no CSV output", {}), cfg.get("out")
        text = _render_csv(outcome.csv_rows)
    else:
        text = json.dumps(clean(report), indent=2, sort_keys=True) + "\n"
    if cfg.get("csv") and outcome.csv_rows is not None:
        with open(cfg["csv"], "w") as fh:
            fh.write(_render_csv(outcome.csv_rows))
    code = 2 if outcome.verdict_ok is False else 0
    return code, text, cfg.get("out")


def _error_text(args, message: str, extra: dict) -> str:
    sys.stderr.write(f"apmetric {args.command}: error: {message}\n")
    return json.dumps(clean({"schema": SCHEMA, "version": __version__, "command": args.command,
                             "error": message, **extra}), sort_keys=True) + "\n"


def _emit(path, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
