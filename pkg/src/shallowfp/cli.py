"""Command-line entry point: generate, analyze, simulate, optimize, report."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import coeffgen as cg
from .circuit import build_aikps, build_deep, build_shallow, metrics
from .coeffgen import CoefficientSet, ParamVector, SearchExhausted
from .optimizer import acceptance_curve, epsilon_objective, random_restarts, separation_objective
from .simulator import NoiseModel, classify, records_to_csv, sample_curve
from .spectral import epsilon_of, fourier_bias, verify_bias_energy_bound

EXIT_PRECONDITION = 2
EXIT_EXHAUSTED = 3


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _noise(text: str | None) -> NoiseModel | None:
    if text is None:
        return NoiseModel()
    if text.lower() in ("none", "0", "off"):
        return None
    return NoiseModel.parse(text)


def _seed(args) -> int:
    if args.seed is None:
        raise ValueError("--seed is required for stochastic steps")
    return args.seed


# -- generate -----------------------------------------------------------------

def _generate(args) -> CoefficientSet:
    p = cg.check_prime(args.p)
    if args.method == "cyclic":
        return cg.cyclic_set(p, args.d)
    if args.method == "aikps":
        return cg.aikps_set(p, args.eps)
    if args.method == "random":
        return cg.random_set(p, args.d, _seed(args))
    if args.method == "explicit":
        return cg.explicit_set(_int_list(args.coeffs), p)
    if args.method == "gap":
        if args.params:
            params = ParamVector.from_list(_int_list(args.params), p)
        else:
            strategy = "random" if args.strategy == "random" else "sequential"
            params = cg.find_gap_params(p, args.m, strategy, args.seed)
        cs = cg.subset_sum_set(params)
        return CoefficientSet(cs.coeffs, p, cs.method, params, {"is_proper_gap": cg.is_proper_gap(params)})
    raise ValueError(f"unknown method {args.method!r}")


def cmd_generate(args) -> int:
    cs = _generate(args)
    _write(args.out, cs.to_json() + "\n")
    d = len(cs)
    if cs.params is not None:
        c = build_shallow(cs.params, 1)
    elif args.method == "aikps":
        c = build_aikps(cs.p, args.eps, 1)
    else:
        c = build_deep(cs, 1)
    met = metrics(c)
    print(f"method={cs.method} p={cs.p} d={d} qubits={met['width']} depth={met['depth']} "
          f"rotation_depth={met['rotation_depth']}", file=sys.stderr)
    return 0


# -- analyze --------------------------------------------------------------------

def _load_set(path) -> CoefficientSet:
    return CoefficientSet.from_json(Path(path).read_text())


def analyze_summary(cs: CoefficientSet) -> dict:
    prof = epsilon_of(cs)
    stats = fourier_bias(cs)
    return {"p": cs.p, "d": len(cs), "method": cs.method, "epsilon": prof.epsilon,
            "argmax_x": prof.argmax_x, "energy": stats.energy, "fourier_bias": stats.fourier_bias,
            "density": stats.density, "bias_energy_bound_holds": verify_bias_energy_bound(cs)}


def error_ratio(a: CoefficientSet, b: CoefficientSet) -> np.ndarray:
    """Per-x ratio of the error terms of ``a`` over ``b`` (1 where both vanish)."""
    if a.p != b.p:
        raise ValueError("ratio needs sets over the same modulus")
    va = epsilon_of(a).per_x
    vb = epsilon_of(b).per_x
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(vb > 0, va / np.where(vb > 0, vb, 1.0), np.where(va > 0, np.inf, 1.0))
    return r


def cmd_analyze(args) -> int:
    sets = [_load_set(p) for p in args.inputs]
    first = sets[0]
    prof = epsilon_of(first)
    _write(args.out, prof.to_csv())
    summary = analyze_summary(first)
    if len(sets) == 2:
        ratio = error_ratio(first, sets[1])
        summary["epsilon_ratio"] = summary["epsilon"] / epsilon_of(sets[1]).epsilon
        finite = ratio[np.isfinite(ratio)]
        summary["ratio_band"] = [float(finite.min()), float(finite.max())] if finite.size else None
        if args.ratio_out:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["x", "ratio"])
            for x, v in enumerate(ratio, start=1):
                w.writerow([x, repr(float(v))])
            _write(args.ratio_out, buf.getvalue())
    print(json.dumps(summary, sort_keys=True))
    return 0


# -- simulate -------------------------------------------------------------------

def _spec_from_args(args):
    p = cg.check_prime(args.p)
    if args.coeffs_file:
        cs = _load_set(args.coeffs_file)
        if args.construction == "shallow" and cs.params is not None:
            return cs.params
        return cs
    if args.params:
        values = _int_list(args.params)
        if args.construction == "shallow":
            return ParamVector.from_result_set(values, p, args.offset_index)
        return cg.explicit_set(values, p)
    raise ValueError("simulate needs --params or --coeffs-file")


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    p = spec.p
    window = args.window if args.window is not None else 7 * p + 9
    nm = _noise(args.noise)
    probs = acceptance_curve(spec, window, nm)[1:]
    records = sample_curve(probs, args.shots, _seed(args), lengths=range(1, window + 1))
    _write(args.out, records_to_csv(records))
    if args.threshold is not None:
        res = classify(records, args.threshold, p)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["length", "accept_count", "predicted", "actual"])
        for c in res["per_length"].values():
            w.writerow([c.length, c.accept_count, int(c.predicted), int(c.actual)])
        _write(args.classify_out, buf.getvalue())
    return 0


# -- optimize -------------------------------------------------------------------

def build_objective(args, p: int, kind: str):
    if args.objective == "epsilon":
        return epsilon_objective(p, kind)
    nm = _noise(args.noise)
    if args.objective == "diff":
        return separation_objective(p, kind, 6 * p + 9, 6 * p, nm, args.sign)
    if args.objective == "diff_prime":
        return separation_objective(p, kind, 2 * p + 10, p, nm, args.sign)
    raise ValueError(f"unknown objective {args.objective!r}")


def cmd_optimize(args) -> int:
    p = cg.check_prime(args.p)
    kind = args.construction
    n_coords = args.m + 1 if kind == "shallow" else 2**args.m
    hybrid = None
    if args.hybrid:
        a, b = (int(v) for v in args.hybrid.split(":"))
        if a + b != n_coords:
            raise ValueError(f"--hybrid {args.hybrid} must cover {n_coords} coordinates")
        hybrid = (a, b)
    obj = build_objective(args, p, kind)
    best, _ = random_restarts(obj, n_coords, args.restarts, _seed(args), args.max_sweeps, hybrid)
    out = best.to_dict()
    out["objective"] = obj.name
    out["context"] = obj.context
    out["restarts"] = args.restarts
    out["hybrid"] = list(hybrid) if hybrid else None
    _write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    if args.trace_csv:
        _write(args.trace_csv, best.trace_csv())
    return 0


# -- report ---------------------------------------------------------------------

def report_rows(p: int, eps: float, seed: int = 0) -> list[dict]:
    """Formula versus measured width/depth for the four constructions."""
    lp = math.log2(p)
    llp = math.log2(lp)
    rows = []

    d_prob = cg.probabilistic_size(p, eps)
    rand = cg.random_set(p, d_prob, seed)
    c = build_deep(rand, 1)
    rows.append({"method": "probabilistic", "width_formula": 4 * math.log2(2 * p) / eps,
                 "depth_formula": 2 * math.log2(2 * p) / eps, "coefficients": d_prob,
                 "states": 2 * d_prob, "qubits": c.width, "depth": c.depth,
                 "rotation_depth": metrics(c)["rotation_depth"], "epsilon": epsilon_of(rand).epsilon})

    d_cyc = min(d_prob, p - 1)
    cyc = cg.cyclic_set(p, d_cyc)
    c = build_deep(cyc, 1)
    rows.append({"method": "cyclic", "width_formula": None, "depth_formula": None,
                 "coefficients": d_cyc, "states": 2 * d_cyc, "qubits": c.width, "depth": c.depth,
                 "rotation_depth": metrics(c)["rotation_depth"], "epsilon": epsilon_of(cyc).epsilon})

    try:
        ak = cg.aikps_set(p, eps)
        c = build_aikps(p, eps, 1)
        rows.append({"method": "aikps", "width_formula": lp ** (2 + 3 * eps),
                     "depth_formula": (1 + 2 * eps) * lp ** (1 + eps) * llp,
                     "coefficients": len(ak), "states": 2 * len(ak), "qubits": c.width,
                     "depth": c.depth, "rotation_depth": metrics(c)["rotation_depth"],
                     "epsilon": epsilon_of(ak).epsilon})
    except ValueError as exc:
        rows.append({"method": "aikps", "error": str(exc)})

    m = cg.gap_dimension(p, eps)
    rng = np.random.default_rng(seed)
    params = ParamVector(int(rng.integers(p)), tuple(int(t) for t in rng.integers(1, p, size=m)), p)
    c = build_shallow(params, 1)
    gap_eps = epsilon_of(cg.subset_sum_set(params)).epsilon if m <= 20 else None
    rows.append({"method": "gap", "width_formula": p / eps**2, "depth_formula": m + 2,
                 "coefficients": 2**m, "states": 2 ** (m + 1), "qubits": c.width, "depth": c.depth,
                 "rotation_depth": metrics(c)["rotation_depth"], "epsilon": gap_eps})
    return rows


def cmd_report(args) -> int:
    rows = report_rows(cg.check_prime(args.p), args.eps, args.seed or 0)
    cols = ["method", "width_formula", "coefficients", "states", "qubits",
            "depth_formula", "depth", "rotation_depth", "epsilon"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r.get(k) is None else (f"{r[k]:.6g}" if isinstance(r[k], float) else r[k])
                    for k in cols])
    _write(args.out, buf.getvalue())
    return 0


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shallowfp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a coefficient set")
    g.add_argument("--method", required=True, choices=["cyclic", "aikps", "gap", "random", "explicit"])
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--m", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--eps", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--strategy", choices=["sequential", "random"], default="sequential")
    g.add_argument("--params", help="t0,t1,..,tm for --method gap")
    g.add_argument("--coeffs", help="comma-separated coefficients for --method explicit")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="error profile and additive statistics")
    a.add_argument("inputs", nargs="+")
    a.add_argument("--out")
    a.add_argument("--ratio-out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="shot counts per word length")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--construction", choices=["shallow", "deep"], default="shallow")
    s.add_argument("--params", help="shallow: result set with the offset last; deep: coefficients")
    s.add_argument("--offset-index", type=int, default=-1)
    s.add_argument("--coeffs-file")
    s.add_argument("--noise", help="p1,p2,pm or 'none' (default: built-in noise model)")
    s.add_argument("--shots", type=int, default=10000)
    s.add_argument("--seed", type=int)
    s.add_argument("--window", type=int)
    s.add_argument("--threshold", type=int)
    s.add_argument("--classify-out")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("optimize", help="search for low-error parameters")
    o.add_argument("--p", type=int, required=True)
    o.add_argument("--m", type=int, required=True)
    o.add_argument("--construction", choices=["shallow", "deep"], default="shallow")
    o.add_argument("--objective", choices=["epsilon", "diff", "diff_prime"], default="epsilon")
    o.add_argument("--sign", choices=["separation", "literal"], default="separation")
    o.add_argument("--noise")
    o.add_argument("--restarts", type=int, default=20)
    o.add_argument("--max-sweeps", type=int, default=50)
    o.add_argument("--hybrid", help="A:B, descent on A coordinates, brute force on B")
    o.add_argument("--seed", type=int)
    o.add_argument("--out")
    o.add_argument("--trace-csv")
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("report", help="width/depth table for all constructions")
    r.add_argument("--p", type=int, required=True)
    r.add_argument("--eps", type=float, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SearchExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
