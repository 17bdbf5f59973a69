"""Command-line front end.

Subcommands generate the quantile-comparison tables, error-bound curves,
simulation caches and single-risk reports as CSV or JSON.  Expensive
simulations are cached on disk, keyed by (n, alpha, samples, seed, workers).

Exit codes: 0 success, 2 usage, 3 domain error, 4 numerical non-convergence,
5 capacity exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, bounds
from .core import MAX_K, NormexApprox, k_interval, select_k
from .distributions import ParetoModel, pareto_quantile, pareto_var_es
from .errors import (
    EXIT_CAPACITY,
    EXIT_DOMAIN,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    CapacityError,
    DomainError,
    NumericalError,
    UsageError,
)
from .oracle import (
    EmpiricalDistribution,
    dump_empirical,
    empirical_quantile,
    load_empirical,
    simulate_sums,
)

METHODS = ("gclt", "gclt_bis", "clt", "max", "zaliapin", "normex")


def _default_workers() -> int:
    env = os.environ.get("NORMEX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _cache_key(n: int, alpha: float, samples: int, seed: int, workers: int) -> str:
    blob = f"{n}:{alpha!r}:{samples}:{seed}:{workers}".encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _cached_simulation(args) -> EmpiricalDistribution:
    cache_dir = Path(args.cache_dir) if args.cache_dir else None
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        key = _cache_key(args.n, args.alpha, args.mc_samples, args.seed, args.workers)
        path = cache_dir / f"sums_{key}.bin"
        if path.exists():
            emp = load_empirical(path)
            if (
                emp.n == args.n
                and emp.alpha == args.alpha
                and emp.n_samples == args.mc_samples
                and emp.seed == args.seed
            ):
                return emp
    emp = simulate_sums(
        args.n, args.alpha, args.mc_samples, seed=args.seed, workers=args.workers
    )
    if cache_dir is not None:
        dump_empirical(emp, path)
    return emp


def _methods_for(alpha: float, requested: list[str]) -> list[str]:
    if not requested:
        raise UsageError("methods list is empty; choose from " + ",".join(METHODS))
    bad = [m for m in requested if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; choose from " + ",".join(METHODS))
    usable = {
        "clt": alpha > 2.0,
        "gclt": alpha <= 2.0,
        "gclt_bis": 0.5 < alpha < 2.0,
        "zaliapin": 2.0 / 3.0 < alpha < 2.0,
        "max": True,
        "normex": True,
    }
    invalid = [m for m in requested if not usable[m]]
    if invalid:
        valid = [m for m in METHODS if usable[m]]
        raise UsageError(
            f"methods {invalid} are not valid for alpha={alpha:g}; "
            f"valid methods: {','.join(valid)}"
        )
    return requested


def _method_quantile(method: str, n: int, alpha: float, q: float, approx) -> float:
    if method == "gclt":
        return baselines.gclt_quantile(n, alpha, q)
    if method == "gclt_bis":
        return baselines.gclt_tail_quantile(n, alpha, q)
    if method == "clt":
        return baselines.clt_quantile(n, alpha, q)
    if method == "max":
        return baselines.max_evt_quantile(n, alpha, q)
    if method == "zaliapin":
        return baselines.zaliapin_quantile(n, alpha, q)
    if method == "normex":
        return approx.quantile(q)
    raise DomainError(f"unknown method {method}")


def _write_artifact(args, text_csv: str, payload) -> None:
    if args.format == "csv":
        body = text_csv
    else:
        body = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(body)
    else:
        sys.stdout.write(body if body.endswith("\n") else body + "\n")


def cmd_compare(args) -> int:
    methods = _methods_for(args.alpha, [m for m in args.methods.split(",") if m])
    qs = _parse_q_list(args.q)
    emp = _cached_simulation(args)
    approx = (
        NormexApprox(n=args.n, alpha=args.alpha) if "normex" in methods else None
    )

    header = ["q", "z_sim", "ci_lo", "ci_hi"]
    for m in methods:
        header += [f"z_{m}", f"delta_{m}_pct"]
    lines = [",".join(header)]
    rows = []
    for q in qs:
        ref = empirical_quantile(emp, q, confidence=args.ci_level)
        row = {
            "q": q,
            "z_sim": ref.point,
            "ci_lo": ref.ci_low,
            "ci_hi": ref.ci_high,
            "methods": {},
        }
        cells = [f"{q:g}", f"{ref.point:.2f}", f"{ref.ci_low:.2f}", f"{ref.ci_high:.2f}"]
        for m in methods:
            z = _method_quantile(m, args.n, args.alpha, q, approx)
            delta = (z / ref.point - 1.0) * 100.0
            row["methods"][m] = {"z": z, "delta_pct": delta}
            cells += [f"{z:.2f}", f"{delta:+.2f}"]
        rows.append(row)
        lines.append(",".join(cells))

    payload = {
        "n": args.n,
        "alpha": args.alpha,
        "mc_samples": args.mc_samples,
        "seed": args.seed,
        "workers": args.workers,
        "rows": rows,
    }
    _write_artifact(args, "\n".join(lines) + "\n", payload)
    return EXIT_OK


def cmd_bound(args) -> int:
    curve, x_max, k_max = bounds.bound_curve(
        args.n, args.alpha, c=args.constant, extrapolate=args.extrapolate,
        points=args.points,
    )
    lines = ["x,K"] + [f"{x:.6g},{k:.6g}" for x, k in zip(curve.x, curve.K)]
    payload = {
        "n": args.n,
        "alpha": args.alpha,
        "c": args.constant,
        "x_max": x_max,
        "K_max": k_max,
        "curve": [{"x": float(x), "K": float(k)} for x, k in zip(curve.x, curve.K)],
    }
    _write_artifact(args, "\n".join(lines) + "\n", payload)
    if args.format == "csv":
        sys.stderr.write(f"summary: x_max={x_max:.6g} K_max={k_max:.6g}\n")
    return EXIT_OK


def cmd_kselect(args) -> int:
    k = select_k(args.alpha, args.p)
    lo, hi = k_interval(k, args.p)
    if args.alpha > args.p:
        interval = f"]{args.p / 2:g};oo[ (above alpha={args.p} even the untrimmed sum has the moment)"
    else:
        from fractions import Fraction

        f_lo = Fraction(args.p, k + 1)
        f_hi = Fraction(args.p, k)
        interval = f"]{f_lo};{f_hi}]"
    note = ""
    boundary = args.p / args.alpha - 1.0
    if abs(boundary - round(boundary)) < 1e-12 and k <= MAX_K:
        note = (
            " note: alpha sits on a moment boundary; the strict rule keeps "
            f"k={k} (a closed-bracket table convention would give k={k - 1})"
        )
    payload = {
        "alpha": args.alpha,
        "p": args.p,
        "k": k,
        "rule": f"smallest k with alpha*(k+1) > p: {args.alpha:g}*{k + 1} > {args.p}",
        "interval": interval,
        "note": note.strip() or None,
    }
    text = (
        f"k={k}\nrule: smallest k with alpha*(k+1) > p, here {args.alpha:g}*{k + 1}"
        f" > {args.p}\ninterval: {interval}{chr(10) + note.strip() if note else ''}\n"
    )
    if args.format == "json" or args.output:
        _write_artifact(args, text, payload)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    emp = _cached_simulation(args)
    qs = _parse_q_list(args.q)
    rows = []
    lines = ["q,z_sim,ci_lo,ci_hi"]
    for q in qs:
        ref = empirical_quantile(emp, q, confidence=args.ci_level)
        rows.append(
            {"q": q, "z_sim": ref.point, "ci_lo": ref.ci_low, "ci_hi": ref.ci_high}
        )
        lines.append(f"{q:g},{ref.point:.4f},{ref.ci_low:.4f},{ref.ci_high:.4f}")
    payload = {
        "n": args.n,
        "alpha": args.alpha,
        "mc_samples": args.mc_samples,
        "seed": args.seed,
        "workers": args.workers,
        "quantiles": rows,
    }
    _write_artifact(args, "\n".join(lines) + "\n", payload)
    return EXIT_OK


def cmd_risk(args) -> int:
    model = ParetoModel(args.alpha)
    qs = _parse_q_list(args.q)
    rows = []
    lines = ["q,var,es"]
    for q in qs:
        var = float(pareto_quantile(model, q))
        if args.alpha > 1.0:
            es = pareto_var_es(model, q)[1]
            es_txt = f"{es:.6g}"
        else:
            es, es_txt = None, "undefined"
        rows.append({"q": q, "var": var, "es": es})
        lines.append(f"{q:g},{var:.6g},{es_txt}")
    payload = {"alpha": args.alpha, "rows": rows}
    _write_artifact(args, "\n".join(lines) + "\n", payload)
    return EXIT_OK


def _parse_q_list(text: str) -> list[float]:
    try:
        qs = [float(tok) for tok in text.split(",") if tok]
    except ValueError as err:
        raise DomainError(f"bad quantile list {text!r}") from err
    if not qs:
        raise DomainError("need at least one quantile level")
    for q in qs:
        if not 0.0 < q < 1.0:
            raise DomainError(f"quantile levels must lie in (0, 1), got {q}")
    return qs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normex",
        description="Approximation of aggregated Pareto risk: quantile tables, "
        "error bounds, and simulation references.",
        epilog="exit codes: 0 ok, 2 usage, 3 domain, 4 numerical, 5 capacity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_n=True):
        p.add_argument("--alpha", type=float, required=True, help="tail index")
        if needs_n:
            p.add_argument("--n", type=int, required=True, help="number of summands")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", type=str, default=None, help="write artifact here")

    def add_sim(p):
        p.add_argument("--mc-samples", type=int, default=10**6)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--workers", type=int, default=_default_workers())
        p.add_argument("--ci-level", type=float, default=0.05,
                       help="two-sided CI tail probability (default 0.05)")
        p.add_argument("--cache-dir", type=str, default=None,
                       help="reuse simulations cached under this directory")

    p = sub.add_parser("compare", help="quantile table: simulation vs methods")
    add_common(p)
    add_sim(p)
    p.add_argument("--q", type=str, default="0.95,0.99,0.995")
    p.add_argument("--methods", type=str, required=True,
                   help="comma list from " + ",".join(METHODS))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bound", help="error-bound curve K(x) and its maximum")
    add_common(p)
    p.add_argument("--constant", type=float, default=bounds.CDF_BOUND_CONSTANT)
    p.add_argument("--extrapolate", action="store_true",
                   help="allow 3 < alpha <= 4")
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("kselect", help="threshold count k for a tail index")
    add_common(p, needs_n=False)
    p.add_argument("--p", type=int, default=4, help="moment order (default 4)")
    p.set_defaults(func=cmd_kselect)

    p = sub.add_parser("simulate", help="simulate sums, cache, report quantiles")
    add_common(p)
    add_sim(p)
    p.add_argument("--q", type=str, default="0.95,0.99,0.995")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("risk", help="closed-form VaR/ES of a single Pareto risk")
    add_common(p, needs_n=False)
    p.add_argument("--q", type=str, default="0.99")
    p.set_defaults(func=cmd_risk)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as err:
        print(f"capacity error: {err}", file=sys.stderr)
        return EXIT_CAPACITY
    except DomainError as err:
        print(f"domain error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
