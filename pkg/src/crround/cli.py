"""Command line front end: ``crround table|round|verify|estimate``.

Exit codes: 0 when every check passed (or none applied), 1 when a check
failed, 2 for usage or input errors.  Settings resolve as
flag > environment variable (``CRROUND_*``) > built-in default.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .matroids import (
    ElementSet,
    FractionalPoint,
    PartitionMatroid,
    UniformMatroid,
    in_polytope,
)
from .montecarlo import TrialConfig, estimate_balancedness, random_polytope_point
from .report import RunReport
from .scheme import (
    balancedness_c,
    balancedness_limit,
    element_balancedness,
    marginal,
    resolve_partition_rows,
    resolve_rows,
    scheme_balancedness,
    symmetric_point,
)
from .suites import ALIASES, SUITES, SuiteOptions, resolve_suite, run_suite

ENV_PREFIX = "CRROUND_"

# below this many conditioned draws the normal interval is too crude to flag on
MIN_CONDITIONED = 30

DEFAULTS = {
    "seed": 0,
    "tol_polytope": 1e-9,
    "tol_exact": 1e-9,
    "tol_sigma": 4.0,
    "tol_grad": 1e-6,
    "tol_hess": 1e-4,
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="random seed (env CRROUND_SEED, default 0)")
    g.add_argument("--format", choices=["json", "csv", "pretty"], default=None,
                   help="output format (env CRROUND_FORMAT; default pretty on a terminal, json otherwise)")
    g.add_argument("--no-meta", action="store_true", help="omit wall-clock timing from the report")
    g.add_argument("--tol-polytope", type=float, default=None, help="polytope membership slack (1e-9)")
    g.add_argument("--tol-exact", type=float, default=None, help="tolerance for exact identities (1e-9)")
    g.add_argument("--tol-sigma", type=float, default=None,
                   help="Monte Carlo checks allow this many standard errors (4)")
    g.add_argument("--tol-grad", type=float, default=None, help="finite-difference gradient tolerance (1e-6)")
    g.add_argument("--tol-hess", type=float, default=None, help="finite-difference Hessian tolerance (1e-4)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="crround", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", parents=[common], help="balancedness c(k,n) table")
    t.add_argument("--n", type=_int_list, default=[2, 3, 4, 5, 10, 100, 1000])
    t.add_argument("--k", type=_int_list, default=[1, 2, 3, 4, 9, 99, 999])
    t.add_argument("--limit-row", action="store_true", help="append the n -> infinity limit per column")

    r = sub.add_parser("round", parents=[common], help="run the scheme on a point from a file")
    r.add_argument("input", help="JSON document or CSV file holding x")
    r.add_argument("--k", type=int, default=None, help="rank of the uniform matroid")
    r.add_argument("--partition", default=None, help="consecutive blocks, e.g. '2:1,3:1'")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--summary-only", action="store_true", help="do not list the per-trial sets")

    v = sub.add_parser("verify", parents=[common], help="run a named verification suite")
    v.add_argument("suite", help="one of: all, " + ", ".join(list(SUITES) + list(ALIASES)))
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--n-max", type=int, default=None)
    v.add_argument("--instances", type=int, default=None)
    v.add_argument("--max-size", type=int, default=None)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--resolution", type=int, default=60)
    v.add_argument("--partition", default="2:1,3:1,4:2")
    v.add_argument("--shards", type=int, default=1)

    e = sub.add_parser("estimate", parents=[common], help="Monte Carlo balancedness estimates")
    e.add_argument("--n", type=int, default=None)
    e.add_argument("--k", type=int, default=None)
    e.add_argument("--partition", default=None)
    e.add_argument("--x", default="symmetric", help="'symmetric', 'random:<count>' or comma-separated coordinates")
    e.add_argument("--trials", type=int, default=10**5)
    e.add_argument("--shards", type=int, default=1)
    e.add_argument("--z", type=float, default=3.0, help="confidence-interval multiplier")
    return parser


def _resolve_settings(args):
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            env = os.environ.get(ENV_PREFIX + key.upper())
            setattr(args, key, type(default)(env) if env is not None else default)
    if args.format is None:
        env = os.environ.get(ENV_PREFIX + "FORMAT")
        if env is not None and env not in ("json", "csv", "pretty"):
            raise UsageError(f"CRROUND_FORMAT must be json, csv or pretty, got {env!r}")
        args.format = env or ("pretty" if sys.stdout.isatty() else "json")


def _matroid(n, k, partition):
    if partition:
        m = PartitionMatroid.from_spec(partition)
        if n is not None and n != m.n:
            raise UsageError(f"partition covers {m.n} elements but n={n}")
        return m
    if n is None or k is None:
        raise UsageError("give --n and --k, or --partition")
    return UniformMatroid(n, k)


def cmd_table(args) -> RunReport:
    rows = []
    for n in args.n:
        if n < 1:
            raise UsageError("n values must be positive")
        r = {"n": n}
        for k in args.k:
            r[str(k)] = balancedness_c(k, n) if 1 <= k <= n - 1 else None
        rows.append(r)
    if args.limit_row:
        rows.append({"n": "limit", **{str(k): balancedness_limit(k) for k in args.k if k >= 1}})
    return RunReport("table", {"n": args.n, "k": args.k, "limit_row": args.limit_row}, rows)


def load_input(path: str) -> dict:
    """Read ``{"n", "x", "A"?, "k"?, "partition"?}`` from JSON, or x alone from CSV."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    if p.suffix.lower() == ".csv":
        values = [float(cell) for line in csv.reader(text.splitlines()) for cell in line if cell.strip()]
        return {"n": len(values), "x": values}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}")
    if not isinstance(doc, dict) or "x" not in doc:
        raise UsageError("input must be a JSON object with an 'x' field")
    if "n" in doc and doc["n"] != len(doc["x"]):
        raise UsageError(f"n={doc['n']} but x has {len(doc['x'])} coordinates")
    return doc


def _input_matroid(doc: dict, args, n: int):
    if args.partition:
        return _matroid(n, None, args.partition)
    if args.k is not None:
        return UniformMatroid(n, args.k)
    if doc.get("partition"):
        ground = n
        blocks = [ElementSet(b["block"], ground) for b in doc["partition"]]
        return PartitionMatroid(blocks, [b["cap"] for b in doc["partition"]])
    if doc.get("k") is not None:
        return UniformMatroid(n, doc["k"])
    raise UsageError("no matroid given: use --k/--partition or put 'k'/'partition' in the input")


def cmd_round(args) -> RunReport:
    doc = load_input(args.input)
    x = FractionalPoint(doc["x"])
    matroid = _input_matroid(doc, args, x.n)
    if not in_polytope(matroid, x, args.tol_polytope):
        raise UsageError("x lies outside the matroid polytope")
    if args.trials < 1:
        raise UsageError("trials must be positive")
    rng = np.random.default_rng(args.seed)
    fixed = doc.get("A")
    if fixed is not None:
        A = ElementSet(fixed, x.ground)
        R = np.zeros((args.trials, x.n), dtype=bool)
        R[:, list(A)] = True
    else:
        R = rng.random((args.trials, x.n)) < x.coords
    if isinstance(matroid, UniformMatroid):
        K = resolve_rows(R, x.coords, matroid.k, rng)
    else:
        K = resolve_partition_rows(R, x, matroid, rng)

    rows = []
    if not args.summary_only:
        for t in range(args.trials):
            rows.append({"kind": "trial", "trial": t, "realized": np.flatnonzero(R[t]).tolist(),
                         "selected": np.flatnonzero(K[t]).tolist()})
    passed = None
    freq = K.mean(axis=0)
    for e in range(x.n):
        r = {"kind": "frequency", "element": e, "keep_frequency": float(freq[e])}
        if fixed is not None and e in A:
            if isinstance(matroid, UniformMatroid):
                expected = marginal(x, A, e, matroid.k)
            else:
                b = matroid.block_of(e)
                expected = marginal(x, [i for i in A if i in matroid.blocks[b]], e, matroid.capacities[b])
            tol = args.tol_sigma * np.sqrt(expected * (1 - expected) / args.trials)
            ok = abs(freq[e] - expected) <= tol
            r.update(marginal=expected, tolerance=float(tol), **{"pass": bool(ok)})
            passed = ok if passed is None else (passed and ok)
        elif fixed is None:
            seen = int(R[:, e].sum())
            r.update(realized_frequency=seen / args.trials,
                     conditional_keep=(int(K[:, e].sum()) / seen) if seen else None)
        rows.append(r)
    params = {"input": args.input, "trials": args.trials, "x": x.coords,
              "matroid": _describe(matroid), "A": fixed}
    return RunReport("round", params, rows, None if passed is None else bool(passed))


def _describe(matroid) -> dict:
    if isinstance(matroid, UniformMatroid):
        return {"type": "uniform", "n": matroid.n, "k": matroid.k}
    return {"type": "partition",
            "blocks": [list(b.members) for b in matroid.blocks],
            "caps": list(matroid.capacities)}


def _points(spec: str, matroid, seed: int, tol: float) -> list:
    if spec == "symmetric":
        return [symmetric_point(matroid)]
    if spec.startswith("random:"):
        try:
            count = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"malformed point spec {spec!r}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        return [random_polytope_point(matroid, rng) for _ in range(count)]
    try:
        x = FractionalPoint([float(t) for t in spec.split(",")])
    except ValueError as exc:
        raise UsageError(f"malformed point {spec!r}: {exc}")
    if x.n != matroid.n:
        raise UsageError(f"point has {x.n} coordinates, matroid has {matroid.n} elements")
    if not in_polytope(matroid, x, tol):
        raise UsageError("x lies outside the matroid polytope")
    return [x]


def cmd_estimate(args) -> RunReport:
    matroid = _matroid(args.n, args.k, args.partition)
    points = _points(args.x, matroid, args.seed, args.tol_polytope)
    rows = []
    flagged = 0
    for idx, x in enumerate(points):
        cfg = TrialConfig(args.trials, args.seed + idx, args.z, args.shards)
        for est in estimate_balancedness(matroid, x, cfg, args.tol_polytope):
            bound = element_balancedness(matroid, est.element)
            insufficient = est.trials_conditioned < MIN_CONDITIONED
            flag = not insufficient and est.ci_high < bound
            flagged += flag
            rows.append({"point": idx, "element": est.element,
                         "conditional_keep": est.conditional_keep,
                         "trials_conditioned": est.trials_conditioned,
                         "std_error": est.std_error, "ci_low": est.ci_low, "ci_high": est.ci_high,
                         "bound": bound, "flagged": bool(flag), "insufficient": insufficient})
    params = {"matroid": _describe(matroid), "x": args.x, "trials": args.trials,
              "shards": args.shards, "z": args.z, "balancedness": scheme_balancedness(matroid)}
    return RunReport("estimate", params, rows, flagged == 0)


def cmd_verify(args) -> RunReport:
    try:
        name = resolve_suite(args.suite)
    except KeyError:
        raise UsageError(f"unknown suite {args.suite!r}")
    opts = SuiteOptions(n=args.n, k=args.k, seed=args.seed, instances=args.instances,
                        max_size=args.max_size, samples=args.samples, trials=args.trials,
                        resolution=args.resolution, n_max=args.n_max, partition=args.partition,
                        shards=args.shards, tol_exact=args.tol_exact, tol_sigma=args.tol_sigma,
                        tol_grad=args.tol_grad, tol_hess=args.tol_hess, tol_polytope=args.tol_polytope)
    rows = run_suite(name, opts)
    params = {"suite": name, "n": args.n, "k": args.k}
    return RunReport("verify", params, rows, all(r["pass"] for r in rows))


COMMANDS = {"table": cmd_table, "round": cmd_round, "verify": cmd_verify, "estimate": cmd_estimate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    start = time.perf_counter()
    try:
        _resolve_settings(args)
        report = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"crround: error: {exc}", file=sys.stderr)
        return 2
    report.seed = args.seed
    if not args.no_meta:
        report.wall_time_ms = int(round((time.perf_counter() - start) * 1000))
    print(report.render(args.format))
    return 1 if report.passed is False else 0


if __name__ == "__main__":
    sys.exit(main())
