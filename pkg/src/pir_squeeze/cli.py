"""Command-line driver: ``pir-squeeze {run|audit|rates}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import audit, rates
from .errors import PirError, ValidationError
from .scheme import (VARIANTS, SystemParams, corrupt_plan, public_design, retrieve_once,
                     simulate, stream)

SEED_ENV = "PIR_SQUEEZE_SEED"
REFERENCE_POINTS = [(2, 4, 2, 2), (2, 5, 2, 2), (2, 5, 2, 3), (2, 6, 2, 2), (2, 6, 3, 3), (3, 5, 2, 2)]
STREAM_FAULT = 99


def _seed_default() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--m", type=int, default=2, help="number of files M")
    common.add_argument("--n", type=int, default=None, help="number of servers N")
    common.add_argument("--t", type=int, default=2, help="collusion size T")
    common.add_argument("--k", type=int, default=None, help="code dimension K")
    common.add_argument("--p", type=int, default=1, help="files retrieved at once (multifile)")
    common.add_argument("--variant", choices=VARIANTS, default="general")
    common.add_argument("--code", choices=("generic", "grs"), default=None,
                        help="storage code flavor (default depends on the variant)")
    common.add_argument("--q", type=int, default=0, help="field size, 0 picks one automatically")
    common.add_argument("--seed", type=int, default=None, help=f"seed (falls back to ${SEED_ENV}, then 0)")
    common.add_argument("--trials", type=int, default=None,
                        help="independent retrievals (default 200 for generalT, else 1)")
    common.add_argument("--budget", type=int, default=10_000, help="span-check tuple budget")
    common.add_argument("--output", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--inject-fault", action="store_true",
                        help="audit: corrupt one undesired query row first")
    common.add_argument("--n-max", type=int, default=None, help="rates: sweep N up to this value")

    parser = argparse.ArgumentParser(prog="pir-squeeze", allow_abbrev=False,
                                     description="Coded colluding-server PIR simulator and auditors")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], allow_abbrev=False, help="simulate a retrieval end to end")
    sub.add_parser("audit", parents=[common], allow_abbrev=False, help="privacy, span and redundancy audits")
    sub.add_parser("rates", parents=[common], allow_abbrev=False, help="closed-form rate table")
    return parser


def params_from_args(args) -> SystemParams:
    if args.n is None or args.k is None:
        raise ValidationError("--n and --k are required for this command")
    seed = _seed_default() if args.seed is None else args.seed
    return SystemParams(m=args.m, n=args.n, t=args.t, k=args.k, p=args.p, variant=args.variant,
                        q=args.q, seed=seed, code=args.code)


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _emit(text: str, args):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_run(args) -> int:
    params = params_from_args(args)
    trials = args.trials if args.trials is not None else (200 if params.variant == "generalT" else 1)
    tr, _ = simulate(params, trials=trials)
    if args.format == "json":
        _emit(tr.to_json(), args)
    else:
        lines = [f"{'server':>6} {'i_n':>5} {'symbols':>8}"]
        lines += [f"{s:>6} {i:>5} {a:>8}" for s, i, a in tr.per_server]
        lines.append(f"download {tr.download_total}  L {tr.l}  q {params.q}")
        lines.append(f"rate {_frac(tr.achieved_rate)}  closed form {_frac(tr.closed_form_rate)}")
        lines.append(f"success {tr.success}  failures {tr.epsilon_failures}/{tr.epsilon_runs}")
        _emit("\n".join(lines) + "\n", args)
    return 0 if tr.success and tr.rate_matches else 1


def cmd_audit(args) -> int:
    params = params_from_args(args)
    code, structure = public_design(params)
    run = retrieve_once(params, code, structure)
    plan, strategy = run.plan, run.strategy
    fault = None
    if args.inject_fault:
        f = plan.undesired[0]
        labels = plan.labels(f, 0)
        row = next(i for i, lab in enumerate(labels) if lab.startswith("U~"))
        plan = corrupt_plan(plan, f, 0, row, stream(params.seed, STREAM_FAULT))
        fault = {"file": f, "server": 1, "row": row, "label": labels[row]}
    bundle = audit.run_audits(plan, strategy, budget=args.budget, rng=stream(params.seed, STREAM_FAULT, 1))
    obj = {"params": params.public_dict(), "fault": fault, **bundle.to_obj()}
    if args.format == "json":
        _emit(_dump(obj), args)
    else:
        sp = bundle.span
        lines = [
            f"privacy    {'pass' if bundle.privacy.verdict else 'FAIL'}  "
            f"({len(bundle.privacy.subsets)} colluding sets)  witness {bundle.privacy.witness}",
            f"span       {'pass' if sp.verdict else 'FAIL'}  {sp.mode} {sp.trials} tuples, "
            f"{sp.failures} failures  witness {sp.witness}",
            f"redundancy {'pass' if bundle.redundancy_ok else 'FAIL'}  expected {bundle.redundancy_expected}"
            f"  measured {bundle.redundancy_measured}",
        ]
        if fault:
            lines.insert(0, f"fault injected: {fault}")
        _emit("\n".join(lines) + "\n", args)
    return 0 if bundle.verdict else 1


def _rate_points(args):
    if args.n is None and args.n_max is None:
        return list(REFERENCE_POINTS)
    lo = args.n if args.n is not None else args.t + 2
    hi = args.n_max if args.n_max is not None else lo
    pts = []
    for n in range(lo, hi + 1):
        ks = [args.k] if args.k is not None else range(1, n - args.t + 1)
        pts.extend((args.m, n, args.t, k) for k in ks)
    return pts


def cmd_rates(args) -> int:
    rows = []
    for m, n, t, k in _rate_points(args):
        vals = rates.rate_table_row(m, n, t, k)
        if args.p > 1:
            for flavor in (rates.GENERIC, rates.GRS):
                try:
                    vals[f"multifile_{flavor}"] = rates.rate_multi(m, n, k, args.p, flavor)
                except PirError:
                    pass
        rows.append({"m": m, "n": n, "t": t, "k": k, "rates": {key: _frac(v) for key, v in vals.items()}})
    if args.format == "json":
        _emit(_dump(rows), args)
    else:
        lines = []
        for row in rows:
            cells = "  ".join(f"{key}={val}" for key, val in row["rates"].items())
            lines.append(f"({row['m']},{row['n']},{row['t']},{row['k']})  {cells}")
        _emit("\n".join(lines) + "\n", args)
    return 0


COMMANDS = {"run": cmd_run, "audit": cmd_audit, "rates": cmd_rates}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PirError as exc:
        sys.stdout.write(_dump({"error": exc.code, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
