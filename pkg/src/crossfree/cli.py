"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gadgets
from .gadgets import GadgetParams, transform, verify_gadget_tables
from .ising import (
    DEFAULT_EXHAUSTIVE_LIMIT,
    IsingModel,
    SpinConfiguration,
    Term,
    brute_force,
    dumps_model,
    loads_model,
    save_model,
)
from .perturbation import (
    PerturbationInconsistency,
    convergence_radius_diagnostic,
    profile,
)
from .spectrum import EigensolverError, SweepSchedule, sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_model(path: str) -> IsingModel:
    text = Path(path).read_text()
    try:
        return loads_model(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _params(args, n: int) -> GadgetParams:
    default = GadgetParams.default(n, cap=args.cap)
    a = args.a if args.a is not None else default.a
    b = Fraction(args.b) if args.b is not None else default.b
    return GadgetParams(a, b, "two_local" if args.locality == "2" else "three_local")


def _add_gadget_flags(p):
    p.add_argument("--a", type=int, default=None, help="extra qubits per term (default max(2, n^2), capped)")
    p.add_argument("--b", type=str, default=None, help="penalty half-strength, rational (default = a)")
    p.add_argument("--cap", type=int, default=4, help="cap on the default a and b")
    p.add_argument("--locality", choices=["3", "2"], default="3")
    p.add_argument("--no-ferro-pairs", action="store_true")


def cmd_transform(args) -> int:
    model = read_model(args.model)
    params = _params(args, model.num_qubits)
    result = transform(model, params, ferro_pairs=not args.no_ferro_pairs)
    out = Path(args.out or Path(args.model).with_suffix(".transformed.json"))
    report_path = Path(args.report or out.with_suffix(".report.json"))
    save_model(result.model, out)
    report_path.write_text(json.dumps(result.report.to_dict(), indent=2) + "\n")
    rep = result.report
    n_gadget = sum(1 for p in rep.term_provenance if p["kind"] == "gadget")
    print(
        f"qubits: {model.num_qubits} -> {result.model.num_qubits} "
        f"(ferro partners {len(rep.ferro_pairs)}, degeneracy extras {len(rep.extras_of('degeneracy'))}, "
        f"star qubits {len(rep.extras_of('auxiliary_star'))})"
    )
    print(f"terms: {model.m} -> {result.model.m} (original {result.model.m - n_gadget}, gadget {n_gadget})")
    print(f"params: a={params.a} b={params.b} locality={params.locality}")
    print(f"wrote {out} and {report_path}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    model = read_model(args.model)
    if args.lambda_max is not None:
        lam_max = args.lambda_max
    else:
        a = args.a or 1
        b = float(Fraction(args.b)) if args.b else 1.0
        lam_max = 4.0 * a * b * max(model.m, 1)
    sched = SweepSchedule(lam_max, args.points, args.spacing, args.k)
    try:
        result = sweep(model, sched)
    except EigensolverError as exc:
        print(f"eigensolver failure at lambda={exc.lam}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    stem = Path(args.out or Path(args.model).with_suffix(""))
    csv_path = Path(f"{stem}.spectrum.csv")
    json_path = Path(f"{stem}.summary.json")
    csv_path.write_text(result.to_csv())
    json_path.write_text(result.summary_json() + "\n")
    s = result.summary()
    print(f"min gap {s['min_gap']:.6g} at lambda {s['lambda_star']:.6g} (naive {s['naive_min_gap']:.6g}); final cluster {s['final_cluster_size']}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    model = read_model(args.model)
    params = _params(args, model.num_qubits)
    result = transform(model, params, ferro_pairs=not args.no_ferro_pairs)
    try:
        config = SpinConfiguration.parse(args.config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        prof = profile(result.base, result.model, result.report, config)
    except PerturbationInconsistency as exc:
        print(f"inconsistent census: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = prof.to_dict()
    diag = convergence_radius_diagnostic(prof.E0, params.a)
    out["convergence_diagnostic"] = {"radius": diag.radius, "dominant_orders": diag.dominant_orders}
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_verify_gadgets(args) -> int:
    checks = verify_gadget_tables()
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}{(' : ' + c.detail) if c.detail else ''}")
    rows = [c for c in checks if " row " in c.name]
    print(f"{sum(c.passed for c in rows)}/{len(rows)} table rows match")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_local_minima(args) -> int:
    model = read_model(args.model)
    try:
        bf = brute_force(model, limit=args.exhaustive_limit)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = {
        "ground_energy": str(bf.ground_energy),
        "degeneracy": bf.degeneracy,
        "ground_states": [str(c) for c in bf.ground_states[: args.max_list]],
        "local_minima": [
            {"state": str(c), "energy": str(bf.energy_of(c))} for c in bf.local_minima[: args.max_list]
        ],
        "num_local_minima": int(bf.local_minimum_indices.size),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_demo_fig3(args) -> int:
    from .demo import DEMO_SCHEDULE, run_demo

    sched = DEMO_SCHEDULE if args.points is None else SweepSchedule(DEMO_SCHEDULE.lambda_max, args.points, k=DEMO_SCHEDULE.k)
    try:
        res = run_demo(schedule=sched)
    except EigensolverError as exc:
        print(f"eigensolver failure at lambda={exc.lam}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, s in res.sweeps.items():
        (out_dir / f"{name}.spectrum.csv").write_text(s.to_csv())
    comp = res.comparison()
    (out_dir / "comparison.json").write_text(json.dumps(comp, indent=2) + "\n")
    print(json.dumps(comp, indent=2))
    return EXIT_OK if res.ordering_holds else EXIT_VERIFY


def cmd_random(args) -> int:
    rng = np.random.default_rng(args.seed)
    terms = []
    pairs = [(i,) for i in range(args.n)] + [(i, j) for i in range(args.n) for j in range(i + 1, args.n)]
    pick = rng.choice(len(pairs), size=min(args.m, len(pairs)), replace=False)
    for p in sorted(pick):
        terms.append(Term(pairs[p], int(rng.choice([-1, 1]))))
    print(dumps_model(IsingModel(args.n, tuple(terms))))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="crossfree", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transform", help="apply the degeneracy construction")
    p.add_argument("model")
    _add_gadget_flags(p)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("spectrum", help="lowest eigenvalues along a lambda sweep")
    p.add_argument("model")
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--spacing", choices=["geometric", "linear"], default="geometric")
    p.add_argument("--a", type=int, default=None, help="used only for the default lambda-max 4abm")
    p.add_argument("--b", type=str, default=None)
    p.add_argument("--out", help="output stem")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("perturb", help="E0, E1 and second-order bound of one configuration")
    p.add_argument("model")
    p.add_argument("--config", required=True, help="spins of the input model, e.g. 101 (1 = up)")
    _add_gadget_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("verify-gadgets", help="check both 2-local gadget cost tables")
    p.set_defaults(func=cmd_verify_gadgets)

    p = sub.add_parser("local-minima", help="exhaustive ground states and local minima")
    p.add_argument("model")
    p.add_argument("--exhaustive-limit", type=int, default=DEFAULT_EXHAUSTIVE_LIMIT)
    p.add_argument("--max-list", type=int, default=1000)
    p.set_defaults(func=cmd_local_minima)

    p = sub.add_parser("demo-fig3", help="crossing creation and elimination on the packaged triple")
    p.add_argument("--out", default="demo_fig3_out")
    p.add_argument("--points", type=int, default=None)
    p.set_defaults(func=cmd_demo_fig3)

    p = sub.add_parser("random-model", help="random unit model for test generation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_random)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except gadgets.UnitizeRequired as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
