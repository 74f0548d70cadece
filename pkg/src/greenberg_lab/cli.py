"""Command-line interface.

Exit codes: 0 ok, 1 input error, 2 property/bound violation,
3 underdetermined fit, 4 oracle size limit.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import formulas as F
from . import stochastic as S
from .filtration import filtration_trace, verify_filtration_properties
from .io import InputError, parse_instance, parse_module

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_UNDERDETERMINED, EXIT_ORACLE = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[int]]) -> None:
    lines = [",".join(header)] + [",".join(str(int(x)) for x in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_filtrate(args: argparse.Namespace) -> int:
    M = parse_module(args.module)
    trace = filtration_trace(M)
    rows = [(r.i, r.level_order, r.quotient_order) for r in trace.steps]
    print(f"module: {M.group}  (p={M.p}, n={M.n})")
    print(f"{'i':>3} {'v_p(#M^i)':>10} {'v_p(#M^(i+1)/M^i)':>18}")
    for i, lv, q in rows:
        print(f"{i:>3} {lv:>10} {q:>18}")
    print(f"b = {trace.b}")
    print(f"v_p(#M) = {trace.total_order}")
    if args.csv:
        _write_csv(args.csv, ("i", "level_order_valuation", "quotient_order_valuation"), rows)
    if args.verify:
        report = verify_filtration_properties(M, enumeration_bound=args.enumeration_bound)
        print(f"verify: {len(report.checks)} checks, {len(report.failures)} failures")
        for c in report.failures:
            print(f"  FAIL {c.name} at step {c.step}: {c.detail}")
        if not report.ok:
            return EXIT_VIOLATION
    return EXIT_OK


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like N0..N1") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError("window must satisfy 0 <= N0 <= N1")
    return lo, hi


def _print_fit(fit: F.IwasawaFit) -> None:
    print(f"status: {fit.status.value}")
    if fit.fitted_from is not None:
        print(f"layers: n={fit.fitted_from[0]}..{fit.fitted_from[1]} (base k_{fit.base_shift})")
    if fit.status is F.FitStatus.EXACT:
        print(f"lambda = {fit.lam}, mu = {fit.mu}, nu = {fit.nu}")


def cmd_fit(args: argparse.Namespace) -> int:
    inst = parse_instance(args.instance)
    bounds = dict(lambda_max=args.lambda_max, mu_max=args.mu_max, nu_bound=args.nu_bound)
    lo, hi = args.window if args.window else (None, None)
    fit = F.fit_from_layers(inst, lo, hi, **bounds)
    _print_fit(fit)
    if fit.status is F.FitStatus.UNDERDETERMINED:
        _err("fewer than 3 consecutive layers: fit is underdetermined")
        return EXIT_UNDERDETERMINED
    if args.auto_rebase and fit.status is not F.FitStatus.EXACT:
        rebased = F.auto_rebase_fit(inst, **bounds)
        if rebased.status is F.FitStatus.EXACT:
            print(f"auto-rebase: exact fit from base k_{rebased.base_shift}")
            _print_fit(rebased)
        else:
            print("auto-rebase: no base admits an exact fit on the available layers")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    inst = parse_instance(args.instance)
    print(f"instance: {inst.label} (p={inst.p}, #S={inst.s_count})")
    if inst.ck is not None and inst.rk_nr is not None:
        print(f"v_p(#G_k) = v_p(#C_k) + v_p(#R_k^nr) = {F.genus_order(inst)}")
    else:
        _err("warning: genus order unavailable (C_k or R_k^nr missing)")

    bounds = F.check_theorem_bounds(inst)
    if bounds.invariants is not None:
        lam, mu, nu = bounds.invariants.as_tuple()
        print(f"invariants ({bounds.source}): lambda={lam} mu={mu} nu={nu}")
    print("bounds:")
    for f in bounds.findings:
        where = f"n={f.n}" if f.n is not None else "-"
        print(f"  {f.name:<22} {where:<6} {f.verdict.value:<12} {f.detail}")
    for f in bounds.undecidable:
        _err(f"warning: {f.name} undecidable ({f.detail})")

    eq = F.check_greenberg_equivalences(inst)
    print("lambda = mu = 0 conditions:")
    for key in ("i", "ii", "iii", "b"):
        print(f"  ({key}) {eq.conditions[key].value:<12} {eq.details[key]}")
    verdict = eq.consistent_with_greenberg
    print("  data " + {True: "consistent with lambda = mu = 0",
                       False: "rule out lambda = mu = 0",
                       None: "do not decide lambda = mu = 0"}[verdict])
    for msg in eq.inconsistencies:
        print(f"  INCONSISTENT {msg}")

    if bounds.violations or eq.inconsistencies:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    inst = parse_instance(args.instance)
    try:
        model = S.make_model(inst, args.policy, args.max_steps)
    except F.InconsistentDataError as exc:
        _err(f"{args.instance}: {exc}")
        return EXIT_INPUT
    oracle = None
    if args.oracle:
        try:
            oracle = S.exact_expected_steps(model, args.oracle_max_order)
        except S.LatticeTooLargeError as exc:
            _err(f"oracle: {exc}")
            return EXIT_ORACLE
        except ValueError as exc:
            _err(f"oracle: {exc}")
            return EXIT_INPUT
    dist = S.monte_carlo(model, args.trials, args.seed)
    print(f"model: class {model.class_part}, norm {model.norm_part}, "
          f"junk valuation {model.junk_valuation}, policy {model.policy.value}")
    for note in dist.model_assumptions:
        print(f"assumption: {note}")
    print(f"trials: {dist.trials}  seed: {args.seed}")
    print(f"mean b: {dist.mean:.6f}  variance: {dist.variance:.6f}  std error: {dist.std_error:.6f}")
    print(f"P(b <= 1): {dist.prob_b_le_1:.6f}")
    a, bi, bii = dist.case_totals
    print(f"cases: A={a} B(i)={bi} B(ii)={bii}")
    print(f"diverged: {dist.divergence_count}")
    print("histogram: " + " ".join(f"{b}:{k}" for b, k in dist.histogram.items()))
    if oracle is not None:
        se = dist.std_error
        dev = (dist.mean - float(oracle)) / se if se > 0 else 0.0
        print(f"exact expected b: {oracle} ({float(oracle):.6f})  deviation: {dev:+.2f} SE")
    if args.csv:
        _write_csv(args.csv, ("b", "count"), list(dist.histogram.items()))
    if dist.divergence_count:
        _err(f"{dist.divergence_count} trial(s) reached max_steps={model.max_steps}")
        return EXIT_VIOLATION
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1); 2 is reserved for violations
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="greenberg-lab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filtrate", help="filtration of a module under sigma")
    p.add_argument("--module", required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--csv")
    p.add_argument("--enumeration-bound", type=int, default=3**6)
    p.set_defaults(func=cmd_filtrate)

    p = sub.add_parser("fit", help="fit Iwasawa invariants to layer orders")
    p.add_argument("--instance", required=True)
    p.add_argument("--window", type=_parse_window)
    p.add_argument("--auto-rebase", action="store_true")
    p.add_argument("--lambda-max", type=int, default=10)
    p.add_argument("--mu-max", type=int, default=10)
    p.add_argument("--nu-bound", type=int, default=20)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check", help="audit tower data against the b_n bounds")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo simulation of b")
    p.add_argument("--instance", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--policy", choices=[x.value for x in S.Policy], default="single")
    p.add_argument("--max-steps", type=int, default=S.DEFAULT_MAX_STEPS)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--oracle-max-order", type=int, default=S.DEFAULT_ORACLE_MAX_ORDER)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "trials", 1) < 1:
            parser.error("--trials must be >= 1")
        if getattr(args, "seed", 0) < 0:
            parser.error("--seed must be non-negative")
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _err(f"{exc}")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
