"""Command-line front end: ``gsp eval | fit | check | assort | examples``.

Results go to stdout as an aligned text report, or as JSON with ``--json``.
``--out FILE`` always writes the JSON document, byte-identical to what
``--json`` prints. Exit codes: 0 success (verdicts included), 2 input
error, 3 quality gate failed (``fit --require-exact``).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Sequence

from gsp import analysis, datasets
from gsp.assortment import (
    EXACT_CAP,
    optimal_assortment,
    ratio_report,
    revenue_ordered,
    solution_to_dict,
)
from gsp.core import (
    NO_CHOICE,
    CapExceededError,
    ChoiceTable,
    GSPError,
    ValidationError,
    all_subsets,
    choice_table,
    make_assortment,
)
from gsp.estimation import DEFAULT_UNIVERSE_CAP, FitConfig, fit

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_QUALITY = 3
CAP_ENV = "GSP_UNIVERSE_CAP"


class InputError(Exception):
    pass


# -- formatting -----------------------------------------------------------------

def _fmt_set(S) -> str:
    return "{" + ",".join(map(str, S)) + "}"


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows)


def format_table(table: ChoiceTable) -> str:
    """Assortments as rows, alternatives as columns, percentages to 2 decimals."""
    N = table.universe_size
    rows = [["assortment", *map(str, range(1, N + 1)), "none"]]
    for S, shares in table.rows.items():
        cells = [f"{100 * shares[i]:.2f}%" if i in shares else "-" for i in range(1, N + 1)]
        rows.append([_fmt_set(S), *cells, f"{100 * shares[NO_CHOICE]:.2f}%"])
    return _align(rows)


def format_model(model) -> str:
    rows = [["type", "weight", "kind"]]
    for t, w in model.atoms:
        rows.append([str(t), f"{w:.6g}", "rational" if t.rational else "irrational"])
    return _align(rows)


def _emit(args, payload: dict[str, Any], text: str) -> None:
    doc = datasets.dumps(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
    print(doc if args.json else text)


# -- input helpers --------------------------------------------------------------

def _read_assortments(path: str, N: int) -> list:
    data = datasets.read_json(path)
    if isinstance(data, dict):
        if "assortments" in data:
            data = data["assortments"]
        elif "rows" in data:
            data = [row.get("assortment") for row in data["rows"] if isinstance(row, dict)]
    if not isinstance(data, list) or not data:
        raise ValidationError(f"{path}: expected a non-empty list of assortments")
    out = []
    for k, S in enumerate(data):
        if not isinstance(S, list):
            raise ValidationError(f"assortments[{k}]: expected a list of integers")
        try:
            members = make_assortment(S, N)
        except ValidationError as exc:
            raise ValidationError(f"assortments[{k}]: {exc}") from None
        if not members:
            raise ValidationError(f"assortments[{k}]: empty assortment")
        out.append(members)
    return out


def universe_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_UNIVERSE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"{CAP_ENV}={raw!r} is not an integer") from None
    if cap < 1:
        raise InputError(f"{CAP_ENV} must be >= 1, got {cap}")
    return cap


# -- subcommands ----------------------------------------------------------------

def cmd_eval(args) -> int:
    model = datasets.read_model(args.model)
    N = model.universe_size
    if args.all_subsets is not None:
        if args.all_subsets != N:
            raise InputError(f"--all-subsets {args.all_subsets} does not match the model's N={N}")
        assortments = all_subsets(N)
    else:
        assortments = _read_assortments(args.assortments, N)
    table = choice_table(model, assortments)
    _emit(args, datasets.table_to_dict(table), format_table(table))
    return EXIT_OK


def cmd_fit(args) -> int:
    dataset = datasets.read_dataset(args.data)
    config = FitConfig(max_atoms=args.max_atoms, irrational_penalty=args.irrational_penalty,
                       max_seq_len=args.cap_seq_len, universe_cap=universe_cap())
    try:
        result = fit(dataset, config)
    except CapExceededError as exc:
        raise InputError(f"{exc}. Raise the cap with {CAP_ENV}=<N> or limit sequences "
                         "with --cap-seq-len L") from None
    text = "\n".join([
        f"residual        {result.residual_norm:.6g}",
        f"support size    {result.support_size}",
        f"irrational mass {result.irrational_mass:.6g}",
        f"iterations      {result.iterations} ({result.stop_reason})",
        "",
        format_model(result.model),
    ])
    _emit(args, datasets.fit_result_to_dict(result), text)
    if args.require_exact and result.residual_norm > args.tol:
        print(f"residual {result.residual_norm:.3g} exceeds tolerance {args.tol:g}", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


def _check_report(table: ChoiceTable, args) -> tuple[dict, list[str]]:
    run_all = not (args.regularity or args.monotone or args.ram or args.gsp_membership)
    out: dict[str, Any] = {}
    lines: list[str] = []
    if run_all or args.regularity:
        v = analysis.check_regularity(table)
        out["regularity"] = {
            "regular": not v,
            "violations": [{"alternative": x.alternative, "smaller_set": list(x.smaller_set),
                            "larger_set": list(x.larger_set), "p_small": x.p_small,
                            "p_large": x.p_large} for x in v],
        }
        lines.append(f"regularity: {'holds' if not v else f'{len(v)} violation(s)'}")
        lines.extend(f"  {x}" for x in v)
    if run_all or args.monotone:
        v = analysis.check_demand_monotonicity(table)
        out["monotone"] = {"monotone": not v,
                           "violations": [[list(a), list(b)] for a, b in v]}
        lines.append(f"monotone total demand: {'holds' if not v else f'{len(v)} violation(s)'}")
        lines.extend(f"  purchase({_fmt_set(a)}) > purchase({_fmt_set(b)})" for a, b in v)
    if run_all or args.ram:
        r = analysis.ram_membership(table)
        verdict = "undetermined" if r.is_ram is None else r.is_ram
        out["ram"] = {"verdict": verdict, "cycle": r.cycle,
                      "edges": sorted(map(list, r.relation.edges))}
        edges = ", ".join(f"({a},{b})" for a, b in sorted(r.relation.edges)) or "none"
        lines.append(f"RAM: {verdict if isinstance(verdict, str) else str(verdict).lower()}; precedence edges: {edges}")
        if r.cycle:
            lines.append(f"  cycle: {' -> '.join(map(str, r.cycle + r.cycle[:1]))}")
    if run_all or args.gsp_membership:
        m = analysis.gsp_membership(table)
        verdict = m.status
        if m.status == analysis.UNKNOWN and not table.is_complete():
            verdict = "undetermined"
        entry: dict[str, Any] = {"verdict": verdict}
        if m.model is not None:
            entry["model"] = datasets.model_to_dict(m.model)
        if m.certificate is not None:
            entry["certificate"] = [float(v) for v in m.certificate]
            entry["row_labels"] = m.row_labels
        if m.reason:
            entry["reason"] = m.reason
        out["gsp_membership"] = entry
        lines.append(f"GSP membership: {verdict}")
        if m.reason:
            lines.append(f"  {m.reason}")
        if m.model is not None:
            lines.append("  witness model:")
            lines.extend("    " + ln for ln in format_model(m.model).splitlines())
        if m.certificate is not None:
            lines.append("  " + m.derivation.replace("\n", "\n  "))
    return out, lines


def cmd_check(args) -> int:
    table = datasets.read_table(args.table)
    out, lines = _check_report(table, args)
    _emit(args, out, "\n".join(lines))
    return EXIT_OK


def cmd_assort(args) -> int:
    model = datasets.read_model(args.model)
    revenue = datasets.read_revenues(args.revenues, model.universe_size)
    revenue.check_covers(model.universe_size)
    try:
        if args.method == "both":
            report = ratio_report(model, revenue, args.cap)
            _emit(args, report.to_dict(), report.to_text())
            return EXIT_OK
        if args.method == "exact":
            sol = optimal_assortment(model, revenue, args.cap)
        else:
            sol = revenue_ordered(model, revenue)
    except CapExceededError as exc:
        raise InputError(str(exc)) from None
    text = _align([["method", "assortment", "revenue"],
                   [sol.method, _fmt_set(sol.assortment), f"{sol.expected_revenue:.6g}"]])
    _emit(args, solution_to_dict(sol), text)
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.export:
        paths = datasets.export_examples(args.export)
        payload = {"exported": [str(p) for p in paths]}
        _emit(args, payload, "\n".join(map(str, paths)))
        return EXIT_OK
    if args.verify:
        results = datasets.verify_all()
        payload = {name: {"passed": all(c.passed for c in checks),
                          "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                                     for c in checks]}
                   for name, checks in results.items()}
        lines = []
        for name, checks in results.items():
            ok = sum(c.passed for c in checks)
            lines.append(f"{name:<15} {'PASS' if ok == len(checks) else 'FAIL'} ({ok}/{len(checks)} checks)")
            lines.extend(f"    failed: {c.name} ({c.detail})" for c in checks if not c.passed)
        n_pass = sum(p["passed"] for p in payload.values())
        lines.append(f"{n_pass}/{len(payload)} examples verified")
        _emit(args, payload, "\n".join(lines))
        return EXIT_OK if n_pass == len(payload) else EXIT_QUALITY
    payload = {"examples": list(datasets.EXAMPLE_NAMES)}
    _emit(args, payload, "\n".join(datasets.EXAMPLE_NAMES))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p):
        p.add_argument("--out", metavar="FILE", help="also write the JSON result to FILE")
        p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("eval", help="evaluate a model on assortments")
    p.add_argument("--model", required=True, metavar="FILE")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--assortments", metavar="FILE",
                     help="JSON list of assortments (or a table/dataset file)")
    src.add_argument("--all-subsets", type=_positive_int, metavar="N")
    output_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fit", help="fit a sparse model to observed shares")
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--max-atoms", required=True, type=_positive_int, metavar="K")
    p.add_argument("--irrational-penalty", type=_nonneg_float, default=0.0, metavar="X")
    p.add_argument("--cap-seq-len", type=_positive_int, default=None, metavar="L")
    p.add_argument("--require-exact", action="store_true",
                   help="exit 3 when the residual exceeds --tol")
    p.add_argument("--tol", type=_nonneg_float, default=1e-7)
    output_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check", help="structural diagnostics on a choice table")
    p.add_argument("--table", required=True, metavar="FILE")
    for flag in ("--regularity", "--monotone", "--ram", "--gsp-membership"):
        p.add_argument(flag, action="store_true")
    output_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("assort", help="assortment optimization")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--revenues", required=True, metavar="FILE")
    p.add_argument("--method", choices=("exact", "revenue-ordered", "both"), default="both")
    p.add_argument("--cap", type=_positive_int, default=EXACT_CAP,
                   help="largest N for exact search")
    output_flags(p)
    p.set_defaults(func=cmd_assort)

    p = sub.add_parser("examples", help="built-in worked examples")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--list", action="store_true")
    mode.add_argument("--export", metavar="DIR")
    mode.add_argument("--verify", action="store_true")
    output_flags(p)
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, GSPError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
