"""Command-line interface.

Exit statuses: 0 success, 1 gate failure (an insufficient module),
2 usage/parse/config error, 3 vacuous module under a strict policy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .cards import emit_template, parse_card
from .corpus import (
    compute_stats,
    load_corpus,
    load_stats,
    records_from_cards,
    save_stats,
    utc_timestamp,
)
from .diagnostics import coverage_matrix, export_matrix
from .errors import CardGaugeError
from .reporting import (
    EXIT_OK,
    EXIT_USAGE,
    GatePolicy,
    build_report,
    fingerprint,
    gate_decision,
    render_report,
    verdict_line,
)
from .scoring import fill_first, score_module
from .taxonomy import MODULE_COUNT, default_taxonomy_text, load_taxonomy

TAXONOMY_ENV = "CARDGAUGE_TAXONOMY"


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _check_stdin(args, *names):
    used = [n for n in names if getattr(args, n, None) == "-"]
    if len(used) > 1:
        raise UsageError(f"only one input can come from stdin, got {', '.join(used)}")


def _taxonomy(args):
    path = args.taxonomy or os.environ.get(TAXONOMY_ENV)
    text = _read(path) if path else default_taxonomy_text()
    tax = load_taxonomy(text, strict_modules=not args.allow_extra_modules)
    if len(tax.modules) != MODULE_COUNT:
        print(f"warning: taxonomy has {len(tax.modules)} modules (expected {MODULE_COUNT})",
              file=sys.stderr)
    return tax


def _placeholder_tokens(args):
    if not args.placeholder_tokens:
        return None
    lines = _read(args.placeholder_tokens).decode("utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def _card(args, tax):
    return parse_card(_read(args.card), tax, project_id=None if args.card == "-" else Path(args.card).stem,
                      placeholder_tokens=_placeholder_tokens(args))


def _stats(args, tax):
    raw = _read(args.stats)
    return load_stats(raw, tax), fingerprint(raw)


def _check_modules(tax, modules):
    for m in modules or ():
        tax.module(m)


# -- commands ----------------------------------------------------------------


def cmd_stats(args) -> int:
    tax = _taxonomy(args)
    cards = load_corpus(args.corpus, tax, placeholder_tokens=_placeholder_tokens(args),
                        workers=args.workers)
    stats = compute_stats(records_from_cards(cards), tax, generated_at=utc_timestamp())
    text = save_stats(stats)
    summary = sys.stdout
    if args.output in (None, "-"):
        sys.stdout.write(text)
        summary = sys.stderr
    else:
        _write(args.output, text)
    print(f"N = {stats.n_projects} projects, taxonomy {stats.taxonomy_version}", file=summary)
    for agg in stats.modules():
        print(f"  {agg.module_id:<28} S_M = {agg.s_total:.4f}  (O_M = {agg.o}, A_M = {agg.a})",
              file=summary)
    return EXIT_OK


def cmd_score(args) -> int:
    _check_stdin(args, "card", "stats", "taxonomy")
    tax = _taxonomy(args)
    stats, fp = _stats(args, tax)
    card = _card(args, tax)
    report = build_report(card, stats, tax, fp)
    _write(args.output, render_report(report, args.format))
    if args.plot:
        from .plotting import plot_module_scores
        plot_module_scores(report, args.plot)
    return EXIT_OK


def cmd_gate(args) -> int:
    _check_stdin(args, "card", "stats", "taxonomy")
    tax = _taxonomy(args)
    _check_modules(tax, args.module)
    stats, fp = _stats(args, tax)
    card = _card(args, tax)
    report = build_report(card, stats, tax, fp)
    status = gate_decision(report, GatePolicy.named(args.policy, args.module))
    if not args.quiet:
        o = report.overall
        print(f"gate: exit {status} ({args.policy}); insufficient: "
              f"{', '.join(o.insufficient_modules) or '-'}; vacuous: "
              f"{', '.join(o.vacuous_modules) or '-'}", file=sys.stderr)
    return status


def cmd_fill_plan(args) -> int:
    _check_stdin(args, "card", "stats", "taxonomy")
    tax = _taxonomy(args)
    _check_modules(tax, args.module)
    stats, _ = _stats(args, tax)
    card = _card(args, tax)
    modules = args.module or list(tax.module_ids)
    plans = []
    for mid in modules:
        plans.append((score_module(card, mid, stats, tax), fill_first(card, mid, stats, tax)))
    if args.format == "json":
        doc = [
            {
                "module_id": plan.module_id,
                "cumulative_prior": score.cumulative_prior,
                "baseline": score.baseline,
                "verdict": score.verdict.value,
                "reaches_baseline_at": plan.reaches_baseline_at,
                "steps": [{"parameter_id": s.parameter_id, "prior": s.prior,
                           "cumulative_after": s.cumulative_after} for s in plan.steps],
            }
            for score, plan in plans
        ]
        _write(args.output, json.dumps(doc, indent=2) + "\n")
        return EXIT_OK
    out = []
    for score, plan in plans:
        out.append(f"{tax.module(plan.module_id).display_name} [{plan.module_id}]")
        out.append(f"  now: {verdict_line(score)}")
        if plan.already_met:
            out.append("  already met: no fills needed")
        else:
            for i, step in enumerate(plan.steps, start=1):
                total = score.cumulative_prior + step.cumulative_after
                mark = "  <- baseline reached" if i == plan.reaches_baseline_at else ""
                out.append(f"  {i:>3}. {step.parameter_id:<32} {step.prior:.3f}  -> {total:.3f}{mark}")
            if plan.reaches_baseline_at is None:
                out.append("  baseline not reachable")
            else:
                n = plan.reaches_baseline_at
                out.append(f"  reaches baseline after {n} fill{'s' if n != 1 else ''}")
        out.append("")
    _write(args.output, "\n".join(out))
    return EXIT_OK


def cmd_coverage(args) -> int:
    if args.csv == "-" and args.json == "-":
        raise UsageError("--csv and --json cannot both write to stdout")
    tax = _taxonomy(args)
    cards = load_corpus(args.corpus, tax, placeholder_tokens=_placeholder_tokens(args),
                        workers=args.workers)
    matrix = coverage_matrix(records_from_cards(cards), tax)
    csv_target = args.csv if (args.csv or args.json) else "-"
    if csv_target:
        _write(csv_target, export_matrix(matrix, "csv", grid=args.grid))
    if args.json:
        _write(args.json, export_matrix(matrix, "json"))
    if args.plot:
        from .plotting import plot_coverage_heatmap
        plot_coverage_heatmap(matrix, args.plot, grid=args.grid,
                              names={m.id: m.display_name for m in tax.modules})
    return EXIT_OK


def cmd_template(args) -> int:
    tax = _taxonomy(args)
    _write(args.output, emit_template(tax, args.module))
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.path:
        args.taxonomy = args.path
    tax = _taxonomy(args)
    print(f"ok: taxonomy {tax.version}, {len(tax.modules)} modules, {len(tax)} parameters, "
          f"{len(tax.compound_map)} compounds, {len(tax.irrelevant_fields)} irrelevant fields")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--taxonomy", metavar="PATH",
                        help=f"taxonomy file ('-' for stdin); defaults to ${TAXONOMY_ENV}, "
                             "then the shipped default taxonomy")
    common.add_argument("--allow-extra-modules", action="store_true",
                        help=f"accept taxonomies with other than {MODULE_COUNT} modules")
    common.add_argument("--placeholder-tokens", metavar="FILE",
                        help="file with one placeholder token per line, replacing the defaults")

    parser = argparse.ArgumentParser(
        prog="cardgauge",
        description="Score model cards against a parameter taxonomy using corpus priors.",
        epilog="exit status: 0 ok, 1 insufficient module, 2 usage/parse/config error, "
               "3 vacuous module under strict policy",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def card_stats(p):
        p.add_argument("card", help="card file ('-' for stdin)")
        p.add_argument("--stats", required=True, metavar="PATH", help="corpus stats file")

    p = sub.add_parser("stats", parents=[common], help="compute corpus stats from cards")
    p.add_argument("corpus", help="directory of card files or a manifest file")
    p.add_argument("-o", "--output", metavar="PATH", help="stats file to write (default stdout)")
    p.add_argument("--workers", type=int, default=1, help="parse cards with N threads")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", parents=[common], help="score one card")
    card_stats(p)
    p.add_argument("--format", choices=["text", "json", "structured", "markdown"], default="text")
    p.add_argument("-o", "--output", metavar="PATH")
    p.add_argument("--plot", metavar="PNG", help="also write a bar chart of module scores")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("gate", parents=[common], help="CI gate: exit status only")
    card_stats(p)
    p.add_argument("--policy", choices=["strict", "allow-vacuous"], default="strict")
    p.add_argument("--module", action="append", metavar="ID",
                   help="gate only these modules (repeatable)")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("fill-plan", parents=[common], help="what to fill first")
    card_stats(p)
    p.add_argument("--module", action="append", metavar="ID",
                   help="plan for these modules only (repeatable; default all)")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_fill_plan)

    p = sub.add_parser("coverage", parents=[common], help="task x module coverage matrix")
    p.add_argument("corpus", help="directory of card files or a manifest file")
    p.add_argument("--csv", metavar="PATH", help="CSV output ('-' for stdout, the default)")
    p.add_argument("--json", metavar="PATH", help="structured JSON output")
    p.add_argument("--grid", choices=["union", "mean"], default="union",
                   help="which grid the CSV and plot show")
    p.add_argument("--plot", metavar="PNG", help="also write a heatmap image")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("template", parents=[common], help="emit a blank card")
    p.add_argument("--module", metavar="ID", help="only this module")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("validate", parents=[common], help="validate a taxonomy file")
    p.add_argument("path", nargs="?", help="taxonomy file (default: as --taxonomy)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            return args.func(args)
        except UsageError as exc:
            parser.print_usage(sys.stderr)
            print(f"cardgauge: error: {exc}", file=sys.stderr)
        except (CardGaugeError, OSError, ValueError) as exc:
            print(f"cardgauge: error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
