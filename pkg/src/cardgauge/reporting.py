"""Card reports: assembly, rendering (text, JSON, Markdown), and CI gating.

Exit statuses are part of the public contract:

====  =====================================================
0     every gated module passes under the policy
1     at least one gated module is insufficient
2     usage, parse, or configuration error (CLI level only)
3     no insufficient module, but a gated module is vacuous
      and the policy is strict
====  =====================================================

When a card has both insufficient and vacuous modules, 1 wins: an
insufficient module is an actual shortfall, a vacuous one is a flag.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .cards import CardDocument
from .corpus import CorpusStats, utc_timestamp
from .errors import SchemaError
from .scoring import ModuleScore, Verdict, score_card
from .taxonomy import Taxonomy

REPORT_SCHEMA = "cardgauge.report"
REPORT_SCHEMA_VERSION = 1
TOP_FILLS = 5

EXIT_OK = 0
EXIT_INSUFFICIENT = 1
EXIT_USAGE = 2
EXIT_VACUOUS = 3

# Ordering used to compare gate outcomes: larger is worse.
EXIT_SEVERITY = {EXIT_OK: 0, EXIT_VACUOUS: 1, EXIT_INSUFFICIENT: 2}

_VERDICT_LABEL = {
    Verdict.SUFFICIENT: "SUFFICIENT",
    Verdict.INSUFFICIENT: "INSUFFICIENT",
    Verdict.VACUOUS: "VACUOUS",
}


def fingerprint(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return "sha256:" + hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class Overall:
    passed: bool
    insufficient_modules: tuple[str, ...]
    vacuous_modules: tuple[str, ...]


@dataclass(frozen=True)
class CardReport:
    project_id: str
    taxonomy_version: str
    stats_fingerprint: str
    module_scores: tuple[ModuleScore, ...]
    module_names: Mapping[str, str] = field(default_factory=dict)
    generated_at: str | None = field(default=None, compare=False)

    @property
    def overall(self) -> Overall:
        insufficient = tuple(s.module_id for s in self.module_scores
                             if s.verdict is Verdict.INSUFFICIENT)
        vacuous = tuple(s.module_id for s in self.module_scores if s.verdict is Verdict.VACUOUS)
        return Overall(not insufficient, insufficient, vacuous)

    def score(self, module_id: str) -> ModuleScore:
        for s in self.module_scores:
            if s.module_id == module_id:
                return s
        raise KeyError(module_id)

    def name(self, module_id: str) -> str:
        return self.module_names.get(module_id, module_id)


def build_report(card: CardDocument, stats: CorpusStats, taxonomy: Taxonomy,
                 stats_fingerprint: str, generated_at: str | None = None) -> CardReport:
    return CardReport(
        project_id=card.project_id,
        taxonomy_version=taxonomy.version,
        stats_fingerprint=stats_fingerprint,
        module_scores=tuple(score_card(card, stats, taxonomy)),
        module_names={m.id: m.display_name for m in taxonomy.modules},
        generated_at=generated_at or utc_timestamp(),
    )


# -- rendering ---------------------------------------------------------------


def render_report(report: CardReport, format: str = "text", *,
                  module_order: Iterable[str] | None = None) -> str:
    """Render a report.

    ``module_order`` reorders the module rows (for example to put the
    modules a review scenario cares about first); modules it omits keep
    their taxonomy order after the listed ones.
    """
    scores = _ordered(report, module_order)
    if format == "text":
        return _render_text(report, scores)
    if format in ("json", "structured"):
        return _render_json(report, scores)
    if format in ("markdown", "md"):
        return _render_markdown(report, scores)
    raise ValueError(f"unknown report format {format!r}")


def _ordered(report: CardReport, order: Iterable[str] | None) -> list[ModuleScore]:
    scores = list(report.module_scores)
    if not order:
        return scores
    rank = {m: i for i, m in enumerate(order)}
    return sorted(scores, key=lambda s: rank.get(s.module_id, len(rank)))


def verdict_line(score: ModuleScore) -> str:
    """``0.260 / 0.384  INSUFFICIENT  shortfall 0.124``"""
    return (f"{score.cumulative_prior:.3f} / {score.baseline:.3f}  "
            f"{_VERDICT_LABEL[score.verdict]:<12}  shortfall {score.shortfall:.3f}")


def _summary(report: CardReport) -> str:
    o = report.overall
    parts = [f"{len(o.insufficient_modules)} insufficient"]
    if o.insufficient_modules:
        parts[0] += f" ({', '.join(o.insufficient_modules)})"
    parts.append(f"{len(o.vacuous_modules)} vacuous")
    if o.vacuous_modules:
        parts[1] += f" ({', '.join(o.vacuous_modules)})"
    return f"{'PASS' if o.passed else 'FAIL'}: " + "; ".join(parts)


def _render_text(report: CardReport, scores: list[ModuleScore]) -> str:
    out = io.StringIO()
    w = out.write
    w(f"project:   {report.project_id}\n")
    w(f"taxonomy:  {report.taxonomy_version}\n")
    w(f"stats:     {report.stats_fingerprint}\n")
    w(f"generated: {report.generated_at or '-'}\n\n")
    width = max([len(report.name(s.module_id)) for s in scores] + [6]) + 2
    w(f"{'module':<{width}}cumulative / baseline\n")
    for s in scores:
        w(f"{report.name(s.module_id):<{width}}{verdict_line(s)}\n")
    w(f"\noverall: {_summary(report)}\n")
    failing = [s for s in scores if s.verdict is Verdict.INSUFFICIENT]
    if failing:
        w("\nfill first:\n")
        for s in failing:
            w(f"  {report.name(s.module_id)} (shortfall {s.shortfall:.3f})\n")
            for i, (pid, prior) in enumerate(s.missing[:TOP_FILLS], start=1):
                w(f"    {i}. {pid:<32} {prior:.3f}\n")
    return out.getvalue()


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|")


def _render_markdown(report: CardReport, scores: list[ModuleScore]) -> str:
    lines = [
        f"# Documentation sufficiency: {_md_escape(report.project_id)}",
        "",
        f"- Taxonomy: `{report.taxonomy_version}`",
        f"- Stats: `{report.stats_fingerprint}`",
        f"- Generated: {report.generated_at or '-'}",
        f"- Overall: **{_summary(report)}**",
        "",
        "| Module | Cumulative | Baseline | Verdict | Shortfall |",
        "|---|---:|---:|---|---:|",
    ]
    for s in scores:
        lines.append(
            f"| {_md_escape(report.name(s.module_id))} | {s.cumulative_prior:.3f} | "
            f"{s.baseline:.3f} | {_VERDICT_LABEL[s.verdict]} | {s.shortfall:.3f} |"
        )
    failing = [s for s in scores if s.verdict is Verdict.INSUFFICIENT]
    if failing:
        lines += ["", "## Fill first"]
        for s in failing:
            lines += ["", f"### {_md_escape(report.name(s.module_id))}", "",
                      "| # | Parameter | Prior |", "|---:|---|---:|"]
            for i, (pid, prior) in enumerate(s.missing[:TOP_FILLS], start=1):
                lines.append(f"| {i} | `{pid}` | {prior:.3f} |")
    return "\n".join(lines) + "\n"


def report_to_dict(report: CardReport, scores: list[ModuleScore] | None = None) -> dict:
    o = report.overall
    return {
        "schema": REPORT_SCHEMA,
        "schema_version": REPORT_SCHEMA_VERSION,
        "project_id": report.project_id,
        "taxonomy_version": report.taxonomy_version,
        "stats_fingerprint": report.stats_fingerprint,
        "generated_at": report.generated_at,
        "overall": {
            "pass": o.passed,
            "insufficient_modules": list(o.insufficient_modules),
            "vacuous_modules": list(o.vacuous_modules),
        },
        "modules": [
            {
                "module_id": s.module_id,
                "name": report.name(s.module_id),
                "cumulative_prior": s.cumulative_prior,
                "baseline": s.baseline,
                "verdict": s.verdict.value,
                "shortfall": s.shortfall,
                "missing": [{"parameter_id": p, "prior": v} for p, v in s.missing],
            }
            for s in (report.module_scores if scores is None else scores)
        ],
    }


def _render_json(report: CardReport, scores: list[ModuleScore]) -> str:
    return json.dumps(report_to_dict(report, scores), indent=2) + "\n"


def parse_report(source: str | bytes) -> CardReport:
    """Inverse of the JSON rendering."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"report is not JSON: {exc.msg}", f"line {exc.lineno}") from None
    if not isinstance(doc, dict) or doc.get("schema") != REPORT_SCHEMA:
        raise SchemaError("not a cardgauge report", "schema")
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}",
                          "schema_version")
    try:
        scores, names = [], {}
        for i, m in enumerate(doc["modules"]):
            names[m["module_id"]] = m.get("name", m["module_id"])
            scores.append(ModuleScore(
                module_id=m["module_id"],
                cumulative_prior=float(m["cumulative_prior"]),
                baseline=float(m["baseline"]),
                verdict=Verdict(m["verdict"]),
                shortfall=float(m["shortfall"]),
                missing=tuple((x["parameter_id"], float(x["prior"])) for x in m["missing"]),
            ))
        report = CardReport(
            project_id=doc["project_id"],
            taxonomy_version=doc["taxonomy_version"],
            stats_fingerprint=doc["stats_fingerprint"],
            module_scores=tuple(scores),
            module_names=names,
            generated_at=doc.get("generated_at"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed report: {exc!r}") from None
    overall = doc.get("overall", {})
    if overall.get("pass") is not None and overall["pass"] != report.overall.passed:
        raise SchemaError("'overall.pass' disagrees with module verdicts", "overall.pass")
    return report


# -- gating ------------------------------------------------------------------


@dataclass(frozen=True)
class GatePolicy:
    """Which modules gate a release and whether vacuous modules fail it.

    ``modules`` is an allowlist of gated module ids; ``None`` gates all.
    """

    strict: bool = True
    modules: frozenset[str] | None = None

    @classmethod
    def named(cls, name: str, modules: Iterable[str] | None = None) -> "GatePolicy":
        if name not in ("strict", "allow-vacuous", "allow_vacuous"):
            raise ValueError(f"unknown gate policy {name!r}")
        return cls(strict=name == "strict", modules=frozenset(modules) if modules else None)


def gate_decision(report: CardReport, policy: GatePolicy = GatePolicy()) -> int:
    gated = [s for s in report.module_scores
             if policy.modules is None or s.module_id in policy.modules]
    if any(s.verdict is Verdict.INSUFFICIENT for s in gated):
        return EXIT_INSUFFICIENT
    if policy.strict and any(s.verdict is Verdict.VACUOUS for s in gated):
        return EXIT_VACUOUS
    return EXIT_OK
