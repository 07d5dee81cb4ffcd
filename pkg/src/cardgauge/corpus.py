"""Corpus ingestion, parameter frequencies, and module aggregates.

A corpus is a set of parsed cards, one per project.  Each parameter's
prior is the fraction of projects that document it.  Counts are kept as
integers everywhere; ratios are derived on demand.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .cards import CardDocument, parse_card
from .errors import (
    DuplicateProject,
    EmptyCorpus,
    ParseError,
    SchemaError,
    UnknownModule,
    UnknownParameter,
    VersionMismatch,
)
from .taxonomy import Taxonomy

STATS_SCHEMA = "cardgauge.stats"
STATS_SCHEMA_VERSION = 1
CARD_SUFFIXES = (".yaml", ".yml", ".md", ".markdown")


@dataclass(frozen=True)
class CorpusRecord:
    project_id: str
    documented: frozenset[str]
    task_family: str | None = None

    @classmethod
    def from_card(cls, card: CardDocument) -> "CorpusRecord":
        return cls(card.project_id, card.documented_set(), card.task_family)


@dataclass(frozen=True)
class ModuleAggregate:
    module_id: str
    o: int  # documented occurrences summed over the module's leaves
    a: int  # leaf count
    n_projects: int

    @property
    def s_total(self) -> float:
        return self.o / self.n_projects

    @property
    def s_total_exact(self) -> Fraction:
        return Fraction(self.o, self.n_projects)


@dataclass(frozen=True)
class CorpusStats:
    taxonomy_version: str
    n_projects: int
    freq: Mapping[str, int]
    module_leaves: Mapping[str, tuple[str, ...]]
    generated_at: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_projects <= 0:
            raise EmptyCorpus("a corpus needs at least one project")
        for pid, f in self.freq.items():
            if not 0 <= f <= self.n_projects:
                raise ValueError(f"frequency of {pid!r} is {f}, outside [0, {self.n_projects}]")

    @classmethod
    def from_counts(cls, taxonomy: Taxonomy, n_projects: int, counts: Mapping[str, int],
                    generated_at: str | None = None) -> "CorpusStats":
        freq = {pid: 0 for pid in taxonomy.parameter_ids}
        for pid, f in counts.items():
            if pid not in freq:
                raise UnknownParameter(pid)
            freq[pid] = f
        leaves = {m.id: tuple(p.id for p in m.leaves()) for m in taxonomy.modules}
        return cls(taxonomy.version, n_projects, freq, leaves, generated_at)

    @property
    def module_ids(self) -> tuple[str, ...]:
        return tuple(self.module_leaves)

    def module(self, module_id: str) -> ModuleAggregate:
        try:
            leaves = self.module_leaves[module_id]
        except KeyError:
            raise UnknownModule(module_id) from None
        return ModuleAggregate(module_id, sum(self.freq[p] for p in leaves), len(leaves),
                               self.n_projects)

    def modules(self) -> list[ModuleAggregate]:
        return [self.module(m) for m in self.module_leaves]

    @property
    def o_all(self) -> int:
        return sum(self.freq.values())

    @property
    def a_all(self) -> int:
        return len(self.freq)

    def prior(self, pid: str) -> float:
        return parameter_prior(self, pid)


def parameter_prior(stats: CorpusStats, parameter_id: str) -> float:
    """Corpus prior ``f_i / N`` of one parameter, in [0, 1]."""
    try:
        f = stats.freq[parameter_id]
    except KeyError:
        raise UnknownParameter(parameter_id) from None
    return f / stats.n_projects


def compute_stats(records: Iterable[CorpusRecord], taxonomy: Taxonomy,
                  generated_at: str | None = None) -> CorpusStats:
    records = list(records)
    if not records:
        raise EmptyCorpus("no records to aggregate")
    seen: set[str] = set()
    counts = {pid: 0 for pid in taxonomy.parameter_ids}
    for r in records:
        if r.project_id in seen:
            raise DuplicateProject(f"project {r.project_id!r} appears more than once")
        seen.add(r.project_id)
        for pid in r.documented:
            if pid not in counts:
                raise UnknownParameter(pid, f"record {r.project_id!r}")
            counts[pid] += 1
    return CorpusStats.from_counts(taxonomy, len(records), counts, generated_at)


# -- persistence -------------------------------------------------------------


def utc_timestamp() -> str:
    """Current UTC time, or ``$SOURCE_DATE_EPOCH`` when set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), timezone.utc).isoformat().replace("+00:00", "Z")
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def save_stats(stats: CorpusStats) -> str:
    doc = {
        "schema": STATS_SCHEMA,
        "schema_version": STATS_SCHEMA_VERSION,
        "taxonomy_version": stats.taxonomy_version,
        "generated_at": stats.generated_at or utc_timestamp(),
        "n_projects": stats.n_projects,
        "freq": dict(stats.freq),
    }
    return json.dumps(doc, indent=2) + "\n"


def load_stats(source: str | bytes, taxonomy: Taxonomy) -> CorpusStats:
    """Load a stats file and bind it to ``taxonomy``.

    Parameters missing from ``freq`` count as zero; ids the taxonomy does
    not know are rejected.
    """
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"stats file is not JSON: {exc.msg}", f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise SchemaError("stats file must be a JSON object")
    if doc.get("schema", STATS_SCHEMA) != STATS_SCHEMA:
        raise SchemaError(f"not a stats file (schema {doc.get('schema')!r})", "schema")
    if doc.get("schema_version", STATS_SCHEMA_VERSION) != STATS_SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}",
                          "schema_version")
    for key in ("taxonomy_version", "n_projects", "freq"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")
    version = doc["taxonomy_version"]
    if version != taxonomy.version:
        raise VersionMismatch(
            f"stats were built against taxonomy {version!r}, loaded taxonomy is {taxonomy.version!r}"
        )
    n = doc["n_projects"]
    if not _is_int(n) or n <= 0:
        raise SchemaError("'n_projects' must be a positive integer", "n_projects")
    freq = doc["freq"]
    if not isinstance(freq, dict):
        raise SchemaError("'freq' must be an object", "freq")
    for pid, f in freq.items():
        if pid not in taxonomy:
            raise SchemaError(f"unknown parameter {pid!r}", f"freq.{pid}")
        if not _is_int(f) or not 0 <= f <= n:
            raise SchemaError(f"count must be an integer in [0, {n}], got {f!r}", f"freq.{pid}")
    generated = doc.get("generated_at")
    return CorpusStats.from_counts(taxonomy, n, freq, generated if isinstance(generated, str) else None)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


# -- ingestion ---------------------------------------------------------------


@dataclass(frozen=True)
class CorpusSource:
    path: Path
    task_family: str | None = None


def corpus_sources(path: str | Path) -> list[CorpusSource]:
    """Card files named by a directory or a manifest file.

    A directory contributes every card file below it, sorted by relative
    path.  A manifest is YAML: a list whose items are paths or
    ``{path: ..., task_family: ...}`` objects, resolved relative to the
    manifest's directory.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.rglob("*") if p.is_file() and p.suffix.lower() in CARD_SUFFIXES)
        return [CorpusSource(p) for p in files]
    if not path.is_file():
        raise FileNotFoundError(f"corpus path does not exist: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SchemaError(f"manifest is not valid YAML: {exc}", str(path)) from None
    if isinstance(doc, dict) and "cards" in doc:
        doc = doc["cards"]
    if not isinstance(doc, list):
        raise SchemaError("manifest must be a list of card paths", str(path))
    out = []
    for i, item in enumerate(doc):
        if isinstance(item, str):
            rel, family = item, None
        elif isinstance(item, dict) and isinstance(item.get("path"), str):
            rel, family = item["path"], item.get("task_family")
        else:
            raise SchemaError("manifest entries are paths or {path, task_family}", f"{path}[{i}]")
        out.append(CorpusSource(path.parent / rel, family))
    return out


def load_corpus(path: str | Path, taxonomy: Taxonomy, *,
                placeholder_tokens: Iterable[str] | None = None,
                workers: int = 1) -> list[CardDocument]:
    """Parse every card of a corpus directory or manifest, in source order."""
    sources = corpus_sources(path)
    if not sources:
        raise EmptyCorpus(f"no card files found under {path}")

    def load(src: CorpusSource) -> CardDocument:
        try:
            card = parse_card(src.path.read_bytes(), taxonomy, project_id=src.path.stem,
                              placeholder_tokens=placeholder_tokens)
        except ParseError as exc:
            raise ParseError(f"{src.path}: {exc.message}", exc.line, exc.path) from None
        if src.task_family:
            card.task_family = src.task_family
        return card

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(load, sources))
    return [load(s) for s in sources]


def records_from_cards(cards: Sequence[CardDocument]) -> list[CorpusRecord]:
    return [CorpusRecord.from_card(c) for c in cards]
