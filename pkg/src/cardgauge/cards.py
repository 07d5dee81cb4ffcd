"""Card documents: parsing, entry classification, and blank templates.

Two input formats are accepted.  The canonical format is a YAML mapping
with the reserved keys ``project_id``, ``task_family`` and
``card_version`` followed by one section per module id.  The narrative
format is Markdown whose ``##`` headings name modules and whose
``**field**: value`` lines name parameters.  A document whose first
non-blank line starts with ``#`` is read as narrative; anything else is
read as canonical.  See ``docs/card-format.md`` for the full grammar.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence
from urllib.parse import urlparse

import yaml

from .errors import EmptyDocument, ParseError
from .taxonomy import (
    RESERVED_CARD_KEYS,
    GroupNode,
    ParameterSpec,
    ResolutionKind,
    Taxonomy,
    fold_name,
    resolve_field,
)

DEFAULT_PLACEHOLDER_TOKENS = frozenset(
    {"", "tbd", "todo", "n/a", "na", "tba", "-", "?", "coming soon"}
)
MIN_SUBSTANTIVE_CHARS = 3

EVIDENCE_KINDS = ("url", "file_path", "hash", "doi")
_HASH_RE = re.compile(r"^[0-9a-fA-F]{7,}$")
_DOI_RE = re.compile(r"^10\.\d{4,9}/\S+$")


class Status(str, enum.Enum):
    DOCUMENTED = "documented"
    PLACEHOLDER = "placeholder"
    ABSENT = "absent"


@dataclass(frozen=True)
class EvidenceLink:
    kind: str
    value: str

    def __post_init__(self):
        problem = evidence_problem(self.kind, self.value)
        if problem:
            raise ValueError(problem)

    def __str__(self) -> str:
        return f"{self.kind}:{self.value}"


def evidence_problem(kind: str, value: str) -> str | None:
    """Return why ``(kind, value)`` is not a valid evidence link, or None.

    Only syntax is checked; links are never dereferenced.
    """
    if kind not in EVIDENCE_KINDS:
        return f"unknown evidence kind {kind!r} (expected one of {', '.join(EVIDENCE_KINDS)})"
    if not isinstance(value, str) or not value.strip():
        return f"{kind} evidence value is empty"
    value = value.strip()
    if kind == "url":
        parsed = urlparse(value)
        if parsed.scheme not in ("http", "https", "ftp", "s3", "gs") or not parsed.netloc:
            return f"not an absolute URL: {value!r}"
    elif kind == "hash":
        if not _HASH_RE.match(value):
            return f"hash must be at least 7 hex digits: {value!r}"
    elif kind == "doi":
        if not _DOI_RE.match(value):
            return f"not a DOI (10.NNNN/suffix): {value!r}"
    elif kind == "file_path":
        if "\x00" in value:
            return "file path contains a NUL byte"
    return None


def classify_entry(
    content: str | None,
    evidence_links: Sequence[EvidenceLink] = (),
    placeholder_tokens: Iterable[str] | None = None,
) -> Status:
    """Decide whether a present field counts as documented.

    Any evidence link makes the entry documented.  Without one, empty
    text, a placeholder token (case-insensitive), or fewer than three
    non-whitespace characters is a placeholder.

    >>> classify_entry("TODO")
    <Status.PLACEHOLDER: 'placeholder'>
    >>> classify_entry("", [EvidenceLink("hash", "9f2a1c4")])
    <Status.DOCUMENTED: 'documented'>
    """
    if evidence_links:
        return Status.DOCUMENTED
    tokens = DEFAULT_PLACEHOLDER_TOKENS if placeholder_tokens is None else placeholder_tokens
    text = (content or "").strip()
    if text.lower() in {t.strip().lower() for t in tokens}:
        return Status.PLACEHOLDER
    if sum(1 for ch in text if not ch.isspace()) < MIN_SUBSTANTIVE_CHARS:
        return Status.PLACEHOLDER
    return Status.DOCUMENTED


@dataclass(frozen=True)
class FieldEntry:
    parameter_id: str
    content: str = ""
    evidence_links: tuple[EvidenceLink, ...] = ()
    status: Status = Status.ABSENT


@dataclass
class CardDocument:
    project_id: str
    entries: dict[str, FieldEntry] = field(default_factory=dict)
    task_family: str | None = None
    card_version: str | None = None
    unknown_fields: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def entry(self, pid: str) -> FieldEntry:
        """The entry for ``pid``; a synthesized Absent entry if it never appeared."""
        return self.entries.get(pid) or FieldEntry(pid)

    def status(self, pid: str) -> Status:
        e = self.entries.get(pid)
        return e.status if e else Status.ABSENT

    def documented_set(self) -> frozenset[str]:
        return frozenset(pid for pid, e in self.entries.items() if e.status is Status.DOCUMENTED)


# -- parsing -----------------------------------------------------------------


def detect_format(source: str) -> str:
    for line in source.splitlines():
        if line.strip():
            return "narrative" if line.lstrip().startswith("#") else "canonical"
    return "canonical"


def parse_card(
    source: str | bytes,
    taxonomy: Taxonomy,
    *,
    format: str = "auto",
    project_id: str | None = None,
    placeholder_tokens: Iterable[str] | None = None,
) -> CardDocument:
    """Parse card content into a :class:`CardDocument`.

    ``project_id`` is used when the document does not name one itself.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"card is not UTF-8: {exc}") from None
    if not source.strip():
        raise EmptyDocument()
    fmt = detect_format(source) if format == "auto" else format
    tokens = None if placeholder_tokens is None else frozenset(placeholder_tokens)
    builder = _CardBuilder(taxonomy, tokens)
    if fmt == "canonical":
        builder.read_canonical(source)
    elif fmt == "narrative":
        builder.read_narrative(source)
    else:
        raise ValueError(f"unknown card format {format!r}")
    return builder.finish(project_id)


class _CardBuilder:
    def __init__(self, taxonomy: Taxonomy, tokens):
        self.tax = taxonomy
        self.tokens = tokens
        self.meta: dict[str, str | None] = {}
        self.entries: dict[str, FieldEntry] = {}
        self.unknown: list[str] = []
        self.warnings: list[str] = []

    def finish(self, fallback_id: str | None) -> CardDocument:
        pid = self.meta.get("project_id") or fallback_id or ""
        return CardDocument(
            project_id=pid,
            task_family=self.meta.get("task_family") or None,
            card_version=self.meta.get("card_version") or None,
            entries=self.entries,
            unknown_fields=self.unknown,
            warnings=self.warnings,
        )

    def add_field(self, raw: str, content: str, evidence: list[EvidenceLink],
                  section: str | None, line: int | None, path: str):
        if not raw.strip() or not fold_name(raw):
            raise ParseError("empty field name", line, path)
        key = fold_name(raw)
        if key in RESERVED_CARD_KEYS:
            self.meta[key] = content.strip() or None
            return
        res = resolve_field(raw, self.tax)
        if res.kind is ResolutionKind.UNKNOWN:
            self.unknown.append(raw)
            return
        if res.kind is ResolutionKind.IRRELEVANT:
            return
        status = classify_entry(content, evidence, self.tokens)
        where = f" (line {line})" if line is not None else ""
        for pid in res.parameter_ids:
            spec = self.tax.parameter(pid)
            if section is not None and spec.module_id != section:
                self.warnings.append(
                    f"{raw!r} maps to {pid!r} in module {spec.module_id!r} "
                    f"but is listed under {section!r}{where}"
                )
            if pid in self.entries:
                self.warnings.append(f"{pid!r} given more than once; last occurrence wins{where}")
            self.entries[pid] = FieldEntry(pid, content, tuple(evidence), status)

    # canonical --------------------------------------------------------------

    def read_canonical(self, source: str):
        loader = yaml.SafeLoader(source)
        try:
            root = loader.get_single_node()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                             mark.line + 1 if mark else None) from None
        finally:
            loader.dispose()
        if root is None or _is_null(root):
            raise EmptyDocument()
        if not isinstance(root, yaml.MappingNode):
            raise ParseError("card must be a mapping at the top level", _line(root))
        self._ctor = yaml.SafeLoader("")
        module_ids = {m.id for m in self.tax.modules}
        for key, raw, line in self._pairs(root, ""):
            if key in RESERVED_CARD_KEYS:
                value = self._scalar(raw, key)
                self.meta[key] = None if value is None else str(value).strip()
            elif key in module_ids:
                if _is_null(raw):
                    continue
                if not isinstance(raw, yaml.MappingNode):
                    raise ParseError(f"module section {key!r} must be a mapping", line, key)
                for fkey, fval, fline in self._pairs(raw, key):
                    path = f"{key}.{fkey}"
                    content, evidence = self._field_value(fval, path)
                    self.add_field(fkey, content, evidence, key, fline, path)
            else:
                content, evidence = self._field_value(raw, key)
                self.add_field(key, content, evidence, None, line, key)

    def _pairs(self, node: yaml.MappingNode, prefix: str):
        seen: set[str] = set()
        for knode, vnode in node.value:
            key = self._scalar(knode, prefix)
            line = _line(knode)
            if key is None or isinstance(key, (list, dict)):
                raise ParseError("mapping keys must be scalars", line, prefix or None)
            key = str(key)
            if key in seen:
                where = f"{prefix}.{key}" if prefix else key
                self.warnings.append(f"key {where!r} repeated; last occurrence wins (line {line})")
            seen.add(key)
            yield key, vnode, line

    def _scalar(self, node, path):
        try:
            return self._ctor.construct_object(node, deep=True)
        except yaml.YAMLError as exc:
            raise ParseError(str(exc), _line(node), path) from None

    def _field_value(self, node, path: str) -> tuple[str, list[EvidenceLink]]:
        line = _line(node)
        if isinstance(node, yaml.MappingNode):
            value = self._scalar(node, path)
            extra = set(map(str, value)) - {"text", "evidence"}
            if extra:
                raise ParseError(f"unexpected keys in field object: {sorted(extra)}", line, path)
            text = value.get("text")
            if text is not None and not isinstance(text, str):
                text = str(text)
            evidence = self._evidence(value.get("evidence"), line, path)
            return text or "", evidence
        value = self._scalar(node, path)
        if value is None:
            return "", []
        if isinstance(value, list):
            if any(isinstance(v, (dict, list)) for v in value):
                raise ParseError("list values must contain scalars only", line, path)
            return ", ".join(str(v) for v in value), []
        return str(value), []

    @staticmethod
    def _evidence(raw, line, path) -> list[EvidenceLink]:
        if raw is None:
            return []
        if not isinstance(raw, list):
            raise ParseError("'evidence' must be a list", line, f"{path}.evidence")
        out = []
        for i, item in enumerate(raw):
            ipath = f"{path}.evidence[{i}]"
            if not isinstance(item, dict) or set(item) != {"kind", "value"}:
                raise ParseError("evidence items need exactly 'kind' and 'value'", line, ipath)
            kind, value = str(item["kind"]), item["value"]
            problem = evidence_problem(kind, value if isinstance(value, str) else str(value))
            if problem:
                raise ParseError(problem, line, ipath)
            out.append(EvidenceLink(kind, str(value).strip()))
        return out

    # narrative --------------------------------------------------------------

    _HEADING = re.compile(r"^(#{1,6})\s+(.*?)\s*#*\s*$")
    _FIELD = re.compile(r"^\s*(?:[-*]\s+)?\*\*(.+?)\*\*\s*:\s*(.*)$")
    _EVIDENCE = re.compile(r"^\s*[-*]\s+([a-z_]+)\s*:\s*(.*?)\s*$")

    def read_narrative(self, source: str):
        section: str | None = None
        current: dict | None = None

        def flush():
            nonlocal current
            if current is not None:
                content = "\n".join(current["lines"]).strip()
                self.add_field(current["raw"], content, current["evidence"],
                               current["section"], current["line"], current["raw"])
            current = None

        for lineno, line in enumerate(source.splitlines(), start=1):
            m = self._HEADING.match(line)
            if m:
                flush()
                level, title = len(m.group(1)), m.group(2)
                if level == 2:
                    mod = self.tax.find_module(title)
                    if mod is None:
                        self.warnings.append(f"heading {title!r} names no module (line {lineno})")
                    section = mod.id if mod else None
                continue
            m = self._FIELD.match(line)
            if m:
                flush()
                current = {"raw": m.group(1).strip().rstrip(":"), "lines": [m.group(2)],
                           "evidence": [], "section": section, "line": lineno}
                continue
            if current is None:
                continue
            m = self._EVIDENCE.match(line)
            if m and m.group(1) in EVIDENCE_KINDS:
                problem = evidence_problem(m.group(1), m.group(2))
                if problem:
                    raise ParseError(problem, lineno, current["raw"])
                current["evidence"].append(EvidenceLink(m.group(1), m.group(2)))
            else:
                current["lines"].append(line.strip())
        flush()


def _line(node) -> int | None:
    mark = getattr(node, "start_mark", None)
    return mark.line + 1 if mark is not None else None


def _is_null(node) -> bool:
    return isinstance(node, yaml.ScalarNode) and node.tag == "tag:yaml.org,2002:null"


# -- templates ---------------------------------------------------------------


def emit_template(taxonomy: Taxonomy, module_filter: str | None = None) -> str:
    """Blank canonical card with one empty slot per leaf.

    Each slot carries its description as a trailing comment; group names
    appear as comment lines so the hierarchy stays visible.
    """
    modules = [taxonomy.module(module_filter)] if module_filter else list(taxonomy.modules)
    out = [
        "---",
        f"# cardgauge card template (taxonomy {taxonomy.version})",
        "# Fill each slot with substantive text, or use the object form",
        "#   field: {text: ..., evidence: [{kind: url, value: https://...}]}",
        "# Placeholders such as TBD or TODO do not count as documented.",
        'project_id: ""',
        'task_family: ""',
        'card_version: "1"',
    ]
    for m in modules:
        out.append("")
        out.append(f"# {m.ordinal}. {m.display_name}")
        out.append(f"{m.id}:")
        _emit_nodes(m.children, 1, out)
    return "\n".join(out) + "\n"


def _emit_nodes(nodes, depth: int, out: list[str]):
    pad = "  "
    for node in nodes:
        if isinstance(node, GroupNode):
            out.append(f"{pad}# {'  ' * (depth - 1)}{node.name}")
            _emit_nodes(node.children, depth + 1, out)
        else:
            out.append(_slot(node, pad))


def _slot(p: ParameterSpec, pad: str) -> str:
    hint = p.description or p.display_name
    if p.evidence_expected:
        hint += " [evidence link expected]"
    return f'{pad}{p.id}: ""  # {hint}'
