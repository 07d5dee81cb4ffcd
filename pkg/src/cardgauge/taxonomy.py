"""Hierarchical parameter taxonomy: data model, loader, validation, and
raw field-name resolution.

A taxonomy is a fixed set of Level-0 modules, each holding a containment
tree of group nodes that terminates in atomic parameters.  Loading is the
only place the tree is validated; a :class:`Taxonomy` is immutable
afterwards and safe to share between threads.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterator, Mapping, Union

import yaml

from .errors import (
    AliasCollision,
    DepthExceeded,
    DuplicateId,
    ModuleCountViolation,
    SchemaError,
    UnknownModule,
    UnknownParameter,
)

MODULE_COUNT = 8
MAX_PATH_DEPTH = 4  # group levels below a module; leaves sit at display level 1..5
RESERVED_CARD_KEYS = ("project_id", "task_family", "card_version")

_ID_RE = re.compile(r"^[a-z][a-z0-9]*(?:_[a-z0-9]+)*$")
_FOLD_RE = re.compile(r"[\s_\-]+")


def fold_name(raw: str) -> str:
    """Normalize a raw field name for matching.

    Lowercases, trims, and collapses runs of whitespace, underscores and
    hyphens into a single underscore.

    >>> fold_name("  Model-Title ")
    'model_title'
    >>> fold_name("coming   soon")
    'coming_soon'
    """
    return _FOLD_RE.sub("_", raw.strip().lower()).strip("_")


@dataclass(frozen=True)
class ParameterSpec:
    id: str
    display_name: str
    module_id: str
    path: tuple[str, ...] = ()
    description: str = ""
    aliases: tuple[str, ...] = ()
    evidence_expected: bool = False

    @property
    def level(self) -> int:
        """Display level below the module (1..5)."""
        return len(self.path) + 1


@dataclass(frozen=True)
class GroupNode:
    """Intermediate containment node; carries a name and children only."""

    name: str
    children: tuple[Union["GroupNode", ParameterSpec], ...]


@dataclass(frozen=True)
class ModuleSpec:
    id: str
    display_name: str
    ordinal: int
    children: tuple[Union[GroupNode, ParameterSpec], ...]

    def leaves(self) -> Iterator[ParameterSpec]:
        """Depth-first walk in file order."""
        stack = list(reversed(self.children))
        while stack:
            node = stack.pop()
            if isinstance(node, ParameterSpec):
                yield node
            else:
                stack.extend(reversed(node.children))


class ResolutionKind(enum.Enum):
    ATOMIC = "atomic"
    COMPOUND = "compound"
    IRRELEVANT = "irrelevant"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Resolution:
    kind: ResolutionKind
    parameter_ids: tuple[str, ...] = ()

    @classmethod
    def atomic(cls, pid: str) -> "Resolution":
        return cls(ResolutionKind.ATOMIC, (pid,))

    @classmethod
    def compound(cls, pids) -> "Resolution":
        return cls(ResolutionKind.COMPOUND, tuple(pids))


IRRELEVANT = Resolution(ResolutionKind.IRRELEVANT)
UNKNOWN = Resolution(ResolutionKind.UNKNOWN)


@dataclass(frozen=True)
class Taxonomy:
    version: str
    modules: tuple[ModuleSpec, ...]
    compound_map: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    irrelevant_fields: tuple[str, ...] = ()

    _params: dict = field(default=None, init=False, repr=False, compare=False)
    _modules: dict = field(default=None, init=False, repr=False, compare=False)
    _lookup: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        params: dict[str, ParameterSpec] = {}
        for m in self.modules:
            for p in m.leaves():
                params[p.id] = p
        lookup: dict[str, Resolution] = {}
        for pid, p in params.items():
            lookup[fold_name(pid)] = Resolution.atomic(pid)
            for alias in p.aliases:
                lookup.setdefault(fold_name(alias), Resolution.atomic(pid))
        for raw, targets in self.compound_map.items():
            lookup.setdefault(fold_name(raw), Resolution.compound(targets))
        for raw in self.irrelevant_fields:
            lookup.setdefault(fold_name(raw), IRRELEVANT)
        object.__setattr__(self, "_params", params)
        object.__setattr__(self, "_modules", {m.id: m for m in self.modules})
        object.__setattr__(self, "_lookup", lookup)

    @property
    def module_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.modules)

    @property
    def parameter_ids(self) -> tuple[str, ...]:
        return tuple(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def __contains__(self, pid: object) -> bool:
        return pid in self._params

    def module(self, module_id: str) -> ModuleSpec:
        try:
            return self._modules[module_id]
        except KeyError:
            raise UnknownModule(module_id) from None

    def parameter(self, pid: str) -> ParameterSpec:
        try:
            return self._params[pid]
        except KeyError:
            raise UnknownParameter(pid) from None

    def find_module(self, label: str) -> ModuleSpec | None:
        """Match a module by id or display name (folded)."""
        key = fold_name(label)
        for m in self.modules:
            if key in (fold_name(m.id), fold_name(m.display_name)):
                return m
        return None


def resolve_field(raw_name: str, taxonomy: Taxonomy) -> Resolution:
    """Map a raw field name to canonical parameter id(s).

    Ids and aliases give an atomic resolution, compound keys expand to
    their atomic targets, listed repository metadata is irrelevant, and
    anything else is unknown.
    """
    key = fold_name(raw_name)
    if not key:
        raise ValueError("raw field name is empty")
    return taxonomy._lookup.get(key, UNKNOWN)


def module_parameters(taxonomy: Taxonomy, module_id: str) -> list[ParameterSpec]:
    """Leaves of one module, depth-first in file order."""
    return list(taxonomy.module(module_id).leaves())


# -- loading -----------------------------------------------------------------


def default_taxonomy_text() -> str:
    return resources.files("cardgauge.data").joinpath("default_taxonomy.yaml").read_text(
        encoding="utf-8"
    )


def load_default_taxonomy() -> Taxonomy:
    return load_taxonomy(default_taxonomy_text())


def load_taxonomy(source: str | bytes, *, strict_modules: bool = True) -> Taxonomy:
    """Parse and validate taxonomy file content.

    With ``strict_modules`` (the default) the file must define exactly
    eight modules; pass ``False`` to accept any positive count.
    """
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark is not None else None
        raise SchemaError(f"not a valid taxonomy document: {exc}", loc) from None
    if not isinstance(doc, dict):
        raise SchemaError("taxonomy document must be a mapping")
    return _Builder(doc, strict_modules).build()


class _Builder:
    def __init__(self, doc: dict, strict_modules: bool):
        self.doc = doc
        self.strict = strict_modules
        self.seen_ids: dict[str, str] = {}
        self.names: dict[str, str] = {}  # folded name -> owner description

    def build(self) -> Taxonomy:
        doc = self.doc
        unknown = set(doc) - {"version", "modules", "compounds", "irrelevant"}
        if unknown:
            raise SchemaError(f"unexpected top-level keys: {sorted(unknown)}")
        version = doc.get("version")
        if not isinstance(version, str) or not version.strip():
            raise SchemaError("'version' must be a non-empty string", "version")
        raw_modules = doc.get("modules")
        if not isinstance(raw_modules, list) or not raw_modules:
            raise SchemaError("'modules' must be a non-empty list", "modules")
        if self.strict and len(raw_modules) != MODULE_COUNT:
            raise ModuleCountViolation(
                f"expected exactly {MODULE_COUNT} modules, found {len(raw_modules)} "
                "(use the extra-modules override to relax)",
                "modules",
            )

        for key in RESERVED_CARD_KEYS:
            self.names[key] = "a reserved card key"
        modules = []
        for i, raw in enumerate(raw_modules):
            modules.append(self._module(raw, i))
        for m in modules:
            key = fold_name(m.id)
            if key in self.names:
                raise AliasCollision(f"module id {m.id!r} clashes with {self.names[key]}",
                                     f"modules[{m.ordinal - 1}]")
            self.names[key] = f"module {m.id!r}"

        for i, m in enumerate(modules):
            for p in m.leaves():
                self._claim(p.id, f"parameter {p.id!r}", f"modules[{i}]")
        for i, m in enumerate(modules):
            for p in m.leaves():
                own = {fold_name(p.id)}
                for alias in p.aliases:
                    if fold_name(alias) in own:
                        continue  # restates the id or an earlier alias of the same parameter
                    self._claim(alias, f"alias {alias!r} of {p.id!r}", f"modules[{i}]")
                    own.add(fold_name(alias))

        param_ids = {p.id for m in modules for p in m.leaves()}
        if not param_ids:
            raise SchemaError("taxonomy defines no parameters", "modules")

        compound_map = self._compounds(param_ids)
        irrelevant = self._irrelevant()
        return Taxonomy(
            version=version.strip(),
            modules=tuple(modules),
            compound_map=compound_map,
            irrelevant_fields=irrelevant,
        )

    def _claim(self, name: str, owner: str, loc: str):
        key = fold_name(name)
        if not key:
            raise SchemaError(f"{owner} folds to an empty name", loc)
        if key in self.names:
            raise AliasCollision(f"{owner} collides with {self.names[key]}", loc)
        self.names[key] = owner

    def _module(self, raw: Any, index: int) -> ModuleSpec:
        loc = f"modules[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError("module entry must be a mapping", loc)
        mid = self._ident(raw.get("id"), f"{loc}.id")
        if mid in self.seen_ids:
            raise DuplicateId(f"id {mid!r} already used by {self.seen_ids[mid]}", loc)
        self.seen_ids[mid] = f"module at {loc}"
        name = raw.get("name", mid)
        if not isinstance(name, str) or not name.strip():
            raise SchemaError("'name' must be a non-empty string", f"{loc}.name")
        children = self._children(raw.get("children"), mid, (), f"{loc}.children")
        if not children:
            raise SchemaError(f"module {mid!r} has no children", loc)
        return ModuleSpec(id=mid, display_name=name.strip(), ordinal=index + 1, children=children)

    def _children(self, raw: Any, module_id: str, path: tuple[str, ...], loc: str):
        if raw is None:
            return ()
        if not isinstance(raw, list):
            raise SchemaError("'children' must be a list", loc)
        out = []
        for i, node in enumerate(raw):
            nloc = f"{loc}[{i}]"
            if not isinstance(node, dict):
                raise SchemaError("node must be a mapping", nloc)
            if "children" in node:
                if "id" in node:
                    raise SchemaError("a node cannot have both 'id' and 'children'", nloc)
                name = node.get("name")
                if not isinstance(name, str) or not name.strip():
                    raise SchemaError("group node needs a non-empty 'name'", nloc)
                sub_path = path + (name.strip(),)
                kids = self._children(node["children"], module_id, sub_path, f"{nloc}.children")
                if not kids:
                    raise SchemaError(f"group {name!r} has no children", nloc)
                out.append(GroupNode(name=name.strip(), children=kids))
            else:
                out.append(self._leaf(node, module_id, path, nloc))
        return tuple(out)

    def _leaf(self, node: dict, module_id: str, path: tuple[str, ...], loc: str) -> ParameterSpec:
        allowed = {"id", "name", "aliases", "description", "evidence_expected"}
        extra = set(node) - allowed
        if extra:
            raise SchemaError(f"unexpected leaf keys: {sorted(extra)}", loc)
        pid = self._ident(node.get("id"), f"{loc}.id")
        if len(path) > MAX_PATH_DEPTH:
            raise DepthExceeded(
                f"parameter {pid!r} sits {len(path)} groups deep (max {MAX_PATH_DEPTH})", loc
            )
        if pid in self.seen_ids:
            raise DuplicateId(f"id {pid!r} already used by {self.seen_ids[pid]}", loc)
        self.seen_ids[pid] = f"parameter at {loc}"
        aliases = node.get("aliases") or []
        if not isinstance(aliases, list) or not all(isinstance(a, str) for a in aliases):
            raise SchemaError("'aliases' must be a list of strings", f"{loc}.aliases")
        description = node.get("description", "")
        if not isinstance(description, str):
            raise SchemaError("'description' must be a string", f"{loc}.description")
        evidence = node.get("evidence_expected", False)
        if not isinstance(evidence, bool):
            raise SchemaError("'evidence_expected' must be a boolean", f"{loc}.evidence_expected")
        name = node.get("name", pid)
        if not isinstance(name, str):
            raise SchemaError("'name' must be a string", f"{loc}.name")
        return ParameterSpec(
            id=pid,
            display_name=name.strip() or pid,
            module_id=module_id,
            path=path,
            description=" ".join(description.split()),
            aliases=tuple(aliases),
            evidence_expected=evidence,
        )

    @staticmethod
    def _ident(value: Any, loc: str) -> str:
        if not isinstance(value, str) or not _ID_RE.match(value):
            raise SchemaError(f"id must be lowercase snake-case, got {value!r}", loc)
        return value

    def _compounds(self, param_ids: set[str]) -> dict[str, tuple[str, ...]]:
        raw = self.doc.get("compounds") or []
        if not isinstance(raw, list):
            raise SchemaError("'compounds' must be a list", "compounds")
        out: dict[str, tuple[str, ...]] = {}
        for i, entry in enumerate(raw):
            loc = f"compounds[{i}]"
            if not isinstance(entry, dict) or set(entry) != {"name", "targets"}:
                raise SchemaError("compound entry needs exactly 'name' and 'targets'", loc)
            name, targets = entry["name"], entry["targets"]
            if not isinstance(name, str):
                raise SchemaError("compound 'name' must be a string", f"{loc}.name")
            if not isinstance(targets, list) or not targets:
                raise SchemaError("compound 'targets' must be a non-empty list", f"{loc}.targets")
            for t in targets:
                if t not in param_ids:
                    raise SchemaError(f"compound target {t!r} is not a parameter id",
                                      f"{loc}.targets")
            if len(set(targets)) != len(targets):
                raise SchemaError("compound targets repeat", f"{loc}.targets")
            self._claim(name, f"compound {name!r}", loc)
            out[name] = tuple(targets)
        return out

    def _irrelevant(self) -> tuple[str, ...]:
        raw = self.doc.get("irrelevant") or []
        if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
            raise SchemaError("'irrelevant' must be a list of strings", "irrelevant")
        for i, name in enumerate(raw):
            self._claim(name, f"irrelevant field {name!r}", f"irrelevant[{i}]")
        return tuple(raw)


def dump_taxonomy(taxonomy: Taxonomy) -> str:
    """Serialize back to the taxonomy file schema."""

    def node(n):
        if isinstance(n, ParameterSpec):
            d = {"id": n.id, "name": n.display_name}
            if n.aliases:
                d["aliases"] = list(n.aliases)
            if n.description:
                d["description"] = n.description
            if n.evidence_expected:
                d["evidence_expected"] = True
            return d
        return {"name": n.name, "children": [node(c) for c in n.children]}

    doc = {
        "version": taxonomy.version,
        "modules": [
            {"id": m.id, "name": m.display_name, "children": [node(c) for c in m.children]}
            for m in taxonomy.modules
        ],
    }
    if taxonomy.compound_map:
        doc["compounds"] = [{"name": k, "targets": list(v)} for k, v in taxonomy.compound_map.items()]
    if taxonomy.irrelevant_fields:
        doc["irrelevant"] = list(taxonomy.irrelevant_fields)
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)
