"""Task-family by module coverage over a corpus.

For a task family ``t`` and module ``M`` the coverage is the fraction of
the module's leaves documented by at least one of the family's projects::

    d[t, M] = |P_t & P_M| / |P_M|

where ``P_t`` is the union of the family's documented sets.  The
per-project mean of the same ratio is kept alongside as a secondary grid.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .corpus import CorpusRecord
from .errors import CardGaugeError
from .taxonomy import Taxonomy, module_parameters

UNLABELED = "unlabeled"
MATRIX_SCHEMA = "cardgauge.coverage"
MATRIX_SCHEMA_VERSION = 1


class EmptyModule(CardGaugeError):
    pass


@dataclass(frozen=True)
class CoverageMatrix:
    task_families: tuple[str, ...]
    modules: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # union coverage, rows follow task_families
    mean_values: tuple[tuple[float, ...], ...]  # mean per-project coverage
    support: tuple[tuple[int, ...], ...]  # projects documenting >= 1 leaf of the module
    projects: tuple[int, ...]  # projects per task family

    def cell(self, task: str, module_id: str) -> float:
        return self.values[self.task_families.index(task)][self.modules.index(module_id)]

    def column(self, module_id: str) -> list[float]:
        j = self.modules.index(module_id)
        return [row[j] for row in self.values]


def _module_leaf_set(taxonomy: Taxonomy, module_id: str) -> frozenset[str]:
    leaves = frozenset(p.id for p in module_parameters(taxonomy, module_id))
    if not leaves:
        raise EmptyModule(f"module {module_id!r} has no parameters")
    return leaves


def coverage_cell(records: Sequence[CorpusRecord], module_id: str, taxonomy: Taxonomy) -> float:
    """Union coverage of one module by one task family's records."""
    leaves = _module_leaf_set(taxonomy, module_id)
    covered: set[str] = set()
    for r in records:
        covered |= r.documented & leaves
    return len(covered) / len(leaves)


def group_by_task(records: Sequence[CorpusRecord]) -> dict[str, list[CorpusRecord]]:
    groups: dict[str, list[CorpusRecord]] = defaultdict(list)
    for r in records:
        groups[r.task_family or UNLABELED].append(r)
    return {k: groups[k] for k in sorted(groups)}


def coverage_matrix(records: Sequence[CorpusRecord], taxonomy: Taxonomy) -> CoverageMatrix:
    groups = group_by_task(records)
    module_ids = taxonomy.module_ids
    leaf_sets = {m: _module_leaf_set(taxonomy, m) for m in module_ids}
    values, means, support = [], [], []
    for task, recs in groups.items():
        values.append(tuple(coverage_cell(recs, m, taxonomy) for m in module_ids))
        row_mean, row_support = [], []
        for m in module_ids:
            leaves = leaf_sets[m]
            total = sum(Fraction(len(r.documented & leaves), len(leaves)) for r in recs)
            row_mean.append(float(total / len(recs)))
            row_support.append(sum(1 for r in recs if r.documented & leaves))
        means.append(tuple(row_mean))
        support.append(tuple(row_support))
    return CoverageMatrix(
        task_families=tuple(groups),
        modules=tuple(module_ids),
        values=tuple(values),
        mean_values=tuple(means),
        support=tuple(support),
        projects=tuple(len(r) for r in groups.values()),
    )


def export_matrix(matrix: CoverageMatrix, format: str = "csv", *, grid: str = "union") -> str:
    """Serialize a coverage matrix.

    ``csv`` writes a ``task,<module ids>`` header and one row per task
    with four-decimal ratios (``grid`` picks ``union`` or ``mean``);
    ``json`` writes every grid in one structured document.
    """
    if format == "csv":
        rows = {"union": matrix.values, "mean": matrix.mean_values}[grid]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task", *matrix.modules])
        for task, row in zip(matrix.task_families, rows):
            w.writerow([task, *(f"{v:.4f}" for v in row)])
        return buf.getvalue()
    if format == "json":
        doc = {
            "schema": MATRIX_SCHEMA,
            "schema_version": MATRIX_SCHEMA_VERSION,
            "modules": list(matrix.modules),
            "rows": [
                {
                    "task": task,
                    "projects": matrix.projects[i],
                    "coverage": dict(zip(matrix.modules, matrix.values[i])),
                    "mean_coverage": dict(zip(matrix.modules, matrix.mean_values[i])),
                    "support": dict(zip(matrix.modules, matrix.support[i])),
                }
                for i, task in enumerate(matrix.task_families)
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown export format {format!r}")
