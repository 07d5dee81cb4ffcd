from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import pytest
import yaml

from cardgauge.cards import CardDocument, FieldEntry, Status
from cardgauge.taxonomy import Taxonomy, load_default_taxonomy, load_taxonomy

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"
WORKED = FIXTURES / "worked_example"
CORPUS = FIXTURES / "corpus"
VACUOUS = FIXTURES / "vacuous"

# Same boundary tolerance the engine documents; the oracles below apply it exactly.
TOL = Fraction(1, 10**9)


def taxonomy_text(modules: dict[str, list[str]], version: str = "toy-1", **extra) -> str:
    doc = {
        "version": version,
        "modules": [
            {"id": mid, "name": mid.replace("_", " ").title(),
             "children": [{"id": pid} for pid in leaves]}
            for mid, leaves in modules.items()
        ],
    }
    doc.update(extra)
    return yaml.safe_dump(doc, sort_keys=False)


def make_taxonomy(modules: dict[str, list[str]], version: str = "toy-1", **extra) -> Taxonomy:
    return _cached_taxonomy(taxonomy_text(modules, version, **extra), len(modules) == 8)


@lru_cache(maxsize=4096)
def _cached_taxonomy(text: str, strict: bool) -> Taxonomy:
    return load_taxonomy(text, strict_modules=strict)


def card_with(documented=(), placeholders=(), project_id="p") -> CardDocument:
    entries = {pid: FieldEntry(pid, "substantive text", (), Status.DOCUMENTED) for pid in documented}
    for pid in placeholders:
        entries[pid] = FieldEntry(pid, "TBD", (), Status.PLACEHOLDER)
    return CardDocument(project_id, entries)


# -- independent oracles -----------------------------------------------------


def oracle_baseline(freq: dict[str, int], module_leaves: dict[str, list[str]], n: int,
                    module_id: str) -> Fraction:
    """Module baseline in exact rational arithmetic."""
    o_all = sum(freq.values())
    a_all = sum(len(v) for v in module_leaves.values())
    o_m = sum(freq[p] for p in module_leaves[module_id])
    a_m = len(module_leaves[module_id])
    if o_all == 0:
        return Fraction(0)
    return (Fraction(o_m, o_all) + Fraction(a_m, a_all)) * Fraction(o_m, n) / 2


def oracle_min_fills(have: int, missing_freqs: list[int], n: int, baseline: Fraction):
    """Smallest number of missing parameters whose priors lift the module to
    its baseline, by enumerating every subset.  None when impossible."""
    if baseline == 0:
        return 0
    need = (baseline - TOL) * n - have  # extra documented occurrences required
    sums, sizes = [0], [0]
    for f in missing_freqs:
        sums += [s + f for s in sums]
        sizes += [k + 1 for k in sizes]
    hits = [k for s, k in zip(sums, sizes) if s >= need]
    return min(hits) if hits else None


def oracle_coverage(records, module_leaves: dict[str, list[str]]):
    """{task: {module: Fraction}} by plain set arithmetic."""
    out = {}
    tasks = {r.task_family or "unlabeled" for r in records}
    for t in tasks:
        union = set()
        for r in records:
            if (r.task_family or "unlabeled") == t:
                union |= set(r.documented)
        out[t] = {m: Fraction(len(union & set(ls)), len(ls)) for m, ls in module_leaves.items()}
    return out


@pytest.fixture(scope="session")
def default_taxonomy() -> Taxonomy:
    return load_default_taxonomy()


@pytest.fixture(scope="session")
def worked_taxonomy() -> Taxonomy:
    return load_taxonomy((WORKED / "taxonomy.yaml").read_text())


# -- acceptance summary --------------------------------------------------------

_acceptance: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, label in report.user_properties:
        if key == "acceptance":
            _acceptance.append((label, report.outcome.upper(), report.nodeid))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m:
            item.user_properties.append(("acceptance", f"{m.args[0]}. {m.args[1]}"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    verdicts: dict[str, bool] = {}
    for label, outcome, _ in _acceptance:
        verdicts[label] = verdicts.get(label, True) and outcome == "PASSED"
    terminalreporter.section("acceptance criteria")
    for label in sorted(verdicts, key=lambda s: int(s.split(".")[0])):
        terminalreporter.write_line(f"[{'PASS' if verdicts[label] else 'FAIL'}] criterion {label}")
