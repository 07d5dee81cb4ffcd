"""Module baselines, per-module sufficiency scoring, and fill-first plans.

The baseline of a module averages two shares, the module's share of all
documented occurrences in the corpus and its share of all leaves, and
scales the result by the module's total prior mass ``S_M``::

    baseline = (O_M / O_All + A_M / A_All) * S_M / 2

A card's module is sufficient when the summed priors of its documented
parameters reach that baseline.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

from .cards import CardDocument, Status
from .corpus import CorpusStats
from .errors import DegenerateCorpusWarning, VersionMismatch
from .taxonomy import Taxonomy, module_parameters

# Absorbs float accumulation error at the sufficiency boundary.
SUFFICIENCY_TOLERANCE = 1e-9


class Verdict(str, enum.Enum):
    SUFFICIENT = "sufficient"
    INSUFFICIENT = "insufficient"
    VACUOUS = "vacuously_sufficient"


@dataclass(frozen=True)
class ModuleBaseline:
    module_id: str
    s_total: float
    observed_share: float
    capacity_share: float
    baseline: float


@dataclass(frozen=True)
class ModuleScore:
    module_id: str
    cumulative_prior: float
    baseline: float
    verdict: Verdict
    shortfall: float
    missing: tuple[tuple[str, float], ...]  # (parameter_id, prior), descending prior


@dataclass(frozen=True)
class FillStep:
    parameter_id: str
    prior: float
    cumulative_after: float  # priors added by the plan so far, this step included


@dataclass(frozen=True)
class FillPlan:
    module_id: str
    steps: tuple[FillStep, ...]
    reaches_baseline_at: int | None
    """Number of fills needed: 0 when already met, None when unreachable."""

    @property
    def already_met(self) -> bool:
        return self.reaches_baseline_at == 0


def baseline_score(observed_share: float, capacity_share: float, s_total: float) -> float:
    """``(observed_share + capacity_share) * s_total / 2``.

    >>> round(baseline_score(0.18, 0.14, 2.4), 12)
    0.384
    """
    return (observed_share + capacity_share) * s_total / 2


def module_baseline(stats: CorpusStats, module_id: str) -> ModuleBaseline:
    agg = stats.module(module_id)
    o_all, a_all = stats.o_all, stats.a_all
    if o_all == 0:
        warnings.warn("corpus documents no parameters; every baseline is 0",
                      DegenerateCorpusWarning, stacklevel=2)
        return ModuleBaseline(module_id, 0.0, 0.0, agg.a / a_all, 0.0)
    observed = agg.o / o_all
    capacity = agg.a / a_all
    s_total = agg.s_total
    return ModuleBaseline(module_id, s_total, observed, capacity,
                          baseline_score(observed, capacity, s_total))


def judge(cumulative: float, baseline: float) -> Verdict:
    if baseline == 0:
        return Verdict.VACUOUS
    if cumulative >= baseline - SUFFICIENCY_TOLERANCE:
        return Verdict.SUFFICIENT
    return Verdict.INSUFFICIENT


def _check_versions(card: CardDocument, stats: CorpusStats, taxonomy: Taxonomy):
    if stats.taxonomy_version != taxonomy.version:
        raise VersionMismatch(
            f"stats use taxonomy {stats.taxonomy_version!r}, taxonomy is {taxonomy.version!r}"
        )
    stray = [pid for pid in card.entries if pid not in taxonomy]
    if stray:
        raise VersionMismatch(f"card has entries unknown to taxonomy {taxonomy.version}: {stray}")


def _split(card: CardDocument, module_id: str, stats: CorpusStats, taxonomy: Taxonomy):
    documented, missing = [], []
    for p in module_parameters(taxonomy, module_id):
        (documented if card.status(p.id) is Status.DOCUMENTED else missing).append(p.id)
    # descending prior, ties broken by id
    missing.sort(key=lambda pid: (-stats.freq[pid], pid))
    return documented, missing


def score_module(card: CardDocument, module_id: str, stats: CorpusStats,
                 taxonomy: Taxonomy, baseline: ModuleBaseline | None = None) -> ModuleScore:
    _check_versions(card, stats, taxonomy)
    documented, missing = _split(card, module_id, stats, taxonomy)
    base = (baseline or module_baseline(stats, module_id)).baseline
    # sum integer counts first so the prior sum is a single correctly-rounded division
    cumulative = sum(stats.freq[p] for p in documented) / stats.n_projects
    verdict = judge(cumulative, base)
    shortfall = base - cumulative if verdict is Verdict.INSUFFICIENT else 0.0
    return ModuleScore(
        module_id=module_id,
        cumulative_prior=cumulative,
        baseline=base,
        verdict=verdict,
        shortfall=shortfall,
        missing=tuple((p, stats.freq[p] / stats.n_projects) for p in missing),
    )


def fill_first(card: CardDocument, module_id: str, stats: CorpusStats,
               taxonomy: Taxonomy) -> FillPlan:
    """Order the module's undocumented leaves by descending prior.

    ``reaches_baseline_at`` counts how many of the leading steps must be
    filled for the module to become sufficient.
    """
    _check_versions(card, stats, taxonomy)
    documented, missing = _split(card, module_id, stats, taxonomy)
    base = module_baseline(stats, module_id).baseline
    n = stats.n_projects
    have = sum(stats.freq[p] for p in documented)

    reached = 0 if judge(have / n, base) is not Verdict.INSUFFICIENT else None
    steps, added = [], 0
    for i, pid in enumerate(missing, start=1):
        added += stats.freq[pid]
        steps.append(FillStep(pid, stats.freq[pid] / n, added / n))
        if reached is None and judge((have + added) / n, base) is Verdict.SUFFICIENT:
            reached = i
    return FillPlan(module_id, tuple(steps), reached)


def score_card(card: CardDocument, stats: CorpusStats, taxonomy: Taxonomy) -> list[ModuleScore]:
    """Scores for every module, in taxonomy order."""
    return [score_module(card, m, stats, taxonomy) for m in taxonomy.module_ids]
