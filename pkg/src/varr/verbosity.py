"""Redundancy criteria for rationale units.

For a candidate unit i of a record with retained rationale R and gold
answer y_g, with R' = R minus unit i:

    verbosity_gt    = log p(y_g | R', x) - log p(y_g | R, x)
    verbosity_wrong = mean over k sampled wrong answers y_w of
                      log p(y_w | R', x) - log p(y_w | R, x)

A candidate passes the base criterion when verbosity_gt >= 0 (removal
does not hurt the gold answer) and the strict criterion additionally
when verbosity_wrong - verbosity_gt <= 0 (removal does not favor wrong
answers over the gold one). Ties at exactly zero pass both inequalities.

R is always the record's *current* retained set: earlier removals in the
same pass already changed the context each later candidate is judged in.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import RationaleRecord
from .errors import EmptyNegativePoolError
from .scorer import ScorerHandle, assemble_prompt

MODE_VARR = "varr"
MODE_VARR_PLUS = "varr_plus"
MODES = (MODE_VARR, MODE_VARR_PLUS)


@dataclass(frozen=True)
class VerbosityReport:
    """Outcome of evaluating one candidate unit against the criteria.

    verbosity_wrong and passes_varr_plus are present together: both are
    None in plain mode and when the first criterion already rejected the
    candidate (the wrong-answer contrast is then never computed).
    """

    record_id: str
    candidate_index: int
    verbosity_gt: float
    verbosity_wrong: float | None
    k_used: int
    passes_varr: bool
    passes_varr_plus: bool | None
    score_full: float
    score_reduced: float

    def removal_approved(self, mode: str) -> bool:
        if mode == MODE_VARR:
            return self.passes_varr
        return self.passes_varr_plus is True


def nll(
    handle: ScorerHandle,
    record: RationaleRecord,
    retained: Iterable[int],
    template_id: str = "plain-v1",
) -> float:
    """Negative log-likelihood of the gold answer given the retained units."""
    assembly = assemble_prompt(record, retained, template_id)
    return -handle.score_answer(assembly, record.answer).total


def verbosity_gt(
    handle: ScorerHandle,
    record: RationaleRecord,
    i: int,
    current_retained: Iterable[int],
    template_id: str = "plain-v1",
) -> float:
    retained = sorted(set(current_retained))
    if i not in retained:
        raise ValueError(f"candidate {i} not in retained set of record {record.id}")
    reduced = [j for j in retained if j != i]
    score_full = handle.score_answer(
        assemble_prompt(record, retained, template_id), record.answer
    ).total
    score_reduced = handle.score_answer(
        assemble_prompt(record, reduced, template_id), record.answer
    ).total
    return score_reduced - score_full


def filter_negatives(negatives: Sequence[str], gold_answer: str) -> list[str]:
    return [n for n in negatives if n != gold_answer]


def verbosity_wrong(
    handle: ScorerHandle,
    record: RationaleRecord,
    i: int,
    current_retained: Iterable[int],
    negatives: Sequence[str],
    k: int,
    rng: random.Random | None = None,
    template_id: str = "plain-v1",
) -> tuple[float, int]:
    """Mean log-ratio over up to k sampled wrong answers.

    Sampling is without replacement; when k covers the whole filtered
    pool no randomness is consumed. Returns (mean, k_used).
    """
    retained = sorted(set(current_retained))
    if i not in retained:
        raise ValueError(f"candidate {i} not in retained set of record {record.id}")
    pool = filter_negatives(negatives, record.answer)
    if not pool:
        raise EmptyNegativePoolError(
            f"record {record.id}: no negatives distinct from the gold answer"
        )
    if k >= len(pool):
        sampled = list(pool)
    else:
        if rng is None:
            raise ValueError("subsampling negatives requires an rng")
        sampled = rng.sample(pool, k)
    reduced = [j for j in retained if j != i]
    full_assembly = assemble_prompt(record, retained, template_id)
    reduced_assembly = assemble_prompt(record, reduced, template_id)
    total = 0.0
    for wrong in sampled:
        s_full = handle.score_answer(full_assembly, wrong).total
        s_reduced = handle.score_answer(reduced_assembly, wrong).total
        total += s_reduced - s_full
    return total / len(sampled), len(sampled)


def evaluate_candidate(
    handle: ScorerHandle,
    record: RationaleRecord,
    i: int,
    current_retained: Iterable[int],
    mode: str = MODE_VARR_PLUS,
    negatives: Sequence[str] = (),
    k: int = 4,
    rng: random.Random | None = None,
    template_id: str = "plain-v1",
) -> VerbosityReport:
    """Run the configured criteria for one candidate and report.

    In strict mode the wrong-answer contrast is computed only when the
    gold criterion already passed; a candidate failing verbosity_gt >= 0
    is rejected without spending scorer calls on negatives.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    retained = sorted(set(current_retained))
    if i not in retained:
        raise ValueError(f"candidate {i} not in retained set of record {record.id}")
    reduced = [j for j in retained if j != i]
    score_full = handle.score_answer(
        assemble_prompt(record, retained, template_id), record.answer
    ).total
    score_reduced = handle.score_answer(
        assemble_prompt(record, reduced, template_id), record.answer
    ).total
    v_gt = score_reduced - score_full
    passes = v_gt >= 0.0

    v_wrong: float | None = None
    k_used = 0
    passes_plus: bool | None = None
    if mode == MODE_VARR_PLUS and passes:
        v_wrong, k_used = verbosity_wrong(
            handle, record, i, retained, negatives, k, rng, template_id
        )
        passes_plus = passes and (v_wrong - v_gt <= 0.0)

    return VerbosityReport(
        record_id=record.id,
        candidate_index=i,
        verbosity_gt=v_gt,
        verbosity_wrong=v_wrong,
        k_used=k_used,
        passes_varr=passes,
        passes_varr_plus=passes_plus,
        score_full=score_full,
        score_reduced=score_reduced,
    )
