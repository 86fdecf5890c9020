"""The reduction driver: budgets, warm-up gating, and the removal loop.

One run walks E epochs of S steps (S batches per epoch, seeded shuffle
per epoch). During warm-up (t <= warmup_ratio * T, boundary inclusive)
no removal evaluation happens. Afterwards, each record of the current
batch gets a fresh removal buffer and its candidates are visited in the
configured order; every approved candidate is removed permanently, and
the scan stops once the buffer reaches the per-record linear budget

    r(t) = floor(n_t * t / T)

where n_t is the record's retained unit count at the start of the scan.
At every epoch boundary the scorer's refresh hook runs (the tabular
backend refits from scratch on the current reduced corpus), so earlier
removals change the model that judges later ones.

Candidate orders: front (ascending), back (descending), random (seeded
permutation), enforced_front(n) (front order, first n unconditional
during the first enforce_epochs epochs), no_rule (seeded permutation,
all unconditional; criteria bypassed entirely).
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import asdict, dataclass
from typing import Sequence

from .corpus import CHOICE_TASKS, Corpus, RationaleRecord
from .errors import ScorerError, VarrError
from .metrics import DECISION_KEPT, DECISION_REMOVED, ReductionTrace, TraceEvent
from .scorer import ScorerHandle, corpus_view
from .seeding import child_rng
from .verbosity import MODE_VARR_PLUS, MODES, evaluate_candidate

log = logging.getLogger(__name__)

CANDIDATE_ORDERS = ("front", "random", "back", "enforced_front", "no_rule")
UNITS = ("sentence", "token")


@dataclass(frozen=True)
class StrategyConfig:
    candidate_order: str = "front"
    mode: str = MODE_VARR_PLUS
    unit: str = "sentence"
    seed: int = 0
    enforced_n: int = 0        # enforced_front only
    enforce_epochs: int = 2    # epochs during which enforced removal applies

    def __post_init__(self):
        if self.candidate_order not in CANDIDATE_ORDERS:
            raise ValueError(f"unknown candidate_order {self.candidate_order!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        if self.candidate_order == "enforced_front" and self.enforced_n < 1:
            raise ValueError("enforced_front requires enforced_n >= 1")


@dataclass(frozen=True)
class ClockConfig:
    epochs: int = 5
    batch_size: int = 8
    warmup_ratio: float = 0.1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.warmup_ratio <= 1.0:
            raise ValueError("warmup_ratio must be in [0, 1]")


@dataclass
class TrainingClock:
    """Step bookkeeping: epoch and step are 1-based, t is global."""

    epoch: int
    step_in_epoch: int
    steps_per_epoch: int
    epochs: int
    warmup_ratio: float

    @property
    def t(self) -> int:
        return (self.epoch - 1) * self.steps_per_epoch + self.step_in_epoch

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch

    @property
    def in_warmup(self) -> bool:
        return in_warmup(self.t, self.total_steps, self.warmup_ratio)


def removal_budget(t: int, total_steps: int, n_t: int) -> int:
    """floor(n_t * t / T) in exact integer arithmetic."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if not 1 <= t <= total_steps:
        raise ValueError(f"t={t} outside [1, {total_steps}]")
    if n_t < 0:
        raise ValueError("n_t must be >= 0")
    return (n_t * t) // total_steps


def in_warmup(t: int, total_steps: int, warmup_ratio: float) -> bool:
    """True while t <= warmup_ratio * T (boundary step still warms up)."""
    if not 0.0 <= warmup_ratio <= 1.0:
        raise ValueError("warmup_ratio must be in [0, 1]")
    return t <= warmup_ratio * total_steps


@dataclass(frozen=True)
class Candidate:
    index: int
    unconditional: bool = False


def candidate_sequence(
    record: RationaleRecord,
    strategy: StrategyConfig,
    rng: random.Random | None = None,
    enforced_active: bool = False,
) -> list[Candidate]:
    """Visit order over the record's currently retained unit indices."""
    retained = record.retained_indices()
    order = strategy.candidate_order
    if order == "front":
        return [Candidate(i) for i in retained]
    if order == "back":
        return [Candidate(i) for i in reversed(retained)]
    if order == "random":
        shuffled = list(retained)
        if rng is None:
            raise ValueError("random order requires an rng")
        rng.shuffle(shuffled)
        return [Candidate(i) for i in shuffled]
    if order == "enforced_front":
        n = strategy.enforced_n if enforced_active else 0
        return [Candidate(i, unconditional=pos < n) for pos, i in enumerate(retained)]
    # no_rule: unguided removal, criteria bypassed
    shuffled = list(retained)
    if rng is None:
        raise ValueError("no_rule order requires an rng")
    rng.shuffle(shuffled)
    return [Candidate(i, unconditional=True) for i in shuffled]


def negative_pool(
    record: RationaleRecord,
    batch: Sequence[RationaleRecord],
    k_default: int,
) -> tuple[list[str], int]:
    """Wrong-answer pool and sample size for one record of a batch.

    Choice tasks use the record's complete non-correct label set (all of
    it, no subsampling); free-form tasks draw k_default answers from the
    other records of the batch. Pools are deduplicated by exact string.
    """
    if record.task_kind in CHOICE_TASKS:
        pool = list(dict.fromkeys(record.wrong_answers))
        k = sum(1 for p in pool if p != record.answer)
    else:
        pool = list(dict.fromkeys(r.answer for r in batch if r.id != record.id))
        k = k_default
    return pool, k


class ReductionAborted(VarrError):
    """Scorer failure mid-run; carries the trace up to the failure."""

    def __init__(self, cause: Exception, trace: ReductionTrace):
        super().__init__(f"reduction aborted: {cause}")
        self.cause = cause
        self.trace = trace


def run_reduction(
    corpus: Corpus,
    handle: ScorerHandle,
    clock_config: ClockConfig,
    strategy: StrategyConfig,
    k_negatives: int = 4,
    template_id: str = "plain-v1",
) -> ReductionTrace:
    """Execute the full removal schedule over the corpus, mutating it.

    Returns the complete trace of every evaluation and removal. The
    corpus records' units carry removed_at marks afterwards; feed the
    pair to write_reduced for the reduced artifact with provenance.
    """
    records = corpus.records
    if not records:
        raise ValueError("corpus is empty")
    steps_per_epoch = math.ceil(len(records) / clock_config.batch_size)
    total_steps = clock_config.epochs * steps_per_epoch
    seed = strategy.seed

    config_snapshot = {
        "schedule": {
            "epochs": clock_config.epochs,
            "batch_size": clock_config.batch_size,
            "warmup_ratio": clock_config.warmup_ratio,
            "steps_per_epoch": steps_per_epoch,
            "total_steps": total_steps,
            "record_count": len(records),
        },
        "strategy": asdict(strategy),
        "k_negatives": k_negatives,
        "template_id": template_id,
        "scorer": {"backend": handle.backend},
    }
    trace = ReductionTrace(config=config_snapshot, seed=seed)
    calls_before = handle.calls

    try:
        for epoch in range(1, clock_config.epochs + 1):
            order = list(range(len(records)))
            child_rng(seed, "batch-order", epoch).shuffle(order)
            for step in range(1, steps_per_epoch + 1):
                clock = TrainingClock(
                    epoch, step, steps_per_epoch, clock_config.epochs,
                    clock_config.warmup_ratio,
                )
                if clock.in_warmup:
                    continue
                lo = (step - 1) * clock_config.batch_size
                batch = [records[i] for i in order[lo : lo + clock_config.batch_size]]
                for record in batch:
                    _reduce_record(
                        record, batch, handle, clock, strategy,
                        k_negatives, template_id, trace,
                    )
            handle.refresh(corpus_view(corpus, template_id))
            log.info(
                "epoch %d/%d done: %d removals so far",
                epoch, clock_config.epochs, len(trace.removal_events()),
            )
    except ScorerError as exc:
        trace.scorer_call_count = handle.calls - calls_before
        raise ReductionAborted(exc, trace) from exc

    trace.scorer_call_count = handle.calls - calls_before
    return trace


def _reduce_record(
    record: RationaleRecord,
    batch: Sequence[RationaleRecord],
    handle: ScorerHandle,
    clock: TrainingClock,
    strategy: StrategyConfig,
    k_negatives: int,
    template_id: str,
    trace: ReductionTrace,
) -> None:
    n_t = len(record.retained_indices())
    budget = removal_budget(clock.t, clock.total_steps, n_t)
    buffer: list[int] = []

    enforced_active = (
        strategy.candidate_order == "enforced_front"
        and clock.epoch <= strategy.enforce_epochs
    )
    order_rng = child_rng(strategy.seed, "candidate-order", record.id, clock.t)
    for candidate in candidate_sequence(record, strategy, order_rng, enforced_active):
        if len(buffer) >= budget:
            break
        if candidate.unconditional:
            record.mark_removed(candidate.index, clock.epoch, clock.step_in_epoch)
            buffer.append(candidate.index)
            trace.events.append(TraceEvent(
                record_id=record.id,
                epoch=clock.epoch,
                step=clock.step_in_epoch,
                t=clock.t,
                candidate_index=candidate.index,
                decision=DECISION_REMOVED,
                budget=budget,
                buffer_size=len(buffer),
                unconditional=True,
            ))
            continue
        pool, k = negative_pool(record, batch, k_negatives)
        contrast_possible = any(p != record.answer for p in pool)
        if strategy.mode == MODE_VARR_PLUS and not contrast_possible:
            # a lone record in its batch has no usable negatives; the
            # contrast criterion cannot be confirmed, so keep the unit
            # (gold criterion still evaluated and recorded)
            report = evaluate_candidate(
                handle, record, candidate.index, record.retained_indices(),
                mode="varr", template_id=template_id,
            )
            removed = False
        else:
            neg_rng = child_rng(
                strategy.seed, "negatives", record.id, clock.t, candidate.index
            )
            report = evaluate_candidate(
                handle, record, candidate.index, record.retained_indices(),
                mode=strategy.mode, negatives=pool, k=k, rng=neg_rng,
                template_id=template_id,
            )
            removed = report.removal_approved(strategy.mode)
        if removed:
            record.mark_removed(candidate.index, clock.epoch, clock.step_in_epoch)
            buffer.append(candidate.index)
        trace.events.append(TraceEvent(
            record_id=record.id,
            epoch=clock.epoch,
            step=clock.step_in_epoch,
            t=clock.t,
            candidate_index=candidate.index,
            decision=DECISION_REMOVED if removed else DECISION_KEPT,
            budget=budget,
            buffer_size=len(buffer),
            verbosity_gt=report.verbosity_gt,
            verbosity_wrong=report.verbosity_wrong,
            k_used=report.k_used,
            score_full=report.score_full,
            score_reduced=report.score_reduced,
        ))
