"""Trace bookkeeping and post-run analytics.

A ReductionTrace is the full audit log of a reduction run: one event per
candidate decision, plus the config snapshot, seed, and scorer-call
count. Everything downstream (removal-ratio curves, token statistics,
replay checks, the determinism fingerprint) is derived from it.

The fingerprint hashes the canonical JSON of the trace with filesystem
paths stripped from the config, so two runs of the same configuration
into different output directories fingerprint identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import Corpus
from .errors import InternalInvariantError

REPORT_SCHEMA_VERSION = "1"

DECISION_REMOVED = "removed"
DECISION_KEPT = "kept"


@dataclass
class TraceEvent:
    record_id: str
    epoch: int
    step: int
    t: int
    candidate_index: int
    decision: str
    budget: int
    buffer_size: int  # |R_B| after this decision was applied
    verbosity_gt: float | None = None
    verbosity_wrong: float | None = None
    k_used: int = 0
    score_full: float | None = None
    score_reduced: float | None = None
    unconditional: bool = False


@dataclass
class ReductionTrace:
    config: dict
    seed: int
    events: list[TraceEvent] = field(default_factory=list)
    scorer_call_count: int = 0

    def removal_events(self) -> list[TraceEvent]:
        return [e for e in self.events if e.decision == DECISION_REMOVED]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "scorer_call_count": self.scorer_call_count,
            "events": [asdict(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ReductionTrace":
        return cls(
            config=obj["config"],
            seed=obj["seed"],
            scorer_call_count=obj["scorer_call_count"],
            events=[TraceEvent(**e) for e in obj["events"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "ReductionTrace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def trace_fingerprint(trace: ReductionTrace) -> str:
    """sha256 over the canonical trace JSON, ignoring config paths."""
    payload = trace.to_dict()
    config = dict(payload["config"])
    config.pop("paths", None)
    payload["config"] = config
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RemovalRatioPoint:
    epoch: int
    removed_count: int
    max_potential: int
    ratio: float


def removal_ratio_curve(trace: ReductionTrace, per_step: bool = False) -> list[RemovalRatioPoint]:
    """Removals over summed budgets, one point per epoch (or per step).

    The budget of a (record, step) pair counts once no matter how many
    candidates were evaluated; pairs with zero budget emit no events and
    contribute zero, so reconstruction from events is exact. Epochs with
    no events (all warm-up) get ratio 0 by convention.
    """
    epochs = int(trace.config.get("schedule", {}).get("epochs", 0))
    if not per_step:
        keys = list(range(1, epochs + 1)) if epochs else sorted(
            {e.epoch for e in trace.events}
        )
    else:
        keys = sorted({(e.epoch, e.step) for e in trace.events})
    points = []
    for key in keys:
        if per_step:
            events = [e for e in trace.events if (e.epoch, e.step) == key]
            epoch_label = key[0]
        else:
            events = [e for e in trace.events if e.epoch == key]
            epoch_label = key
        removed = sum(1 for e in events if e.decision == DECISION_REMOVED)
        budgets: dict[tuple[str, int], int] = {}
        for e in events:
            budgets[(e.record_id, e.t)] = e.budget
        max_potential = sum(budgets.values())
        ratio = removed / max_potential if max_potential > 0 else 0.0
        if not 0.0 <= ratio <= 1.0:
            raise InternalInvariantError(f"removal ratio {ratio} out of [0, 1]")
        points.append(RemovalRatioPoint(epoch_label, removed, max_potential, ratio))
    return points


def _record_token_count(record) -> int:
    tokens = sum(len(u.text.split()) for u in record.retained_units())
    return tokens + len(record.answer.split())


def token_stats(corpus_before: Corpus, corpus_after: Corpus) -> dict:
    """Average whitespace tokens (retained rationale + answer) per record."""
    before_ids = {r.id for r in corpus_before.records}
    after_ids = {r.id for r in corpus_after.records}
    if before_ids != after_ids:
        diff = sorted(before_ids.symmetric_difference(after_ids))
        raise ValueError(f"corpora do not share record ids; differ on {diff}")
    n = len(corpus_before.records)
    before_avg = sum(_record_token_count(r) for r in corpus_before.records) / n
    after_avg = sum(_record_token_count(r) for r in corpus_after.records) / n
    if before_avg > 0:
        reduction_percent = 100.0 * (before_avg - after_avg) / before_avg
    else:
        reduction_percent = 0.0
    return {
        "avg_rationale_tokens_before": before_avg,
        "avg_rationale_tokens_after": after_avg,
        "reduction_percent": reduction_percent,
    }


def replay_trace(corpus: Corpus, trace: ReductionTrace) -> Corpus:
    """Apply the trace's removal decisions to a pristine corpus copy.

    Used to verify the replay law: the result must match the corpus the
    run actually produced, retained set for retained set.
    """
    for event in trace.events:
        if event.decision != DECISION_REMOVED:
            continue
        record = corpus.by_id(event.record_id)
        record.mark_removed(event.candidate_index, event.epoch, event.step)
    return corpus


def validate_trace(trace: ReductionTrace) -> list[str]:
    """Check the budget, permanence, warm-up, and ordering laws."""
    problems: list[str] = []
    schedule = trace.config.get("schedule", {})
    total_steps = int(schedule.get("total_steps", 0))
    warmup_ratio = float(schedule.get("warmup_ratio", 0.0))

    previous_key = None
    for e in trace.events:
        key = (e.epoch, e.step)
        if previous_key is not None and key < previous_key:
            problems.append(f"events out of (epoch, step) order at t={e.t}")
        previous_key = key
        if total_steps and e.t <= warmup_ratio * total_steps:
            problems.append(f"event at t={e.t} inside warm-up window")

    removed_by_group: dict[tuple[str, int, int], int] = {}
    budget_by_group: dict[tuple[str, int, int], int] = {}
    seen_removals: set[tuple[str, int]] = set()
    for e in trace.events:
        group = (e.record_id, e.epoch, e.step)
        budget_by_group[group] = e.budget
        if e.decision == DECISION_REMOVED:
            removed_by_group[group] = removed_by_group.get(group, 0) + 1
            unit = (e.record_id, e.candidate_index)
            if unit in seen_removals:
                problems.append(f"unit {unit} removed twice")
            seen_removals.add(unit)
    for group, removed in removed_by_group.items():
        if removed > budget_by_group[group]:
            problems.append(
                f"group {group} removed {removed} over budget {budget_by_group[group]}"
            )
    return problems


def build_report(
    trace: ReductionTrace,
    corpus_before: Corpus | None = None,
    corpus_after: Corpus | None = None,
) -> dict:
    """Machine-readable run summary; token stats only when corpora given."""
    removals = len(trace.removal_events())
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": trace.config,
        "seed": trace.seed,
        "scorer_call_count": trace.scorer_call_count,
        "event_count": len(trace.events),
        "removal_count": removals,
        "no_reductions_performed": removals == 0,
        "determinism_fingerprint": trace_fingerprint(trace),
        "removal_ratio_curve": [asdict(p) for p in removal_ratio_curve(trace)],
        "law_violations": validate_trace(trace),
    }
    if corpus_before is not None and corpus_after is not None:
        report["token_stats"] = token_stats(corpus_before, corpus_after)
    return report


def render_report_text(report: dict) -> str:
    lines = [
        "reduction run report",
        f"  fingerprint        {report['determinism_fingerprint']}",
        f"  seed               {report['seed']}",
        f"  scorer calls       {report['scorer_call_count']}",
        f"  decisions          {report['event_count']}",
        f"  removals           {report['removal_count']}",
    ]
    if report["no_reductions_performed"]:
        lines.append("  note               no reductions performed")
    if report["law_violations"]:
        lines.append(f"  LAW VIOLATIONS     {report['law_violations']}")
    stats = report.get("token_stats")
    if stats:
        lines.append(
            "  tokens/record      "
            f"{stats['avg_rationale_tokens_before']:.2f} -> "
            f"{stats['avg_rationale_tokens_after']:.2f} "
            f"({stats['reduction_percent']:.2f}% reduction)"
        )
    lines.append("  removal ratio per epoch")
    for point in report["removal_ratio_curve"]:
        lines.append(
            f"    epoch {point['epoch']:>3}  removed {point['removed_count']:>5}"
            f"  of {point['max_potential']:>5}  ratio {point['ratio']:.3f}"
        )
    return "\n".join(lines)


def removal_ratio_tsv(trace: ReductionTrace) -> str:
    rows = ["epoch\tremoved\tmax_potential\tratio"]
    for p in removal_ratio_curve(trace):
        rows.append(f"{p.epoch}\t{p.removed_count}\t{p.max_potential}\t{p.ratio!r}")
    return "\n".join(rows) + "\n"
