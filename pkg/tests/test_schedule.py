import random
from dataclasses import asdict
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from varr.corpus import load_corpus
from varr.schedule import (
    ClockConfig,
    ReductionAborted,
    StrategyConfig,
    TrainingClock,
    candidate_sequence,
    in_warmup,
    negative_pool,
    removal_budget,
    run_reduction,
)
from varr.scorer import build_vocabulary, fit_tabular_scorer, uniform_tabular_scorer
from varr.seeding import child_rng

from .conftest import FIXTURE_CORPUS, make_record
from .reference_driver import run_reference


# --- removal budget ---------------------------------------------------------

def test_budget_examples():
    assert removal_budget(50, 100, 10) == 5
    assert removal_budget(100, 100, 7) == 7
    assert removal_budget(33, 100, 10) == 3  # floor, not round


def test_budget_domain_errors():
    with pytest.raises(ValueError):
        removal_budget(0, 100, 5)
    with pytest.raises(ValueError):
        removal_budget(101, 100, 5)
    with pytest.raises(ValueError):
        removal_budget(1, 100, -1)


def test_budget_no_float_error_at_large_inputs():
    t, total, n = 999_999_999, 10**9, 10**9
    assert removal_budget(t, total, n) == (n * t) // total
    assert removal_budget(10**9, 10**9, 10**9) == 10**9


@given(
    st.integers(min_value=1, max_value=10**6),
    st.integers(min_value=1, max_value=10**6),
    st.integers(min_value=0, max_value=10**6),
)
def test_budget_matches_exact_fraction(t, total, n):
    if t > total:
        t, total = total, t
    want = int(Fraction(n) * Fraction(t, total))
    assert removal_budget(t, total, n) == want


# --- warm-up gate ------------------------------------------------------------

def test_warmup_boundary_inclusive():
    assert in_warmup(10, 100, 0.1) is True
    assert in_warmup(11, 100, 0.1) is False


def test_warmup_zero_ratio_never_warm():
    assert all(not in_warmup(t, 100, 0.0) for t in range(1, 101))


def test_warmup_full_ratio_always_warm():
    assert all(in_warmup(t, 50, 1.0) for t in range(1, 51))


def test_clock_bookkeeping():
    clock = TrainingClock(epoch=3, step_in_epoch=2, steps_per_epoch=5,
                          epochs=4, warmup_ratio=0.1)
    assert clock.t == 12
    assert clock.total_steps == 20
    assert clock.in_warmup is False


# --- candidate ordering ------------------------------------------------------

def seq_indices(record, strategy, rng=None, enforced_active=False):
    return [c.index for c in candidate_sequence(record, strategy, rng, enforced_active)]


def test_front_and_back_orders():
    record = make_record(units=("a", "b", "c", "d"))
    assert seq_indices(record, StrategyConfig("front")) == [0, 1, 2, 3]
    assert seq_indices(record, StrategyConfig("back")) == [3, 2, 1, 0]


def test_orders_skip_removed_units():
    record = make_record(units=("a", "b", "c", "d"))
    record.mark_removed(1, 1, 1)
    assert seq_indices(record, StrategyConfig("front")) == [0, 2, 3]


def test_random_order_seeded_permutation():
    record = make_record(units=("a", "b", "c", "d"))
    one = seq_indices(record, StrategyConfig("random"), child_rng(7, "x"))
    two = seq_indices(record, StrategyConfig("random"), child_rng(7, "x"))
    assert one == two
    assert sorted(one) == [0, 1, 2, 3]


def test_enforced_front_flags():
    record = make_record(units=("a", "b", "c", "d"))
    strategy = StrategyConfig("enforced_front", enforced_n=2)
    active = candidate_sequence(record, strategy, enforced_active=True)
    assert [(c.index, c.unconditional) for c in active] == [
        (0, True), (1, True), (2, False), (3, False),
    ]
    inactive = candidate_sequence(record, strategy, enforced_active=False)
    assert all(not c.unconditional for c in inactive)


def test_no_rule_all_unconditional():
    record = make_record(units=("a", "b", "c"))
    got = candidate_sequence(record, StrategyConfig("no_rule"), child_rng(3, "y"))
    assert all(c.unconditional for c in got)
    assert sorted(c.index for c in got) == [0, 1, 2]


def test_strategy_config_validation():
    with pytest.raises(ValueError):
        StrategyConfig("sideways")
    with pytest.raises(ValueError):
        StrategyConfig("enforced_front", enforced_n=0)
    with pytest.raises(ValueError):
        StrategyConfig("front", mode="maybe")
    with pytest.raises(ValueError):
        ClockConfig(epochs=0)
    with pytest.raises(ValueError):
        ClockConfig(warmup_ratio=1.5)


# --- negative pools ----------------------------------------------------------

def test_negative_pool_choice_uses_full_wrong_set():
    record = make_record(task_kind="multiple_choice",
                         wrong_answers=("w1", "w2", "w1"), answer="g")
    pool, k = negative_pool(record, [record], k_default=1)
    assert pool == ["w1", "w2"]  # deduplicated, order kept
    assert k == 2


def test_negative_pool_free_form_uses_batch():
    target = make_record(record_id="t", answer="gold")
    others = [
        make_record(record_id="o1", answer="a1"),
        make_record(record_id="o2", answer="a2"),
        make_record(record_id="o3", answer="a1"),  # duplicate answer
    ]
    pool, k = negative_pool(target, [target] + others, k_default=4)
    assert pool == ["a1", "a2"]
    assert k == 4


# --- the driver --------------------------------------------------------------

def fresh_corpus():
    return load_corpus(FIXTURE_CORPUS)


def test_full_warmup_means_zero_removals():
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    trace = run_reduction(corpus, handle, ClockConfig(3, 4, warmup_ratio=1.0),
                          StrategyConfig("front", seed=1))
    assert trace.events == []
    assert all(u.removed_at is None for r in corpus for u in r.rationale)


def test_uniform_scorer_removals_match_budget_exactly():
    # one epoch: the epoch-end refit must not influence any decision,
    # so the scorer stays uniform for every evaluation of the run
    corpus = fresh_corpus()
    handle = uniform_tabular_scorer(build_vocabulary(corpus))
    trace = run_reduction(corpus, handle, ClockConfig(epochs=1, batch_size=4,
                                                      warmup_ratio=0.0),
                          StrategyConfig("front", mode="varr", seed=3))
    # zero law: every candidate passes, so each (record, step) removes r(t)
    # exactly, until the rationale is exhausted
    by_group = {}
    for e in trace.events:
        key = (e.record_id, e.t)
        by_group.setdefault(key, []).append(e)
    assert by_group
    for (record_id, t), events in by_group.items():
        removed = sum(1 for e in events if e.decision == "removed")
        budget = events[0].budget
        assert all(e.verbosity_gt == 0.0 for e in events)
        assert all(e.decision == "removed" for e in events)
        assert removed == budget
    # any record batched at t = T ends fully exhausted (r(T) = n)
    total = trace.config["schedule"]["total_steps"]
    final_batch_ids = {e.record_id for e in trace.events if e.t == total}
    assert final_batch_ids
    for record in corpus:
        if record.id in final_batch_ids:
            assert record.retained_indices() == []


def test_budget_law_and_permanence_on_fixture():
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    trace = run_reduction(corpus, handle, ClockConfig(4, 3, 0.1),
                          StrategyConfig("front", mode="varr_plus", seed=11),
                          k_negatives=2)
    seen = set()
    by_group = {}
    for e in trace.events:
        if e.decision == "removed":
            assert (e.record_id, e.candidate_index) not in seen
            seen.add((e.record_id, e.candidate_index))
        key = (e.record_id, e.t)
        by_group.setdefault(key, []).append(e)
        assert e.buffer_size <= e.budget
    for events in by_group.values():
        removed = sum(1 for e in events if e.decision == "removed")
        assert removed <= events[0].budget
    assert len(trace.removal_events()) > 0
    # removed units are never re-evaluated
    evaluated_after_removal = set()
    removal_t = {}
    for e in trace.events:
        key = (e.record_id, e.candidate_index)
        if key in removal_t and e.t > removal_t[key]:
            evaluated_after_removal.add(key)
        if e.decision == "removed":
            removal_t[key] = e.t
    assert not evaluated_after_removal


@pytest.mark.parametrize("ratio", [0.0, 0.1, 0.4, 1.0])
def test_warmup_purity(ratio):
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    trace = run_reduction(corpus, handle, ClockConfig(3, 4, ratio),
                          StrategyConfig("front", mode="varr", seed=5))
    total = trace.config["schedule"]["total_steps"]
    assert all(e.t > ratio * total for e in trace.events)


def test_trace_determinism_same_seed():
    def run(seed):
        corpus = fresh_corpus()
        handle = fit_tabular_scorer(corpus)
        trace = run_reduction(corpus, handle, ClockConfig(3, 4, 0.1),
                              StrategyConfig("random", mode="varr_plus", seed=seed),
                              k_negatives=2)
        return [asdict(e) for e in trace.events]

    assert run(21) == run(21)
    assert run(21) != run(22)


def test_scorer_call_accounting():
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    trace = run_reduction(corpus, handle, ClockConfig(3, 4, 0.1),
                          StrategyConfig("front", mode="varr_plus", seed=11),
                          k_negatives=2)
    expected = sum(
        0 if e.unconditional else 2 + 2 * e.k_used for e in trace.events
    )
    assert trace.scorer_call_count == expected


def test_no_rule_makes_no_scorer_calls():
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    calls_before = handle.calls
    trace = run_reduction(corpus, handle, ClockConfig(2, 4, 0.0),
                          StrategyConfig("no_rule", seed=2))
    assert trace.scorer_call_count == 0
    assert handle.calls == calls_before
    assert all(e.unconditional for e in trace.events)
    assert all(e.decision == "removed" for e in trace.events)


def test_enforced_front_removes_unconditionally_in_early_epochs():
    corpus = fresh_corpus()
    handle = fit_tabular_scorer(corpus)
    trace = run_reduction(
        corpus, handle, ClockConfig(4, 4, 0.0),
        StrategyConfig("enforced_front", mode="varr_plus", seed=6,
                       enforced_n=2, enforce_epochs=2),
        k_negatives=2,
    )
    unconditional = [e for e in trace.events if e.unconditional]
    assert unconditional
    assert all(e.epoch <= 2 for e in unconditional)
    assert all(e.decision == "removed" for e in unconditional)


def test_reduction_aborts_with_partial_trace():
    corpus = fresh_corpus()
    # vocabulary missing the fixture tokens: first evaluation raises OOV
    handle = uniform_tabular_scorer(["nothing", "here"])
    with pytest.raises(ReductionAborted) as exc:
        run_reduction(corpus, handle, ClockConfig(2, 4, 0.0),
                      StrategyConfig("front", mode="varr", seed=1))
    assert exc.value.trace is not None
    assert exc.value.trace.events == []


# --- conformance with the straight-line reference ---------------------------

def assert_conformance(candidate_order, mode, seed, epochs=4, batch_size=3,
                       warmup=0.1, k=2, enforced_n=0):
    corpus_a = fresh_corpus()
    handle_a = fit_tabular_scorer(corpus_a)
    trace = run_reduction(
        corpus_a, handle_a, ClockConfig(epochs, batch_size, warmup),
        StrategyConfig(candidate_order, mode=mode, seed=seed,
                       enforced_n=max(enforced_n, 1) if candidate_order == "enforced_front" else 0),
        k_negatives=k,
    )
    corpus_b = fresh_corpus()
    handle_b = fit_tabular_scorer(corpus_b)
    ref_events, ref_retained = run_reference(
        corpus_b, handle_b, epochs=epochs, batch_size=batch_size,
        warmup_ratio=warmup, candidate_order=candidate_order, mode=mode,
        seed=seed, k_negatives=k, enforced_n=enforced_n,
    )
    assert [asdict(e) for e in trace.events] == ref_events
    for record in corpus_a.records:
        assert record.retained_indices() == ref_retained[record.id]


def test_conformance_front_varr_plus():
    assert_conformance("front", "varr_plus", seed=11)


def test_conformance_random_varr():
    assert_conformance("random", "varr", seed=4)


def test_conformance_back_varr_plus():
    assert_conformance("back", "varr_plus", seed=9)


def test_conformance_no_rule():
    assert_conformance("no_rule", "varr_plus", seed=13)


def test_conformance_enforced_front():
    assert_conformance("enforced_front", "varr_plus", seed=17, enforced_n=2)
