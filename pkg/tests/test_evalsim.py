from __future__ import annotations

import statistics

import pytest

from plsq.corpus import Task
from plsq.engine import init_session
from plsq.evalsim import (
    POLICIES,
    GoldAssignment,
    assign_gold_labels,
    choose_variable,
    gold_entropy,
    mean_intra_similarity,
    run_benchmark,
    simulate,
)
from plsq.errors import PlsqError
from plsq.llm import validate_candidates
from plsq.schema import database_from_dict

from conftest import make_candidates
from oracles import oracle_optimal_turns


# --- gold assignment ----------------------------------------------------------------


def films_task(films_db):
    return Task(
        id="ft",
        utterance="what was the review?",
        db=films_db,
        gold_sqls=(
            "SELECT opinion FROM reviews",
            "SELECT score FROM reviews",
        ),
    )


def test_exact_match_gets_its_gold(films_db):
    task = films_task(films_db)
    candidates = make_candidates(films_db, [
        "SELECT opinion FROM reviews",
        "SELECT score FROM reviews",
    ])
    assignment = assign_gold_labels(candidates, task)
    assert assignment.label(0) == 0
    assert assignment.label(1) == 1


def test_tie_leaves_unassigned(films_db):
    task = films_task(films_db)
    # film titles share neither columns nor rows with either gold: 0.0 vs 0.0
    candidates = make_candidates(films_db, ["SELECT title FROM films"])
    assignment = assign_gold_labels(candidates, task)
    assert assignment.label(0) is None


def test_below_threshold_leaves_unassigned(films_db):
    task = films_task(films_db)
    # shares the column name but only 1 of 8 distinct rows with gold 0:
    # 0.5 + 0.5/8 would be 0.5625 -- use a disjoint-rows variant instead
    candidates = make_candidates(films_db, [
        "SELECT opinion, score FROM reviews",  # 1/3 cols with either gold, rows disjoint
    ])
    assignment = assign_gold_labels(candidates, task)
    assert assignment.label(0) is None


def test_dominant_similarity_wins(films_db):
    task = films_task(films_db)
    # DISTINCT opinion: same column as gold 0, rows inter 5 / union 6
    # -> 0.5 + 0.5*(5/6) = 0.9166 vs 0.0 against gold 1
    candidates = make_candidates(films_db, ["SELECT DISTINCT opinion FROM reviews"])
    assignment = assign_gold_labels(candidates, task)
    assert assignment.label(0) == 0


def test_gold_execution_failure_raises(films_db):
    bad = Task(id="bad", utterance="?", db=films_db,
               gold_sqls=("SELECT opinion FROM reviews", "SELECT 1/0"))
    with pytest.raises(Exception):
        assign_gold_labels(make_candidates(films_db, ["SELECT opinion FROM reviews"]), bad)


# --- gold entropy --------------------------------------------------------------------


def test_entropy_zero_when_one_label(films_db):
    task = films_task(films_db)
    candidates = make_candidates(films_db, [
        "SELECT opinion FROM reviews",
        "SELECT r.opinion FROM reviews r",
    ])
    state = init_session("u", candidates)
    assert gold_entropy(state, assign_gold_labels(candidates, task)) == 0.0


def test_entropy_one_bit_for_even_split(films_db):
    task = films_task(films_db)
    candidates = make_candidates(films_db, [
        "SELECT opinion FROM reviews",
        "SELECT score FROM reviews",
    ])
    state = init_session("u", candidates)
    assert gold_entropy(state, assign_gold_labels(candidates, task)) == pytest.approx(1.0)


def test_entropy_skewed_masses(films_db):
    task = films_task(films_db)
    candidates = make_candidates(
        films_db,
        ["SELECT opinion FROM reviews", "SELECT score FROM reviews"],
        weights=[0.75, 0.25],
    )
    state = init_session("u", candidates)
    # H(0.75, 0.25) = 0.811278...
    assert gold_entropy(state, assign_gold_labels(candidates, task)) == pytest.approx(
        0.8112781244591328
    )


# --- the perfect-splitter construction ------------------------------------------------


NUMS_DB = database_from_dict({
    "tables": [
        {
            "name": "nums",
            "columns": [{"name": "v", "type": "integer"}],
            "rows": [[k] for k in range(1, 9)],
        }
    ]
})


def perfect_splitter_task():
    subsets = [[], [1], [2], [3], [1, 2], [1, 3], [2, 3], [1, 2, 3]]
    sqls = []
    for subset in subsets:
        conds = " AND ".join(f"v != {k}" for k in subset)
        sqls.append(f"SELECT v FROM nums{' WHERE ' + conds if conds else ''}")
    return Task(id="cube", utterance="which numbers?", db=NUMS_DB,
                gold_sqls=tuple(sqls)), sqls


def test_eight_meanings_with_perfect_splitters_take_three_turns():
    task, sqls = perfect_splitter_task()
    candidates = make_candidates(NUMS_DB, sqls)
    state = init_session(task.utterance, candidates)
    assert len(state.meanings) == 8
    assignment = assign_gold_labels(candidates, task)
    for gold_index in range(8):
        for policy in ("ig_grouped", "ig_atomic"):
            trace = simulate(task, candidates, policy, gold_index,
                             assignment=assignment)
            assert trace.terminated
            assert trace.final_turn == 3, (policy, gold_index)
    # optimality: no policy can do better than ceil(log2 8) = 3
    reference = candidates[0]
    assert oracle_optimal_turns(candidates, reference) == 3


def test_seeded_random_median_at_least_three():
    task, sqls = perfect_splitter_task()
    candidates = make_candidates(NUMS_DB, sqls)
    assignment = assign_gold_labels(candidates, task)
    finals = [
        simulate(task, candidates, "random", 0, seed=seed, assignment=assignment).final_turn
        for seed in range(30)
    ]
    assert statistics.median(finals) >= 3


# --- policies --------------------------------------------------------------------------


def test_policies_are_deterministic(fixture_corpus, fixture_caches):
    task = fixture_corpus.task("films-review")
    candidates = validate_candidates(fixture_caches[task.id], task.db)
    state = init_session(task.utterance, candidates)
    for policy in ("greedy", "ig_atomic", "ig_atomic_nocluster", "ig_grouped"):
        a = choose_variable(policy, state)
        b = choose_variable(policy, state)
        assert a is not None and a.id == b.id


def test_greedy_never_picks_degenerate(fixture_corpus, fixture_caches):
    task = fixture_corpus.task("films-review")
    candidates = validate_candidates(fixture_caches[task.id], task.db)
    state = init_session(task.utterance, candidates)
    n = len(state.candidates)
    variable = choose_variable("greedy", state)
    carriers = sum(1 for c in state.candidates if c.has_group(variable.group))
    assert 0 < carriers < n


def test_random_policy_requires_rng(fixture_corpus, fixture_caches):
    task = fixture_corpus.task("films-review")
    candidates = validate_candidates(fixture_caches[task.id], task.db)
    state = init_session(task.utterance, candidates)
    with pytest.raises(ValueError):
        choose_variable("random", state)


def test_simulation_preserves_reference(fixture_corpus, fixture_caches):
    for task in fixture_corpus:
        candidates = validate_candidates(fixture_caches[task.id], task.db)
        assignment = assign_gold_labels(candidates, task)
        for gold_index in range(len(task.gold_sqls)):
            trace = simulate(task, candidates, "ig_grouped", gold_index,
                             assignment=assignment)
            assert trace.terminated and not trace.stalled


def test_terminal_similarity_is_one(fixture_corpus, fixture_caches):
    task = fixture_corpus.task("sales-regions")
    candidates = validate_candidates(fixture_caches[task.id], task.db)
    trace = simulate(task, candidates, "ig_grouped", 0)
    assert trace.records[-1].intra_similarity == pytest.approx(1.0)


# --- benchmark ---------------------------------------------------------------------------


def test_benchmark_shape_and_determinism(fixture_corpus, fixture_caches):
    report_a = run_benchmark(fixture_corpus, fixture_caches, seeds=(0,))
    report_b = run_benchmark(fixture_corpus, fixture_caches, seeds=(0,))
    assert report_a.to_csv() == report_b.to_csv()
    assert report_a.to_json() == report_b.to_json()
    lines = report_a.to_csv().splitlines()
    assert lines[0] == ("ambiguity_type,policy,turn,median_entropy_bits,"
                        "median_intra_similarity,n_tasks")
    policies_seen = {line.split(",")[1] for line in lines[1:]}
    assert policies_seen == set(POLICIES)
    types_seen = {line.split(",")[0] for line in lines[1:]}
    assert types_seen == {"scope", "attachment", "vague"}


def test_benchmark_requires_cache(fixture_corpus):
    with pytest.raises(PlsqError):
        run_benchmark(fixture_corpus, {}, seeds=(0,))


def test_benchmark_rejects_empty_corpus(fixture_caches):
    from plsq.corpus import Corpus

    with pytest.raises(PlsqError):
        run_benchmark(Corpus(()), fixture_caches)


def test_grouped_beats_baselines_at_turn_three(fixture_corpus, fixture_caches):
    report = run_benchmark(fixture_corpus, fixture_caches,
                           policies=("random", "ig_atomic_nocluster", "ig_grouped"),
                           seeds=(0, 1, 2, 3, 4))

    def median_at_three(policy):
        values = [t.value_at(3, "entropy_bits") for t in report.traces
                  if t.policy == policy]
        return statistics.median(values)

    grouped = median_at_three("ig_grouped")
    assert grouped <= median_at_three("ig_atomic_nocluster") + 1e-12
    assert grouped <= median_at_three("random") + 1e-12


def test_intra_similarity_uses_session_comparator(fixture_corpus, fixture_caches):
    task = fixture_corpus.task("films-review")
    candidates = validate_candidates(fixture_caches[task.id], task.db)
    state = init_session(task.utterance, candidates)
    value = mean_intra_similarity(state)
    assert 0.0 <= value <= 1.0


def test_stalled_trace_is_logged_not_fatal():
    # two functionally distinct candidates with identical feature sets leave
    # no splitter: the policy yields nothing and the trace records a stall
    from plsq.engine import Candidate
    from plsq.executor import ResultTable
    from plsq.features import AtomicFeature

    features = frozenset([AtomicFeature("WHERE", "same")])
    candidates = [
        Candidate(0, "c0", features, ResultTable(("x",), ((1,),)), 0.5),
        Candidate(1, "c1", features, ResultTable(("x",), ((2,),)), 0.5),
    ]
    task = Task(id="stall", utterance="?", db=NUMS_DB,
                gold_sqls=("SELECT v FROM nums",))
    assignment = GoldAssignment(labels=((0, 0), (1, 0)), n_golds=1)
    trace = simulate(task, candidates, "ig_grouped", 0, assignment=assignment)
    assert trace.stalled and not trace.terminated
    assert trace.final_turn == 0
