"""Simulated-user benchmark: gold labeling, clarification policies, traces.

The simulated user fixes a target gold interpretation, then answers each
proposed decision variable according to the reference candidate (the
highest-weight candidate labeled with that gold). Per-turn gold-label
entropy and mean intra-set output similarity are recorded; medians are
computed with right-censoring (a finished trace carries its last value
forward), matching per-turn median plotting.
"""

from __future__ import annotations

import csv
import io
import json
import random
import statistics
from dataclasses import dataclass

from .corpus import Corpus, Task
from .engine import (
    DEFAULT_CONFIG,
    Candidate,
    DecisionVariable,
    EngineConfig,
    Meaning,
    SessionState,
    _information_gain,
    _meaning_votes,
    apply_decision,
    entropy_bits,
    init_session,
    is_terminal,
)
from .errors import PlsqError
from .executor import execute, table_similarity
from .llm import validate_candidates
from .sqlparser import parse_sql

POLICIES = ("random", "greedy", "ig_atomic_nocluster", "ig_atomic", "ig_grouped")

UNASSIGNED = None
ASSIGN_THRESHOLD = 0.5


@dataclass(frozen=True)
class GoldAssignment:
    """Per-candidate gold label: index into the task's gold list, or None."""

    labels: tuple  # of (candidate_id, gold_index | None)
    n_golds: int

    def label(self, candidate_id: int):
        for cid, lab in self.labels:
            if cid == candidate_id:
                return lab
        return UNASSIGNED


def assign_gold_labels(candidates, task: Task) -> GoldAssignment:
    """Label each candidate with the most output-similar gold; ties or a
    best score below the threshold leave it unassigned."""
    gold_results = [execute(parse_sql(sql, task.db), task.db) for sql in task.gold_sqls]
    labels = []
    for c in candidates:
        scores = [table_similarity(c.result, gr, "table_jaccard") for gr in gold_results]
        best = max(scores)
        winners = [i for i, s in enumerate(scores) if abs(s - best) <= 1e-12]
        if best >= ASSIGN_THRESHOLD and len(winners) == 1:
            labels.append((c.id, winners[0]))
        else:
            labels.append((c.id, UNASSIGNED))
    return GoldAssignment(tuple(labels), len(gold_results))


def gold_entropy(state: SessionState, assignment: GoldAssignment) -> float:
    masses: dict = {}
    for c in state.candidates:
        lab = assignment.label(c.id)
        masses[lab] = masses.get(lab, 0.0) + c.weight
    return entropy_bits(masses.values())


def mean_intra_similarity(state: SessionState) -> float:
    """Mean pairwise output similarity of the surviving set (1.0 for a
    singleton) under the session comparator."""
    results = [c.result for c in state.candidates]
    n = len(results)
    if n < 2:
        return 1.0
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += table_similarity(results[i], results[j], state.config.comparator)
            pairs += 1
    return total / pairs


# --- policies -------------------------------------------------------------------


def _singletons(state: SessionState) -> list[DecisionVariable]:
    return [v for v in state.variables if len(v.group) == 1]


def _candidate_meanings(state: SessionState) -> tuple[Meaning, ...]:
    """Each candidate as its own meaning (the no-clustering ablation)."""
    return tuple(
        Meaning(i, (c.id,), c.weight, c.result) for i, c in enumerate(state.candidates)
    )


def choose_variable(policy: str, state: SessionState, rng: random.Random | None = None):
    """Next decision variable under the given policy, or None if none is
    available."""
    if policy == "ig_grouped":
        return state.variables[0] if state.variables else None
    if policy == "ig_atomic":
        singles = _singletons(state)
        return singles[0] if singles else None
    if policy == "ig_atomic_nocluster":
        singles = _singletons(state)
        if not singles:
            return None
        pseudo = _candidate_meanings(state)
        scored = [
            (-_information_gain(state.candidates, pseudo, v.group), v.id, v)
            for v in singles
        ]
        scored.sort(key=lambda row: row[:2])
        return scored[0][2]
    if policy == "greedy":
        singles = _singletons(state)
        if not singles:
            return None
        best = None
        best_key = None
        for v in singles:
            votes = _meaning_votes(state.candidates, state.meanings, v.group)
            p_yes = sum(m.mass for m, vote in zip(state.meanings, votes) if vote)
            key = (-max(p_yes, 1.0 - p_yes), v.id)
            if best_key is None or key < best_key:
                best_key = key
                best = v
        return best
    if policy == "random":
        if rng is None:
            raise ValueError("random policy requires a seeded rng")
        if not state.variables:
            return None
        return rng.choice(list(state.variables))
    raise ValueError(f"unknown policy {policy!r}")


# --- simulation -------------------------------------------------------------------


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    entropy_bits: float
    intra_similarity: float
    n_candidates: int
    variable_id: str | None = None
    choice: str | None = None

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "entropy_bits": self.entropy_bits,
            "intra_similarity": self.intra_similarity,
            "n_candidates": self.n_candidates,
            "variable_id": self.variable_id,
            "choice": self.choice,
        }


@dataclass(frozen=True)
class TurnTrace:
    task_id: str
    gold_index: int
    policy: str
    seed: int | str | None
    records: tuple[TurnRecord, ...]
    terminated: bool
    stalled: bool

    @property
    def final_turn(self) -> int:
        return self.records[-1].turn

    def value_at(self, turn: int, field: str) -> float:
        index = min(turn, len(self.records) - 1)
        return getattr(self.records[index], field)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "gold_index": self.gold_index,
            "policy": self.policy,
            "seed": self.seed,
            "records": [r.to_dict() for r in self.records],
            "terminated": self.terminated,
            "stalled": self.stalled,
        }


def reference_candidate(candidates, assignment: GoldAssignment, target_gold: int) -> Candidate:
    labeled = [c for c in candidates if assignment.label(c.id) == target_gold]
    if not labeled:
        raise PlsqError(f"gold {target_gold} has no assigned candidate")
    return max(labeled, key=lambda c: (c.weight, -c.id))


def simulate(
    task: Task,
    candidates,
    policy: str,
    target_gold: int,
    turn_cap: int = 20,
    seed: int | str | None = None,
    assignment: GoldAssignment | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> TurnTrace:
    if assignment is None:
        assignment = assign_gold_labels(candidates, task)
    reference = reference_candidate(candidates, assignment, target_gold)
    rng = random.Random(seed) if policy == "random" else None

    state = init_session(task.utterance, candidates, config)
    records = [
        TurnRecord(0, gold_entropy(state, assignment), mean_intra_similarity(state),
                   len(state.candidates))
    ]
    stalled = False
    while not is_terminal(state) and state.turn < turn_cap:
        variable = choose_variable(policy, state, rng)
        if variable is None:
            stalled = True
            break
        choice = "yes" if reference.has_group(variable.group) else "no"
        state = apply_decision(state, variable, choice)
        records.append(
            TurnRecord(
                state.turn,
                gold_entropy(state, assignment),
                mean_intra_similarity(state),
                len(state.candidates),
                variable.id,
                choice,
            )
        )
    return TurnTrace(
        task_id=task.id,
        gold_index=target_gold,
        policy=policy,
        seed=seed,
        records=tuple(records),
        terminated=is_terminal(state),
        stalled=stalled,
    )


# --- benchmark --------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple  # of dicts, one per (ambiguity_type, policy, turn)
    traces: tuple[TurnTrace, ...]
    skipped: tuple  # of (task_id, gold_index, reason)
    turn_cap: int
    seeds: tuple[int, ...]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["ambiguity_type", "policy", "turn", "median_entropy_bits",
             "median_intra_similarity", "n_tasks"]
        )
        for row in self.rows:
            writer.writerow(
                [row["ambiguity_type"], row["policy"], row["turn"],
                 repr(row["median_entropy_bits"]), repr(row["median_intra_similarity"]),
                 row["n_tasks"]]
            )
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = {
            "turn_cap": self.turn_cap,
            "seeds": list(self.seeds),
            "rows": list(self.rows),
            "skipped": [list(s) for s in self.skipped],
            "traces": [t.to_dict() for t in self.traces],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _trace_seed(base_seed: int, task_id: str, gold_index: int, repeat: int) -> str:
    # string seeding keeps random.Random deterministic across platforms
    return f"{base_seed}:{task_id}:{gold_index}:{repeat}"


def run_benchmark(
    corpus: Corpus,
    caches: dict,
    policies=POLICIES,
    seeds=(0,),
    turn_cap: int = 20,
    config: EngineConfig = DEFAULT_CONFIG,
) -> BenchmarkReport:
    if not corpus.tasks:
        raise PlsqError("empty corpus")
    tasks = sorted(corpus.tasks, key=lambda t: t.id)
    for task in tasks:
        if task.id not in caches:
            raise PlsqError(f"missing candidate cache for task {task.id!r}")

    traces: list[TurnTrace] = []
    skipped: list[tuple] = []
    for task in tasks:
        candidates = validate_candidates(caches[task.id], task.db)
        assignment = assign_gold_labels(candidates, task)
        for gold_index in range(len(task.gold_sqls)):
            if not any(lab == gold_index for _, lab in assignment.labels):
                skipped.append((task.id, gold_index, "no assigned candidate"))
                continue
            for policy in policies:
                if policy == "random":
                    for repeat, base_seed in enumerate(seeds):
                        trace_seed = _trace_seed(base_seed, task.id, gold_index, repeat)
                        traces.append(
                            _simulate_seeded(task, candidates, policy, gold_index,
                                             turn_cap, trace_seed, base_seed,
                                             assignment, config)
                        )
                else:
                    traces.append(
                        simulate(task, candidates, policy, gold_index,
                                 turn_cap=turn_cap, assignment=assignment, config=config)
                    )

    by_type = {t.id: (t.ambiguity_type or "unspecified") for t in tasks}
    groups: dict = {}
    for trace in traces:
        groups.setdefault((by_type[trace.task_id], trace.policy), []).append(trace)

    rows = []
    for (ambiguity_type, policy) in sorted(groups):
        members = groups[(ambiguity_type, policy)]
        max_turn = max(t.final_turn for t in members)
        for turn in range(max_turn + 1):
            rows.append(
                {
                    "ambiguity_type": ambiguity_type,
                    "policy": policy,
                    "turn": turn,
                    "median_entropy_bits": float(
                        statistics.median(t.value_at(turn, "entropy_bits") for t in members)
                    ),
                    "median_intra_similarity": float(
                        statistics.median(
                            t.value_at(turn, "intra_similarity") for t in members
                        )
                    ),
                    "n_tasks": len(members),
                }
            )
    return BenchmarkReport(
        rows=tuple(rows),
        traces=tuple(traces),
        skipped=tuple(skipped),
        turn_cap=turn_cap,
        seeds=tuple(seeds),
    )


def _simulate_seeded(task, candidates, policy, gold_index, turn_cap, trace_seed,
                     base_seed, assignment, config) -> TurnTrace:
    trace = simulate(task, candidates, policy, gold_index, turn_cap=turn_cap,
                     seed=trace_seed, assignment=assignment, config=config)
    # report the user-facing base seed rather than the derived string
    return TurnTrace(
        task_id=trace.task_id,
        gold_index=trace.gold_index,
        policy=trace.policy,
        seed=base_seed,
        records=trace.records,
        terminated=trace.terminated,
        stalled=trace.stalled,
    )
