"""Clarification engine: belief state over SQL candidates and its transitions.

The surviving candidates carry normalized weights (the belief). Meanings
are exact functional-equivalence classes of execution results; display
clusters are a separate, similarity-threshold grouping used only to mine
characteristic feature groups. Decision variables (feature groups) are
ranked by expected information gain over the meaning distribution, and a
yes/no answer filters candidates on joint presence of the group.

Every operation returns a new immutable SessionState; history supports
exact undo and the append-only log supports deterministic replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .cluster import ClusterAssignment, cluster, layout2d, similarity_matrix
from .errors import (
    EmptyCandidateSetError,
    EmptyResultSetError,
    UndoAtRootError,
    VariableNotFoundError,
)
from .executor import ResultTable, result_key
from .features import AtomicFeature


@dataclass(frozen=True)
class EngineConfig:
    display_cut: float = 0.3
    lift_min: float = 1.5
    p_in_min: float = 0.8
    group_cap: int = 3
    implicit_min: float = 0.95
    determined_eps: float = 1e-12
    comparator: str = "table_jaccard"


DEFAULT_CONFIG = EngineConfig()


@dataclass(frozen=True)
class Candidate:
    id: int
    sql: str
    features: frozenset  # of AtomicFeature
    result: ResultTable
    weight: float

    def has_group(self, group: frozenset) -> bool:
        return group <= self.features


@dataclass(frozen=True)
class Meaning:
    class_id: int
    member_ids: tuple[int, ...]
    mass: float
    representative_result: ResultTable


@dataclass(frozen=True)
class DecisionVariable:
    id: str
    group: frozenset  # of AtomicFeature, non-empty
    source_cluster: int | None
    lift: float
    implicit_features: tuple  # of (AtomicFeature, probability)
    example_candidate_id: int
    ig_bits: float

    def display_features(self) -> tuple[str, ...]:
        return tuple(f.display for f in sorted(self.group))


@dataclass(frozen=True)
class LogEntry:
    turn: int
    action: str  # 'decision' | 'selection' | 'undo'
    variable_id: str | None = None
    choice: str | None = None
    candidate_ids: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        out = {"turn": self.turn, "action": self.action}
        if self.variable_id is not None:
            out["variable_id"] = self.variable_id
        if self.choice is not None:
            out["choice"] = self.choice
        if self.candidate_ids is not None:
            out["candidate_ids"] = list(self.candidate_ids)
        return out


@dataclass(frozen=True)
class HistoryEntry:
    entry: LogEntry
    prior: tuple  # of (candidate_id, weight), the pre-action surviving set


@dataclass(frozen=True)
class SessionState:
    utterance: str
    candidates: tuple[Candidate, ...]
    meanings: tuple[Meaning, ...]
    clusters: ClusterAssignment
    layout: tuple  # of (x, y)
    variables: tuple[DecisionVariable, ...]  # ranked
    history: tuple[HistoryEntry, ...]
    log: tuple[LogEntry, ...]
    turn: int
    config: EngineConfig
    pool: tuple[Candidate, ...]  # initial candidate set, for undo/replay

    def candidate(self, candidate_id: int) -> Candidate | None:
        for c in self.candidates:
            if c.id == candidate_id:
                return c
        return None

    def variable(self, variable_id: str) -> DecisionVariable | None:
        for v in self.variables:
            if v.id == variable_id:
                return v
        return None


def entropy_bits(masses) -> float:
    value = -sum(p * math.log2(p) for p in masses if p > 0.0)
    return value if value > 0.0 else 0.0


def _normalized(candidates) -> tuple[Candidate, ...]:
    total = sum(c.weight for c in candidates)
    if total <= 0:
        raise EmptyCandidateSetError("candidate weights must be positive")
    return tuple(replace(c, weight=c.weight / total) for c in candidates)


def equivalence_classes(state: SessionState) -> tuple[Meaning, ...]:
    return state.meanings


def _equivalence_classes(candidates) -> tuple[Meaning, ...]:
    groups: dict = {}
    for c in candidates:
        groups.setdefault(result_key(c.result), []).append(c)
    ordered = sorted(groups.values(), key=lambda ms: min(m.id for m in ms))
    return tuple(
        Meaning(
            class_id=i,
            member_ids=tuple(sorted(m.id for m in members)),
            mass=sum(m.weight for m in members),
            representative_result=min(members, key=lambda m: m.id).result,
        )
        for i, members in enumerate(ordered)
    )


def _feature_universe(candidates) -> list:
    return sorted({f for c in candidates for f in c.features})


def _count_carriers(candidates, group: frozenset) -> int:
    return sum(1 for c in candidates if c.has_group(group))


def _example_candidate(candidates, group: frozenset) -> int:
    carriers = [c for c in candidates if c.has_group(group)]
    best = max(carriers, key=lambda c: (c.weight, -c.id))
    return best.id


def _implicit_features(candidates, group: frozenset, universe, threshold: float) -> tuple:
    carriers = [c for c in candidates if c.has_group(group)]
    out = []
    for feature in universe:
        if feature in group:
            continue
        co = sum(1 for c in carriers if feature in c.features) / len(carriers)
        if co >= threshold:
            out.append((feature, co))
    out.sort(key=lambda pair: (-pair[1], pair[0].id))
    return tuple(out)


def _variable_id(group: frozenset) -> str:
    return "+".join(sorted(f.id for f in group))


def characteristic_groups(state: SessionState) -> list[DecisionVariable]:
    """Unranked decision variables: one per cluster-characteristic feature
    group plus one per non-degenerate atomic feature."""
    return _characteristic_groups(
        state.candidates, state.meanings, state.clusters, state.config
    )


def _characteristic_groups(candidates, meanings, clusters, config) -> list[DecisionVariable]:
    if len(meanings) < 2:
        return []
    n = len(candidates)
    universe = _feature_universe(candidates)
    counts_all = {f: sum(1 for c in candidates if f in c.features) for f in universe}

    variables: list[DecisionVariable] = []
    seen_ids: set[str] = set()

    for cluster_id in range(clusters.k):
        member_idx = clusters.members(cluster_id)
        members = [candidates[i] for i in member_idx]
        size = len(members)
        scored = []
        for feature in universe:
            count_in = sum(1 for c in members if feature in c.features)
            p_in = count_in / size
            p_all = counts_all[feature] / n
            lift = p_in / p_all
            if lift >= config.lift_min and p_in >= config.p_in_min:
                scored.append((feature, lift))
        scored.sort(key=lambda pair: (-pair[1], pair[0].id))
        chosen = [f for f, _ in scored[: config.group_cap]]
        # every group feature must co-occur in at least one surviving candidate
        while chosen and _count_carriers(candidates, frozenset(chosen)) == 0:
            chosen.pop()
        if not chosen:
            continue
        group = frozenset(chosen)
        var_id = _variable_id(group)
        if var_id in seen_ids:
            continue
        seen_ids.add(var_id)
        joint_in = sum(1 for c in members if c.has_group(group)) / size
        joint_all = _count_carriers(candidates, group) / n
        variables.append(
            DecisionVariable(
                id=var_id,
                group=group,
                source_cluster=cluster_id,
                lift=joint_in / joint_all,
                implicit_features=_implicit_features(
                    candidates, group, universe, config.implicit_min
                ),
                example_candidate_id=_example_candidate(candidates, group),
                ig_bits=0.0,  # filled by the ranking pass
            )
        )

    for feature in universe:
        if not 0 < counts_all[feature] < n:
            continue  # degenerate: in none or all surviving candidates
        group = frozenset((feature,))
        var_id = _variable_id(group)
        if var_id in seen_ids:
            continue
        seen_ids.add(var_id)
        variables.append(
            DecisionVariable(
                id=var_id,
                group=group,
                source_cluster=None,
                lift=1.0,  # no cluster provenance: C = whole set
                implicit_features=_implicit_features(
                    candidates, group, universe, config.implicit_min
                ),
                example_candidate_id=_example_candidate(candidates, group),
                ig_bits=0.0,
            )
        )
    return variables


def _meaning_votes(candidates, meanings, group: frozenset) -> list[bool]:
    """Value of the variable per meaning: weight-majority vote of group
    presence over member candidates, ties resolved to present."""
    by_id = {c.id: c for c in candidates}
    votes = []
    for meaning in meanings:
        yes_mass = sum(
            by_id[mid].weight for mid in meaning.member_ids if by_id[mid].has_group(group)
        )
        votes.append(yes_mass >= meaning.mass - yes_mass)
    return votes


def information_gain(state: SessionState, variable: DecisionVariable) -> float:
    return _information_gain(state.candidates, state.meanings, variable.group)


def _information_gain(candidates, meanings, group: frozenset) -> float:
    votes = _meaning_votes(candidates, meanings, group)
    prior = entropy_bits(m.mass for m in meanings)
    ig = prior
    for value in (True, False):
        masses = [m.mass for m, v in zip(meanings, votes) if v is value]
        p_value = sum(masses)
        if p_value <= 0.0:
            continue
        ig -= p_value * entropy_bits(m / p_value for m in masses)
    return max(ig, 0.0)


def rank_variables(state: SessionState) -> tuple[DecisionVariable, ...]:
    return state.variables


def _rank(candidates, meanings, variables) -> tuple[DecisionVariable, ...]:
    n = len(candidates)
    ranked = []
    for variable in variables:
        carriers = _count_carriers(candidates, variable.group)
        if not 0 < carriers < n:
            continue  # degenerate over the surviving set
        ig = _information_gain(candidates, meanings, variable.group)
        ranked.append(replace(variable, ig_bits=ig))
    # IG is quantized in the sort key so that last-bit float noise (e.g. from
    # rescaled weights) falls through to the deterministic tie-break
    ranked.sort(key=lambda v: (-round(v.ig_bits, 12), -len(v.group), v.id))
    return tuple(ranked)


def _derive(
    utterance: str,
    candidates,
    config: EngineConfig,
    history: tuple,
    log: tuple,
    turn: int,
    pool: tuple,
) -> SessionState:
    # candidates arrive already normalized; undo depends on weights being
    # restored bit-for-bit, so no renormalization happens here
    candidates = tuple(candidates)
    meanings = _equivalence_classes(candidates)
    matrix = similarity_matrix([c.result for c in candidates], config.comparator)
    assignment = cluster(matrix, cut=config.display_cut)
    layout = layout2d(matrix)
    variables = _rank(
        candidates, meanings, _characteristic_groups(candidates, meanings, assignment, config)
    )
    return SessionState(
        utterance=utterance,
        candidates=candidates,
        meanings=meanings,
        clusters=assignment,
        layout=layout,
        variables=variables,
        history=history,
        log=log,
        turn=turn,
        config=config,
        pool=pool,
    )


def init_session(
    utterance: str, candidates, config: EngineConfig = DEFAULT_CONFIG
) -> SessionState:
    candidates = tuple(candidates)
    if not candidates:
        raise EmptyCandidateSetError("cannot start a session with no candidates")
    if len({c.id for c in candidates}) != len(candidates):
        raise ValueError("candidate ids must be unique")
    normalized = _normalized(candidates)
    return _derive(utterance, normalized, config, (), (), 0, pool=normalized)


def _transition(state: SessionState, kept, entry: LogEntry) -> SessionState:
    prior = tuple((c.id, c.weight) for c in state.candidates)
    history = state.history + (HistoryEntry(entry, prior),)
    log = state.log + (entry,)
    return _derive(
        state.utterance,
        _normalized(kept),
        state.config,
        history,
        log,
        state.turn + 1,
        state.pool,
    )


def _resolve_variable(state: SessionState, variable) -> DecisionVariable:
    wanted = variable if isinstance(variable, str) else variable.id
    resolved = state.variable(wanted)
    if resolved is not None:
        return resolved
    # allow singleton decisions on any surviving feature (the predicted-query
    # panel offers yes/no even on determined features; no on a determined
    # feature is the contradiction path that empties the set)
    for feature in _feature_universe(state.candidates):
        if feature.id == wanted:
            return DecisionVariable(
                id=feature.id,
                group=frozenset((feature,)),
                source_cluster=None,
                lift=1.0,
                implicit_features=(),
                example_candidate_id=_example_candidate(
                    state.candidates, frozenset((feature,))
                ),
                ig_bits=0.0,
            )
    raise VariableNotFoundError(
        f"variable {wanted!r} is neither ranked nor a surviving feature"
    )


def apply_decision(state: SessionState, variable, choice: str) -> SessionState:
    if choice not in ("yes", "no"):
        raise ValueError(f"choice must be 'yes' or 'no', got {choice!r}")
    resolved = _resolve_variable(state, variable)
    want = choice == "yes"
    kept = [c for c in state.candidates if c.has_group(resolved.group) == want]
    if not kept:
        raise EmptyResultSetError(
            "decision would remove every candidate; state unchanged"
        )
    entry = LogEntry(turn=state.turn, action="decision", variable_id=resolved.id, choice=choice)
    return _transition(state, kept, entry)


def apply_selection(state: SessionState, candidate_ids) -> SessionState:
    wanted = set(candidate_ids)
    if not wanted:
        raise EmptyResultSetError("selection is empty")
    surviving = {c.id for c in state.candidates}
    if not wanted <= surviving:
        raise EmptyResultSetError(
            f"selection contains unknown candidate ids: {sorted(wanted - surviving)}"
        )
    kept = [c for c in state.candidates if c.id in wanted]
    entry = LogEntry(
        turn=state.turn, action="selection", candidate_ids=tuple(sorted(wanted))
    )
    return _transition(state, kept, entry)


def undo(state: SessionState) -> SessionState:
    if state.turn == 0 or not state.history:
        raise UndoAtRootError("nothing to undo at turn 0")
    last = state.history[-1]
    by_id = {c.id: c for c in state.pool}
    restored = [replace(by_id[cid], weight=w) for cid, w in last.prior]
    entry = LogEntry(turn=state.turn, action="undo")
    return _derive(
        state.utterance,
        restored,
        state.config,
        state.history[:-1],
        state.log + (entry,),
        state.turn - 1,
        state.pool,
    )


def predicted_features(state: SessionState) -> list[tuple[AtomicFeature, float, bool]]:
    """(feature, probability, determined) for every feature with mass > 0."""
    universe = _feature_universe(state.candidates)
    out = []
    for feature in universe:
        p = sum(c.weight for c in state.candidates if feature in c.features)
        if p > 0.0:
            determined = abs(p - 1.0) <= state.config.determined_eps
            out.append((feature, p, determined))
    out.sort(key=lambda row: (-row[1], row[0].id))
    return out


def is_terminal(state: SessionState) -> bool:
    return len(state.meanings) == 1


def replay(initial: SessionState, log_entries) -> SessionState:
    """Re-apply an exported action log from the initial state."""
    state = initial
    for entry in log_entries:
        if isinstance(entry, dict):
            entry = LogEntry(
                turn=int(entry["turn"]),
                action=entry["action"],
                variable_id=entry.get("variable_id"),
                choice=entry.get("choice"),
                candidate_ids=tuple(entry["candidate_ids"])
                if entry.get("candidate_ids") is not None
                else None,
            )
        if entry.action == "decision":
            state = apply_decision(state, entry.variable_id, entry.choice)
        elif entry.action == "selection":
            state = apply_selection(state, entry.candidate_ids)
        elif entry.action == "undo":
            state = undo(state)
        else:
            raise ValueError(f"unknown action {entry.action!r}")
    return state
