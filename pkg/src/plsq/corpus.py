"""Benchmark tasks and cached candidate samples, loaded from JSON files.

Gold queries are validated eagerly (parsed and executed) because every
downstream metric depends on them; candidate caches are loaded verbatim
and validity filtering happens later, in llm.validate_candidates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import CorpusError, ExecutionError, SqlError
from .executor import execute
from .schema import DatabaseSpec, database_from_dict, database_to_dict
from .sqlparser import parse_sql

AMBIGUITY_TYPES = ("scope", "attachment", "vague")


@dataclass(frozen=True)
class Task:
    id: str
    utterance: str
    db: DatabaseSpec
    gold_sqls: tuple[str, ...]
    ambiguity_type: str | None = None


@dataclass(frozen=True)
class CandidateCache:
    task_id: str
    model: str
    temperature: float
    samples: tuple[str, ...]


@dataclass(frozen=True)
class Corpus:
    tasks: tuple[Task, ...]

    def task(self, task_id: str) -> Task | None:
        for t in self.tasks:
            if t.id == task_id:
                return t
        return None

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)


def _task_from_dict(data: dict) -> Task:
    try:
        task_id = str(data["id"])
        utterance = str(data["utterance"])
        db_data = data["db"]
        gold_sqls = data["gold_sqls"]
    except KeyError as exc:
        raise CorpusError(f"task is missing required field {exc.args[0]!r}") from None
    try:
        db = database_from_dict(db_data)
    except CorpusError as exc:
        raise CorpusError(f"invalid database: {exc}", task_id=task_id, field="db") from None
    if not isinstance(gold_sqls, list) or not gold_sqls:
        raise CorpusError("gold_sqls must be a non-empty list", task_id=task_id, field="gold_sqls")
    ambiguity = data.get("ambiguity_type")
    if ambiguity is not None and ambiguity not in AMBIGUITY_TYPES:
        raise CorpusError(
            f"ambiguity_type must be one of {AMBIGUITY_TYPES}, got {ambiguity!r}",
            task_id=task_id,
            field="ambiguity_type",
        )
    for i, sql in enumerate(gold_sqls):
        try:
            execute(parse_sql(sql, db), db)
        except (SqlError, ExecutionError) as exc:
            raise CorpusError(
                f"gold SQL #{i} failed: {exc}", task_id=task_id, field="gold_sqls"
            ) from None
    return Task(task_id, utterance, db, tuple(str(s) for s in gold_sqls), ambiguity)


def corpus_from_dict(data: dict) -> Corpus:
    tasks = []
    seen = set()
    for tdata in data.get("tasks", []):
        task = _task_from_dict(tdata)
        if task.id in seen:
            raise CorpusError("duplicate task id", task_id=task.id, field="id")
        seen.add(task.id)
        tasks.append(task)
    return Corpus(tuple(tasks))


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "tasks": [
            {
                "id": t.id,
                "utterance": t.utterance,
                "db": database_to_dict(t.db),
                "gold_sqls": list(t.gold_sqls),
                **({"ambiguity_type": t.ambiguity_type} if t.ambiguity_type else {}),
            }
            for t in corpus.tasks
        ]
    }


def load_corpus(path: str | Path) -> Corpus:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed corpus file {path}: {exc}") from None
    if not isinstance(data, dict) or "tasks" not in data:
        raise CorpusError(f"corpus file {path} has no 'tasks' array")
    return corpus_from_dict(data)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(json.dumps(corpus_to_dict(corpus), indent=2) + "\n")


def cache_from_dict(data: dict) -> CandidateCache:
    try:
        return CandidateCache(
            task_id=str(data["task_id"]),
            model=str(data["model"]),
            temperature=float(data["temperature"]),
            samples=tuple(str(s) for s in data["samples"]),
        )
    except KeyError as exc:
        raise CorpusError(f"cache is missing required field {exc.args[0]!r}") from None


def cache_to_dict(cache: CandidateCache) -> dict:
    return {
        "task_id": cache.task_id,
        "model": cache.model,
        "temperature": cache.temperature,
        "samples": list(cache.samples),
    }


def load_candidate_cache(path: str | Path) -> CandidateCache:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed cache file {path}: {exc}") from None
    return cache_from_dict(data)


def save_candidate_cache(cache: CandidateCache, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cache_to_dict(cache), indent=2) + "\n")


def load_cache_dir(directory: str | Path) -> dict[str, CandidateCache]:
    """Load every *.json cache in a directory, keyed by task id."""
    caches: dict[str, CandidateCache] = {}
    for path in sorted(Path(directory).glob("*.json")):
        cache = load_candidate_cache(path)
        if cache.task_id in caches:
            raise CorpusError(f"duplicate cache for task {cache.task_id!r} in {directory}")
        caches[cache.task_id] = cache
    return caches
