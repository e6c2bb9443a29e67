"""Candidate sampling from a chat-completion endpoint, and validity filtering.

Sampling is cache-first: generate_candidates talks to the network once and
the resulting CandidateCache is the unit of reproducibility — the eval
harness and all fixtures replay caches offline. validate_candidates turns
raw samples into executable, deduplicated Candidates with multiplicity-
proportional weights.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .corpus import CandidateCache, Task
from .engine import Candidate
from .errors import EmptyCandidateSetError, ExecutionError, SamplingError, SqlError
from .executor import execute
from .features import extract_features
from .schema import DatabaseSpec
from .sqlparser import canonical_sql, parse_sql

ENDPOINT_ENV = "PLSQ_LLM_ENDPOINT"
API_KEY_ENV = "PLSQ_LLM_API_KEY"

# versioned in-repo prompt templates; reproducibility beats prompt cleverness
PROMPT_TEMPLATES = {
    "v1": (
        "You translate questions into SQL. Given the schema below, translate "
        "the user's question into a single SQL query for this schema. Reply "
        "with the SQL query only.\n\n{schema}"
    ),
}

_FENCE_RE = re.compile(r"```(?:sql)?\s*(.*?)```", re.DOTALL | re.IGNORECASE)


@dataclass(frozen=True)
class SamplingConfig:
    endpoint: str = ""
    model: str = "gpt-4o"
    n: int = 50
    temperature: float = 0.7
    timeout: float = 30.0
    max_parallel: int = 4
    prompt_template: str = "v1"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def render_schema(db: DatabaseSpec) -> str:
    """Schema serialization used in the sampling prompt (CREATE TABLE text)."""
    statements = []
    for table in db.tables:
        cols = ",\n".join(f"  {c.name} {c.type.upper()}" for c in table.columns)
        statements.append(f"CREATE TABLE {table.name} (\n{cols}\n);")
    return "\n".join(statements)


def extract_sql(message: str) -> str:
    """First code-fenced block if present, else the whole message; trailing
    semicolon trimmed."""
    match = _FENCE_RE.search(message)
    text = match.group(1) if match else message
    return text.strip().rstrip(";").strip()


def generate_candidates(task: Task, cfg: SamplingConfig,
                        transport: httpx.BaseTransport | None = None) -> CandidateCache:
    """Draw cfg.n samples in request order; any network/auth failure aborts
    without a partial cache. Per-sample extraction failures become empty
    strings and are dropped later at validation."""
    endpoint = cfg.endpoint or os.environ.get(ENDPOINT_ENV, "")
    if not endpoint:
        raise SamplingError(f"no endpoint configured (set {ENDPOINT_ENV})")
    api_key = os.environ.get(API_KEY_ENV, "")
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    system_prompt = PROMPT_TEMPLATES[cfg.prompt_template].format(
        schema=render_schema(task.db)
    )
    payload = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": system_prompt},
            {"role": "user", "content": task.utterance},
        ],
    }

    def one_sample(index: int) -> str:
        response = client.post(endpoint, json=payload, headers=headers)
        response.raise_for_status()
        data = response.json()
        try:
            message = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return ""
        return extract_sql(str(message))

    samples: list[str] = [""] * cfg.n
    with httpx.Client(transport=transport, timeout=cfg.timeout) as client:
        with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
            futures = [pool.submit(one_sample, i) for i in range(cfg.n)]
            try:
                for i, future in enumerate(futures):
                    samples[i] = future.result()
            except httpx.HTTPError as exc:
                for f in futures:
                    f.cancel()
                raise SamplingError(f"sampling failed: {exc}") from exc
    return CandidateCache(
        task_id=task.id, model=cfg.model, temperature=cfg.temperature,
        samples=tuple(samples),
    )


def validate_candidates(cache: CandidateCache, db: DatabaseSpec) -> list[Candidate]:
    """Parse, resolve and execute every sample; drop the ones that fail any
    step; merge exact canonical duplicates. Candidate id = index of the
    first occurrence in the cache; weight = multiplicity / valid count."""
    first_index: dict[str, int] = {}
    multiplicity: dict[str, int] = {}
    parsed: dict[str, tuple] = {}
    valid_total = 0
    for index, raw in enumerate(cache.samples):
        if not raw.strip():
            continue
        try:
            ast = parse_sql(raw, db)
            canonical = canonical_sql(ast)
            if canonical not in parsed:
                result = execute(ast, db)
                parsed[canonical] = (extract_features(ast), result)
                first_index[canonical] = index
        except (SqlError, ExecutionError):
            continue
        multiplicity[canonical] = multiplicity.get(canonical, 0) + 1
        valid_total += 1
    if not parsed:
        raise EmptyCandidateSetError(
            f"no valid candidates among {len(cache.samples)} samples for task "
            f"{cache.task_id!r}"
        )
    candidates = [
        Candidate(
            id=first_index[canonical],
            sql=canonical,
            features=features,
            result=result,
            weight=multiplicity[canonical] / valid_total,
        )
        for canonical, (features, result) in parsed.items()
    ]
    candidates.sort(key=lambda c: c.id)
    return candidates
