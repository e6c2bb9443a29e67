from __future__ import annotations

import json
import threading

import httpx
import pytest

from plsq.corpus import CandidateCache, Task
from plsq.errors import EmptyCandidateSetError, SamplingError
from plsq.llm import (
    SamplingConfig,
    extract_sql,
    generate_candidates,
    render_schema,
    validate_candidates,
)


def make_task(db):
    return Task(
        id="t1",
        utterance="what do we sell?",
        db=db,
        gold_sqls=("SELECT product FROM sales",),
    )


def cache(samples, task_id="t1"):
    return CandidateCache(task_id=task_id, model="m", temperature=0.7,
                         samples=tuple(samples))


# --- config and prompt plumbing ---------------------------------------------------


def test_config_defaults_match_protocol():
    cfg = SamplingConfig()
    assert cfg.n == 50
    assert cfg.temperature == 0.7


def test_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(n=0)
    with pytest.raises(ValueError):
        SamplingConfig(temperature=-0.1)


def test_schema_renders_as_create_table(sales_db):
    text = render_schema(sales_db)
    assert "CREATE TABLE sales" in text
    assert "product TEXT" in text
    assert "amount INTEGER" in text


def test_extract_sql_prefers_fenced_block():
    message = "Sure!\n```sql\nSELECT product FROM sales;\n```\nHope that helps."
    assert extract_sql(message) == "SELECT product FROM sales"
    assert extract_sql("SELECT 1;") == "SELECT 1"
    assert extract_sql("```\nSELECT 2\n```") == "SELECT 2"


# --- generation against a mock endpoint --------------------------------------------


def test_generation_collects_n_samples_in_order(sales_db, monkeypatch):
    monkeypatch.setenv("PLSQ_LLM_API_KEY", "secret")
    counter = {"n": 0}
    lock = threading.Lock()

    def handler(request: httpx.Request) -> httpx.Response:
        assert request.headers["authorization"] == "Bearer secret"
        payload = json.loads(request.content)
        assert payload["model"] == "test-model"
        assert payload["temperature"] == 0.0
        assert "CREATE TABLE sales" in payload["messages"][0]["content"]
        assert payload["messages"][1]["content"] == "what do we sell?"
        with lock:
            counter["n"] += 1
            k = counter["n"]
        return httpx.Response(
            200,
            json={"choices": [{"message": {"content": f"SELECT product FROM sales LIMIT {k}"}}]},
        )

    cfg = SamplingConfig(endpoint="http://llm.test/v1/chat", model="test-model",
                        n=5, temperature=0.0)
    out = generate_candidates(make_task(sales_db), cfg,
                              transport=httpx.MockTransport(handler))
    assert out.task_id == "t1"
    assert len(out.samples) == 5
    assert all(s.startswith("SELECT product") for s in out.samples)


def test_generation_aborts_without_partial_cache(sales_db):
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("unreachable", request=request)

    cfg = SamplingConfig(endpoint="http://down.test/chat", n=3)
    with pytest.raises(SamplingError):
        generate_candidates(make_task(sales_db), cfg,
                            transport=httpx.MockTransport(handler))


def test_generation_requires_endpoint(sales_db, monkeypatch):
    monkeypatch.delenv("PLSQ_LLM_ENDPOINT", raising=False)
    with pytest.raises(SamplingError):
        generate_candidates(make_task(sales_db), SamplingConfig(n=1))


def test_unparseable_message_becomes_empty_placeholder(sales_db):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"unexpected": "shape"})

    cfg = SamplingConfig(endpoint="http://odd.test/chat", n=2)
    out = generate_candidates(make_task(sales_db), cfg,
                              transport=httpx.MockTransport(handler))
    assert out.samples == ("", "")


# --- validation ---------------------------------------------------------------------


def test_invalid_samples_are_dropped(sales_db):
    candidates = validate_candidates(cache([
        "SELECT product FROM sales",
        "SELEC product FROM sales",        # syntax
        "SELECT prod FROM sales",          # resolution
        "SELECT amount/0 FROM sales",      # execution
        "UPDATE sales SET amount = 1",     # unsupported
        "",                                # extraction placeholder
        "SELECT region FROM sales",
    ]), sales_db)
    assert len(candidates) == 2
    assert {c.id for c in candidates} == {0, 6}


def test_duplicates_merge_with_multiplicity_weight(sales_db):
    candidates = validate_candidates(cache([
        "SELECT product FROM sales",
        "SELECT s.product FROM sales s",   # alias variant, same canonical text
        "SELECT region FROM sales",
        "select product from sales",       # case variant
    ]), sales_db)
    assert len(candidates) == 2
    product = next(c for c in candidates if "product" in c.sql)
    region = next(c for c in candidates if "region" in c.sql)
    assert product.id == 0  # first occurrence
    assert product.weight == pytest.approx(3 / 4)
    assert region.weight == pytest.approx(1 / 4)


def test_weights_use_valid_sample_count(sales_db):
    # 3 valid of 5 samples: weights are multiplicities over 3, not 5
    candidates = validate_candidates(cache([
        "SELECT product FROM sales",
        "SELECT product FROM sales",
        "broken(",
        "also broken",
        "SELECT region FROM sales",
    ]), sales_db)
    weights = {c.id: c.weight for c in candidates}
    assert weights[0] == pytest.approx(2 / 3)
    assert weights[4] == pytest.approx(1 / 3)
    assert sum(weights.values()) == pytest.approx(1.0)


def test_all_invalid_raises(sales_db):
    with pytest.raises(EmptyCandidateSetError):
        validate_candidates(cache(["nope", "definitely not sql"]), sales_db)


def test_validation_is_deterministic(sales_db, fixture_caches, fixture_corpus):
    task = fixture_corpus.task("films-review")
    first = validate_candidates(fixture_caches["films-review"], task.db)
    second = validate_candidates(fixture_caches["films-review"], task.db)
    assert first == second
    assert [c.id for c in first] == sorted(c.id for c in first)


def test_candidate_count_bounded_by_sample_count(fixture_corpus, fixture_caches):
    for task in fixture_corpus:
        candidates = validate_candidates(fixture_caches[task.id], task.db)
        assert len(candidates) <= len(fixture_caches[task.id].samples)
