from __future__ import annotations

import json

import pytest

from plsq.corpus import (
    cache_to_dict,
    corpus_from_dict,
    corpus_to_dict,
    load_candidate_cache,
    load_corpus,
    save_candidate_cache,
    save_corpus,
)
from plsq.errors import CorpusError

MINIMAL = {
    "tasks": [
        {
            "id": "t1",
            "utterance": "what is there?",
            "db": {
                "tables": [
                    {
                        "name": "things",
                        "columns": [{"name": "name", "type": "text"}],
                        "rows": [["rock"]],
                    }
                ]
            },
            "gold_sqls": ["SELECT name FROM things"],
        }
    ]
}


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_minimal_corpus_loads(tmp_path):
    corpus = load_corpus(write(tmp_path, "c.json", MINIMAL))
    assert len(corpus) == 1
    assert corpus.task("t1").utterance == "what is there?"


def test_gold_syntax_error_names_the_task(tmp_path):
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["gold_sqls"] = ["SELEC name FROM things"]
    with pytest.raises(CorpusError) as err:
        load_corpus(write(tmp_path, "c.json", bad))
    assert "t1" in str(err.value)
    assert err.value.task_id == "t1"


def test_gold_execution_error_rejected(tmp_path):
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["gold_sqls"] = ["SELECT 1/0 FROM things"]
    with pytest.raises(CorpusError):
        load_corpus(write(tmp_path, "c.json", bad))


def test_empty_tasks_array_is_valid(tmp_path):
    corpus = load_corpus(write(tmp_path, "c.json", {"tasks": []}))
    assert len(corpus) == 0


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(CorpusError):
        load_corpus(path)


def test_duplicate_task_ids_rejected():
    doubled = {"tasks": [MINIMAL["tasks"][0], MINIMAL["tasks"][0]]}
    with pytest.raises(CorpusError):
        corpus_from_dict(doubled)


def test_empty_gold_sqls_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["gold_sqls"] = []
    with pytest.raises(CorpusError):
        corpus_from_dict(bad)


def test_bad_ambiguity_type_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["ambiguity_type"] = "mystery"
    with pytest.raises(CorpusError):
        corpus_from_dict(bad)


def test_row_arity_mismatch_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["db"]["tables"][0]["rows"] = [["rock", 2]]
    with pytest.raises(CorpusError):
        corpus_from_dict(bad)


def test_cell_type_mismatch_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["tasks"][0]["db"]["tables"][0]["rows"] = [[42]]
    with pytest.raises(CorpusError):
        corpus_from_dict(bad)


def test_corpus_round_trip(tmp_path):
    original = load_corpus(write(tmp_path, "c.json", MINIMAL))
    save_corpus(original, tmp_path / "again.json")
    reloaded = load_corpus(tmp_path / "again.json")
    assert reloaded == original
    assert corpus_to_dict(reloaded) == corpus_to_dict(original)


def test_cache_loads_verbatim_with_duplicates(tmp_path):
    payload = {
        "task_id": "t1",
        "model": "m",
        "temperature": 0.7,
        "samples": ["SELECT name FROM things", "SELECT name FROM things", "garbage("],
    }
    cache = load_candidate_cache(write(tmp_path, "cache.json", payload))
    assert cache.samples == tuple(payload["samples"])  # duplicates preserved


def test_cache_with_unknown_task_id_loads(tmp_path):
    payload = {"task_id": "nope", "model": "m", "temperature": 0.0, "samples": []}
    cache = load_candidate_cache(write(tmp_path, "cache.json", payload))
    assert cache.task_id == "nope"  # resolution is deferred to session creation


def test_cache_missing_field_rejected(tmp_path):
    payload = {"task_id": "t1", "model": "m", "samples": []}
    with pytest.raises(CorpusError):
        load_candidate_cache(write(tmp_path, "cache.json", payload))


def test_cache_round_trip(tmp_path):
    payload = {"task_id": "t1", "model": "m", "temperature": 0.3, "samples": ["SELECT 1"]}
    cache = load_candidate_cache(write(tmp_path, "cache.json", payload))
    save_candidate_cache(cache, tmp_path / "again.json")
    assert load_candidate_cache(tmp_path / "again.json") == cache
    assert cache_to_dict(cache) == payload


def test_load_cache_dir_keys_by_task(tmp_path, fixture_caches):
    assert set(fixture_caches) == {
        "films-review", "films-duration", "sales-regions",
        "courses-enrollment", "books-loans", "shows-attachment",
    }


def test_bundled_fixture_corpus_is_valid(fixture_corpus):
    assert len(fixture_corpus) == 6
    for task in fixture_corpus:
        assert len(task.gold_sqls) >= 2
        assert task.ambiguity_type in ("scope", "attachment", "vague")
