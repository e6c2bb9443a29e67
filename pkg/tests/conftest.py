from __future__ import annotations

from pathlib import Path

import pytest

from plsq.engine import Candidate, init_session
from plsq.executor import ResultTable, execute
from plsq.features import extract_features
from plsq.schema import database_from_dict
from plsq.sqlparser import canonical_sql, parse_sql

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


FILMS_TABLES = [
    {
        "name": "films",
        "columns": [
            {"name": "id", "type": "integer"},
            {"name": "title", "type": "text"},
            {"name": "genre", "type": "text"},
            {"name": "duration", "type": "integer"},
        ],
        "rows": [
            [1, "Aurora", "drama", 120],
            [2, "Bolt", "action", 95],
            [3, "Cascade", "drama", 141],
            [4, "Dunes", "comedy", 100],
            [5, "Ember", "action", 120],
            [6, "Fjord", "drama", None],
        ],
    },
    {
        "name": "reviews",
        "columns": [
            {"name": "id", "type": "integer"},
            {"name": "film_id", "type": "integer"},
            {"name": "opinion", "type": "text"},
            {"name": "score", "type": "real"},
        ],
        "rows": [
            [1, 1, "moving", 9.0],
            [2, 1, "slow", 6.5],
            [3, 2, "thrilling", 8.0],
            [4, 3, "moving", 7.0],
            [5, 4, "funny", None],
            [6, 5, "loud", 5.0],
        ],
    },
]

SALES_TABLE = {
    "name": "sales",
    "columns": [
        {"name": "id", "type": "integer"},
        {"name": "product", "type": "text"},
        {"name": "region", "type": "text"},
        {"name": "amount", "type": "integer"},
    ],
    "rows": [
        [1, "anvil", "north", 3],
        [2, "anvil", "south", 5],
        [3, "brush", "north", 2],
        [4, "cable", "south", 7],
    ],
}


@pytest.fixture(scope="session")
def films_db():
    return database_from_dict({"tables": FILMS_TABLES})


@pytest.fixture(scope="session")
def sales_db():
    return database_from_dict({"tables": [SALES_TABLE]})


@pytest.fixture(scope="session")
def exec_db():
    """Combined database for the hand-evaluated executor cases."""
    return database_from_dict({"tables": FILMS_TABLES + [SALES_TABLE]})


def table(columns, rows, ordered=False):
    return ResultTable(tuple(columns), tuple(tuple(r) for r in rows), ordered)


def make_candidates(db, sqls, weights=None):
    """Build engine candidates from SQL strings (uniform weight unless given)."""
    out = []
    for i, sql in enumerate(sqls):
        ast = parse_sql(sql, db)
        weight = 1.0 if weights is None else weights[i]
        out.append(
            Candidate(
                id=i,
                sql=canonical_sql(ast),
                features=extract_features(ast),
                result=execute(ast, db),
                weight=weight,
            )
        )
    return out


def session_from_sqls(db, sqls, utterance="test", weights=None, config=None):
    from plsq.engine import DEFAULT_CONFIG

    return init_session(
        utterance, make_candidates(db, sqls, weights), config or DEFAULT_CONFIG
    )


@pytest.fixture(scope="session")
def fixture_corpus():
    from plsq.corpus import load_corpus

    return load_corpus(FIXTURES / "corpus.json")


@pytest.fixture(scope="session")
def fixture_caches():
    from plsq.corpus import load_cache_dir

    return load_cache_dir(FIXTURES / "caches")
