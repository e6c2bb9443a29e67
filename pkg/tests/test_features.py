from __future__ import annotations

from plsq.features import AtomicFeature, extract_features
from plsq.sqlparser import parse_sql


def feats(db, sql):
    return {f.id for f in extract_features(parse_sql(sql, db))}


def test_minimal_feature_set(films_db):
    # derived by hand-applying the canonicalization rules: a single-table
    # scope renders column references unqualified
    assert feats(films_db, "SELECT opinion FROM reviews") == {
        "SELECT·opinion",
        "FROM·reviews",
    }


def test_alias_stripping_gives_identical_sets(sales_db):
    a = extract_features(parse_sql("SELECT s.product FROM sales s", sales_db))
    b = extract_features(parse_sql("SELECT product FROM sales", sales_db))
    assert a == b


def test_join_feature_canonicalization(films_db):
    # hand-applied rules: aliases resolved, both operands qualified in the
    # two-table scope, '=' operands ordered lexicographically
    got = feats(
        films_db,
        "SELECT r.opinion FROM reviews r JOIN films f ON r.film_id=f.id",
    )
    assert got == {
        "SELECT·reviews.opinion",
        "FROM·reviews",
        "JOIN·films⋈films.id=reviews.film_id",
    }


def test_clause_coverage(films_db):
    got = feats(
        films_db,
        "SELECT DISTINCT genre FROM films WHERE duration > 90 AND genre != 'comedy' "
        "GROUP BY genre HAVING count(*) > 1 ORDER BY genre DESC LIMIT 2",
    )
    assert got == {
        "SELECT·genre",
        "FROM·films",
        "DISTINCT·true",
        "WHERE·duration>90",
        "WHERE·genre!='comedy'",
        "GROUP_BY·genre",
        "HAVING·count(*)>1",
        "ORDER_BY·genre desc",
        "LIMIT·2",
    }


def test_or_expression_is_single_feature(sales_db):
    got = feats(
        sales_db,
        "SELECT product FROM sales WHERE region = 'north' OR region = 'south'",
    )
    where = [f for f in got if f.startswith("WHERE")]
    assert len(where) == 1
    assert " or " in where[0]


def test_subquery_conjunct_is_opaque(films_db):
    got = feats(
        films_db,
        "SELECT title FROM films WHERE id IN (SELECT film_id FROM reviews)",
    )
    where = [f for f in got if f.startswith("WHERE")]
    assert where == ["WHERE·id in (select film_id from reviews)"]


def test_set_operation_features(films_db):
    got = feats(films_db, "SELECT opinion FROM reviews UNION SELECT title FROM films")
    assert "SET_OP·union" in got
    assert "SELECT·opinion" in got and "SELECT·title" in got


def test_select_item_alias_is_part_of_the_value(sales_db):
    with_alias = feats(sales_db, "SELECT sum(amount) AS total FROM sales GROUP BY product")
    without = feats(sales_db, "SELECT sum(amount) FROM sales GROUP BY product")
    assert "SELECT·sum(amount) as total" in with_alias
    assert "SELECT·sum(amount)" in without


def test_literals_kept_verbatim(films_db):
    exact = feats(films_db, "SELECT title FROM films WHERE duration = 120")
    longer = feats(films_db, "SELECT title FROM films WHERE duration > 120")
    assert "WHERE·duration=120" in exact
    assert "WHERE·duration>120" in longer
    assert exact != longer


def test_display_format():
    assert AtomicFeature("SELECT", "opinion").display == "SELECT opinion"
    assert AtomicFeature("GROUP_BY", "genre").display == "GROUP BY genre"
    assert AtomicFeature("ORDER_BY", "score desc").display == "ORDER BY score desc"


def test_determinism(films_db):
    sql = "SELECT opinion FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'"
    assert feats(films_db, sql) == feats(films_db, sql)
