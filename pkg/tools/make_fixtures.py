"""Regenerate the bundled fixture corpus and candidate caches.

Run from the repo root:  python3 tools/make_fixtures.py

The fixtures are committed; this script exists so they can be rebuilt or
extended deliberately, not at test time.
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def t(name, columns, rows):
    return {
        "name": name,
        "columns": [{"name": n, "type": ty} for n, ty in columns],
        "rows": rows,
    }


def repeat(samples):
    out = []
    for sql, count in samples:
        out.extend([sql] * count)
    return out


TASKS = []
CACHES = {}

# --- films-review (vague: which column is "the review"?) ---------------------

films_db = {
    "tables": [
        t("films", [("id", "integer"), ("title", "text"), ("genre", "text"), ("duration", "integer")],
          [[1, "Aurora", "drama", 120], [2, "Bolt", "action", 95], [3, "Cascade", "drama", 141],
           [4, "Dunes", "comedy", 100], [5, "Ember", "action", 133]]),
        t("reviews", [("id", "integer"), ("film_id", "integer"), ("opinion", "text"), ("score", "integer")],
          [[1, 1, "moving", 9], [2, 1, "slow", 6], [3, 2, "thrilling", 8], [4, 3, "moving", 7],
           [5, 4, "funny", 8], [6, 5, "loud", 5], [7, 3, "bleak", 9]]),
    ]
}

TASKS.append({
    "id": "films-review",
    "utterance": "What was the review of the drama films?",
    "db": films_db,
    "gold_sqls": [
        "SELECT opinion FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'",
        "SELECT score FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'",
    ],
    "ambiguity_type": "vague",
})

CACHES["films-review"] = repeat([
    ("SELECT opinion FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'", 3),
    ("SELECT DISTINCT opinion FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'", 1),
    ("SELECT score FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'", 3),
    ("SELECT DISTINCT score FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'", 1),
    ("SELECT opinion FROM reviews JOIN films ON reviews.film_id = films.id", 2),
    ("SELECT DISTINCT opinion FROM reviews JOIN films ON reviews.film_id = films.id", 1),
    ("SELECT score FROM reviews JOIN films ON reviews.film_id = films.id", 1),
    ("SELECT DISTINCT score FROM reviews JOIN films ON reviews.film_id = films.id", 1),
    ("SELECT opinion, score FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama'", 2),
    ("SELECT * FROM reviews", 1),
    ("SELECT opinion FROM reviews", 1),
    ("SELECT r.opinion FROM reviews r JOIN films f ON r.film_id = f.id WHERE f.genre = 'drama'", 1),
    ("SELECT opinion FROM reviews JOIN films ON reviews.film_id = films.id WHERE genre = 'drama' ORDER BY score DESC", 1),
    ("SELEC opinion FROM reviews", 1),
    ("SELECT opinion FROM reviewz", 1),
    ("SELECT score/0 FROM reviews", 1),
])

# --- films-duration (vague: how long is "long"?) ------------------------------

films2_db = {
    "tables": [
        t("films", [("id", "integer"), ("title", "text"), ("genre", "text"), ("duration", "integer")],
          [[1, "Aurora", "drama", 120], [2, "Bolt", "action", 95], [3, "Cascade", "drama", 141],
           [4, "Dunes", "comedy", 100], [5, "Ember", "action", 133], [6, "Fjord", "drama", 152]]),
    ]
}

TASKS.append({
    "id": "films-duration",
    "utterance": "Show the long films.",
    "db": films2_db,
    "gold_sqls": [
        "SELECT title FROM films WHERE duration > 120",
        "SELECT title FROM films WHERE duration >= 120",
    ],
    "ambiguity_type": "vague",
})

CACHES["films-duration"] = repeat([
    ("SELECT title FROM films WHERE duration > 120", 3),
    ("SELECT title FROM films WHERE duration >= 120", 3),
    ("SELECT * FROM films WHERE duration > 120", 1),
    ("SELECT * FROM films WHERE duration >= 120", 1),
    ("SELECT title, duration FROM films WHERE duration > 120", 2),
    ("SELECT title, duration FROM films WHERE duration >= 120", 1),
    ("SELECT title FROM films WHERE duration > 100", 1),
    ("SELECT title FROM films ORDER BY duration DESC", 1),
    ("SELECT title FROM films ORDER BY duration DESC LIMIT 3", 1),
    ("SELECT title FROM films WHERE duration > 120 ORDER BY duration DESC", 1),
    ("SELECT title WHERE duration > 120", 1),
    ("SELECT name FROM films", 1),
])

# --- sales-regions (scope: per region or overall?) -----------------------------

sales_db = {
    "tables": [
        t("sales", [("id", "integer"), ("product", "text"), ("region", "text"), ("amount", "integer")],
          [[1, "anvil", "north", 3], [2, "anvil", "south", 5], [3, "brush", "north", 2],
           [4, "cable", "south", 7], [5, "brush", "north", 4], [6, "cable", "west", 1],
           [7, "anvil", "north", 6]]),
    ]
}

TASKS.append({
    "id": "sales-regions",
    "utterance": "What products do we sell in each region?",
    "db": sales_db,
    "gold_sqls": [
        "SELECT DISTINCT product, region FROM sales",
        "SELECT DISTINCT product FROM sales",
    ],
    "ambiguity_type": "scope",
})

CACHES["sales-regions"] = repeat([
    ("SELECT DISTINCT product, region FROM sales", 3),
    ("SELECT DISTINCT product FROM sales", 3),
    ("SELECT product, region FROM sales", 2),
    ("SELECT product FROM sales", 1),
    ("SELECT region, product FROM sales GROUP BY region, product", 1),
    ("SELECT product, count(*) FROM sales GROUP BY product", 1),
    ("SELECT product, sum(amount) FROM sales GROUP BY product", 1),
    ("SELECT DISTINCT region FROM sales", 1),
    ("SELECT product FROM sales WHERE", 1),
    ("UPDATE sales SET amount = 0", 1),
])

# --- courses-enrollment (scope: per course or overall?) -------------------------

courses_db = {
    "tables": [
        t("courses", [("id", "integer"), ("title", "text"), ("dept", "text")],
          [[1, "Algebra", "math"], [2, "Botany", "bio"], [3, "Ceramics", "art"]]),
        t("enrollments", [("id", "integer"), ("course_id", "integer"), ("student", "text")],
          [[1, 1, "ana"], [2, 1, "bo"], [3, 2, "ana"], [4, 2, "ana"], [5, 3, "cy"],
           [6, 1, "dee"], [7, 2, "bo"]]),
    ]
}

TASKS.append({
    "id": "courses-enrollment",
    "utterance": "How many students are enrolled in each course?",
    "db": courses_db,
    "gold_sqls": [
        "SELECT title, count(*) FROM enrollments JOIN courses ON enrollments.course_id = courses.id GROUP BY title",
        "SELECT count(DISTINCT student) FROM enrollments",
    ],
    "ambiguity_type": "scope",
})

CACHES["courses-enrollment"] = repeat([
    ("SELECT title, count(*) FROM enrollments JOIN courses ON enrollments.course_id = courses.id GROUP BY title", 3),
    ("SELECT count(DISTINCT student) FROM enrollments", 2),
    ("SELECT count(*) FROM enrollments", 2),
    ("SELECT title, count(DISTINCT student) FROM enrollments JOIN courses ON enrollments.course_id = courses.id GROUP BY title", 1),
    ("SELECT course_id, count(*) FROM enrollments GROUP BY course_id", 1),
    ("SELECT title, count(*) FROM enrollments JOIN courses ON enrollments.course_id = courses.id GROUP BY title HAVING count(*) > 1", 1),
    ("SELECT student FROM enrollments", 1),
    ("SELECT DISTINCT student FROM enrollments", 1),
    ("SELECT count(studont) FROM enrollments", 1),
    ("SELECT count(*) FROM enrollments GROUP", 1),
])

# --- books-loans (attachment: 2020 on the books or on the loans?) ----------------

books_db = {
    "tables": [
        t("books", [("id", "integer"), ("title", "text"), ("year", "integer")],
          [[1, "Iris", 2020], [2, "Juno", 2019], [3, "Koi", 2020]]),
        t("members", [("id", "integer"), ("name", "text"), ("joined", "integer")],
          [[1, "maya", 2018], [2, "nils", 2019], [3, "opal", 2020]]),
        t("loans", [("id", "integer"), ("book_id", "integer"), ("member_id", "integer"), ("year", "integer")],
          [[1, 1, 1, 2021], [2, 2, 2, 2020], [3, 3, 3, 2020], [4, 1, 2, 2020],
           [5, 2, 1, 2019], [6, 3, 1, 2021]]),
    ]
}

_loan_join = ("FROM loans JOIN books ON loans.book_id = books.id "
              "JOIN members ON loans.member_id = members.id")

TASKS.append({
    "id": "books-loans",
    "utterance": "Show the books and members with loans from 2020.",
    "db": books_db,
    "gold_sqls": [
        f"SELECT title, name {_loan_join} WHERE books.year = 2020",
        f"SELECT title, name {_loan_join} WHERE loans.year = 2020",
    ],
    "ambiguity_type": "attachment",
})

CACHES["books-loans"] = repeat([
    (f"SELECT title, name {_loan_join} WHERE books.year = 2020", 3),
    (f"SELECT title, name {_loan_join} WHERE loans.year = 2020", 3),
    (f"SELECT title, name {_loan_join} WHERE books.year = 2020 AND loans.year = 2020", 1),
    (f"SELECT title, name {_loan_join}", 1),
    ("SELECT title FROM loans JOIN books ON loans.book_id = books.id WHERE books.year = 2020", 1),
    ("SELECT title FROM loans JOIN books ON loans.book_id = books.id WHERE loans.year = 2020", 1),
    (f"SELECT title, name {_loan_join} WHERE loans.year = 2021", 1),
    (f"SELECT DISTINCT title, name {_loan_join} WHERE books.year = 2020", 1),
    ("SELECT title FROM loan", 1),
    ("SELECT FROM loans", 1),
])

# --- shows-attachment (attachment: does "lasting two hours" cover both?) ----------

shows_db = {
    "tables": [
        t("shows", [("id", "integer"), ("name", "text"), ("kind", "text"), ("minutes", "integer")],
          [[1, "Avalanche", "action", 120], [2, "Brink", "action", 95], [3, "Chuckles", "comedy", 120],
           [4, "Deadpan", "comedy", 88], [5, "Edge", "action", 120], [6, "Folly", "comedy", 102],
           [7, "Grit", "drama", 120], [8, "Hollow", "action", 150]]),
    ]
}

TASKS.append({
    "id": "shows-attachment",
    "utterance": "Show the action shows and comedy shows lasting two hours.",
    "db": shows_db,
    "gold_sqls": [
        "SELECT name FROM shows WHERE (kind = 'action' OR kind = 'comedy') AND minutes = 120",
        "SELECT name FROM shows WHERE kind = 'action' OR kind = 'comedy' AND minutes = 120",
    ],
    "ambiguity_type": "attachment",
})

CACHES["shows-attachment"] = repeat([
    ("SELECT name FROM shows WHERE (kind = 'action' OR kind = 'comedy') AND minutes = 120", 3),
    ("SELECT name FROM shows WHERE kind = 'action' OR kind = 'comedy' AND minutes = 120", 3),
    ("SELECT name FROM shows WHERE kind IN ('action', 'comedy') AND minutes = 120", 1),
    ("SELECT * FROM shows WHERE (kind = 'action' OR kind = 'comedy') AND minutes = 120", 1),
    ("SELECT name FROM shows WHERE kind = 'action' OR kind = 'comedy'", 2),
    ("SELECT name FROM shows WHERE minutes = 120", 1),
    ("SELECT name FROM shows WHERE minutes >= 120 AND (kind = 'action' OR kind = 'comedy')", 1),
    ("SELECT name, minutes FROM shows WHERE (kind = 'action' OR kind = 'comedy') AND minutes = 120", 1),
    ("SELECT name FROM show", 1),
    ("SELECT name FROM shows WHERE kind == ", 1),
])


def main():
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "caches").mkdir(exist_ok=True)
    corpus = {"tasks": TASKS}
    (FIXTURES / "corpus.json").write_text(json.dumps(corpus, indent=2) + "\n")
    for task_id, samples in CACHES.items():
        cache = {
            "task_id": task_id,
            "model": "fixture",
            "temperature": 0.7,
            "samples": samples,
        }
        (FIXTURES / "caches" / f"{task_id}.json").write_text(
            json.dumps(cache, indent=2) + "\n"
        )
    print(f"wrote {len(TASKS)} tasks and {len(CACHES)} caches under {FIXTURES}")


if __name__ == "__main__":
    main()
