"""Read-only SELECT evaluation over a DatabaseSpec, plus output comparison.

Semantics notes (documented here because they differ between engines):
- comparisons and boolean logic are three-valued; rows pass WHERE/HAVING/ON
  only when the predicate is true (not null, not false);
- comparing text with a number is an execution error, as is division by
  zero: such candidates have no outcome and get dropped upstream;
- integer / integer truncates toward zero; mixed arithmetic yields real;
- LIKE is case-sensitive with % and _ wildcards;
- ORDER BY sorts nulls first ascending (last descending);
- aggregate functions ignore nulls; sum/avg/min/max of nothing is null.

Result rows are multisets for comparison purposes; column order is
ignored (names compared as sets) and numerically equal cells compare
equal regardless of int/real representation.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass

import httpx

from .errors import ComparatorError, ExecutionError
from .schema import DatabaseSpec
from .sqlparser import (
    AGGREGATE_FUNCS,
    Between,
    Binary,
    ColumnRef,
    Compound,
    Exists,
    FuncCall,
    InList,
    InSubquery,
    IsNull,
    Like,
    Literal,
    ScalarSubquery,
    Select,
    Star,
    Unary,
    contains_aggregate,
    render_expr,
)

COMPARATORS = ("exact", "table_jaccard", "external_embedding")


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    ordered: bool = False


def _norm_cell(v):
    """Hashable comparison key treating numerically equal cells as equal."""
    if v is None:
        return ("n",)
    if isinstance(v, (int, float)):
        return ("d", float(v))
    return ("s", v)


def row_key(row: tuple) -> tuple:
    return tuple(_norm_cell(c) for c in row)


# --- expression evaluation ----------------------------------------------------


def _truthy(v) -> bool:
    return v is True


def _and3(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or3(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _not3(a):
    if a is None:
        return None
    return not a


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _compare(op: str, a, b):
    if a is None or b is None:
        return None
    if isinstance(a, str) != isinstance(b, str):
        raise ExecutionError(f"type mismatch in comparison: {a!r} {op} {b!r}")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _arith(op: str, a, b):
    if a is None or b is None:
        return None
    if not (_is_num(a) and _is_num(b)):
        raise ExecutionError(f"type mismatch in arithmetic: {a!r} {op} {b!r}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ExecutionError("division by zero")
    if op == "%":
        return math.fmod(a, b) if isinstance(a, float) or isinstance(b, float) else a - b * int(a / b)
    if isinstance(a, int) and isinstance(b, int):
        return int(a / b)  # truncate toward zero
    return a / b


def _like(value, pattern):
    if value is None or pattern is None:
        return None
    if not (isinstance(value, str) and isinstance(pattern, str)):
        raise ExecutionError("LIKE requires text operands")
    i, j = 0, 0
    star_i, star_j = -1, -1
    # iterative wildcard match: % = any run, _ = any single character
    while i < len(value):
        if j < len(pattern) and (pattern[j] == "_" or pattern[j] == value[i]):
            i += 1
            j += 1
        elif j < len(pattern) and pattern[j] == "%":
            star_i, star_j = i, j
            j += 1
        elif star_j != -1:
            star_i += 1
            i, j = star_i, star_j + 1
        else:
            return False
    while j < len(pattern) and pattern[j] == "%":
        j += 1
    return j == len(pattern)


def _round_half_away(x: float, digits: int) -> float:
    m = 10 ** digits
    y = x * m
    r = math.floor(y + 0.5) if y >= 0 else math.ceil(y - 0.5)
    return r / m


def _scalar_func(name: str, args: list):
    if name == "coalesce":
        for v in args:
            if v is not None:
                return v
        return None
    if name in ("lower", "upper", "length"):
        (v,) = args
        if v is None:
            return None
        if not isinstance(v, str):
            raise ExecutionError(f"{name}() requires a text argument")
        return {"lower": str.lower, "upper": str.upper, "length": len}[name](v)
    if name == "abs":
        (v,) = args
        if v is None:
            return None
        if not _is_num(v):
            raise ExecutionError("abs() requires a numeric argument")
        return abs(v)
    if name == "round":
        v = args[0]
        if v is None:
            return None
        if not _is_num(v):
            raise ExecutionError("round() requires a numeric argument")
        digits = 0
        if len(args) > 1:
            if args[1] is None:
                return None
            if not isinstance(args[1], int):
                raise ExecutionError("round() digits must be an integer")
            digits = args[1]
        return _round_half_away(float(v), digits)
    raise ExecutionError(f"unknown function {name!r}")


def _aggregate(func: FuncCall, envs: list, db: DatabaseSpec):
    if func.star:
        return len(envs)
    values = [_eval(func.args[0], env, db) for env in envs]
    values = [v for v in values if v is not None]
    if func.distinct:
        seen = {}
        for v in values:
            seen.setdefault(_norm_cell(v), v)
        values = list(seen.values())
    name = func.name
    if name == "count":
        return len(values)
    if not values:
        return None
    if name in ("sum", "avg"):
        if not all(_is_num(v) for v in values):
            raise ExecutionError(f"{name}() requires numeric values")
        total = sum(values)
        return total / len(values) if name == "avg" else total
    # min / max
    all_str = all(isinstance(v, str) for v in values)
    all_num = all(_is_num(v) for v in values)
    if not (all_str or all_num):
        raise ExecutionError(f"type mismatch in {name}()")
    return min(values) if name == "min" else max(values)


def _eval(node, env: dict, db: DatabaseSpec):
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, ColumnRef):
        try:
            return env[(node.table, node.column)]
        except KeyError:
            raise ExecutionError(
                f"unbound column {node.table}.{node.column}"
            ) from None
    if isinstance(node, Unary):
        v = _eval(node.operand, env, db)
        if node.op == "not":
            return _not3(v if isinstance(v, (bool, type(None))) else _truthy(v))
        if v is None:
            return None
        if not _is_num(v):
            raise ExecutionError("unary minus requires a numeric operand")
        return -v
    if isinstance(node, Binary):
        if node.op == "and":
            return _and3(_eval(node.left, env, db), _eval(node.right, env, db))
        if node.op == "or":
            return _or3(_eval(node.left, env, db), _eval(node.right, env, db))
        left = _eval(node.left, env, db)
        right = _eval(node.right, env, db)
        if node.op in ("=", "!=", "<", "<=", ">", ">="):
            return _compare(node.op, left, right)
        return _arith(node.op, left, right)
    if isinstance(node, IsNull):
        result = _eval(node.operand, env, db) is None
        return not result if node.negated else result
    if isinstance(node, Between):
        v = _eval(node.operand, env, db)
        low = _eval(node.low, env, db)
        high = _eval(node.high, env, db)
        result = _and3(_compare("<=", low, v), _compare("<=", v, high))
        return _not3(result) if node.negated else result
    if isinstance(node, Like):
        result = _like(_eval(node.operand, env, db), _eval(node.pattern, env, db))
        return _not3(result) if node.negated else result
    if isinstance(node, InList):
        needle = _eval(node.needle, env, db)
        values = [_eval(x, env, db) for x in node.items]
        result = _in3(needle, values)
        return _not3(result) if node.negated else result
    if isinstance(node, InSubquery):
        needle = _eval(node.needle, env, db)
        sub = execute(node.query, db, outer_env=env)
        result = _in3(needle, [r[0] for r in sub.rows])
        return _not3(result) if node.negated else result
    if isinstance(node, Exists):
        sub = execute(node.query, db, outer_env=env)
        result = len(sub.rows) > 0
        return not result if node.negated else result
    if isinstance(node, ScalarSubquery):
        sub = execute(node.query, db, outer_env=env)
        if len(sub.rows) > 1:
            raise ExecutionError("scalar subquery returned more than one row")
        return sub.rows[0][0] if sub.rows else None
    if isinstance(node, FuncCall):
        if node.name in AGGREGATE_FUNCS:
            raise ExecutionError(f"aggregate {node.name}() outside GROUP context")
        return _scalar_func(node.name, [_eval(a, env, db) for a in node.args])
    raise ExecutionError(f"cannot evaluate {node!r}")


def _in3(needle, values: list):
    if needle is not None:
        for v in values:
            if v is None:
                continue
            if isinstance(v, str) != isinstance(needle, str):
                raise ExecutionError("type mismatch in IN")
            if v == needle:
                return True
    if needle is None and values:
        return None
    if any(v is None for v in values):
        return None
    return False


def _eval_grouped(node, envs: list, rep_env: dict, group_texts: set, scope, db):
    if isinstance(node, Literal):
        return node.value
    if not contains_aggregate(node) and render_expr(node, scope) in group_texts:
        return _eval(node, rep_env, db)
    if isinstance(node, ColumnRef):
        raise ExecutionError(
            f"column {node.table}.{node.column} is neither grouped nor aggregated"
        )
    if isinstance(node, FuncCall):
        if node.name in AGGREGATE_FUNCS:
            return _aggregate(node, envs, db)
        args = [_eval_grouped(a, envs, rep_env, group_texts, scope, db) for a in node.args]
        return _scalar_func(node.name, args)
    g = lambda child: _eval_grouped(child, envs, rep_env, group_texts, scope, db)
    if isinstance(node, Unary):
        v = g(node.operand)
        if node.op == "not":
            return _not3(v if isinstance(v, (bool, type(None))) else _truthy(v))
        if v is None:
            return None
        if not _is_num(v):
            raise ExecutionError("unary minus requires a numeric operand")
        return -v
    if isinstance(node, Binary):
        if node.op == "and":
            return _and3(g(node.left), g(node.right))
        if node.op == "or":
            return _or3(g(node.left), g(node.right))
        left, right = g(node.left), g(node.right)
        if node.op in ("=", "!=", "<", "<=", ">", ">="):
            return _compare(node.op, left, right)
        return _arith(node.op, left, right)
    if isinstance(node, IsNull):
        result = g(node.operand) is None
        return not result if node.negated else result
    if isinstance(node, Between):
        result = _and3(
            _compare("<=", g(node.low), g(node.operand)),
            _compare("<=", g(node.operand), g(node.high)),
        )
        return _not3(result) if node.negated else result
    if isinstance(node, Like):
        result = _like(g(node.operand), g(node.pattern))
        return _not3(result) if node.negated else result
    if isinstance(node, InList):
        result = _in3(g(node.needle), [g(x) for x in node.items])
        return _not3(result) if node.negated else result
    if isinstance(node, (InSubquery, Exists, ScalarSubquery)):
        return _eval(node, rep_env, db)
    raise ExecutionError(f"cannot evaluate {node!r} in a grouped query")


# --- statement execution --------------------------------------------------------


def execute(ast, db: DatabaseSpec, outer_env: dict | None = None) -> ResultTable:
    """Evaluate a resolved statement; raises ExecutionError on runtime faults."""
    if isinstance(ast, Compound):
        return _execute_compound(ast, db, outer_env)
    return _execute_select(ast, db, outer_env)


def _table_envs(db: DatabaseSpec, name: str) -> list:
    table = db.table(name)
    cols = table.column_names()
    return [{(name, c): v for c, v in zip(cols, row)} for row in table.rows]


def _execute_select(select: Select, db: DatabaseSpec, outer_env: dict | None) -> ResultTable:
    base = dict(outer_env) if outer_env else {}
    envs = [base]
    for name in select.tables:
        envs = [{**env, **te} for env in envs for te in _table_envs(db, name)]

    for join in select.joins:
        table_rows = _table_envs(db, join.table)
        joined = []
        if join.kind == "cross":
            joined = [{**env, **te} for env in envs for te in table_rows]
        else:
            null_row = {
                (join.table, c): None for c in db.table(join.table).column_names()
            }
            for env in envs:
                matched = False
                for te in table_rows:
                    merged = {**env, **te}
                    if _truthy(_eval(join.condition, merged, db)):
                        joined.append(merged)
                        matched = True
                if join.kind == "left" and not matched:
                    joined.append({**env, **null_row})
        envs = joined

    for conjunct in select.where:
        envs = [env for env in envs if _truthy(_eval(conjunct, env, db))]

    scope = select.scope_tables()
    has_agg = any(
        not isinstance(item.expr, Star) and contains_aggregate(item.expr)
        for item in select.items
    ) or any(contains_aggregate(c) for c in select.having)

    if select.group_by or has_agg:
        rows_keys = _project_grouped(select, envs, scope, db, base)
    else:
        rows_keys = _project_plain(select, envs, scope, db)

    if select.distinct:
        seen = set()
        deduped = []
        for row, keys in rows_keys:
            k = row_key(row)
            if k not in seen:
                seen.add(k)
                deduped.append((row, keys))
        rows_keys = deduped

    rows_keys = _sort_rows(rows_keys, select.order_by)
    if select.limit is not None:
        rows_keys = rows_keys[: select.limit]

    columns = _result_columns(select, db)
    rows = tuple(row for row, _ in rows_keys)
    if len(columns) and any(len(r) != len(columns) for r in rows):
        raise ExecutionError("row arity mismatch")  # defensive; should not happen
    return ResultTable(columns, rows, ordered=bool(select.order_by))


def _project_plain(select: Select, envs: list, scope, db) -> list:
    out = []
    for env in envs:
        row = []
        for item in select.items:
            if isinstance(item.expr, Star):
                row.extend(_expand_star(item.expr, select, env, db))
            else:
                row.append(_eval(item.expr, env, db))
        keys = tuple(_eval(o.expr, env, db) for o in select.order_by)
        out.append((tuple(row), keys))
    return out


def _project_grouped(select: Select, envs: list, scope, db, base_env: dict) -> list:
    group_texts = {render_expr(g, scope) for g in select.group_by}
    if select.group_by:
        groups: dict = {}
        for env in envs:
            key = tuple(_norm_cell(_eval(g, env, db)) for g in select.group_by)
            groups.setdefault(key, []).append(env)
        group_list = list(groups.values())
    else:
        group_list = [envs]  # single global group, possibly empty

    out = []
    for genvs in group_list:
        rep_env = genvs[0] if genvs else base_env
        keep = True
        for conjunct in select.having:
            if not _truthy(_eval_grouped(conjunct, genvs, rep_env, group_texts, scope, db)):
                keep = False
                break
        if not keep:
            continue
        row = []
        for item in select.items:
            if isinstance(item.expr, Star):
                raise ExecutionError("cannot select * in an aggregated query")
            row.append(_eval_grouped(item.expr, genvs, rep_env, group_texts, scope, db))
        keys = tuple(
            _eval_grouped(o.expr, genvs, rep_env, group_texts, scope, db)
            for o in select.order_by
        )
        out.append((tuple(row), keys))
    return out


def _expand_star(star: Star, select: Select, env: dict, db) -> list:
    tables = (star.table,) if star.table else select.scope_tables()
    values = []
    for t in tables:
        for c in db.table(t).column_names():
            values.append(env[(t, c)])
    return values


def _result_columns(select: Select, db) -> tuple[str, ...]:
    names = []
    for item in select.items:
        if isinstance(item.expr, Star):
            tables = (item.expr.table,) if item.expr.table else select.scope_tables()
            for t in tables:
                names.extend(db.table(t).column_names())
        elif item.alias:
            names.append(item.alias)
        elif isinstance(item.expr, ColumnRef):
            names.append(item.expr.column)
        else:
            names.append(render_expr(item.expr, select.scope_tables()))
    return tuple(names)


def _sort_cell(v):
    if v is None:
        return (0, 0.0)
    if _is_num(v):
        return (1, float(v))
    return (2, v)


def _sort_rows(rows_keys: list, order_by) -> list:
    if not order_by:
        return rows_keys
    result = list(rows_keys)
    for idx in range(len(order_by) - 1, -1, -1):
        item = order_by[idx]
        try:
            result.sort(key=lambda rk, i=idx: _sort_cell(rk[1][i]), reverse=item.desc)
        except TypeError:
            raise ExecutionError("type mismatch in ORDER BY") from None
    return result


def _execute_compound(node: Compound, db: DatabaseSpec, outer_env) -> ResultTable:
    left = execute(node.left, db, outer_env)
    right = execute(node.right, db, outer_env)
    if len(left.columns) != len(right.columns):
        raise ExecutionError("set operation on different column counts")

    if node.op == "union all":
        rows = list(left.rows) + list(right.rows)
    elif node.op == "union":
        seen = {}
        for row in list(left.rows) + list(right.rows):
            seen.setdefault(row_key(row), row)
        rows = list(seen.values())
    elif node.op == "intersect":
        right_keys = {row_key(r) for r in right.rows}
        seen = {}
        for row in left.rows:
            k = row_key(row)
            if k in right_keys:
                seen.setdefault(k, row)
        rows = list(seen.values())
    else:  # except
        right_keys = {row_key(r) for r in right.rows}
        seen = {}
        for row in left.rows:
            k = row_key(row)
            if k not in right_keys:
                seen.setdefault(k, row)
        rows = list(seen.values())

    rows_keys = [(row, tuple(row[o.expr.index] for o in node.order_by)) for row in rows]
    rows_keys = _sort_rows(rows_keys, node.order_by)
    if node.limit is not None:
        rows_keys = rows_keys[: node.limit]
    return ResultTable(
        left.columns, tuple(r for r, _ in rows_keys), ordered=bool(node.order_by)
    )


# --- output comparison -----------------------------------------------------------


def _pair_row(columns, row) -> tuple:
    """Row identity as sorted (column, value) pairs: column order is
    presentation, not meaning, so it must not affect equality."""
    return tuple(sorted((c, _norm_cell(v)) for c, v in zip(columns, row)))


def functionally_equal(a: ResultTable, b: ResultTable) -> bool:
    """Equal column-name sets and equal row multisets (rows compared as
    (column, value) pairs, insensitive to column order)."""
    if set(a.columns) != set(b.columns):
        return False
    return Counter(_pair_row(a.columns, r) for r in a.rows) == Counter(
        _pair_row(b.columns, r) for r in b.rows
    )


def result_key(t: ResultTable) -> tuple:
    """Hashable key such that key(a) == key(b) iff functionally_equal(a, b)."""
    rows = tuple(sorted(Counter(_pair_row(t.columns, r) for r in t.rows).items()))
    return (frozenset(t.columns), rows)


def _serial_cell(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() else repr(v)
    if isinstance(v, int):
        return str(v)
    return v


def _serial_row(columns, row) -> tuple:
    return tuple(sorted((c, _serial_cell(v)) for c, v in zip(columns, row)))


def _multiset_jaccard(a: Counter, b: Counter) -> float:
    if not a and not b:
        return 1.0
    inter = sum((a & b).values())
    union = sum((a | b).values())
    return inter / union


def table_jaccard(a: ResultTable, b: ResultTable) -> float:
    cols_a, cols_b = set(a.columns), set(b.columns)
    if not cols_a and not cols_b:
        j_cols = 1.0
    else:
        j_cols = len(cols_a & cols_b) / len(cols_a | cols_b)
    rows_a = Counter(_pair_row(a.columns, r) for r in a.rows)
    rows_b = Counter(_pair_row(b.columns, r) for r in b.rows)
    return 0.5 * j_cols + 0.5 * _multiset_jaccard(rows_a, rows_b)


def serialize_table(t: ResultTable) -> str:
    """Canonical sorted (column,value)-pair listing, one row per line."""
    lines = sorted(
        " ".join(f"({c},{v})" for c, v in _serial_row(t.columns, row)) for row in t.rows
    )
    return "\n".join(lines)


class EmbeddingClient:
    """Client for an external embedding-similarity service.

    POSTs {"texts": [a, b]} and expects {"similarity": number}. Requests
    are bounded to max_parallel in flight, each with its own timeout.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, max_parallel: int = 4,
                 transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self._semaphore = threading.Semaphore(max_parallel)
        self._client = httpx.Client(transport=transport, timeout=timeout)

    def similarity(self, text_a: str, text_b: str) -> float:
        with self._semaphore:
            try:
                response = self._client.post(
                    self.endpoint, json={"texts": [text_a, text_b]}
                )
                response.raise_for_status()
                value = response.json()["similarity"]
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                raise ComparatorError(f"embedding service failed: {exc}") from exc
        return min(1.0, max(0.0, float(value)))

    def close(self):
        self._client.close()


def table_similarity(
    a: ResultTable,
    b: ResultTable,
    comparator: str = "table_jaccard",
    client: EmbeddingClient | None = None,
) -> float:
    """Symmetric output similarity in [0, 1]."""
    if comparator == "exact":
        return 1.0 if functionally_equal(a, b) else 0.0
    if comparator == "table_jaccard":
        return table_jaccard(a, b)
    if comparator == "external_embedding":
        if client is None:
            raise ComparatorError("external_embedding requires a configured client")
        return client.similarity(serialize_table(a), serialize_table(b))
    raise ValueError(f"unknown comparator {comparator!r}")
