"""Binary atomic features derived from a resolved SQL statement.

A feature is a (clause keyword, canonical value) pair; the pair is its
identity. Feature sets are plain frozensets, so candidates that differ
only in cosmetic surface form (aliases, case, whitespace, conjunct order)
map to identical feature sets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sqlparser import Compound, Select, render_expr

KW_SELECT = "SELECT"
KW_FROM = "FROM"
KW_JOIN = "JOIN"
KW_WHERE = "WHERE"
KW_GROUP_BY = "GROUP_BY"
KW_HAVING = "HAVING"
KW_ORDER_BY = "ORDER_BY"
KW_LIMIT = "LIMIT"
KW_DISTINCT = "DISTINCT"
KW_SET_OP = "SET_OP"

KEYWORDS = (
    KW_SELECT, KW_FROM, KW_JOIN, KW_WHERE, KW_GROUP_BY,
    KW_HAVING, KW_ORDER_BY, KW_LIMIT, KW_DISTINCT, KW_SET_OP,
)

_DISPLAY = {KW_GROUP_BY: "GROUP BY", KW_ORDER_BY: "ORDER BY"}


@dataclass(frozen=True, order=True)
class AtomicFeature:
    keyword: str
    value: str

    @property
    def id(self) -> str:
        return f"{self.keyword}·{self.value}"

    @property
    def display(self) -> str:
        return f"{_DISPLAY.get(self.keyword, self.keyword)} {self.value}"

    def __str__(self) -> str:
        return self.id


FeatureSet = frozenset  # of AtomicFeature


def extract_features(ast) -> frozenset:
    """One feature per clause element of a resolved Select or Compound."""
    out: set[AtomicFeature] = set()
    _collect(ast, out)
    return frozenset(out)


def _collect(node, out: set):
    if isinstance(node, Compound):
        out.add(AtomicFeature(KW_SET_OP, node.op))
        _collect(node.left, out)
        _collect(node.right, out)
        for item in node.order_by:
            direction = "desc" if item.desc else "asc"
            out.add(AtomicFeature(KW_ORDER_BY, f"{item.expr.name} {direction}"))
        if node.limit is not None:
            out.add(AtomicFeature(KW_LIMIT, str(node.limit)))
        return

    select: Select = node
    scope = select.scope_tables()
    for item in select.items:
        value = render_expr(item.expr, scope)
        if item.alias:
            value = f"{value} as {item.alias}"
        out.add(AtomicFeature(KW_SELECT, value))
    for table in select.tables:
        out.add(AtomicFeature(KW_FROM, table))
    for join in select.joins:
        if join.kind == "cross":
            out.add(AtomicFeature(KW_JOIN, f"cross {join.table}"))
            continue
        value = f"{join.table}⋈{render_expr(join.condition, scope)}"
        if join.kind == "left":
            value = f"left {value}"
        out.add(AtomicFeature(KW_JOIN, value))
    for conjunct in select.where:
        out.add(AtomicFeature(KW_WHERE, render_expr(conjunct, scope)))
    for expr in select.group_by:
        out.add(AtomicFeature(KW_GROUP_BY, render_expr(expr, scope)))
    for conjunct in select.having:
        out.add(AtomicFeature(KW_HAVING, render_expr(conjunct, scope)))
    for item in select.order_by:
        direction = "desc" if item.desc else "asc"
        out.add(AtomicFeature(KW_ORDER_BY, f"{render_expr(item.expr, scope)} {direction}"))
    if select.limit is not None:
        out.add(AtomicFeature(KW_LIMIT, str(select.limit)))
    if select.distinct:
        out.add(AtomicFeature(KW_DISTINCT, "true"))
