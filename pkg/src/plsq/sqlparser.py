"""SQL parsing for the supported SELECT-statement grammar.

Parsing is two-phase: a recursive-descent pass builds a raw tree, then a
resolution pass walks it with a scope chain, replacing aliases by canonical
(lower-cased) base table names and attaching the owning table to every
column reference. Canonical text rendering lives here too, so that
parse -> render -> parse is the identity on the supported grammar.

Supported: single SELECT statements with inner/left/cross joins, WHERE,
GROUP BY, HAVING, ORDER BY (incl. output aliases and 1-based positions),
LIMIT, DISTINCT, binary set operations, scalar/IN/EXISTS subqueries
(correlated references allowed), and a small set of aggregate and scalar
functions. Self-joins are rejected: alias resolution to base table names
would conflate the two instances.

Canonical form: identifiers lower-cased, aliases dropped, column
references qualified as table.column only when the enclosing scope holds
more than one table, comparison/arithmetic operators rendered without
surrounding spaces, keyword operators with single spaces, literals kept
verbatim, `=`/`!=` operands ordered lexicographically, and WHERE/HAVING
conjuncts sorted by their canonical text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .errors import ResolutionError, SqlSyntaxError, UnsupportedSqlError
from .schema import DatabaseSpec

AGGREGATE_FUNCS = {"count", "sum", "avg", "min", "max"}
SCALAR_FUNCS = {"lower", "upper", "abs", "round", "length", "coalesce"}

RESERVED = {
    "select", "from", "where", "group", "by", "having", "order", "limit",
    "distinct", "all", "and", "or", "not", "in", "like", "between", "is",
    "null", "join", "inner", "left", "outer", "cross", "on", "union",
    "intersect", "except", "as", "asc", "desc", "exists", "true", "false",
    "case", "when", "then", "else", "end", "offset", "right", "full",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*|/\*.*?\*/)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<qident>"[^"]+"|`[^`]+`)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|==|[=<>+\-*/%])
  | (?P<punct>[(),.;])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | string | ident | op | punct | eof
    value: str
    pos: int

    def is_kw(self, *words: str) -> bool:
        return self.kind == "ident" and self.value.lower() in words


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        value = m.group()
        if kind == "qident":
            kind = "ident"
            value = value[1:-1]
        tokens.append(Token(kind, value, m.start()))
    tokens.append(Token("eof", "", n))
    return tokens


# --- AST nodes (resolved form) ----------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: object  # str | int | float | None
    text: str  # verbatim lexeme, used for canonical rendering


@dataclass(frozen=True)
class ColumnRef:
    table: str  # canonical base table
    column: str


@dataclass(frozen=True)
class Star:
    table: str | None = None


@dataclass(frozen=True)
class FuncCall:
    name: str
    args: tuple
    distinct: bool = False
    star: bool = False


@dataclass(frozen=True)
class Unary:
    op: str  # 'not' | '-'
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str  # and or = != < <= > >= + - * / %
    left: object
    right: object


@dataclass(frozen=True)
class IsNull:
    operand: object
    negated: bool = False


@dataclass(frozen=True)
class Between:
    operand: object
    low: object
    high: object
    negated: bool = False


@dataclass(frozen=True)
class Like:
    operand: object
    pattern: object
    negated: bool = False


@dataclass(frozen=True)
class InList:
    needle: object
    items: tuple
    negated: bool = False


@dataclass(frozen=True)
class InSubquery:
    needle: object
    query: object
    negated: bool = False


@dataclass(frozen=True)
class Exists:
    query: object
    negated: bool = False


@dataclass(frozen=True)
class ScalarSubquery:
    query: object


@dataclass(frozen=True)
class OutputCol:
    """Positional reference to an output column of a compound select."""

    name: str
    index: int


@dataclass(frozen=True)
class SelectItem:
    expr: object  # expression or Star
    alias: str | None = None


@dataclass(frozen=True)
class Join:
    table: str
    condition: object | None  # None only for cross joins
    kind: str  # 'inner' | 'left' | 'cross'


@dataclass(frozen=True)
class OrderItem:
    expr: object
    desc: bool = False


@dataclass(frozen=True)
class Select:
    items: tuple[SelectItem, ...]
    tables: tuple[str, ...]
    joins: tuple[Join, ...] = ()
    where: tuple = ()  # top-level AND conjuncts, sorted by canonical text
    group_by: tuple = ()
    having: tuple = ()  # conjuncts, sorted by canonical text
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None
    distinct: bool = False

    def scope_tables(self) -> tuple[str, ...]:
        return self.tables + tuple(j.table for j in self.joins)


@dataclass(frozen=True)
class Compound:
    op: str  # 'union' | 'union all' | 'intersect' | 'except'
    left: object  # Select | Compound
    right: object  # Select
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None


# --- raw (pre-resolution) tree ----------------------------------------------


@dataclass(frozen=True)
class _RawColumn:
    qualifier: str | None
    column: str
    pos: int


@dataclass(frozen=True)
class _RawSelect:
    items: tuple  # ((expr, alias), ...)
    tables: tuple  # ((name, alias, pos), ...)
    joins: tuple  # ((kind, name, alias, condition, pos), ...)
    where: object | None
    group_by: tuple
    having: object | None
    order_by: tuple  # ((expr, desc), ...)
    limit: int | None
    distinct: bool


@dataclass(frozen=True)
class _RawCompound:
    op: str
    left: object
    right: object
    order_by: tuple
    limit: int | None


class _Parser:
    """Grammar-only pass; never touches the database schema."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept_kw(self, *words: str) -> Token | None:
        if self.peek().is_kw(*words):
            return self.advance()
        return None

    def expect_kw(self, word: str) -> Token:
        tok = self.accept_kw(word)
        if tok is None:
            got = self.peek()
            raise SqlSyntaxError(f"expected {word.upper()}, got {got.value!r}", got.pos)
        return tok

    def accept_punct(self, ch: str) -> Token | None:
        if self.peek().kind == "punct" and self.peek().value == ch:
            return self.advance()
        return None

    def expect_punct(self, ch: str) -> Token:
        tok = self.accept_punct(ch)
        if tok is None:
            got = self.peek()
            raise SqlSyntaxError(f"expected {ch!r}, got {got.value!r}", got.pos)
        return tok

    # -- statement level --

    def parse_statement(self):
        tok = self.peek()
        if tok.is_kw("insert", "update", "delete", "create", "drop", "alter", "with"):
            raise UnsupportedSqlError(
                f"only SELECT statements are supported, got {tok.value.upper()}", tok.pos
            )
        node = self.parse_query()
        self.accept_punct(";")
        tok = self.peek()
        if tok.kind != "eof":
            raise SqlSyntaxError(f"unexpected trailing input {tok.value!r}", tok.pos)
        return node

    def parse_query(self):
        node = self.parse_select_core()
        while True:
            if self.accept_kw("union"):
                op = "union all" if self.accept_kw("all") else "union"
            elif self.accept_kw("intersect"):
                op = "intersect"
            elif self.accept_kw("except"):
                op = "except"
            else:
                break
            right = self.parse_select_core()
            node = _RawCompound(op, node, right, (), None)
        order_by = self.parse_order_by()
        limit = self.parse_limit()
        if order_by or limit is not None:
            node = replace(node, order_by=order_by, limit=limit)
        return node

    def parse_select_core(self) -> _RawSelect:
        self.expect_kw("select")
        distinct = bool(self.accept_kw("distinct"))
        if not distinct:
            self.accept_kw("all")

        items = [self.parse_select_item()]
        while self.accept_punct(","):
            items.append(self.parse_select_item())

        tables = []
        if self.accept_kw("from"):
            tables.append(self.parse_table_ref())
            while self.accept_punct(","):
                tables.append(self.parse_table_ref())

        joins = []
        while tables:  # join clauses are only valid after a FROM list
            if self.accept_kw("inner"):
                kind = "inner"
                self.expect_kw("join")
            elif self.peek().is_kw("left") and self.tokens[self.i + 1].is_kw("join", "outer"):
                self.advance()
                self.accept_kw("outer")
                self.expect_kw("join")
                kind = "left"
            elif self.accept_kw("cross"):
                self.expect_kw("join")
                kind = "cross"
            elif self.accept_kw("join"):
                kind = "inner"
            elif self.peek().is_kw("right", "full"):
                raise UnsupportedSqlError(
                    f"{self.peek().value.upper()} JOIN is not supported", self.peek().pos
                )
            else:
                break
            name, alias, pos = self.parse_table_ref()
            condition = None
            if kind != "cross":
                self.expect_kw("on")
                condition = self.parse_expr()
            joins.append((kind, name, alias, condition, pos))

        where = self.parse_expr() if self.accept_kw("where") else None

        group_by = []
        having = None
        if self.accept_kw("group"):
            self.expect_kw("by")
            group_by.append(self.parse_expr())
            while self.accept_punct(","):
                group_by.append(self.parse_expr())
            if self.accept_kw("having"):
                having = self.parse_expr()

        return _RawSelect(
            items=tuple(items),
            tables=tuple(tables),
            joins=tuple(joins),
            where=where,
            group_by=tuple(group_by),
            having=having,
            order_by=(),
            limit=None,
            distinct=distinct,
        )

    def parse_select_item(self):
        expr = self.parse_expr()
        alias = None
        if self.accept_kw("as"):
            tok = self.advance()
            if tok.kind != "ident":
                raise SqlSyntaxError(f"expected alias, got {tok.value!r}", tok.pos)
            alias = tok.value.lower()
        elif self.peek().kind == "ident" and self.peek().value.lower() not in RESERVED:
            alias = self.advance().value.lower()
        return expr, alias

    def parse_table_ref(self):
        tok = self.advance()
        if tok.kind != "ident" or tok.value.lower() in RESERVED:
            raise SqlSyntaxError(f"expected table name, got {tok.value!r}", tok.pos)
        name = tok.value.lower()
        alias = None
        if self.accept_kw("as"):
            atok = self.advance()
            if atok.kind != "ident":
                raise SqlSyntaxError(f"expected alias, got {atok.value!r}", atok.pos)
            alias = atok.value.lower()
        elif self.peek().kind == "ident" and self.peek().value.lower() not in RESERVED:
            alias = self.advance().value.lower()
        return name, alias, tok.pos

    def parse_order_by(self):
        if not self.accept_kw("order"):
            return ()
        self.expect_kw("by")
        out = []
        while True:
            expr = self.parse_expr()
            desc = False
            if self.accept_kw("desc"):
                desc = True
            else:
                self.accept_kw("asc")
            out.append((expr, desc))
            if not self.accept_punct(","):
                break
        return tuple(out)

    def parse_limit(self):
        if not self.accept_kw("limit"):
            return None
        tok = self.advance()
        if tok.kind != "number" or not re.fullmatch(r"\d+", tok.value):
            raise SqlSyntaxError(
                f"expected non-negative integer after LIMIT, got {tok.value!r}", tok.pos
            )
        if self.peek().is_kw("offset"):
            raise UnsupportedSqlError("OFFSET is not supported", self.peek().pos)
        return int(tok.value)

    # -- expressions --

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        node = self.parse_and()
        while self.accept_kw("or"):
            node = Binary("or", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.accept_kw("and"):
            node = Binary("and", node, self.parse_not())
        return node

    def parse_not(self):
        if self.accept_kw("not"):
            return Unary("not", self.parse_not())
        return self.parse_predicate()

    def parse_predicate(self):
        node = self.parse_additive()
        negated = bool(self.accept_kw("not"))
        if self.accept_kw("is"):
            if negated:
                raise SqlSyntaxError("NOT before IS is not valid", self.peek().pos)
            neg = bool(self.accept_kw("not"))
            self.expect_kw("null")
            return IsNull(node, neg)
        if self.accept_kw("between"):
            low = self.parse_additive()
            self.expect_kw("and")
            high = self.parse_additive()
            return Between(node, low, high, negated)
        if self.accept_kw("like"):
            return Like(node, self.parse_additive(), negated)
        if self.accept_kw("in"):
            self.expect_punct("(")
            if self.peek().is_kw("select"):
                query = self.parse_query()
                self.expect_punct(")")
                return InSubquery(node, query, negated)
            items = [self.parse_additive()]
            while self.accept_punct(","):
                items.append(self.parse_additive())
            self.expect_punct(")")
            return InList(node, tuple(items), negated)
        if negated:
            raise SqlSyntaxError("expected BETWEEN, LIKE or IN after NOT", self.peek().pos)
        tok = self.peek()
        if tok.kind == "op" and tok.value in ("=", "==", "!=", "<>", "<", "<=", ">", ">="):
            self.advance()
            op = {"==": "=", "<>": "!="}.get(tok.value, tok.value)
            return Binary(op, node, self.parse_additive())
        return node

    def parse_additive(self):
        node = self.parse_multiplicative()
        while self.peek().kind == "op" and self.peek().value in ("+", "-"):
            op = self.advance().value
            node = Binary(op, node, self.parse_multiplicative())
        return node

    def parse_multiplicative(self):
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().value in ("*", "/", "%"):
            op = self.advance().value
            node = Binary(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek().kind == "op" and self.peek().value == "-":
            self.advance()
            return Unary("-", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            text = tok.value.lower()
            if re.fullmatch(r"\d+", text):
                return Literal(int(text), text)
            return Literal(float(text), text)
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value[1:-1].replace("''", "'"), tok.value)
        if tok.is_kw("null"):
            self.advance()
            return Literal(None, "null")
        if tok.is_kw("true"):
            self.advance()
            return Literal(1, "true")
        if tok.is_kw("false"):
            self.advance()
            return Literal(0, "false")
        if tok.is_kw("exists"):
            self.advance()
            self.expect_punct("(")
            query = self.parse_query()
            self.expect_punct(")")
            return Exists(query)
        if tok.is_kw("case"):
            raise UnsupportedSqlError("CASE expressions are not supported", tok.pos)
        if self.accept_punct("("):
            if self.peek().is_kw("select"):
                query = self.parse_query()
                self.expect_punct(")")
                return ScalarSubquery(query)
            node = self.parse_expr()
            self.expect_punct(")")
            return node
        if tok.kind == "op" and tok.value == "*":
            self.advance()
            return Star(None)
        if tok.kind == "ident":
            if tok.value.lower() in RESERVED:
                raise SqlSyntaxError(f"unexpected keyword {tok.value!r}", tok.pos)
            self.advance()
            name = tok.value
            if self.accept_punct("("):
                return self.parse_func_call(name.lower(), tok.pos)
            if self.accept_punct("."):
                nxt = self.advance()
                if nxt.kind == "op" and nxt.value == "*":
                    return Star(name.lower())
                if nxt.kind != "ident":
                    raise SqlSyntaxError(
                        f"expected column after {name!r}., got {nxt.value!r}", nxt.pos
                    )
                return _RawColumn(name.lower(), nxt.value.lower(), tok.pos)
            return _RawColumn(None, name.lower(), tok.pos)
        raise SqlSyntaxError(f"unexpected token {tok.value!r}", tok.pos)

    def parse_func_call(self, name: str, pos: int):
        if name not in AGGREGATE_FUNCS and name not in SCALAR_FUNCS:
            raise UnsupportedSqlError(f"unsupported function {name!r}", pos)
        if self.peek().kind == "op" and self.peek().value == "*":
            self.advance()
            self.expect_punct(")")
            if name != "count":
                raise SqlSyntaxError(f"{name}(*) is not valid", pos)
            return FuncCall("count", (), star=True)
        distinct = bool(self.accept_kw("distinct"))
        args = []
        if not self.accept_punct(")"):
            args.append(self.parse_expr())
            while self.accept_punct(","):
                args.append(self.parse_expr())
            self.expect_punct(")")
        if distinct and len(args) != 1:
            raise SqlSyntaxError(f"{name}(DISTINCT ...) takes one argument", pos)
        return FuncCall(name, tuple(args), distinct=distinct)


# --- resolution ---------------------------------------------------------------


@dataclass
class _Scope:
    entries: list  # [(canonical_table, alias_or_None)]
    parent: object
    db: DatabaseSpec

    def tables(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)


class _Resolver:
    def __init__(self, db: DatabaseSpec):
        self.db = db

    def resolve_query(self, raw, parent: _Scope | None):
        if isinstance(raw, _RawCompound):
            left = self.resolve_query(raw.left, parent)
            right = self.resolve_query(raw.right, parent)
            if len(output_columns(left, self.db)) != len(output_columns(right, self.db)):
                raise ResolutionError(
                    f"{raw.op.upper()} operands have different column counts"
                )
            node = Compound(raw.op, left, right)
            order_by = tuple(
                OrderItem(self._compound_ref(e, node), desc) for e, desc in raw.order_by
            )
            return replace(node, order_by=order_by, limit=raw.limit)
        return self.resolve_select(raw, parent)

    def resolve_select(self, raw: _RawSelect, parent: _Scope | None) -> Select:
        scope = _Scope(entries=[], parent=parent, db=self.db)
        tables = []
        for name, alias, pos in raw.tables:
            tables.append(self._enter_table(scope, name, alias, pos))
        joins = []
        for kind, name, alias, condition, pos in raw.joins:
            table = self._enter_table(scope, name, alias, pos)
            cond = self.expr(condition, scope) if condition is not None else None
            if cond is not None:
                _reject_aggregates(cond, "JOIN condition")
            joins.append(Join(table, cond, kind))

        items = []
        for expr, alias in raw.items:
            if isinstance(expr, Star):
                if not scope.entries:
                    raise ResolutionError("* requires a FROM clause")
                star = expr
                if star.table is not None:
                    star = Star(self._table_for_qualifier(scope, star.table))
                if len(set(scope.tables())) == 1:
                    star = Star(None)
                items.append(SelectItem(star, alias))
            else:
                items.append(SelectItem(self.expr(expr, scope), alias))
        items = tuple(items)

        where = ()
        if raw.where is not None:
            resolved = self.expr(raw.where, scope)
            _reject_aggregates(resolved, "WHERE")
            where = _split_conjuncts(resolved)

        group_by = tuple(self._item_ref(e, scope, items) for e in raw.group_by)
        for g in group_by:
            _reject_aggregates(g, "GROUP BY")

        having = ()
        if raw.having is not None:
            having = _split_conjuncts(self.expr(raw.having, scope))

        order_by = tuple(
            OrderItem(self._item_ref(e, scope, items), desc) for e, desc in raw.order_by
        )

        scope_tables = tuple(tables) + tuple(j.table for j in joins)
        key = lambda e: render_expr(e, scope_tables)
        return Select(
            items=items,
            tables=tuple(tables),
            joins=tuple(joins),
            where=tuple(sorted(where, key=key)),
            group_by=group_by,
            having=tuple(sorted(having, key=key)),
            order_by=order_by,
            limit=raw.limit,
            distinct=raw.distinct,
        )

    def _enter_table(self, scope: _Scope, name: str, alias: str | None, pos: int) -> str:
        if self.db.table(name) is None:
            raise ResolutionError(f"unknown table {name!r}", pos)
        if any(name == existing for existing, _ in scope.entries):
            raise UnsupportedSqlError(
                f"table {name!r} referenced twice (self-joins are not supported)", pos
            )
        keys = {alias_ or existing for existing, alias_ in scope.entries}
        if (alias or name) in keys:
            raise ResolutionError(f"duplicate table alias {(alias or name)!r}", pos)
        scope.entries.append((name, alias))
        return name

    def _table_for_qualifier(self, scope: _Scope, qualifier: str, pos: int | None = None) -> str:
        s = scope
        while s is not None:
            for name, alias in s.entries:
                if qualifier == (alias or name):
                    return name
            s = s.parent
        raise ResolutionError(f"unknown table or alias {qualifier!r}", pos)

    def _column(self, raw: _RawColumn, scope: _Scope) -> ColumnRef:
        if raw.qualifier is not None:
            table = self._table_for_qualifier(scope, raw.qualifier, raw.pos)
            if raw.column not in self.db.table(table).column_names():
                raise ResolutionError(
                    f"unknown column {raw.column!r} in table {table!r}", raw.pos
                )
            return ColumnRef(table, raw.column)
        s = scope
        while s is not None:
            owners = sorted({
                name for name, _ in s.entries
                if raw.column in self.db.table(name).column_names()
            })
            if len(owners) == 1:
                return ColumnRef(owners[0], raw.column)
            if len(owners) > 1:
                raise ResolutionError(f"ambiguous column {raw.column!r}", raw.pos)
            s = s.parent
        raise ResolutionError(f"unknown column {raw.column!r}", raw.pos)

    def _item_ref(self, raw, scope: _Scope, items: tuple[SelectItem, ...]):
        """ORDER BY / GROUP BY entry: select alias, 1-based position, or column."""
        if isinstance(raw, _RawColumn) and raw.qualifier is None:
            for item in items:
                if item.alias == raw.column:
                    return item.expr
        if isinstance(raw, Literal) and isinstance(raw.value, int):
            if not 1 <= raw.value <= len(items):
                raise ResolutionError(f"position {raw.value} is out of range")
            expr = items[raw.value - 1].expr
            if isinstance(expr, Star):
                raise ResolutionError("cannot order or group by a * item")
            return expr
        return self.expr(raw, scope)

    def _compound_ref(self, raw, node: Compound):
        names = output_columns(node, self.db)
        if isinstance(raw, _RawColumn) and raw.qualifier is None:
            if raw.column in names:
                return OutputCol(raw.column, names.index(raw.column))
            raise ResolutionError(f"unknown output column {raw.column!r}", raw.pos)
        if isinstance(raw, Literal) and isinstance(raw.value, int):
            if not 1 <= raw.value <= len(names):
                raise ResolutionError(f"position {raw.value} is out of range")
            return OutputCol(names[raw.value - 1], raw.value - 1)
        raise UnsupportedSqlError(
            "compound ORDER BY supports only output column names or positions"
        )

    def expr(self, node, scope: _Scope):
        if isinstance(node, _RawColumn):
            return self._column(node, scope)
        if isinstance(node, Literal):
            return node
        if isinstance(node, Star):
            raise SqlSyntaxError("* is only valid as a select item or in count(*)")
        if isinstance(node, Unary):
            return Unary(node.op, self.expr(node.operand, scope))
        if isinstance(node, Binary):
            out = Binary(node.op, self.expr(node.left, scope), self.expr(node.right, scope))
            if out.op in ("=", "!="):
                # commutative: order operands (literals last, then by text) so
                # a=b and b=a canonicalize identically without moving
                # constants in front of the columns they constrain
                lk = (isinstance(out.left, Literal), render_expr(out.left, (), qualify_all=True))
                rk = (isinstance(out.right, Literal), render_expr(out.right, (), qualify_all=True))
                if rk < lk:
                    out = Binary(out.op, out.right, out.left)
            return out
        if isinstance(node, IsNull):
            return IsNull(self.expr(node.operand, scope), node.negated)
        if isinstance(node, Between):
            return Between(
                self.expr(node.operand, scope),
                self.expr(node.low, scope),
                self.expr(node.high, scope),
                node.negated,
            )
        if isinstance(node, Like):
            return Like(
                self.expr(node.operand, scope), self.expr(node.pattern, scope), node.negated
            )
        if isinstance(node, InList):
            return InList(
                self.expr(node.needle, scope),
                tuple(self.expr(x, scope) for x in node.items),
                node.negated,
            )
        if isinstance(node, InSubquery):
            query = self.resolve_query(node.query, scope)
            if len(output_columns(query, self.db)) != 1:
                raise ResolutionError("subquery in IN must return exactly one column")
            return InSubquery(self.expr(node.needle, scope), query, node.negated)
        if isinstance(node, Exists):
            return Exists(self.resolve_query(node.query, scope), node.negated)
        if isinstance(node, ScalarSubquery):
            query = self.resolve_query(node.query, scope)
            if len(output_columns(query, self.db)) != 1:
                raise ResolutionError("scalar subquery must return exactly one column")
            return ScalarSubquery(query)
        if isinstance(node, FuncCall):
            resolved = FuncCall(
                node.name,
                tuple(self.expr(a, scope) for a in node.args),
                node.distinct,
                node.star,
            )
            if node.name in AGGREGATE_FUNCS:
                for a in resolved.args:
                    _reject_aggregates(a, f"argument of {node.name}()")
            return resolved
        raise SqlSyntaxError(f"cannot resolve node {node!r}")


def _split_conjuncts(expr) -> tuple:
    if isinstance(expr, Binary) and expr.op == "and":
        return _split_conjuncts(expr.left) + _split_conjuncts(expr.right)
    return (expr,)


def _walk(node):
    yield node
    if isinstance(node, Unary):
        yield from _walk(node.operand)
    elif isinstance(node, Binary):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, IsNull):
        yield from _walk(node.operand)
    elif isinstance(node, Between):
        yield from _walk(node.operand)
        yield from _walk(node.low)
        yield from _walk(node.high)
    elif isinstance(node, Like):
        yield from _walk(node.operand)
        yield from _walk(node.pattern)
    elif isinstance(node, InList):
        yield from _walk(node.needle)
        for x in node.items:
            yield from _walk(x)
    elif isinstance(node, InSubquery):
        yield from _walk(node.needle)
    elif isinstance(node, FuncCall):
        for a in node.args:
            yield from _walk(a)


def _reject_aggregates(expr, where: str):
    for n in _walk(expr):
        if isinstance(n, FuncCall) and n.name in AGGREGATE_FUNCS:
            raise ResolutionError(f"aggregate {n.name}() is not allowed in {where}")


def contains_aggregate(expr) -> bool:
    return any(
        isinstance(n, FuncCall) and n.name in AGGREGATE_FUNCS for n in _walk(expr)
    )


# --- canonical rendering ------------------------------------------------------

# precedence levels for parenthesization
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_ATOM = \
    1, 2, 3, 4, 5, 6, 7, 8

_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


def render_expr(node, scope_tables: tuple[str, ...], qualify_all: bool = False) -> str:
    """Canonical lower-case text of an expression.

    Column references are qualified when the rendering scope holds more than
    one table (or always, with qualify_all).
    """
    text, _ = _render(node, scope_tables, qualify_all)
    return text


def _render(node, scope, qualify_all):
    r = lambda child, min_prec: _child(child, scope, qualify_all, min_prec)
    if isinstance(node, Literal):
        return node.text, _PREC_ATOM
    if isinstance(node, ColumnRef):
        if not qualify_all and len(set(scope)) == 1 and node.table == scope[0]:
            return node.column, _PREC_ATOM
        return f"{node.table}.{node.column}", _PREC_ATOM
    if isinstance(node, OutputCol):
        return node.name, _PREC_ATOM
    if isinstance(node, Star):
        return ("*" if node.table is None else f"{node.table}.*"), _PREC_ATOM
    if isinstance(node, FuncCall):
        if node.star:
            return "count(*)", _PREC_ATOM
        inner = ",".join(render_expr(a, scope, qualify_all) for a in node.args)
        if node.distinct:
            inner = f"distinct {inner}"
        return f"{node.name}({inner})", _PREC_ATOM
    if isinstance(node, Unary):
        if node.op == "-":
            return f"-{r(node.operand, _PREC_UNARY)}", _PREC_UNARY
        return f"not {r(node.operand, _PREC_NOT)}", _PREC_NOT
    if isinstance(node, Binary):
        if node.op in ("and", "or"):
            prec = _PREC_AND if node.op == "and" else _PREC_OR
            return f"{r(node.left, prec)} {node.op} {r(node.right, prec)}", prec
        if node.op in _CMP_OPS:
            return f"{r(node.left, _PREC_ADD)}{node.op}{r(node.right, _PREC_ADD)}", _PREC_CMP
        if node.op in ("+", "-"):
            right = _child(node.right, scope, qualify_all, _PREC_ADD, right_operand=True)
            return f"{r(node.left, _PREC_ADD)}{node.op}{right}", _PREC_ADD
        right = _child(node.right, scope, qualify_all, _PREC_MUL, right_operand=True)
        return f"{r(node.left, _PREC_MUL)}{node.op}{right}", _PREC_MUL
    if isinstance(node, IsNull):
        kw = "is not null" if node.negated else "is null"
        return f"{r(node.operand, _PREC_ADD)} {kw}", _PREC_CMP
    if isinstance(node, Between):
        kw = "not between" if node.negated else "between"
        return (
            f"{r(node.operand, _PREC_ADD)} {kw} {r(node.low, _PREC_ADD)} and {r(node.high, _PREC_ADD)}",
            _PREC_CMP,
        )
    if isinstance(node, Like):
        kw = "not like" if node.negated else "like"
        return f"{r(node.operand, _PREC_ADD)} {kw} {r(node.pattern, _PREC_ADD)}", _PREC_CMP
    if isinstance(node, InList):
        kw = "not in" if node.negated else "in"
        items = ",".join(render_expr(x, scope, qualify_all) for x in node.items)
        return f"{r(node.needle, _PREC_ADD)} {kw} ({items})", _PREC_CMP
    if isinstance(node, InSubquery):
        kw = "not in" if node.negated else "in"
        sub = render_statement(node.query, upper=False)
        return f"{r(node.needle, _PREC_ADD)} {kw} ({sub})", _PREC_CMP
    if isinstance(node, Exists):
        kw = "not exists" if node.negated else "exists"
        return f"{kw} ({render_statement(node.query, upper=False)})", _PREC_CMP
    if isinstance(node, ScalarSubquery):
        return f"({render_statement(node.query, upper=False)})", _PREC_ATOM
    raise TypeError(f"cannot render {node!r}")


def _child(node, scope, qualify_all, min_prec, right_operand=False):
    text, prec = _render(node, scope, qualify_all)
    need_parens = prec < min_prec
    if not need_parens and right_operand and prec == min_prec:
        # keep right-nested arithmetic explicit so the text reparses to
        # the same tree: a-(b-c), a+(b+c)
        need_parens = isinstance(node, Binary) and node.op not in ("and", "or")
    if need_parens:
        return f"({text})"
    return text


def _render_conjunct(node, scope) -> str:
    """A WHERE/HAVING conjunct as it appears between joining ANDs: an
    OR-rooted conjunct must keep its parentheses or the text would reparse
    with the wrong precedence."""
    text, prec = _render(node, scope, False)
    return f"({text})" if prec < _PREC_AND else text


def render_statement(node, upper: bool = True) -> str:
    """Canonical SQL text; keywords upper-cased unless upper=False."""
    kw = (lambda s: s) if upper else (lambda s: s.lower())
    if isinstance(node, Compound):
        parts = [
            render_statement(node.left, upper),
            kw(node.op.upper()),
            render_statement(node.right, upper),
        ]
        if node.order_by:
            entries = ", ".join(
                f"{item.expr.name} {kw('DESC') if item.desc else kw('ASC')}"
                for item in node.order_by
            )
            parts.append(f"{kw('ORDER BY')} {entries}")
        if node.limit is not None:
            parts.append(f"{kw('LIMIT')} {node.limit}")
        return " ".join(parts)

    select = node
    scope = select.scope_tables()
    parts = [kw("SELECT")]
    if select.distinct:
        parts.append(kw("DISTINCT"))
    rendered_items = []
    for item in select.items:
        text = render_expr(item.expr, scope)
        if item.alias:
            text += f" {kw('AS')} {item.alias}"
        rendered_items.append(text)
    parts.append(", ".join(rendered_items))
    if select.tables:
        parts.append(kw("FROM"))
        parts.append(", ".join(select.tables))
    for join in select.joins:
        if join.kind == "cross":
            parts.append(f"{kw('CROSS JOIN')} {join.table}")
        else:
            prefix = kw("LEFT JOIN") if join.kind == "left" else kw("JOIN")
            parts.append(f"{prefix} {join.table} {kw('ON')} {render_expr(join.condition, scope)}")
    if select.where:
        joined = f" {kw('AND')} ".join(_render_conjunct(c, scope) for c in select.where)
        parts.append(f"{kw('WHERE')} {joined}")
    if select.group_by:
        parts.append(
            f"{kw('GROUP BY')} " + ", ".join(render_expr(e, scope) for e in select.group_by)
        )
    if select.having:
        joined = f" {kw('AND')} ".join(_render_conjunct(c, scope) for c in select.having)
        parts.append(f"{kw('HAVING')} {joined}")
    if select.order_by:
        entries = ", ".join(
            f"{render_expr(item.expr, scope)} {kw('DESC') if item.desc else kw('ASC')}"
            for item in select.order_by
        )
        parts.append(f"{kw('ORDER BY')} {entries}")
    if select.limit is not None:
        parts.append(f"{kw('LIMIT')} {select.limit}")
    return " ".join(parts)


# --- public API ----------------------------------------------------------------


def parse_sql(text: str, db: DatabaseSpec):
    """Parse and resolve one SELECT statement against the schema.

    Returns a Select or Compound node. Raises SqlSyntaxError,
    ResolutionError or UnsupportedSqlError.
    """
    raw = _Parser(text).parse_statement()
    return _Resolver(db).resolve_query(raw, None)


def canonical_sql(node) -> str:
    """Canonical upper-keyword SQL text of a resolved statement."""
    return render_statement(node, upper=True)


def output_columns(node, db: DatabaseSpec) -> tuple[str, ...]:
    """Output column names of a resolved (or raw, tables-known) query."""
    if isinstance(node, (Compound, _RawCompound)):
        return output_columns(node.left, db)
    names = []
    if isinstance(node, _RawSelect):
        scope_tables = tuple(name for name, _, _ in node.tables) + tuple(
            name for _, name, _, _, _ in node.joins
        )
        raw_items = node.items
        for expr, alias in raw_items:
            if isinstance(expr, Star):
                if expr.table is not None:
                    table = db.table(expr.table)
                    names.extend(table.column_names() if table else ("?",))
                else:
                    for t in scope_tables:
                        table = db.table(t)
                        names.extend(table.column_names() if table else ("?",))
            elif alias:
                names.append(alias)
            elif isinstance(expr, _RawColumn):
                names.append(expr.column)
            else:
                names.append("expr")
        return tuple(names)
    for item in node.items:
        if isinstance(item.expr, Star):
            if item.expr.table is not None:
                names.extend(db.table(item.expr.table).column_names())
            else:
                for t in node.scope_tables():
                    names.extend(db.table(t).column_names())
        elif item.alias:
            names.append(item.alias)
        elif isinstance(item.expr, ColumnRef):
            names.append(item.expr.column)
        else:
            names.append(render_expr(item.expr, node.scope_tables()))
    return tuple(names)
