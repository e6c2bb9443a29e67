"""In-memory relational schema: typed tables with rows, loaded from JSON.

Identifiers are case-folded to lower case at construction; lookups are
case-insensitive. Cells are str / int / float / None and must conform to
their declared column type.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CorpusError

COLUMN_TYPES = ("text", "integer", "real")


@dataclass(frozen=True)
class Column:
    name: str
    type: str  # one of COLUMN_TYPES


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple, ...]

    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)


@dataclass(frozen=True)
class DatabaseSpec:
    tables: tuple[Table, ...]
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {t.name: t for t in self.tables})

    def table(self, name: str) -> Table | None:
        return self._by_name.get(name.lower())

    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)


def _check_cell(value, col: Column, table: str, row_index: int) -> object:
    if value is None:
        return None
    if col.type == "text":
        if not isinstance(value, str):
            raise CorpusError(
                f"cell in row {row_index} of {table}.{col.name} is not text: {value!r}"
            )
        return value
    if col.type == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            raise CorpusError(
                f"cell in row {row_index} of {table}.{col.name} is not an integer: {value!r}"
            )
        return value
    if col.type == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CorpusError(
                f"cell in row {row_index} of {table}.{col.name} is not a number: {value!r}"
            )
        return float(value)
    raise CorpusError(f"unknown column type {col.type!r} in table {table!r}")


def database_from_dict(data: dict) -> DatabaseSpec:
    """Build a validated DatabaseSpec from its JSON representation."""
    tables = []
    seen_tables = set()
    for tdata in data.get("tables", []):
        name = str(tdata["name"]).lower()
        if name in seen_tables:
            raise CorpusError(f"duplicate table name {name!r}")
        seen_tables.add(name)
        columns = []
        seen_cols = set()
        for cdata in tdata.get("columns", []):
            cname = str(cdata["name"]).lower()
            ctype = str(cdata["type"]).lower()
            if ctype not in COLUMN_TYPES:
                raise CorpusError(f"column {name}.{cname} has unknown type {ctype!r}")
            if cname in seen_cols:
                raise CorpusError(f"duplicate column {cname!r} in table {name!r}")
            seen_cols.add(cname)
            columns.append(Column(cname, ctype))
        rows = []
        for i, row in enumerate(tdata.get("rows", [])):
            if len(row) != len(columns):
                raise CorpusError(
                    f"row {i} of table {name!r} has arity {len(row)}, expected {len(columns)}"
                )
            rows.append(tuple(_check_cell(v, c, name, i) for v, c in zip(row, columns)))
        tables.append(Table(name, tuple(columns), tuple(rows)))
    return DatabaseSpec(tuple(tables))


def database_to_dict(db: DatabaseSpec) -> dict:
    return {
        "tables": [
            {
                "name": t.name,
                "columns": [{"name": c.name, "type": c.type} for c in t.columns],
                "rows": [list(row) for row in t.rows],
            }
            for t in db.tables
        ]
    }
