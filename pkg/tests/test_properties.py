from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from plsq.engine import entropy_bits
from plsq.executor import ResultTable, functionally_equal, table_jaccard

cell = st.one_of(
    st.none(),
    st.integers(min_value=-50, max_value=50),
    st.floats(min_value=-50, max_value=50, allow_nan=False),
    st.text(alphabet="abcxyz", max_size=4),
)

column_names = st.lists(
    st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=4, unique=True
)


@st.composite
def tables(draw):
    columns = draw(column_names)
    n_rows = draw(st.integers(min_value=0, max_value=5))
    rows = tuple(
        tuple(draw(cell) for _ in columns) for _ in range(n_rows)
    )
    return ResultTable(tuple(columns), rows)


@given(tables(), tables())
@settings(max_examples=200)
def test_jaccard_is_symmetric_and_bounded(a, b):
    ab = table_jaccard(a, b)
    ba = table_jaccard(b, a)
    assert ab == ba
    assert 0.0 <= ab <= 1.0


@given(tables())
@settings(max_examples=100)
def test_jaccard_reflexive(a):
    assert table_jaccard(a, a) == 1.0
    assert functionally_equal(a, a)


@given(tables(), tables())
@settings(max_examples=200)
def test_exact_equality_implies_jaccard_one(a, b):
    if functionally_equal(a, b):
        assert table_jaccard(a, b) == 1.0
    else:
        assert table_jaccard(a, b) < 1.0


@given(tables(), tables())
@settings(max_examples=200)
def test_equality_is_symmetric(a, b):
    assert functionally_equal(a, b) == functionally_equal(b, a)


@given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=10))
@settings(max_examples=200)
def test_entropy_bounds(raw):
    total = sum(raw)
    masses = [x / total for x in raw]
    h = entropy_bits(masses)
    assert 0.0 <= h
    import math

    assert h <= math.log2(len(masses)) + 1e-9
