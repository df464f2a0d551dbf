from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from reviewchain import economics
from reviewchain.economics import (
    cost_table,
    per_review_cost,
    round_sig,
    round_to,
    storage_cost,
    with_review_count,
)


def test_fast_price_figures():
    q = storage_cost(270_110, 5, 885)
    assert q.gas == 168_818_750
    assert q.eth == Fraction("0.84409375")
    assert round_to(q.usd, 0) == Decimal(747)
    assert round_sig(per_review_cost(q, 3025), 3) == Decimal("0.247")


def test_median_price_figures():
    q = storage_cost(270_110, 22, 885)
    assert round_to(q.usd, 0) == Decimal(3287)
    assert round_sig(per_review_cost(q, 3025), 3) == Decimal("1.09")


def test_zero_bytes():
    q = storage_cost(0, 22, 885)
    assert (q.gas, q.eth, q.usd) == (0, 0, 0)


def test_per_review_identity_and_errors():
    q = storage_cost(1000, 5)
    assert per_review_cost(q, 1) == q.usd
    with pytest.raises(ValueError):
        per_review_cost(q, 0)
    with pytest.raises(ValueError):
        storage_cost(-1, 5)


def test_with_review_count():
    q = with_review_count(storage_cost(270_110, 5), 3025)
    assert q.usd_per_review == q.usd / 3025


@given(st.integers(0, 10**7), st.integers(0, 10**7), st.integers(0, 1000), st.integers(1, 10**4))
def test_linearity(a, b, price, rate):
    assert storage_cost(a + b, price, rate).gas == storage_cost(a, price, rate).gas + storage_cost(b, price, rate).gas


@given(st.integers(1, 10**7), st.integers(0, 999), st.integers(1, 1000))
def test_monotone_in_price(n, p1, dp):
    assert storage_cost(n, p1).usd < storage_cost(n, p1 + dp).usd


def test_rounding_is_half_up():
    assert round_to(Fraction(5, 2), 0) == Decimal(3)
    assert round_sig(Fraction(12345, 10000), 3) == Decimal("1.23")
    assert round_sig(Fraction(0), 3) == Decimal(0)


def test_cost_table_rows():
    rows = cost_table()
    assert [r["usd"] for r in rows] == ["747", "3287"]
    assert [r["usd_per_review"] for r in rows] == ["0.247", "1.09"]
    assert rows[0]["eth"] == "0.84409375"
    assert "fast" in rows[0]["preset"] and "median" in rows[1]["preset"]
    text = economics.format_cost_table(rows)
    assert "$747" in text and "$3,287" in text
