"""Exact storage-cost arithmetic.

All amounts are :class:`fractions.Fraction`; rounding happens only in the
display helpers, so figures like 0.84409375 ETH stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Union

from reviewchain.ledger import GasSchedule

Rational = Union[int, Fraction]

# reference network conditions
FAST_GAS_PRICE = 5
MEDIAN_GAS_PRICE = 22
ETH_USD = 885

GAS_PRICE_PRESETS = {
    "fast (<5 min)": FAST_GAS_PRICE,
    "median, 1,500-block window": MEDIAN_GAS_PRICE,
}

# reference workload: one release week of reviews
SAMPLE_REVIEW_COUNT = 3025
SAMPLE_REVIEW_BYTES = 270_110


@dataclass(frozen=True)
class CostQuote:
    bytes: int
    gas: int
    gas_price_gwei: int
    eth: Fraction
    usd: Fraction
    usd_per_review: Fraction | None = None


def storage_cost(
    nbytes: int,
    gas_price_gwei: int,
    eth_usd_rate: Rational = ETH_USD,
    schedule: GasSchedule = GasSchedule(),
) -> CostQuote:
    if nbytes < 0 or gas_price_gwei < 0 or eth_usd_rate < 0:
        raise ValueError("cost inputs must be non-negative")
    gas = schedule.storage_gas(nbytes)
    eth = Fraction(gas * gas_price_gwei, schedule.gwei_per_eth)
    return CostQuote(
        bytes=nbytes,
        gas=gas,
        gas_price_gwei=gas_price_gwei,
        eth=eth,
        usd=eth * Fraction(eth_usd_rate),
    )


def gas_cost(gas: int, gas_price_gwei: int, eth_usd_rate: Rational = ETH_USD, schedule: GasSchedule = GasSchedule()) -> CostQuote:
    """Quote for an arbitrary gas amount (not tied to a byte count)."""
    eth = Fraction(gas * gas_price_gwei, schedule.gwei_per_eth)
    return CostQuote(bytes=0, gas=gas, gas_price_gwei=gas_price_gwei, eth=eth, usd=eth * Fraction(eth_usd_rate))


def per_review_cost(quote: CostQuote, review_count: int) -> Fraction:
    if review_count <= 0:
        raise ValueError("review count must be positive")
    return quote.usd / review_count


def with_review_count(quote: CostQuote, review_count: int) -> CostQuote:
    return CostQuote(
        bytes=quote.bytes,
        gas=quote.gas,
        gas_price_gwei=quote.gas_price_gwei,
        eth=quote.eth,
        usd=quote.usd,
        usd_per_review=per_review_cost(quote, review_count),
    )


def round_to(value: Fraction, places: int) -> Decimal:
    """Half-up rounding of an exact value to ``places`` decimals."""
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    return exact.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def round_sig(value: Fraction, digits: int = 3) -> Decimal:
    """Half-up rounding to ``digits`` significant figures."""
    if value == 0:
        return Decimal(0)
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    places = digits - 1 - exact.copy_abs().adjusted()
    return round_to(value, places)


def cost_table(
    nbytes: int = SAMPLE_REVIEW_BYTES,
    review_count: int = SAMPLE_REVIEW_COUNT,
    eth_usd_rate: Rational = ETH_USD,
    presets: dict[str, int] | None = None,
) -> list[dict]:
    rows = []
    for label, price in (presets or GAS_PRICE_PRESETS).items():
        q = with_review_count(storage_cost(nbytes, price, eth_usd_rate), review_count)
        rows.append(
            {
                "preset": label,
                "gas_price_gwei": price,
                "bytes": q.bytes,
                "gas": q.gas,
                "eth": str(round_to(q.eth, 8)),
                "usd": str(round_to(q.usd, 0)),
                "usd_exact": str(round_to(q.usd, 2)),
                "usd_per_review": str(round_sig(q.usd_per_review, 3)),
            }
        )
    return rows


def format_cost_table(rows: list[dict]) -> str:
    head = f"{'preset':<28} {'gwei':>5} {'bytes':>9} {'gas':>13} {'ETH':>12} {'USD':>8} {'USD/review':>11}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['preset']:<28} {r['gas_price_gwei']:>5} {r['bytes']:>9,} {r['gas']:>13,} "
            f"{r['eth']:>12} {'$' + format(int(Decimal(r['usd'])), ','):>8} {'$' + r['usd_per_review']:>11}"
        )
    return "\n".join(lines)
