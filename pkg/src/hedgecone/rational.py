"""Exact rational parsing and formatting.

All model data, prices and certificates are exact rationals.  JSON files carry
them as integers or strings ("3/4", "0.15", "-2"); floats are rejected so no
binary rounding can leak into the arithmetic.  Human-readable reports render
decimals with round-half-even at a configurable precision.
"""

from __future__ import annotations

import decimal
from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction
Vec = tuple[Fraction, ...]


def parse_rat(value: object) -> Fraction:
    """Parse an int or string rational ("p/q", "1.5", "-2e-3") exactly.

    Floats are rejected: a float has already lost exactness upstream.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise ValueError(
            f"floats are not accepted as exact rationals: {value!r}; "
            "use an integer or a string like \"3/4\" or \"0.15\""
        )
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"not a rational: {value!r}")


def parse_vec(values: Sequence[object], dim: int | None = None) -> Vec:
    vec = tuple(parse_rat(v) for v in values)
    if dim is not None and len(vec) != dim:
        raise ValueError(f"expected a vector of length {dim}, got {len(vec)}")
    return vec


def fmt_rat(x: Fraction) -> str:
    """Canonical JSON form: "p" for integers, "p/q" otherwise."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def fmt_vec(v: Iterable[Fraction]) -> list[str]:
    return [fmt_rat(x) for x in v]


def rat_to_decimal_str(x: Fraction, places: int = 3) -> str:
    """Round-half-even decimal rendering with a fixed number of places."""
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        ctx.rounding = decimal.ROUND_HALF_EVEN
        d = decimal.Decimal(x.numerator) / decimal.Decimal(x.denominator)
        q = d.quantize(decimal.Decimal(1).scaleb(-places))
    return str(q)


def round_sig_digits(d: decimal.Decimal, digits: int) -> Fraction:
    """Round a Decimal to `digits` significant digits (half-even), exactly as a Fraction."""
    if d == 0:
        return Fraction(0)
    with decimal.localcontext() as ctx:
        ctx.rounding = decimal.ROUND_HALF_EVEN
        shift = d.adjusted() - (digits - 1)
        q = d.quantize(decimal.Decimal(1).scaleb(shift))
    return Fraction(q)
