"""Integer fixed-point arithmetic.

Two scales are used throughout the simulator:

- wad: 18 decimals, for token amounts, USD values and ratios
- ray: 27 decimals, for per-second rate factors and accumulators

All values are plain non-negative ``int``. Multiplication and division
round toward zero. Any working product above ``MAX_UINT`` raises
:class:`ArithmeticOverflow` instead of wrapping.
"""

from __future__ import annotations

import decimal
from decimal import Decimal

WAD = 10**18
RAY = 10**27
WAD_RAY_RATIO = 10**9
MAX_UINT = 2**256 - 1

SECONDS_PER_YEAR = 31_536_000

# "no debt" ratio sentinel; compares above every real ratio
INF_RATIO = MAX_UINT


class ArithmeticOverflow(OverflowError):
    pass


def _check(value: int) -> int:
    if value > MAX_UINT:
        raise ArithmeticOverflow(f"working value exceeds 2**256-1: {value}")
    if value < 0:
        raise ValueError(f"negative operand in unsigned arithmetic: {value}")
    return value


def wad_mul(a: int, b: int) -> int:
    return _check(a * b) // WAD


def wad_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("wad_div by zero")
    return _check(a * WAD) // b


def ray_mul(a: int, b: int) -> int:
    return _check(a * b) // RAY


def ray_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("ray_div by zero")
    return _check(a * RAY) // b


def wad_mul_ray(a: int, r: int) -> int:
    """wad × ray → wad, floored."""
    return _check(a * r) // RAY


def wad_div_ray(a: int, r: int) -> int:
    """wad ÷ ray → wad, floored."""
    if r == 0:
        raise ZeroDivisionError("wad_div_ray by zero")
    return _check(a * RAY) // r


def wad_div_ray_up(a: int, r: int) -> int:
    """wad ÷ ray → wad, rounded up (used where rounding must favour the protocol)."""
    if r == 0:
        raise ZeroDivisionError("wad_div_ray_up by zero")
    return -(-_check(a * RAY) // r)


def wad_to_ray(a: int) -> int:
    return _check(a * WAD_RAY_RATIO)


def ray_to_wad(r: int) -> int:
    return r // WAD_RAY_RATIO


def ray_pow(r: int, n: int) -> int:
    """r**n in ray precision by binary exponentiation.

    Every intermediate product is floored, so the result is within a few
    ulps per squaring of the exact power.
    """
    if n < 0:
        raise ValueError("ray_pow exponent must be non-negative")
    _check(r)
    result = RAY
    base = r
    while n:
        if n & 1:
            result = ray_mul(result, base)
        n >>= 1
        if n:
            base = ray_mul(base, base)
    return result


def _estimate_root(annual_rate: int, seconds: int) -> int:
    with decimal.localcontext() as ctx:
        ctx.prec = 80
        growth = (Decimal(WAD) + Decimal(annual_rate)) / Decimal(WAD)
        root = (growth.ln() / Decimal(seconds)).exp()
        return int(root * Decimal(RAY))


def annual_to_per_second(annual_rate: int, seconds: int = SECONDS_PER_YEAR) -> int:
    """Per-second ray factor r such that ray_pow(r, seconds) ~= 1 + annual_rate.

    ``annual_rate`` is a wad fraction (0.05e18 for 5%). Returns the largest
    r with ray_pow(r, seconds) <= 1 + annual_rate, found by bisection over
    ray integers; a high-precision logarithm only seeds the bracket.
    """
    if annual_rate < 0:
        raise ValueError("annual rate must be non-negative")
    if annual_rate == 0:
        return RAY
    target = wad_to_ray(WAD + annual_rate)
    guess = _estimate_root(annual_rate, seconds)

    def too_big(r: int) -> bool:
        try:
            return ray_pow(r, seconds) > target
        except ArithmeticOverflow:
            return True

    step = 1 << 10
    lo = max(RAY, guess - step)
    while too_big(lo) and lo > RAY:
        step <<= 1
        lo = max(RAY, guess - step)
    step = 1 << 10
    hi = guess + step
    while not too_big(hi):
        step <<= 1
        hi = guess + step
    # invariant: lo fits, hi overshoots
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if too_big(mid):
            hi = mid
        else:
            lo = mid
    return lo


def _parse_fixed(text: str | int, decimals: int, kind: str) -> int:
    if isinstance(text, bool):
        raise ValueError(f"not a {kind} value: {text!r}")
    if isinstance(text, int):
        if text < 0:
            raise ValueError(f"negative {kind}: {text}")
        return _check(text * 10**decimals)
    if not isinstance(text, str):
        raise ValueError(f"{kind} values must be decimal strings, got {type(text).__name__}")
    s = text.strip()
    if not s or not s.isascii() or s.startswith(("-", "+")):
        raise ValueError(f"invalid {kind} literal: {text!r}")
    whole, _, frac = s.partition(".")
    if not whole and not frac:
        raise ValueError(f"invalid {kind} literal: {text!r}")
    whole = whole or "0"
    if not whole.isdigit() or (frac and not frac.isdigit()):
        raise ValueError(f"invalid {kind} literal: {text!r}")
    if len(frac) > decimals:
        raise ValueError(f"{kind} literal has more than {decimals} fractional digits: {text!r}")
    return _check(int(whole) * 10**decimals + int(frac.ljust(decimals, "0") or "0"))


def _format_fixed(value: int, decimals: int) -> str:
    if value < 0:
        raise ValueError("fixed-point values are unsigned")
    whole, frac = divmod(value, 10**decimals)
    return f"{whole}.{frac:0{decimals}d}"


def parse_wad(text: str | int) -> int:
    """'123.45' -> 123450000000000000000."""
    return _parse_fixed(text, 18, "wad")


def parse_ray(text: str | int) -> int:
    return _parse_fixed(text, 27, "ray")


def format_wad(value: int) -> str:
    return _format_fixed(value, 18)


def format_ray(value: int) -> str:
    return _format_fixed(value, 27)
