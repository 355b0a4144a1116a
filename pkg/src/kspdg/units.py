"""Fixed-point weight helpers.

Weights are held as integers in milli-units so that every distance
comparison in the library is exact.
"""

from decimal import Decimal, InvalidOperation

SCALE = 1000
INF = float("inf")


def to_fixed(value) -> int:
    """Convert an int, float or decimal string to milli-units (rounded half-even)."""
    if isinstance(value, int):
        return value * SCALE
    try:
        d = Decimal(str(value))
    except InvalidOperation as exc:
        raise ValueError(f"not a number: {value!r}") from exc
    return int((d * SCALE).to_integral_value())


def fmt_fixed(value: int) -> str:
    sign = "-" if value < 0 else ""
    q, r = divmod(abs(int(value)), SCALE)
    return f"{sign}{q}.{r:03d}"
