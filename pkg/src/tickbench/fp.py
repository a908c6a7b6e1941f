"""Fixed-point value helpers.

Prices, amounts and sizes are carried internally as integer multiples of
1e-8 ("fp8 units"). Integer arithmetic keeps sums exact and makes CSV
round-trips bit-stable; conversion to binary floating point happens only
inside analytics that need logarithms or ratios.
"""

from decimal import Decimal, InvalidOperation

from .errors import InvalidData

FP_DIGITS = 8
FP_ONE = 10**FP_DIGITS


def fp_from_decimal(value: Decimal) -> int:
    """Convert an exact decimal to fp8 units; reject > 8 fractional digits."""
    scaled = value.scaleb(FP_DIGITS)
    units = int(scaled)
    if scaled != units:
        raise InvalidData(f"value {value} has more than {FP_DIGITS} fractional digits")
    return units


def fp_from_str(text: str) -> int:
    """Parse a plain decimal string (no exponent) to fp8 units."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise InvalidData(f"not a decimal value: {text!r}") from None
    if "e" in text or "E" in text:
        raise InvalidData(f"exponent notation not allowed: {text!r}")
    return fp_from_decimal(value)


def fp_to_decimal(units: int) -> Decimal:
    return Decimal(units).scaleb(-FP_DIGITS)


def fp_to_str(units: int) -> str:
    """Canonical minimal decimal string: no exponent, no trailing zeros."""
    sign = "-" if units < 0 else ""
    units = abs(units)
    whole, frac = divmod(units, FP_ONE)
    if frac == 0:
        return f"{sign}{whole}"
    digits = f"{frac:08d}".rstrip("0")
    return f"{sign}{whole}.{digits}"


def decimal_to_canonical_str(value: Decimal) -> str:
    """Minimal string form used for digests; exact for fp8-representable values."""
    return fp_to_str(fp_from_decimal(value))
