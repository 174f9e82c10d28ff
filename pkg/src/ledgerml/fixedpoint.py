"""Fixed-point coin arithmetic: 128-bit signed integers scaled by 10^18.

All amounts on the ledger are raw ints in this representation. Arithmetic
is exact; anything that would leave the 128-bit range is an error, never
a wraparound.
"""

SCALE = 10**18
FRAC_DIGITS = 18
DEC_MIN = -(1 << 127)
DEC_MAX = (1 << 127) - 1


class FixedPointError(ValueError):
    pass


class RawDec(int):
    """An int already in raw fixed-point scale. Used as a json
    parse_float hook target so exact decimal literals stay exact and
    remain distinguishable from whole-coin integer literals."""


def parse_dec_raw(text: str) -> "RawDec":
    return RawDec(parse_dec(text))


def check_range(raw: int) -> int:
    if raw < DEC_MIN or raw > DEC_MAX:
        raise FixedPointError("fixed-point overflow")
    return raw


def from_int(units: int) -> int:
    return check_range(units * SCALE)


def parse_dec(text: str) -> int:
    """Parse a decimal string ("10", "0.5", "-1.000000000000000001")
    exactly. More than 18 fractional digits is an error unless the excess
    digits are zero.
    """
    s = text.strip()
    if not s:
        raise FixedPointError("empty amount")
    sign = 1
    if s[0] in "+-":
        if s[0] == "-":
            sign = -1
        s = s[1:]
    if not s or s in (".",):
        raise FixedPointError(f"bad amount {text!r}")
    if "." in s:
        whole, frac = s.split(".", 1)
    else:
        whole, frac = s, ""
    if whole == "":
        whole = "0"
    if not whole.isdigit() or (frac and not frac.isdigit()):
        raise FixedPointError(f"bad amount {text!r}")
    if len(frac) > FRAC_DIGITS:
        if frac[FRAC_DIGITS:].strip("0"):
            raise FixedPointError(f"amount {text!r} exceeds 18 decimal places")
        frac = frac[:FRAC_DIGITS]
    frac = frac.ljust(FRAC_DIGITS, "0")
    raw = sign * (int(whole) * SCALE + int(frac))
    return check_range(raw)


def format_dec(raw: int) -> str:
    """Canonical rendering: trailing fraction zeros trimmed, but always
    at least one fractional digit ("5.0", "0.25", "-0.000000000000000001").
    """
    sign = "-" if raw < 0 else ""
    mag = abs(raw)
    whole, frac = divmod(mag, SCALE)
    digits = str(frac).rjust(FRAC_DIGITS, "0").rstrip("0") or "0"
    return f"{sign}{whole}.{digits}"


def add(a: int, b: int) -> int:
    return check_range(a + b)


def sub(a: int, b: int) -> int:
    return check_range(a - b)


def mul_int(a: int, n: int) -> int:
    return check_range(a * n)


def div_int(a: int, n: int) -> int:
    """Scalar division, truncating toward zero."""
    if n == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    q = abs(a) // abs(n)
    if (a < 0) != (n < 0):
        q = -q
    return check_range(q)
