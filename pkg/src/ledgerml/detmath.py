"""Self-contained binary64 math kernels with a fully pinned evaluation
order, so every replica computes bit-identical results regardless of
platform libm.

exp: range-reduce x = k*ln2 + r with |r| <= ln2/2 (hi/lo split keeps the
reduction exact), degree-13 Taylor polynomial evaluated by Horner, scale
by 2^k with single-rounding ldexp semantics.

ln: split x into mantissa m in [sqrt(1/2), sqrt(2)) and exponent e,
evaluate 13 terms of the atanh series of s = (m-1)/(m+1) with the leading
term carried on the exact f = m-1 (2s = f - s*f) and the 12 correction
terms summed by Horner, recombine with the same hi/lo ln2 split.

Producing NaN or +/-Inf anywhere is a fault, never a value.
"""

import math

__all__ = [
    "NumericFaultError",
    "det_exp",
    "det_ln",
    "det_logit",
    "det_softmax",
    "det_argmax",
    "det_relu",
    "double_bits_hex",
    "double_from_hex",
]

import struct


class NumericFaultError(ArithmeticError):
    def __init__(self, detail: str = ""):
        super().__init__(detail or "numeric fault")
        self.detail = detail


# ln2 split: the hi part has 20 trailing zero bits in its significand, so
# k*LN2_HI is exact for every |k| < 2^11 reachable here.
LN2_HI = float.fromhex("0x1.62e42fee00000p-1")
LN2_LO = float.fromhex("0x1.a39ef35793c76p-33")
INV_LN2 = float.fromhex("0x1.71547652b82fep+0")
SQRT_HALF = float.fromhex("0x1.6a09e667f3bcdp-1")

# 1/n! for n = 0..13; exact-integer factorials, one correctly rounded
# division each.
_EXP_COEFFS = [1.0 / math.factorial(n) for n in range(14)]
# 2/(2j+1) for j = 1..12: atanh-series correction coefficients (the
# leading term is carried exactly, see det_ln).
_LN_COEFFS = [2.0 / (2 * j + 1) for j in range(1, 13)]

ONE_MINUS_ULP = float.fromhex("0x1.fffffffffffffp-1")  # largest double < 1
TINY = 5e-324  # smallest positive subnormal


def _require_finite(x: float, what: str) -> float:
    if x != x or math.isinf(x):
        raise NumericFaultError(what)
    return x


def det_exp(x: float) -> float:
    _require_finite(x, "exp of non-finite")
    if x > 710.0:
        raise NumericFaultError("exp overflow")
    if x < -746.0:
        return 0.0
    k = int(math.floor(x * INV_LN2 + 0.5))
    kf = float(k)
    hi = x - kf * LN2_HI  # exact (Sterbenz: x and k*ln2 within a factor 2)
    r = hi - kf * LN2_LO
    p = _EXP_COEFFS[13]
    for n in range(12, -1, -1):
        p = p * r + _EXP_COEFFS[n]
    try:
        return math.ldexp(p, k)
    except OverflowError:
        raise NumericFaultError("exp overflow") from None


def det_ln(x: float) -> float:
    if x != x or x <= 0.0 or math.isinf(x):
        raise NumericFaultError("ln domain")
    m, e = math.frexp(x)  # m in [0.5, 1)
    if m < SQRT_HALF:
        m = m * 2.0  # exact
        e = e - 1
    # ln(m) = 2*atanh(s) with s = f/(2+f); the leading term rides on the
    # exact f = m-1 (2s = f - s*f), only the small correction R rounds
    f = m - 1.0  # exact by Sterbenz
    s = f / (2.0 + f)
    z = s * s
    r = _LN_COEFFS[11]
    for j in range(10, -1, -1):
        r = r * z + _LN_COEFFS[j]
    r = r * z
    lnm = f - s * (f - r)
    ef = float(e)
    return ef * LN2_HI + (lnm + ef * LN2_LO)


def det_logit(x: float) -> float:
    """1/(1+exp(-x)), clamped into the open interval (0, 1)."""
    e = det_exp(-x)
    p = 1.0 / (1.0 + e)
    if p >= 1.0:
        return ONE_MINUS_ULP
    if p <= 0.0:
        return TINY
    return p


def det_softmax(v: list[float]) -> list[float]:
    if not v:
        raise NumericFaultError("softmax of empty vector")
    mx = v[0]
    for x in v[1:]:
        _require_finite(x, "softmax of non-finite")
        if x > mx:  # strict: ties keep the first occurrence
            mx = x
    _require_finite(mx, "softmax of non-finite")
    exps = [det_exp(x - mx) for x in v]
    s = 0.0
    for e in exps:  # left-to-right, no reassociation
        s = s + e
    return [e / s for e in exps]


def det_argmax(v: list[float]) -> int:
    if not v:
        raise NumericFaultError("argmax of empty vector")
    best = 0
    for i, x in enumerate(v):
        if x != x:
            raise NumericFaultError("argmax over NaN")
        if x > v[best]:  # ties resolve to the lowest index
            best = i
    return best


def det_relu(x: float) -> float:
    return x if x > 0.0 else 0.0


def double_bits_hex(x: float) -> str:
    return struct.pack(">d", x).hex()


def double_from_hex(h: str) -> float:
    return struct.unpack(">d", bytes.fromhex(h))[0]
