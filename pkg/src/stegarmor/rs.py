"""Reed-Solomon RS(31, 31-2t) over GF(2^5), primitive polynomial x^5 + x^2 + 1.

Framing: message bits are packed MSB-first into 5-bit symbols (the last
symbol zero-padded), split into blocks of k = 31 - 2t data symbols, and
each block is encoded systematically (data first, then 2t parity symbols).
A short final block is a shortened code: only its real data symbols and
its parity are emitted.  Generator roots are alpha^1 .. alpha^2t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecodeFailure, FramingError, InvalidCapability

N = 31
SYMBOL_BITS = 5
PRIMITIVE_POLY = 0b100101
MAX_T = 12

EXP = [0] * (2 * N)
LOG = [0] * (N + 1)
_x = 1
for _i in range(N):
    EXP[_i] = EXP[_i + N] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0b100000:
        _x ^= PRIMITIVE_POLY
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(32)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % N]


def gf_pow(a: int, e: int) -> int:
    if a == 0:
        return 0 if e else 1
    return EXP[(LOG[a] * e) % N]


@dataclass(frozen=True)
class RsParams:
    t: int

    def __post_init__(self):
        check_capability(self.t)

    @property
    def n(self) -> int:
        return N

    @property
    def k(self) -> int:
        return N - 2 * self.t


def check_capability(t) -> int:
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)) or not 1 <= t <= MAX_T:
        raise InvalidCapability(f"RS error-correction capability must be in 1..{MAX_T}, got {t!r}")
    return int(t)


_GENERATORS: dict[int, list[int]] = {}


def generator_poly(t: int) -> list[int]:
    """Coefficients of prod (x - alpha^i), i = 1..2t, highest degree first."""
    if t not in _GENERATORS:
        g = [1]
        for i in range(1, 2 * t + 1):
            root = EXP[i]
            nxt = g + [0]
            for j, c in enumerate(g):
                nxt[j + 1] ^= gf_mul(c, root)
            g = nxt
        _GENERATORS[t] = g
    return _GENERATORS[t]


def _layout(message_len: int, t: int) -> tuple[int, int, int]:
    """(symbols, full blocks, data symbols in the short final block)."""
    k = N - 2 * t
    symbols = -(-message_len // SYMBOL_BITS)
    return symbols, symbols // k, symbols % k


def encoded_length(message_len: int, t: int) -> int:
    """Encoded bit count for a message of ``message_len`` bits."""
    t = check_capability(t)
    _, full, rem = _layout(message_len, t)
    return SYMBOL_BITS * (full * N + (rem + 2 * t if rem else 0))


def bits_to_symbols(bits) -> list[int]:
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % SYMBOL_BITS
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    weights = 1 << np.arange(SYMBOL_BITS - 1, -1, -1)
    return (bits.reshape(-1, SYMBOL_BITS) @ weights).astype(int).tolist()


def symbols_to_bits(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.int64)
    shifts = np.arange(SYMBOL_BITS - 1, -1, -1)
    return ((s[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def encode_block(data: list[int], t: int) -> list[int]:
    """Systematic codeword: ``data`` followed by 2t parity symbols."""
    g = generator_poly(t)
    nparity = 2 * t
    rem = [0] * nparity
    for d in data:
        fb = d ^ rem[0]
        rem = rem[1:] + [0]
        if fb:
            lf = LOG[fb]
            for j in range(nparity):
                gj = g[j + 1]
                if gj:
                    rem[j] ^= EXP[lf + LOG[gj]]
    return list(data) + rem


def syndromes(code: list[int], t: int) -> list[int]:
    out = []
    for j in range(1, 2 * t + 1):
        s = 0
        for c in code:
            # Horner: s = s * alpha^j + c
            s = (EXP[LOG[s] + j] if s else 0) ^ c
        out.append(s)
    return out


def _berlekamp_massey(synd: list[int]) -> list[int]:
    """Error locator polynomial, lowest degree first."""
    C = [1]
    B = [1]
    L = 0
    m = 1
    b = 1
    for n in range(len(synd)):
        d = synd[n]
        for i in range(1, L + 1):
            if i < len(C) and C[i] and synd[n - i]:
                d ^= gf_mul(C[i], synd[n - i])
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, b)
        T = C[:]
        shifted = [0] * m + [gf_mul(coef, x) for x in B]
        if len(shifted) > len(C):
            C = C + [0] * (len(shifted) - len(C))
        for i, x in enumerate(shifted):
            C[i] ^= x
        if 2 * L <= n:
            L = n + 1 - L
            B = T
            b = d
            m = 1
        else:
            m += 1
    while len(C) > 1 and C[-1] == 0:
        C.pop()
    return C


def _poly_eval_low(p: list[int], x: int) -> int:
    y = 0
    for c in reversed(p):
        y = gf_mul(y, x) ^ c
    return y


def decode_block(code: list[int], t: int) -> tuple[list[int], bool]:
    """Correct up to t symbol errors in place of a (possibly shortened) codeword.

    Returns ``(codeword, ok)``; when ``ok`` is False the input is returned
    unchanged.
    """
    length = len(code)
    synd = syndromes(code, t)
    if not any(synd):
        return list(code), True
    locator = _berlekamp_massey(synd)
    nerr = len(locator) - 1
    if nerr > t:
        return list(code), False
    # Chien search over real positions only; roots in the virtual prefix mean failure
    positions = []
    for i in range(length):
        power = length - 1 - i
        if _poly_eval_low(locator, EXP[(N - power) % N]) == 0:
            positions.append(i)
    if len(positions) != nerr:
        return list(code), False
    omega = [0] * (2 * t)
    for i, s in enumerate(synd):
        for j, lc in enumerate(locator):
            if i + j < 2 * t and s and lc:
                omega[i + j] ^= gf_mul(s, lc)
    deriv = [locator[i] if i % 2 == 1 else 0 for i in range(1, len(locator))]
    fixed = list(code)
    for i in positions:
        x_inv = EXP[(N - (length - 1 - i)) % N]
        denom = _poly_eval_low(deriv, x_inv)
        if denom == 0:
            return list(code), False
        fixed[i] ^= gf_div(_poly_eval_low(omega, x_inv), denom)
    if any(syndromes(fixed, t)):
        return list(code), False
    return fixed, True


def rs_encode(message_bits, t: int) -> np.ndarray:
    t = check_capability(t)
    message_bits = np.asarray(message_bits, dtype=np.uint8)
    if message_bits.size == 0:
        raise ValueError("cannot encode an empty message")
    symbols = bits_to_symbols(message_bits)
    k = N - 2 * t
    out = []
    for start in range(0, len(symbols), k):
        out.extend(encode_block(symbols[start:start + k], t))
    return symbols_to_bits(out)


def rs_decode(code_bits, t: int, message_len: int) -> np.ndarray:
    """Decode and return exactly ``message_len`` bits.

    Raises DecodeFailure (carrying best-effort bits) when a block cannot be
    corrected.
    """
    t = check_capability(t)
    code_bits = np.asarray(code_bits, dtype=np.uint8)
    if message_len <= 0:
        raise FramingError("message length must be positive")
    expected = encoded_length(message_len, t)
    if code_bits.size != expected:
        raise FramingError(
            f"{code_bits.size} code bits do not match {expected} expected for a "
            f"{message_len}-bit message at t={t}"
        )
    symbols = bits_to_symbols(code_bits)
    k = N - 2 * t
    data: list[int] = []
    failed = []
    start = 0
    block = 0
    while start < len(symbols):
        length = min(N, len(symbols) - start)
        word, ok = decode_block(symbols[start:start + length], t)
        if not ok:
            failed.append(block)
        data.extend(word[: length - 2 * t])
        start += length
        block += 1
    bits = symbols_to_bits(data)[:message_len]
    if failed:
        raise DecodeFailure(
            f"{len(failed)} of {block} RS blocks are uncorrectable", bits=bits, failed_blocks=failed
        )
    return bits
