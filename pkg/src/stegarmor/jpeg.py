"""Baseline grayscale JPEG at the quantized-DCT-coefficient level.

Coefficients are held as a single 2-D integer plane of shape
``(8 * block_rows, 8 * block_cols)``; block ``(bi, bj)`` occupies
``plane[8*bi:8*bi+8, 8*bj:8*bj+8]``.  All transforms are floating-point
orthonormal 8x8 DCTs with round-half-away-from-zero, so every robustness
figure produced by this package is relative to this codec.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CoefficientOverflow,
    DimensionMismatch,
    InvalidQuality,
    MalformedStream,
    UnsupportedFeature,
)

# JPEG Annex K.1 luminance table, row-major.
ANNEX_K_LUMINANCE = (
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
)

# ZIGZAG[i] is the row-major index of the i-th coefficient in zigzag order.
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
])

# Annex K.3 default Huffman tables (luminance): code counts per length 1..16, symbols.
DC_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
DC_VALS = tuple(range(12))
AC_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
AC_VALS = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12,
    0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16,
    0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
    0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79,
    0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98,
    0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
    0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
    0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
)


def _dct_matrix() -> np.ndarray:
    n = np.arange(8)
    c = np.cos((2 * n[None, :] + 1) * n[:, None] * np.pi / 16) * np.sqrt(2 / 8)
    c[0, :] = np.sqrt(1 / 8)
    return c


DCT8 = _dct_matrix()


# --------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class QuantTable:
    """64 quantization steps in row-major 8x8 order."""

    steps: tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in np.asarray(self.steps).ravel())
        if len(steps) != 64:
            raise ValueError(f"quantization table needs 64 steps, got {len(steps)}")
        if any(s < 1 or s > 255 for s in steps):
            raise ValueError("quantization steps must lie in [1, 255]")
        object.__setattr__(self, "steps", steps)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.steps, dtype=np.int64).reshape(8, 8)


@dataclass(frozen=True, eq=False)
class CoeffImage:
    """Quantized DCT coefficients of a grayscale JPEG plus its table."""

    width: int
    height: int
    coeffs: np.ndarray
    table: QuantTable
    quality: int | None = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.int32)
        expected = (8 * _ceil8(self.height), 8 * _ceil8(self.width))
        if coeffs.shape != expected:
            raise DimensionMismatch(
                f"coefficient plane {coeffs.shape} does not match {self.width}x{self.height}"
                f" (expected {expected})"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def block_rows(self) -> int:
        return self.coeffs.shape[0] // 8

    @property
    def block_cols(self) -> int:
        return self.coeffs.shape[1] // 8

    @property
    def n_blocks(self) -> int:
        return self.block_rows * self.block_cols

    def blocks(self) -> np.ndarray:
        """View of the coefficients as ``(block_rows, block_cols, 8, 8)``."""
        return to_blocks(self.coeffs)

    def replace(self, coeffs=None, table=None, quality=None) -> "CoeffImage":
        return CoeffImage(
            self.width,
            self.height,
            self.coeffs if coeffs is None else coeffs,
            self.table if table is None else table,
            self.quality if quality is None else quality,
        )

    def __eq__(self, other):
        if not isinstance(other, CoeffImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.table == other.table
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SpatialImage:
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise DimensionMismatch("grayscale images must be 2-D")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SpatialImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


def _ceil8(n: int) -> int:
    return (n + 7) // 8


def to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).swapaxes(1, 2)


def from_blocks(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.swapaxes(1, 2).reshape(bh * 8, bw * 8)


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


# --------------------------------------------------------------------------
# quantization tables

def ijg_quant_table(qf: int) -> QuantTable:
    """IJG quality scaling of the Annex K luminance table."""
    if isinstance(qf, bool) or int(qf) != qf or not 1 <= qf <= 100:
        raise InvalidQuality(f"quality factor must be an integer in [1, 100], got {qf!r}")
    qf = int(qf)
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    return QuantTable(tuple(min(max((b * scale + 50) // 100, 1), 255) for b in ANNEX_K_LUMINANCE))


def estimate_quality(table: QuantTable) -> int | None:
    """Return the IJG quality factor that reproduces ``table`` exactly, if any."""
    for qf in range(100, 0, -1):
        if ijg_quant_table(qf) == table:
            return qf
    return None


def count_nzac(img: CoeffImage) -> int:
    """Number of nonzero AC coefficients over all blocks."""
    nz = img.coeffs != 0
    return int(nz.sum() - nz[::8, ::8].sum())


# --------------------------------------------------------------------------
# transforms

def block_dct(plane: np.ndarray) -> np.ndarray:
    """Forward orthonormal 8x8 DCT of every block of a float plane."""
    b = to_blocks(np.asarray(plane, dtype=np.float64))
    return from_blocks(np.einsum("ui,abij,vj->abuv", DCT8, b, DCT8, optimize=True))


def block_idct(plane: np.ndarray) -> np.ndarray:
    b = to_blocks(np.asarray(plane, dtype=np.float64))
    return from_blocks(np.einsum("ui,abuv,vj->abij", DCT8, b, DCT8, optimize=True))


def dequantize(img: CoeffImage) -> np.ndarray:
    return img.coeffs * np.tile(img.table.array, (img.block_rows, img.block_cols))


def decompress_float(img: CoeffImage) -> np.ndarray:
    """Full block-grid spatial image before rounding and clamping."""
    return block_idct(dequantize(img)) + 128.0


def decompress_padded(img: CoeffImage) -> np.ndarray:
    """Rounded, clamped pixels over the full block grid (no cropping)."""
    return np.clip(round_half_away(decompress_float(img)), 0, 255).astype(np.uint8)


def decompress(img: CoeffImage) -> SpatialImage:
    return SpatialImage(decompress_padded(img)[: img.height, : img.width])


def real_dct(img: CoeffImage) -> np.ndarray:
    """Real-valued DCT coefficients of the rounded decompressed image."""
    return block_dct(decompress_padded(img).astype(np.float64) - 128.0)


def compress(img: SpatialImage, qf: int) -> CoeffImage:
    table = ijg_quant_table(qf)
    px = np.asarray(img.pixels, dtype=np.float64)
    h, w = px.shape
    px = np.pad(px, ((0, 8 * _ceil8(h) - h), (0, 8 * _ceil8(w) - w)), mode="edge")
    coeffs = block_dct(px - 128.0)
    steps = np.tile(table.array, (coeffs.shape[0] // 8, coeffs.shape[1] // 8))
    return CoeffImage(w, h, round_half_away(coeffs / steps).astype(np.int32), table, int(qf))


# --------------------------------------------------------------------------
# Huffman helpers

def _canonical_codes(bits, vals) -> dict[int, tuple[int, int]]:
    """symbol -> (code, length) for a JPEG BITS/HUFFVAL pair."""
    codes = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            codes[vals[k]] = (code, length)
            code += 1
            k += 1
        code <<= 1
    return codes


class _HuffDecoder:
    __slots__ = ("maxcode", "valptr", "mincode", "vals")

    def __init__(self, bits, vals):
        self.vals = list(vals)
        self.maxcode = [-1] * 18
        self.valptr = [0] * 17
        self.mincode = [0] * 17
        code = 0
        k = 0
        for length in range(1, 17):
            n = bits[length - 1]
            if n:
                self.valptr[length] = k
                self.mincode[length] = code
                code += n
                k += n
                self.maxcode[length] = code - 1
            code <<= 1
            if code > (1 << (length + 1)):
                raise MalformedStream("Huffman table overflows its code space")
        self.maxcode[17] = 1 << 30


def _magnitude_category(v: int) -> int:
    return int(abs(v)).bit_length()


def _encode_value_bits(v: int, size: int) -> int:
    return v if v >= 0 else v + (1 << size) - 1


def _extend(bits: int, size: int) -> int:
    if size == 0:
        return 0
    return bits if bits >= 1 << (size - 1) else bits - (1 << size) + 1


class _BitWriter:
    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.n = 0

    def write(self, value: int, length: int):
        self.acc = (self.acc << length) | value
        self.n += length
        out = self.out
        while self.n >= 8:
            self.n -= 8
            byte = (self.acc >> self.n) & 0xFF
            out.append(byte)
            if byte == 0xFF:
                out.append(0)
        self.acc &= (1 << self.n) - 1

    def flush(self) -> bytes:
        if self.n:
            self.write((1 << (8 - self.n)) - 1, 8 - self.n)
        return bytes(self.out)


class _BitReader:
    """Reads entropy-coded bits, stopping at markers."""

    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos
        self.acc = 0
        self.n = 0
        self.marker = None

    def _fill(self):
        data = self.data
        while self.n <= 24:
            if self.marker is not None or self.pos >= len(data):
                # past a marker the decoder reads zeros; the caller checks bounds
                self.acc <<= 8
                self.n += 8
                continue
            b = data[self.pos]
            if b == 0xFF:
                nxt = data[self.pos + 1] if self.pos + 1 < len(data) else 0xD9
                if nxt == 0x00:
                    self.pos += 2
                else:
                    self.marker = nxt
                    continue
            else:
                self.pos += 1
            self.acc = (self.acc << 8) | b
            self.n += 8

    def bits(self, k: int) -> int:
        if k == 0:
            return 0
        if self.n < k:
            self._fill()
        self.n -= k
        v = (self.acc >> self.n) & ((1 << k) - 1)
        self.acc &= (1 << self.n) - 1
        return v

    def decode(self, table: _HuffDecoder) -> int:
        if self.n < 16:
            self._fill()
        maxcode = table.maxcode
        code = 0
        for length in range(1, 17):
            code = (code << 1) | ((self.acc >> (self.n - length)) & 1)
            if code <= maxcode[length]:
                self.n -= length
                self.acc &= (1 << self.n) - 1
                return table.vals[table.valptr[length] + code - table.mincode[length]]
        raise MalformedStream("invalid Huffman code")

    def reset(self):
        """Drop buffered bits and consume an RSTn marker."""
        self.acc = 0
        self.n = 0
        if self.marker is None:
            # the marker can sit right after the last full byte
            while self.pos + 1 < len(self.data) and self.data[self.pos] != 0xFF:
                self.pos += 1
        if self.pos + 1 < len(self.data) and self.data[self.pos] == 0xFF:
            m = self.data[self.pos + 1]
            if 0xD0 <= m <= 0xD7:
                self.pos += 2
                self.marker = None
                return
        raise MalformedStream("expected restart marker")


# --------------------------------------------------------------------------
# serializer

_DC_CODES = _canonical_codes(DC_BITS, DC_VALS)
_AC_CODES = _canonical_codes(AC_BITS, AC_VALS)


def _segment(marker: int, payload: bytes) -> bytes:
    return struct.pack(">BBH", 0xFF, marker, len(payload) + 2) + payload


def serialize_jpeg(img: CoeffImage) -> bytes:
    """Emit a baseline JFIF stream using the Annex K default Huffman tables."""
    if img.width < 1 or img.height < 1 or img.width > 65535 or img.height > 65535:
        raise DimensionMismatch("image dimensions must lie in [1, 65535]")
    blocks = img.blocks().reshape(-1, 64)[:, ZIGZAG]
    ac = blocks[:, 1:]
    if ac.size and np.abs(ac).max() > 1023:
        raise CoefficientOverflow("AC coefficient magnitude exceeds 1023")
    dc = blocks[:, 0].astype(np.int64)
    diffs = np.diff(dc, prepend=0)
    if diffs.size and np.abs(diffs).max() > 2047:
        raise CoefficientOverflow("DC difference magnitude exceeds 2047")

    w = _BitWriter()
    write = w.write
    dc_codes, ac_codes = _DC_CODES, _AC_CODES
    zrl_code, zrl_len = ac_codes[0xF0]
    eob_code, eob_len = ac_codes[0x00]
    for diff, row in zip(diffs.tolist(), blocks.tolist()):
        size = _magnitude_category(diff)
        code, length = dc_codes[size]
        write(code, length)
        if size:
            write(_encode_value_bits(diff, size), size)
        run = 0
        last = 63
        while last > 0 and row[last] == 0:
            last -= 1
        for k in range(1, last + 1):
            v = row[k]
            if v == 0:
                run += 1
                continue
            while run > 15:
                write(zrl_code, zrl_len)
                run -= 16
            size = _magnitude_category(v)
            code, length = ac_codes[(run << 4) | size]
            write(code, length)
            write(_encode_value_bits(v, size), size)
            run = 0
        if last < 63:
            write(eob_code, eob_len)
    scan = w.flush()

    out = bytearray(b"\xff\xd8")
    out += _segment(0xE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")
    zz = np.array(img.table.steps)[ZIGZAG]
    out += _segment(0xDB, bytes([0x00]) + bytes(zz.tolist()))
    out += _segment(0xC0, struct.pack(">BHHBBBB", 8, img.height, img.width, 1, 1, 0x11, 0))
    out += _segment(0xC4, bytes([0x00]) + bytes(DC_BITS) + bytes(DC_VALS))
    out += _segment(0xC4, bytes([0x10]) + bytes(AC_BITS) + bytes(AC_VALS))
    out += _segment(0xDA, bytes([1, 1, 0x00, 0, 63, 0]))
    out += scan
    out += b"\xff\xd9"
    return bytes(out)


# --------------------------------------------------------------------------
# parser

_UNSUPPORTED_SOF = {
    0xC2: "progressive DCT",
    0xC3: "lossless",
    0xC5: "differential sequential",
    0xC6: "differential progressive",
    0xC7: "differential lossless",
    0xC9: "arithmetic-coded sequential",
    0xCA: "arithmetic-coded progressive",
    0xCB: "arithmetic-coded lossless",
    0xCD: "arithmetic-coded differential sequential",
    0xCE: "arithmetic-coded differential progressive",
    0xCF: "arithmetic-coded differential lossless",
}


def parse_jpeg(data: bytes) -> CoeffImage:
    """Read quantized coefficients and the quantization table from a JFIF stream."""
    data = bytes(data)
    if len(data) < 4 or data[:2] != b"\xff\xd8":
        raise MalformedStream("missing SOI marker")
    pos = 2
    qtables: dict[int, tuple[int, ...]] = {}
    huff: dict[tuple[int, int], _HuffDecoder] = {}
    frame = None
    restart_interval = 0
    coeffs = None
    while True:
        # skip fill bytes
        while pos < len(data) and data[pos] == 0xFF and pos + 1 < len(data) and data[pos + 1] == 0xFF:
            pos += 1
        if pos + 1 >= len(data) or data[pos] != 0xFF:
            raise MalformedStream(f"expected marker at offset {pos}")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9:
            break
        if 0xD0 <= marker <= 0xD7 or marker == 0x01:
            continue
        if pos + 2 > len(data):
            raise MalformedStream("truncated segment header")
        (seglen,) = struct.unpack(">H", data[pos:pos + 2])
        if seglen < 2 or pos + seglen > len(data):
            raise MalformedStream("segment length out of range")
        seg = data[pos + 2:pos + seglen]
        pos += seglen

        if marker == 0xDB:
            _read_dqt(seg, qtables)
        elif marker == 0xC4:
            _read_dht(seg, huff)
        elif marker in _UNSUPPORTED_SOF:
            raise UnsupportedFeature(f"{_UNSUPPORTED_SOF[marker]} JPEG is not supported")
        elif marker in (0xC0, 0xC1):
            frame = _read_sof(seg)
        elif marker == 0xDD:
            if len(seg) != 2:
                raise MalformedStream("bad DRI segment")
            (restart_interval,) = struct.unpack(">H", seg)
        elif marker == 0xDA:
            if frame is None:
                raise MalformedStream("SOS before SOF")
            if coeffs is not None:
                raise UnsupportedFeature("multiple scans are not supported")
            coeffs, pos = _read_scan(data, pos, seg, frame, huff, restart_interval)
        elif marker == 0xCC:
            raise UnsupportedFeature("arithmetic coding is not supported")
        # APPn, COM, DNL and anything else: skip

    if frame is None or coeffs is None:
        raise MalformedStream("stream has no frame or no scan")
    height, width, comp_id, tq = frame
    if tq not in qtables:
        raise MalformedStream(f"quantization table {tq} was never defined")
    try:
        table = QuantTable(qtables[tq])
    except ValueError as exc:
        raise UnsupportedFeature(str(exc)) from exc
    return CoeffImage(width, height, coeffs, table, estimate_quality(table))


def _read_dqt(seg: bytes, qtables: dict):
    i = 0
    while i < len(seg):
        pq, tq = seg[i] >> 4, seg[i] & 15
        i += 1
        if pq == 0:
            raw = list(seg[i:i + 64])
            i += 64
        elif pq == 1:
            raw = list(struct.unpack(">64H", seg[i:i + 128])) if i + 128 <= len(seg) else []
            i += 128
        else:
            raise MalformedStream("bad DQT precision")
        if len(raw) != 64:
            raise MalformedStream("truncated DQT segment")
        natural = [0] * 64
        for k, v in enumerate(raw):
            natural[ZIGZAG[k]] = v
        qtables[tq] = tuple(natural)


def _read_dht(seg: bytes, huff: dict):
    i = 0
    while i < len(seg):
        if i + 17 > len(seg):
            raise MalformedStream("truncated DHT segment")
        tc, th = seg[i] >> 4, seg[i] & 15
        bits = tuple(seg[i + 1:i + 17])
        total = sum(bits)
        vals = tuple(seg[i + 17:i + 17 + total])
        if len(vals) != total or tc > 1:
            raise MalformedStream("bad DHT segment")
        huff[(tc, th)] = _HuffDecoder(bits, vals)
        i += 17 + total


def _read_sof(seg: bytes):
    if len(seg) < 6:
        raise MalformedStream("truncated SOF segment")
    precision, height, width, ncomp = struct.unpack(">BHHB", seg[:6])
    if precision != 8:
        raise UnsupportedFeature(f"{precision}-bit precision is not supported")
    if ncomp != 1:
        raise UnsupportedFeature(f"{ncomp}-component images are not supported (grayscale only)")
    if len(seg) < 9:
        raise MalformedStream("truncated SOF component")
    if height == 0:
        raise UnsupportedFeature("DNL-defined height is not supported")
    if width == 0:
        raise MalformedStream("zero image width")
    comp_id, _sampling, tq = seg[6], seg[7], seg[8]
    return height, width, comp_id, tq


def _read_scan(data, pos, seg, frame, huff, restart_interval):
    height, width, comp_id, _ = frame
    if len(seg) < 6 or seg[0] != 1:
        raise UnsupportedFeature("only single-component scans are supported")
    if seg[1] != comp_id:
        raise MalformedStream("scan references an unknown component")
    td, ta = seg[2] >> 4, seg[2] & 15
    ss, se, ahal = seg[3], seg[4], seg[5]
    if ss != 0 or se != 63 or ahal != 0:
        raise UnsupportedFeature("spectral selection / successive approximation is not supported")
    try:
        dc_table = huff[(0, td)]
        ac_table = huff[(1, ta)]
    except KeyError as exc:
        raise MalformedStream("scan uses an undefined Huffman table") from exc

    bh, bw = _ceil8(height), _ceil8(width)
    n = bh * bw
    out = np.zeros((n, 64), dtype=np.int32)
    reader = _BitReader(data, pos)
    decode, bits = reader.decode, reader.bits
    pred = 0
    zz = ZIGZAG.tolist()
    for b in range(n):
        if restart_interval and b and b % restart_interval == 0:
            reader.reset()
            pred = 0
        row = [0] * 64
        size = decode(dc_table)
        if size > 11:
            raise MalformedStream("DC magnitude category out of range")
        pred += _extend(bits(size), size)
        row[0] = pred
        k = 1
        while k < 64:
            rs = decode(ac_table)
            r, s = rs >> 4, rs & 15
            if s == 0:
                if r == 15:
                    k += 16
                    continue
                break
            k += r
            if k > 63:
                raise MalformedStream("AC run exceeds block length")
            row[zz[k]] = _extend(bits(s), s)
            k += 1
        if k > 64:
            raise MalformedStream("AC run exceeds block length")
        # row is in natural order already (indexed through zz)
        out[b] = row
    if reader.marker is None and reader.pos >= len(data):
        raise MalformedStream("entropy data runs past end of stream")
    # resume marker parsing at the marker that terminated the scan
    end = reader.pos
    while end + 1 < len(data) and not (data[end] == 0xFF and data[end + 1] not in (0x00, 0xFF)
                                       and not 0xD0 <= data[end + 1] <= 0xD7):
        end += 1
    coeffs = from_blocks(out.reshape(bh, bw, 8, 8))
    return coeffs, end
