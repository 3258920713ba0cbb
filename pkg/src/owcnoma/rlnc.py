"""Random linear network coding over GF(2^8).

Field arithmetic uses the conventional reduction polynomial
x^8 + x^4 + x^3 + x + 1 (0x11B) with log/antilog tables built once at import
from the generator 0x03 (0x02 is not primitive for this polynomial). Packets
are byte buffers; addition is XOR, multiplication is table-driven.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FIELD_POLY = 0x11B
GENERATOR = 0x03


def _build_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    exp = np.zeros(510, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        # multiply by the generator 0x03 = x * 2 ^ x, reduced mod 0x11B
        x = (x << 1) ^ x
        if x & 0x100:
            x ^= FIELD_POLY
    exp[255:510] = exp[0:255]
    # full 256x256 product table for fast byte-buffer scaling
    a = np.arange(256)
    la = log[a][:, None] + log[a][None, :]
    mul = exp[la % 255].astype(np.uint8)
    mul[0, :] = 0
    mul[:, 0] = 0
    return exp, log, mul


_EXP, _LOG, _MUL = _build_tables()


def gf_mul(a: int, b: int) -> int:
    """Product in GF(2^8)."""
    if a == 0 or b == 0:
        return 0
    return int(_EXP[_LOG[a] + _LOG[b]])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^8)")
    return int(_EXP[255 - _LOG[a]])


def gf_mul_buffer(c: int, buf: np.ndarray) -> np.ndarray:
    """Scale a uint8 buffer by the field element c."""
    return _MUL[c][buf]


class InsufficientRankError(Exception):
    """Decoding attempted with too few independent combinations."""

    def __init__(self, rank: int, needed: int):
        super().__init__(f"coefficient rank {rank} < generation size {needed}")
        self.rank = rank
        self.needed = needed


@dataclass(frozen=True)
class Generation:
    """A block of equal-length source packets coded together."""

    packets: list[bytes]

    def __post_init__(self):
        if not self.packets:
            raise ValueError("generation must hold at least one packet")
        length = len(self.packets[0])
        if any(len(p) != length for p in self.packets):
            raise ValueError("all packets in a generation must share a length")

    @property
    def size(self) -> int:
        return len(self.packets)

    @property
    def packet_length(self) -> int:
        return len(self.packets[0])


@dataclass(frozen=True)
class CodedPacket:
    coefficients: np.ndarray  # uint8, length = generation size
    payload: np.ndarray  # uint8, length = packet length


def encode(gen: Generation, rng: np.random.Generator) -> CodedPacket:
    """One coded packet: random coefficients, payload = sum c_n * b_n."""
    coeffs = rng.integers(0, 256, size=gen.size, dtype=np.uint8)
    return encode_with_coefficients(gen, coeffs)


def encode_with_coefficients(gen: Generation,
                             coeffs: np.ndarray) -> CodedPacket:
    coeffs = np.asarray(coeffs, dtype=np.uint8)
    if coeffs.size != gen.size:
        raise ValueError("coefficient count must equal generation size")
    payload = np.zeros(gen.packet_length, dtype=np.uint8)
    for c, packet in zip(coeffs, gen.packets):
        if c:
            payload ^= gf_mul_buffer(int(c), np.frombuffer(packet,
                                                           dtype=np.uint8))
    return CodedPacket(coefficients=coeffs, payload=payload)


def _row_reduce(matrix: np.ndarray, pivot_cols: int) -> int:
    """In-place Gauss-Jordan elimination over GF(2^8); returns the rank.

    Pivots are only taken from the first `pivot_cols` columns; any further
    columns ride along (augmented payload bytes).
    """
    m = matrix
    rows = m.shape[0]
    found = 0
    for col in range(pivot_cols):
        pivot = None
        for r in range(found, rows):
            if m[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        if pivot != found:
            m[[found, pivot]] = m[[pivot, found]]
        inv = gf_inv(int(m[found, col]))
        m[found] = gf_mul_buffer(inv, m[found])
        for r in range(rows):
            if r != found and m[r, col]:
                m[r] ^= gf_mul_buffer(int(m[r, col]), m[found])
        found += 1
        if found == rows:
            break
    return found


def rank(coeff_matrix: np.ndarray) -> int:
    """Rank of a coefficient matrix over GF(2^8)."""
    m = np.array(coeff_matrix, dtype=np.uint8, copy=True)
    if m.ndim != 2:
        raise ValueError("coefficient matrix must be 2-D")
    return _row_reduce(m, m.shape[1])


def decode(packets: list[CodedPacket], f: int) -> Generation:
    """Recover the original generation from >= f independent combinations.

    Raises InsufficientRankError (carrying the achieved rank) when the
    received coefficient vectors span less than the full generation.
    """
    if not packets:
        raise InsufficientRankError(0, f)
    length = packets[0].payload.size
    if any(p.payload.size != length for p in packets):
        raise ValueError("inconsistent payload lengths")
    if any(p.coefficients.size != f for p in packets):
        raise ValueError("coefficient vectors must have length f")
    aug = np.zeros((len(packets), f + length), dtype=np.uint8)
    for r, p in enumerate(packets):
        aug[r, :f] = p.coefficients
        aug[r, f:] = p.payload
    got = _row_reduce(aug, pivot_cols=f)
    if got < f:
        raise InsufficientRankError(got, f)
    # full rank: the first f rows now carry the identity block, so their
    # payload halves are the original packets in order
    originals = [aug[i, f:].tobytes() for i in range(f)]
    return Generation(packets=originals)


def full_rank_probability(f: int, field_size: int = 256) -> float:
    """P(random square f x f matrix over GF(q) is invertible)."""
    p = 1.0
    for j in range(1, f + 1):
        p *= 1.0 - float(field_size) ** (-j)
    return p
