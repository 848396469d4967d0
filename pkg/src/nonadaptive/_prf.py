"""Keyed pseudorandom streams used for neighbor maps, weights and seed derivation.

Each stream is SHAKE-128 over ``domain || seed || label``; the output is read as
little-endian 64-bit words. Reduction into ``[0, m)`` is by rejection sampling,
so every value is exactly uniform given a uniform word stream.
"""

from __future__ import annotations

import hashlib
import struct

SEED_BYTES = 32
_WORD = 8
_TWO64 = 1 << 64


def _limit(m: int) -> int:
    # largest multiple of m that fits in 64 bits
    return _TWO64 - (_TWO64 % m)


class KeyedStream:
    """Draws ``count`` uniform residues mod ``modulus`` for an integer label.

    The absorbed ``domain || seed`` prefix is hashed once and copied per call.
    """

    __slots__ = ("_base", "modulus", "_limit")

    def __init__(self, domain: bytes, seed: bytes, modulus: int):
        if modulus < 1 or modulus > _TWO64:
            raise ValueError(f"modulus must lie in [1, 2^64], got {modulus}")
        self._base = hashlib.shake_128(domain + seed)
        self.modulus = modulus
        self._limit = _limit(modulus)

    def draw(self, label: int, count: int) -> list[int]:
        h = self._base.copy()
        h.update(label.to_bytes(8, "little"))
        m = self.modulus
        words = struct.unpack(f"<{count}Q", h.digest(count * _WORD))
        if max(words) < self._limit:
            return [w % m for w in words]
        # SHAKE output is prefix-consistent: a longer read extends the stream
        need = count
        while True:
            need += count
            accepted = [w for w in struct.unpack(f"<{need}Q", h.digest(need * _WORD)) if w < self._limit]
            if len(accepted) >= count:
                return [w % m for w in accepted[:count]]


def derive_seed(master: bytes, label: str, counter: int = 0) -> bytes:
    """Counter-mode expansion of a master seed into a labelled child seed."""
    h = hashlib.shake_128(b"nonadaptive/derive\x00" + master)
    h.update(label.encode() + b"\x00" + counter.to_bytes(8, "little"))
    return h.digest(SEED_BYTES)
