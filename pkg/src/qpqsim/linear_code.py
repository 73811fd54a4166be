"""Small systematic binary linear block codes.

Words are indexed with position 0 first; when a word is packed into an int
(for table lookups) position 0 is the most significant bit, so the packed
value of ``"0001011"`` is ``int("0001011", 2)``. Message index ``v`` is the
message whose bits read ``format(v, "0{m}b")``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import gf2


class Erasure(enum.Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"
    INCONSISTENT = "inconsistent"


class ErasureResult(NamedTuple):
    status: Erasure
    codeword: np.ndarray | None


def _weights(n: int) -> np.ndarray:
    return (1 << np.arange(n - 1, -1, -1)).astype(np.int64)


def bits_to_int(words: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into ints, position 0 most significant."""
    words = np.asarray(words, dtype=np.int64)
    return words @ _weights(words.shape[-1])


def int_to_bits(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return ((x[..., None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """[n, m, d] code with generator ``[I | A]`` and parity check ``[A^T | I]``."""

    gen: np.ndarray
    n: int = field(init=False)
    m: int = field(init=False)
    d: int = field(init=False)
    check: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        gen = gf2.as_matrix(self.gen).copy()
        m, n = gen.shape
        if m > 16 or n > 24:
            raise ValueError("code too large for exhaustive tables")
        if not np.array_equal(gen[:, :m], np.eye(m, dtype=np.uint8)):
            raise ValueError("generator must be in standard form [I | A]")
        a = gen[:, m:]
        check = np.hstack([a.T, np.eye(n - m, dtype=np.uint8)])
        gen.flags.writeable = False
        check.flags.writeable = False
        object.__setattr__(self, "gen", gen)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "check", check)
        weights = self.codewords.sum(axis=1)
        object.__setattr__(self, "d", int(weights[1:].min()) if len(weights) > 1 else n)

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "CodeSpec":
        return cls(gf2.as_matrix(list(rows)))

    @cached_property
    def messages(self) -> np.ndarray:
        return int_to_bits(np.arange(1 << self.m), self.m)

    @cached_property
    def codewords(self) -> np.ndarray:
        """All 2^m codewords, row v encoding message index v."""
        return gf2.matmul(self.messages, self.gen)

    @cached_property
    def codeword_ints(self) -> np.ndarray:
        return bits_to_int(self.codewords)

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    def syndrome(self, word) -> int:
        return int(bits_to_int(gf2.matmul(self.check, gf2.as_bits(word))))

    @cached_property
    def _coset_leaders(self) -> dict[int, np.ndarray]:
        # error patterns of weight <= t have distinct syndromes when d >= 2t+1
        table = {0: np.zeros(self.n, dtype=np.uint8)}
        for w in range(1, self.t + 1):
            for pos in combinations(range(self.n), w):
                err = np.zeros(self.n, dtype=np.uint8)
                err[list(pos)] = 1
                table.setdefault(self.syndrome(err), err)
        return table

    @cached_property
    def nearest_table(self) -> tuple[np.ndarray, np.ndarray]:
        """For every packed word: (nearest codeword index, distance).

        Exhaustive; ties go to the smallest message index.
        """
        words = np.arange(1 << self.n, dtype=np.int64)
        diff = words[:, None] ^ self.codeword_ints[None, :]
        dist = _popcount(diff)
        idx = dist.argmin(axis=1)
        return idx, dist[words, idx]

    @cached_property
    def erasure_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Brute-force erasure tables indexed by ``[mask, word & mask]``.

        Returns (number of consistent codewords, first consistent codeword
        index, 0 if none).
        """
        size = 1 << self.n
        count = np.zeros((size, size), dtype=np.int32)
        first = np.zeros((size, size), dtype=np.int32)
        words = np.arange(size, dtype=np.int64)
        for mask in range(size):
            hit = (words[:, None] & mask) == (self.codeword_ints[None, :] & mask)
            count[mask] = hit.sum(axis=1)
            first[mask] = np.where(hit.any(axis=1), hit.argmax(axis=1), 0)
        return count, first


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


HAMMING_7_4 = CodeSpec.from_rows(["1000101", "0100111", "0010110", "0001011"])


def load_code(path: str | Path) -> CodeSpec:
    """Generator rows as '0'/'1' strings, one per line; '#' starts a comment."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    return CodeSpec.from_rows(rows)


def encode(spec: CodeSpec, msg) -> np.ndarray:
    msg = gf2.as_bits(msg)
    if msg.size != spec.m:
        raise ValueError(f"message length {msg.size} != {spec.m}")
    return gf2.matmul(msg, spec.gen)


def decode_correct1(spec: CodeSpec, word) -> tuple[np.ndarray, int]:
    """Correct up to t errors by syndrome lookup, else fall back to nearest codeword."""
    word = gf2.as_bits(word)
    if word.size != spec.n:
        raise ValueError(f"word length {word.size} != {spec.n}")
    err = spec._coset_leaders.get(spec.syndrome(word))
    if err is not None:
        return word ^ err, int(err.sum())
    dist = (spec.codewords != word).sum(axis=1)
    i = int(dist.argmin())
    return spec.codewords[i].copy(), int(dist[i])


def erasure_decode(spec: CodeSpec, known: Iterable[tuple[int, int]]) -> ErasureResult:
    """Find the codeword(s) agreeing with the given (position, bit) pairs."""
    known = list(known)
    pos = [int(i) for i, _ in known]
    if len(set(pos)) != len(pos) or any(not 0 <= i < spec.n for i in pos):
        raise ValueError("positions must be distinct and inside the codeword")
    vals = np.array([b for _, b in known], dtype=np.uint8)
    a = spec.gen[:, pos].T.reshape(len(pos), spec.m)
    try:
        msg = gf2.solve(a, vals)
    except gf2.NoSolution:
        return ErasureResult(Erasure.INCONSISTENT, None)
    except gf2.Ambiguous:
        return ErasureResult(Erasure.AMBIGUOUS, None)
    return ErasureResult(Erasure.UNIQUE, encode(spec, msg))


def codeword_parity(spec: CodeSpec, cw) -> int:
    return gf2.parity(cw)


def message_parity(spec: CodeSpec, cw) -> int:
    return gf2.parity(np.asarray(cw)[: spec.m])
