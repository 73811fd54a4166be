"""Bit vectors and dense matrices over GF(2).

Vectors are 1-D ``uint8`` numpy arrays holding 0/1, matrices are 2-D ones.
Elimination works on rows packed into Python ints (bit ``i`` = column ``i``),
which keeps it exact and reasonably fast for the few-hundred-column sizes
used here.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Iterable, Sequence

import numpy as np


class NotInSpan(ValueError):
    """Target vector lies outside the row space of the basis."""


class NoSolution(ValueError):
    """Linear system is inconsistent."""


class Ambiguous(ValueError):
    """Linear system has more than one solution."""


def as_bits(x) -> np.ndarray:
    """Coerce a '0'/'1' string, sequence or array into a uint8 bit vector."""
    if isinstance(x, str):
        x = x.replace(" ", "").replace(",", "")
        if set(x) - {"0", "1"}:
            raise ValueError(f"not a bit string: {x!r}")
        return np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(x, dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def as_matrix(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        a = rows.astype(np.uint8, copy=False)
        if a.ndim != 2:
            raise ValueError("matrix must be 2-D")
        return a
    rows = [as_bits(r) for r in rows]
    if not rows:
        return np.zeros((0, 0), dtype=np.uint8)
    return np.vstack(rows)


def to_str(v) -> str:
    return "".join("1" if b else "0" for b in np.asarray(v).ravel())


def parity(v) -> int:
    return int(np.count_nonzero(v) & 1)


def pack(v) -> int:
    """Pack a bit vector into an int, bit i of the int holding entry i."""
    v = np.asarray(v, dtype=np.uint8)
    if v.size == 0:
        return 0
    return int.from_bytes(np.packbits(v, bitorder="little").tobytes(), "little")


def unpack(x: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(x.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].copy()


class XorBasis:
    """Incremental row-echelon basis over GF(2).

    Each inserted vector carries an integer ``tag`` that is XOR-combined
    alongside it, so reducing a vector also tells you which combination of
    inserted vectors (or which combination of attached values) it matched.
    """

    def __init__(self) -> None:
        self._pivots: dict[int, tuple[int, int]] = {}

    def __len__(self) -> int:
        return len(self._pivots)

    def reduce(self, vec: int, tag: int = 0) -> tuple[int, int]:
        piv = self._pivots
        while vec:
            low = vec & -vec
            hit = piv.get(low)
            if hit is None:
                break
            vec ^= hit[0]
            tag ^= hit[1]
        return vec, tag

    def _full_reduce(self, vec: int, tag: int) -> tuple[int, int]:
        # reduce past non-pivot bits as well, so the residue is canonical
        piv = self._pivots
        done = 0
        while True:
            rest = vec & ~done
            if not rest:
                return vec, tag
            low = rest & -rest
            done |= (low << 1) - 1
            hit = piv.get(low)
            if hit is not None:
                vec ^= hit[0]
                tag ^= hit[1]

    def insert(self, vec: int, tag: int = 0) -> bool:
        """Add ``vec``; returns False when it was already in the span."""
        vec, tag = self.reduce(vec, tag)
        if not vec:
            return False
        self._pivots[vec & -vec] = (vec, tag)
        return True

    def contains(self, vec: int) -> bool:
        return self._full_reduce(vec, 0)[0] == 0

    def express(self, vec: int) -> int | None:
        """Tag combination reproducing ``vec``, or None when outside the span."""
        vec, tag = self._full_reduce(vec, 0)
        return tag if vec == 0 else None


def rank(a) -> int:
    a = as_matrix(a)
    basis = XorBasis()
    return sum(basis.insert(pack(row)) for row in a)


def max_independent_rows(a, preferred: Iterable[int] = ()) -> list[int]:
    """Greedy maximal independent row set: ``preferred`` first, then ascending."""
    a = as_matrix(a)
    order: list[int] = []
    seen = set()
    for i in itertools.chain(preferred, range(a.shape[0])):
        i = int(i)
        if not 0 <= i < a.shape[0]:
            raise IndexError(f"row index {i} out of range")
        if i not in seen:
            seen.add(i)
            order.append(i)
    basis = XorBasis()
    return [i for i in order if basis.insert(pack(a[i]))]


def express_in_basis(target, basis_rows) -> np.ndarray:
    """Coefficients lam with XOR_t lam[t] * basis_rows[t] == target."""
    b = as_matrix(basis_rows)
    target = as_bits(target)
    if b.shape[0] and target.size != b.shape[1]:
        raise ValueError("target length does not match basis columns")
    xb = XorBasis()
    for t, row in enumerate(b):
        if not xb.insert(pack(row), 1 << t):
            raise ValueError("basis rows are linearly dependent")
    tag = xb.express(pack(target))
    if tag is None:
        raise NotInSpan("target is outside the row space")
    return unpack(tag, b.shape[0])


def solve(a, b) -> np.ndarray:
    """Unique x with a @ x == b over GF(2).

    Raises NoSolution for an inconsistent system and Ambiguous when the
    solution set has more than one element.
    """
    a = as_matrix(a)
    b = as_bits(b)
    rows, cols = a.shape
    if b.size != rows:
        raise ValueError("len(b) must equal the number of rows")
    colmask = (1 << cols) - 1
    rhs = 1 << cols
    piv: dict[int, int] = {}
    for row, bit in zip(a, b):
        r = pack(row) | (rhs if bit else 0)
        while r & colmask:
            low = r & -r
            if low not in piv:
                break
            r ^= piv[low]
        if r & colmask:
            piv[r & -r] = r
        elif r:
            raise NoSolution("inconsistent system")
    if len(piv) < cols:
        raise Ambiguous(f"{cols - len(piv)} free variable(s)")
    x = 0
    for low in sorted(piv, reverse=True):
        r = piv[low]
        val = (r >> cols) & 1
        val ^= bin(r & colmask & ~low & x).count("1") & 1
        if val:
            x |= low
    return unpack(x, cols)


def nth_combination(m: int, k: int, n: int) -> np.ndarray:
    """The n-th k-subset of range(m) in lexicographic order, as an incidence vector."""
    total = comb(m, k)
    if not 0 <= n < total:
        raise IndexError(f"combination index {n} not in [0, {total})")
    out = np.zeros(m, dtype=np.uint8)
    c = 0
    for slot in range(k):
        while True:
            below = comb(m - c - 1, k - slot - 1)
            if n < below:
                break
            n -= below
            c += 1
        out[c] = 1
        c += 1
    return out


def first_combinations(m: int, k: int, n: int) -> np.ndarray:
    """First n lexicographic k-of-m incidence vectors as an n x m matrix."""
    if n > comb(m, k):
        raise ValueError(f"n={n} exceeds C({m},{k})={comb(m, k)}")
    out = np.zeros((n, m), dtype=np.uint8)
    for t, pos in enumerate(itertools.islice(itertools.combinations(range(m), k), n)):
        out[t, list(pos)] = 1
    return out


def matmul(a, b) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) & 1).astype(np.uint8)


__all__: Sequence[str] = [
    "Ambiguous",
    "NoSolution",
    "NotInSpan",
    "XorBasis",
    "as_bits",
    "as_matrix",
    "express_in_basis",
    "first_combinations",
    "matmul",
    "max_independent_rows",
    "nth_combination",
    "pack",
    "parity",
    "rank",
    "solve",
    "to_str",
    "unpack",
]
