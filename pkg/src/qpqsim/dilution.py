"""Dilution of a raw oblivious key into a final oblivious key.

Three methods: kN-N (strided parity), N-N (sliding-window parity, which
leaks adjacent-pair parities to Alice) and rM-N (sub-key extension over
k-subsets followed by shift-addition).
"""

from __future__ import annotations

from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from .gf2 import first_combinations, matmul
from .keys import TriStateKey


class ParityRelation(NamedTuple):
    """Alice learns ``fok[i] ^ fok[j] == parity``."""

    i: int
    j: int
    parity: int


def dilute_kn_n(rok: TriStateKey, n: int, k: int) -> TriStateKey:
    if len(rok) != k * n:
        raise ValueError(f"ROK length {len(rok)} != k*n = {k * n}")
    bob = np.bitwise_xor.reduce(rok.bob.reshape(k, n), axis=0)
    known = np.bitwise_and.reduce(rok.known.reshape(k, n), axis=0)
    value = np.bitwise_xor.reduce(rok.value.reshape(k, n), axis=0)
    return TriStateKey(bob, known, value)


def _window(x: np.ndarray, k: int, op) -> np.ndarray:
    out = x.copy()
    for j in range(1, k):
        out = op(out, np.roll(x, -j))
    return out


def dilute_n_n(rok: TriStateKey, k: int) -> tuple[TriStateKey, list[ParityRelation]]:
    """Window parity ``fok[i] = rok[i] ^ ... ^ rok[i+k-1]`` (cyclic).

    Also returns every relation ``fok[i] ^ fok[i+1] = rok[i] ^ rok[i+k]``
    that Alice can compute from bits she knows.
    """
    n = len(rok)
    if k > n:
        raise ValueError(f"k={k} exceeds key length {n}")
    bob = _window(rok.bob, k, np.bitwise_xor)
    known = _window(rok.known, k, np.bitwise_and)
    value = _window(rok.value, k, np.bitwise_xor)
    ahead_known = np.roll(rok.known, -k)
    ahead_value = np.roll(rok.value, -k)
    idx = np.flatnonzero(rok.known & ahead_known)
    par = rok.value[idx] ^ ahead_value[idx]
    relations = [ParityRelation(int(i), int((i + 1) % n), int(b)) for i, b in zip(idx, par)]
    if n == 1:
        relations = []
    return TriStateKey(bob, known, value), relations


def build_extension_matrix(m: int, k: int, n: int, shift: int = 0) -> np.ndarray:
    """n x m matrix whose row t is the ((t + shift) mod n)-th k-subset of range(m)."""
    if n > comb(m, k):
        raise ValueError(f"n={n} exceeds C({m},{k})={comb(m, k)}")
    if not 0 <= shift < max(n, 1):
        raise ValueError(f"shift {shift} not in [0, {n})")
    return np.roll(first_combinations(m, k, n), -shift, axis=0)


def extend_subkey(sub: TriStateKey, ext: np.ndarray) -> TriStateKey:
    if ext.shape[1] != len(sub):
        raise ValueError("extension matrix columns must equal sub-key length")
    bob = matmul(ext, sub.bob)
    # known iff no unknown bit falls inside the row's support
    missing = np.asarray(ext, dtype=np.int64) @ (1 - sub.known.astype(np.int64))
    value = matmul(ext, sub.value)
    return TriStateKey(bob, (missing == 0).astype(np.uint8), value)


def shift_add(keys: Sequence[TriStateKey], shifts: Sequence[int]) -> TriStateKey:
    """Output j combines bit (j + s_i) mod n of every key i."""
    if len(keys) != len(shifts) or not keys:
        raise ValueError("need one shift per key and at least one key")
    n = len(keys[0])
    if any(len(key) != n for key in keys):
        raise ValueError("keys differ in length")
    bob = np.zeros(n, dtype=np.uint8)
    known = np.ones(n, dtype=np.uint8)
    value = np.zeros(n, dtype=np.uint8)
    for key, s in zip(keys, shifts):
        s = int(s) % n
        bob ^= np.roll(key.bob, -s)
        known &= np.roll(key.known, -s)
        value ^= np.roll(key.value, -s)
    return TriStateKey(bob, known, value)


def dilute_rm_n(
    subs: Sequence[TriStateKey], shifts: Sequence[int], k: int, n: int
) -> TriStateKey:
    if len(subs) != len(shifts):
        raise ValueError("need one shift per sub-key")
    m = len(subs[0])
    ext = build_extension_matrix(m, k, n, 0)
    return shift_add([extend_subkey(sub, ext) for sub in subs], shifts)
