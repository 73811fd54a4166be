"""Query rounds and the error-corrected gkN-N post-processing pipeline.

For each group of ``n`` raw-key bits (stride ``N``, the kN-N layout) Bob
sends a random codeword one-time-padded with those bits and both parties
take the codeword parity as the middle-key (MOK) bit. ``g`` MOKs are then
shift-added into the final key.

An honest Alice only uses groups she knows completely and corrects them
with the code. A dishonest Alice skips correction and erasure-decodes any
group she partially knows. Two counting rules are available for her:

``"exact"``
    the bit counts as known only when her known positions pin down a unique
    codeword;
``"threshold"``
    any group with at least ``m`` known positions counts as known (when
    several codewords fit, she takes the one with the smallest message
    index, so her bit can be wrong).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from . import gf2
from .dilution import shift_add
from .keys import SimParams, TriStateKey, generate_rok
from .linear_code import (
    HAMMING_7_4,
    CodeSpec,
    Erasure,
    bits_to_int,
    decode_correct1,
    erasure_decode,
)

DishonestRule = Literal["exact", "threshold"]
ParitySource = Literal["codeword", "message"]


def random_database(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def encrypt_database(db, fok: TriStateKey, s: int) -> np.ndarray:
    """One-time pad with the FOK shifted by s: ``c[i] = db[i] ^ fok.bob[(i+s) % N]``."""
    db = gf2.as_bits(db)
    if db.size != len(fok):
        raise ValueError("database and key lengths differ")
    return db ^ np.roll(fok.bob, -(s % len(fok)))


def _parity_of(cw: np.ndarray, spec: CodeSpec, source: ParitySource) -> np.ndarray:
    part = cw if source == "codeword" else cw[..., : spec.m]
    return (part.sum(axis=-1) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class EccRoundRecord:
    group_index: int
    message: np.ndarray
    codeword: np.ndarray
    ciphertext: np.ndarray
    alice_outcome: int | None  # None: Alice labels the bit unknown
    bob_bit: int
    decode_distance: int | None = None


def ecc_dilution_round(
    rok_group: TriStateKey,
    spec: CodeSpec = HAMMING_7_4,
    dishonest: bool = False,
    rng: np.random.Generator | None = None,
    *,
    message=None,
    group_index: int = 0,
    rule: DishonestRule = "exact",
    parity: ParitySource = "codeword",
) -> EccRoundRecord:
    if len(rok_group) != spec.n:
        raise ValueError(f"group length {len(rok_group)} != code length {spec.n}")
    if message is None:
        message = rng.integers(0, 2, size=spec.m, dtype=np.uint8)
    message = gf2.as_bits(message)
    cw = gf2.matmul(message, spec.gen)
    c = cw ^ rok_group.bob
    bob_bit = int(_parity_of(cw, spec, parity))
    decrypted = c ^ rok_group.value
    outcome = None
    distance = None
    if not dishonest:
        if rok_group.known.all():
            fixed, distance = decode_correct1(spec, decrypted)
            outcome = int(_parity_of(fixed, spec, parity))
    else:
        pos = np.flatnonzero(rok_group.known)
        res = erasure_decode(spec, [(int(i), int(decrypted[i])) for i in pos])
        if res.status is Erasure.UNIQUE:
            outcome = int(_parity_of(res.codeword, spec, parity))
        elif rule == "threshold" and res.status is Erasure.AMBIGUOUS and pos.size >= spec.m:
            fits = (spec.codewords[:, pos] == decrypted[pos]).all(axis=1)
            outcome = int(_parity_of(spec.codewords[int(fits.argmax())], spec, parity))
    return EccRoundRecord(group_index, message, cw, c, outcome, bob_bit, distance)


def _groups(rok: TriStateKey, n_code: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(rok) % n_code:
        raise ValueError(f"ROK length {len(rok)} is not a multiple of {n_code}")
    n = len(rok) // n_code
    # group i holds positions i, i+N, ..., i+(n_code-1)N
    return tuple(x.reshape(n_code, n).T for x in (rok.bob, rok.known, rok.value))


def build_mok(
    rok: TriStateKey,
    spec: CodeSpec = HAMMING_7_4,
    dishonest: bool = False,
    rng: np.random.Generator | None = None,
    *,
    messages=None,
    rule: DishonestRule = "exact",
    parity: ParitySource = "codeword",
) -> TriStateKey:
    """Vectorised C1-C4 over all N groups of a length ``n*N`` raw key."""
    bob, known, value = _groups(rok, spec.n)
    n = bob.shape[0]
    if messages is None:
        messages = rng.integers(0, 2, size=(n, spec.m), dtype=np.uint8)
    messages = np.asarray(messages, dtype=np.uint8)
    cw = gf2.matmul(messages, spec.gen)
    bob_bit = _parity_of(cw, spec, parity)
    decrypted = cw ^ bob ^ value
    if not dishonest:
        alice_known = known.all(axis=1)
        idx, _ = spec.nearest_table
        decoded = spec.codewords[idx[bits_to_int(decrypted)]]
    else:
        count, first = spec.erasure_tables
        mask = bits_to_int(known)
        word = bits_to_int(decrypted & known)
        fits = count[mask, word]
        if rule == "exact":
            alice_known = fits == 1
        else:
            alice_known = (fits == 1) | ((fits > 1) & (known.sum(axis=1) >= spec.m))
        decoded = spec.codewords[first[mask, word]]
    alice_bit = _parity_of(decoded, spec, parity)
    k = alice_known.astype(np.uint8)
    return TriStateKey(bob_bit, k, alice_bit & k)


def round_records(
    rok: TriStateKey,
    spec: CodeSpec = HAMMING_7_4,
    dishonest: bool = False,
    rng: np.random.Generator | None = None,
    **kw,
) -> list[EccRoundRecord]:
    bob, known, value = _groups(rok, spec.n)
    return [
        ecc_dilution_round(
            TriStateKey(bob[i], known[i], value[i]), spec, dishonest, rng, group_index=i, **kw
        )
        for i in range(bob.shape[0])
    ]


def write_round_records(records: Sequence[EccRoundRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "message", "codeword", "ciphertext", "alice", "bob", "distance"])
        for r in records:
            w.writerow([
                r.group_index,
                gf2.to_str(r.message),
                gf2.to_str(r.codeword),
                gf2.to_str(r.ciphertext),
                "?" if r.alice_outcome is None else r.alice_outcome,
                r.bob_bit,
                "" if r.decode_distance is None else r.decode_distance,
            ])


def overlap_counts(current, other) -> np.ndarray:
    """``out[s] = sum_j current[j] * other[(j + s) % N]`` for every shift s."""
    a = np.asarray(current, dtype=np.float64)
    b = np.asarray(other, dtype=np.float64)
    corr = np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=a.size)
    return np.rint(corr).astype(np.int64)


def greedy_shifts(moks: Sequence[TriStateKey]) -> list[int]:
    """Fix the first MOK at shift 0, then pick each next shift to keep the most known bits."""
    shifts = [0]
    cur = moks[0].known.astype(np.uint8)
    for mok in moks[1:]:
        s = int(np.argmax(overlap_counts(cur, mok.known)))
        shifts.append(s)
        cur = cur & np.roll(mok.known, -s)
    return shifts


def surviving_counts(moks: Sequence[TriStateKey], shifts: Sequence[int]) -> list[int]:
    """Known FOK bits after combining the first 1, 2, ..., g MOKs."""
    cur = np.ones(len(moks[0]), dtype=np.uint8)
    out = []
    for mok, s in zip(moks, shifts):
        cur &= np.roll(mok.known, -s)
        out.append(int(cur.sum()))
    return out


@dataclass(frozen=True, eq=False)
class GknResult:
    fok: TriStateKey
    moks: list[TriStateKey]
    shifts: list[int]
    target_index: int | None = None


def make_moks(
    params: SimParams,
    dishonest: bool,
    rng: np.random.Generator,
    spec: CodeSpec = HAMMING_7_4,
    rule: DishonestRule = "exact",
) -> list[TriStateKey]:
    return [
        build_mok(generate_rok(spec.n * params.N, params.p, params.e, rng), spec, dishonest, rng, rule=rule)
        for _ in range(params.g)
    ]


def gkn_post_process(
    params: SimParams,
    dishonest: bool,
    rng: np.random.Generator,
    spec: CodeSpec = HAMMING_7_4,
    rule: DishonestRule = "exact",
) -> GknResult:
    moks = make_moks(params, dishonest, rng, spec, rule)
    n = params.N
    if dishonest:
        shifts = greedy_shifts(moks)
        target = None
    else:
        # line up one known bit of every MOK on the same FOK index
        target = int(rng.integers(n))
        shifts = []
        for mok in moks:
            kp = mok.known_positions()
            if kp.size:
                shifts.append(int((rng.choice(kp) - target) % n))
            else:
                shifts.append(int(rng.integers(n)))
    return GknResult(shift_add(moks, shifts), moks, shifts, target)


def run_honest_query(
    db,
    params: SimParams,
    target_item: int,
    rng: np.random.Generator,
    spec: CodeSpec = HAMMING_7_4,
) -> int | None:
    """Retrieve one item through the full gkN-N pipeline; None if Alice knows no FOK bit."""
    db = gf2.as_bits(db)
    if not 0 <= target_item < params.N:
        raise IndexError("target item out of range")
    res = gkn_post_process(params, False, rng, spec)
    fok = res.fok
    if not fok.known.any():
        return None
    j = res.target_index if fok.known[res.target_index] else int(fok.known_positions()[0])
    s = (j - target_item) % params.N
    c = encrypt_database(db, fok, s)
    return int(c[target_item] ^ fok.value[j])
