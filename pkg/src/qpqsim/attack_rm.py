"""Basis-reconstruction attack on the rM-N dilution.

Every rM-N key is ``G x`` for a stacked N x rM matrix ``G``, so the whole key
follows from the bits at a row basis of ``G``. Alice makes one honest
query, then spends each further query learning one basis position of the
first round's shifted key. After that she decrypts the entire first
ciphertext.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gf2
from .dilution import build_extension_matrix, dilute_rm_n
from .keys import SimParams, TriStateKey, generate_rok
from .protocol import encrypt_database


def build_stacked_matrix(params: SimParams, shifts: Sequence[int]) -> np.ndarray:
    """``[G(s_1) | ... | G(s_r)]``, an N x rM matrix."""
    params.check_rm()
    if len(shifts) != params.r:
        raise ValueError(f"expected {params.r} shifts")
    return np.hstack([build_extension_matrix(params.M, params.k, params.N, int(s)) for s in shifts])


def plan_basis(
    gs: np.ndarray, known_row: int, also_known: Sequence[int] = ()
) -> tuple[list[int], np.ndarray]:
    """Row basis containing ``known_row`` (then ``also_known``), and each row's coefficients.

    ``lam[j] @ gs[gamma] == gs[j]`` over GF(2) for every row j.
    """
    gs = gf2.as_matrix(gs)
    if not gs[known_row].any():
        raise ValueError(f"row {known_row} is zero and carries no information")
    gamma = gf2.max_independent_rows(gs, [known_row, *also_known])
    basis = gf2.XorBasis()
    for t, i in enumerate(gamma):
        basis.insert(gf2.pack(gs[i]), 1 << t)
    lam = np.zeros((gs.shape[0], len(gamma)), dtype=np.uint8)
    for j, row in enumerate(gs):
        lam[j] = gf2.unpack(basis.express(gf2.pack(row)), len(gamma))
    return gamma, lam


@dataclass(frozen=True, eq=False)
class QueryTranscript:
    round: int
    announced_shift: int
    ciphertext: np.ndarray
    alice_known: dict[int, int]  # position in the shifted key -> Alice's bit
    dilution_shifts: tuple[int, ...] = ()

    def to_line(self) -> str:
        bits = gf2.to_str(self.ciphertext)
        width = (len(bits) + 3) // 4
        hexed = format(int(bits, 2), f"0{width}x") if bits else ""
        known = ";".join(f"{p}:{v}" for p, v in sorted(self.alice_known.items()))
        dil = ",".join(map(str, self.dilution_shifts))
        return f"{self.round}\t{self.announced_shift}\t{len(bits)}\t{hexed}\t{known}\t{dil}"

    @classmethod
    def from_line(cls, line: str) -> "QueryTranscript":
        rnd, shift, n, hexed, known, dil = line.rstrip("\n").split("\t")
        n = int(n)
        bits = format(int(hexed, 16), f"0{n}b") if n else ""
        pairs = [p.split(":") for p in known.split(";") if p]
        return cls(
            int(rnd),
            int(shift),
            gf2.as_bits(bits),
            {int(p): int(v) for p, v in pairs},
            tuple(int(x) for x in dil.split(",") if x),
        )


@dataclass
class RankAttackResult:
    recovered: np.ndarray
    queries_used: int
    rank: int
    retries: int
    transcripts: list[QueryTranscript] = field(default_factory=list)
    conflicts: int = 0


def _draw_round(params: SimParams, rng, max_retries: int) -> tuple[TriStateKey, np.ndarray, int]:
    """Fresh sub-keys and dilution shifts, redrawn until Alice knows a FOK bit."""
    for attempt in range(max_retries + 1):
        subs = [generate_rok(params.M, params.p, params.e, rng) for _ in range(params.r)]
        dil = rng.integers(0, params.N, size=params.r)
        fok = dilute_rm_n(subs, dil, params.k, params.N)
        if fok.known.any():
            return fok, dil, attempt
    raise RuntimeError(f"Alice knew no FOK bit in {max_retries + 1} attempts")


def run_rank_attack(
    params: SimParams,
    database,
    rng: np.random.Generator,
    *,
    shortcut: bool = True,
    max_retries: int = 100_000,
) -> RankAttackResult:
    """Recover the whole database in at most rank(G) queries.

    With ``shortcut`` Alice uses every bit she learns in every round and
    skips basis positions that already follow from what she knows; without
    it she learns exactly one basis position per round.
    """
    params.check_rm()
    db = gf2.as_bits(database)
    n = params.N
    if db.size != n:
        raise ValueError("database length must equal N")

    fok1, dil1, retries = _draw_round(params, rng, max_retries)
    gs = build_stacked_matrix(params, [int(d) for d in dil1])
    known1 = fok1.known_positions()
    nu1 = int(rng.choice(known1))
    gamma1 = int(rng.integers(n))  # the item Alice honestly asks for
    s1 = (nu1 - gamma1) % n
    a1 = np.roll(gs, -s1, axis=0)  # rows of the shifted first-round key
    c1 = encrypt_database(db, fok1, s1)

    view1 = {int((p - s1) % n): int(fok1.value[p]) for p in known1}
    transcripts = [QueryTranscript(1, s1, c1, view1, tuple(int(d) for d in dil1))]
    extra = [p for p in sorted(view1) if p != gamma1] if shortcut else []
    gamma, lam = plan_basis(a1, gamma1, extra)

    packed = [gf2.pack(row) for row in a1]
    learned = gf2.XorBasis()  # rows of a1 with the value of the matching key bit
    conflicts = 0

    def learn(pos: int, bit: int) -> None:
        nonlocal conflicts
        if not learned.insert(packed[pos], bit):
            if learned.express(packed[pos]) != bit:
                conflicts += 1

    if shortcut:
        for pos, bit in view1.items():
            learn(pos, bit)
    else:
        learn(gamma1, view1[gamma1])

    pending = [g for g in gamma if learned.express(packed[g]) is None]
    queries = 1
    while pending:
        fok, dil, extra_tries = _draw_round(params, rng, max_retries)
        retries += extra_tries
        target = pending[0]
        kp = fok.known_positions()
        if shortcut:
            todo = set(pending)
            best, best_hits = int(kp[0]), -1
            for nu in kp:
                s = (int(nu) - target) % n
                hits = sum(((int(q) - s) % n) in todo for q in kp)
                if hits > best_hits:
                    best, best_hits = int(nu), hits
            nu = best
        else:
            nu = int(kp[0])
        s = (nu - target) % n
        c = encrypt_database(db, fok, s)
        queries += 1
        view = {int((p - s) % n): int(fok.value[p]) for p in kp}
        transcripts.append(QueryTranscript(queries, s, c, view, tuple(int(d) for d in dil)))
        # first-round key bit at pos: c1 ^ db = c1 ^ c ^ (this round's key bit)
        use = view.items() if shortcut else [(target, view[target])]
        for pos, bit in use:
            learn(pos, int(c1[pos] ^ c[pos] ^ bit))
        if shortcut:
            pending = [g for g in pending if learned.express(packed[g]) is None]
        else:
            pending = pending[1:]

    basis_bits = np.array([learned.express(packed[g]) for g in gamma], dtype=np.uint8)
    key1 = gf2.matmul(lam, basis_bits)
    return RankAttackResult(c1 ^ key1, queries, gf2.rank(gs), retries, transcripts, conflicts)
