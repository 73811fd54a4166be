"""Multi-query attack on the N-N dilution.

Alice tracks the database with a union-find whose edges carry XOR parities.
Each component that contains an explicitly known item is "lit" (every
member's value follows). An unlit multi-member component is an almost known
set (AKS). The unknown information is ``H = n_u + n_aks``, the number of
unlit components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .dilution import ParityRelation, dilute_n_n
from .keys import SimParams, TriStateKey, generate_rok
from .protocol import encrypt_database, random_database

KNOWN_CLASS = 0
UNKNOWN_CLASS = 1


class ParityDsu:
    """Union-find with parity-to-parent edges and per-component "lit" state."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.parity = [0] * n
        self.size = [1] * n
        self.lit = [False] * n
        self.root_value = [0] * n
        self.n_unlit = n
        self.n_aks = 0
        self.n_lit_items = 0
        self.conflicts = 0

    def __len__(self) -> int:
        return len(self.parent)

    def copy(self) -> "ParityDsu":
        new = ParityDsu.__new__(ParityDsu)
        for name, val in vars(self).items():
            setattr(new, name, val.copy() if isinstance(val, list) else val)
        return new

    def find(self, x: int) -> tuple[int, int]:
        """(root, parity of x relative to root), compressing the path."""
        parent, parity = self.parent, self.parity
        path = []
        while parent[x] != x:
            path.append(x)
            x = parent[x]
        root = x
        acc = 0
        for y in reversed(path):
            acc ^= parity[y]
            parity[y] = acc
            parent[y] = root
        return root, (parity[path[0]] if path else 0)

    def _drop(self, root: int) -> None:
        if not self.lit[root]:
            self.n_unlit -= 1
            if self.size[root] > 1:
                self.n_aks -= 1

    def _add(self, root: int) -> None:
        if self.lit[root]:
            self.n_lit_items += self.size[root]
        else:
            self.n_unlit += 1
            if self.size[root] > 1:
                self.n_aks += 1

    def union(self, a: int, b: int, w: int) -> bool:
        """Record ``value[a] ^ value[b] == w``; True if two components merged."""
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            if pa ^ pb != w:
                self.conflicts += 1
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb, pa, pb = rb, ra, pb, pa
        link = pa ^ pb ^ w  # value[rb] = value[ra] ^ link
        lit_a, lit_b = self.lit[ra], self.lit[rb]
        for r in (ra, rb):
            self._drop(r)
            if self.lit[r]:
                self.n_lit_items -= self.size[r]
        if lit_a and lit_b:
            if self.root_value[rb] != self.root_value[ra] ^ link:
                self.conflicts += 1
        elif lit_b:
            self.root_value[ra] = self.root_value[rb] ^ link
        self.parent[rb] = ra
        self.parity[rb] = link
        self.size[ra] += self.size[rb]
        self.lit[ra] = lit_a or lit_b
        self._add(ra)
        return True

    def light(self, x: int, value: int) -> bool:
        """Item x is explicitly known; True if its component was unlit."""
        r, px = self.find(x)
        if self.lit[r]:
            if self.root_value[r] ^ px != value:
                self.conflicts += 1
            return False
        self._drop(r)
        self.lit[r] = True
        self.root_value[r] = value ^ px
        self._add(r)
        return True

    def value(self, x: int) -> int | None:
        r, px = self.find(x)
        return self.root_value[r] ^ px if self.lit[r] else None

    def roots(self) -> np.ndarray:
        parent = np.asarray(self.parent, dtype=np.int64)
        while True:
            up = parent[parent]
            if np.array_equal(up, parent):
                return parent
            parent = up


class TraceRow(NamedTuple):
    n_q: int
    H: int
    N_E: int
    n_aks: int
    n_u: int
    conflicts: int


@dataclass
class AttackState:
    """Alice's record of the database across queries.

    ``database`` is Bob's ground truth; it is only used to play Bob's side
    (encrypting with the shifted key), never read by Alice directly.
    """

    dsu: ParityDsu
    database: np.ndarray
    n_q: int = 0

    @classmethod
    def fresh(cls, database) -> "AttackState":
        database = np.asarray(database, dtype=np.uint8)
        return cls(ParityDsu(database.size), database)

    @property
    def N(self) -> int:
        return len(self.dsu)

    @property
    def H(self) -> int:
        return self.dsu.n_unlit

    @property
    def N_E(self) -> int:
        return self.dsu.n_lit_items

    @property
    def n_aks(self) -> int:
        return self.dsu.n_aks

    @property
    def n_u(self) -> int:
        return self.dsu.n_unlit - self.dsu.n_aks

    @property
    def conflicts(self) -> int:
        return self.dsu.conflicts

    def copy(self) -> "AttackState":
        return AttackState(self.dsu.copy(), self.database, self.n_q)

    def row(self) -> TraceRow:
        return TraceRow(self.n_q, self.H, self.N_E, self.n_aks, self.n_u, self.conflicts)

    def known_items(self) -> dict[int, int]:
        return {i: v for i in range(self.N) if (v := self.dsu.value(i)) is not None}


def absorb_query(
    state: AttackState, fok: TriStateKey, relations: Sequence[ParityRelation], s: int
) -> AttackState:
    """Bob encrypts with the FOK shifted by ``s``; Alice updates her record in place."""
    n = state.N
    if len(fok) != n or not 0 <= s < n:
        raise ValueError("key length or shift out of range")
    c = encrypt_database(state.database, fok, s)
    dsu = state.dsu
    for i, j, par in relations:
        a, b = (i - s) % n, (j - s) % n
        dsu.union(a, b, int(c[a] ^ c[b] ^ par))
    for j in fok.known_positions():
        item = (int(j) - s) % n
        dsu.light(item, int(c[item] ^ fok.value[j]))
    state.n_q += 1
    return state


def _query_groups(
    fok: TriStateKey, relations: Sequence[ParityRelation]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Key positions touched by the query, grouped by relation connectivity.

    Returns (positions, group id per position, lit flag per group).
    """
    known = fok.known_positions()
    rel = np.asarray([(r.i, r.j) for r in relations], dtype=np.int64).reshape(-1, 2)
    pos = np.unique(np.concatenate([known, rel.ravel()]))
    if pos.size == 0:
        return pos, pos, np.zeros(0, dtype=bool)
    local = np.searchsorted(pos, rel)
    g = coo_matrix(
        (np.ones(len(local)), (local[:, 0], local[:, 1])), shape=(pos.size, pos.size)
    )
    n_groups, gid = connected_components(g, directed=False)
    group_lit = np.zeros(n_groups, dtype=bool)
    group_lit[gid[np.searchsorted(pos, known)]] = True
    return pos, gid, group_lit


def shift_scores(
    state: AttackState,
    fok: TriStateKey,
    relations: Sequence[ParityRelation],
    shifts: Sequence[int] | np.ndarray | None = None,
    chunk_nodes: int = 2_000_000,
) -> np.ndarray:
    """H after absorbing the query under each candidate shift.

    Works on the current component roots without touching the state: for
    every shift, the roots hit by each query group are joined and the
    resulting unlit components counted.
    """
    n = state.N
    shifts = np.arange(n) if shifts is None else np.asarray(shifts, dtype=np.int64)
    pos, gid, group_lit = _query_groups(fok, relations)
    h0 = state.H
    if pos.size == 0:
        return np.full(shifts.size, h0, dtype=np.int64)
    roots = state.dsu.roots()
    lit_root = np.asarray(state.dsu.lit, dtype=bool)
    first_col = np.zeros(gid.max() + 1, dtype=np.int64)
    first_col[gid[::-1]] = np.arange(pos.size)[::-1]
    anchor = first_col[gid]
    col_lit = group_lit[gid]
    L = pos.size
    out = np.empty(shifts.size, dtype=np.int64)
    step = max(1, chunk_nodes // L)
    for start in range(0, shifts.size, step):
        sh = shifts[start : start + step]
        c = sh.size
        r = roots[(pos[None, :] - sh[:, None]) % n]
        key = np.arange(c, dtype=np.int64)[:, None] * n + r
        uniq, inv = np.unique(key, return_inverse=True)
        inv = inv.reshape(c, L)
        u = uniq.size
        graph = coo_matrix(
            (np.ones(c * L), (inv.ravel(), inv[:, anchor].ravel())), shape=(u, u)
        )
        _, comp = connected_components(graph, directed=False)
        node_lit = lit_root[uniq % n]
        marked = np.zeros(u, dtype=bool)
        marked[inv[:, col_lit].ravel()] = True
        comp_lit = np.zeros(comp.max() + 1, dtype=bool)
        np.logical_or.at(comp_lit, comp, node_lit | marked)
        node_shift = uniq // n
        unlit_before = np.bincount(node_shift[~node_lit], minlength=c)
        # every component lives inside one shift block, so take a representative node
        rep = np.zeros(comp_lit.size, dtype=np.int64)
        rep[comp] = node_shift
        unlit_after = np.bincount(rep[~comp_lit], minlength=c)
        out[start : start + c] = h0 - unlit_before + unlit_after
    return out


def optimal_shift(
    state: AttackState,
    fok: TriStateKey,
    relations: Sequence[ParityRelation],
    candidates: Sequence[int] | np.ndarray | None = None,
) -> int:
    """Shift minimising H after absorption; ties go to the smallest shift."""
    shifts = np.arange(state.N) if candidates is None else np.sort(np.asarray(candidates))
    scores = shift_scores(state, fok, relations, shifts)
    return int(shifts[int(np.argmin(scores))])


def snapshot_grid(state: AttackState, width: int, height: int) -> np.ndarray:
    """Per-item class: 0 known, 1 unknown singleton, 2 + smallest member index for an AKS."""
    n = state.N
    if width * height != n:
        raise ValueError(f"{width}x{height} grid does not hold {n} items")
    roots = state.dsu.roots()
    lit = np.asarray(state.dsu.lit, dtype=bool)[roots]
    size = np.asarray(state.dsu.size)[roots]
    smallest = np.full(n, n, dtype=np.int64)
    np.minimum.at(smallest, roots, np.arange(n))
    cls = np.where(lit, KNOWN_CLASS, np.where(size > 1, 2 + smallest[roots], UNKNOWN_CLASS))
    return cls.reshape(height, width)


@dataclass
class AttackRun:
    dqa: int
    trace: list[TraceRow]
    conflicts: int = 0
    approximate: bool = False
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)


def safety_cap(params: SimParams) -> int:
    if params.n_bar <= 0:
        raise ValueError("p = 0: Alice never learns anything")
    return int(np.ceil(100 * params.N / params.n_bar))


def run_aks_attack(
    params: SimParams,
    rng: np.random.Generator,
    *,
    use_relations: bool = True,
    candidates: int | None = None,
    snapshot_at: Sequence[int] = (),
    grid: tuple[int, int] | None = None,
) -> AttackRun:
    """Query until every item is explicitly known; returns the DQA and per-query trace.

    ``candidates`` switches to an approximate search over that many random
    shifts per query. ``use_relations=False`` discards the parity leak.
    """
    n = params.N
    state = AttackState.fresh(random_database(n, rng))
    cap = safety_cap(params)
    trace = []
    snaps = {}
    want = set(snapshot_at)
    while state.N_E < n:
        if state.n_q >= cap:
            raise RuntimeError(f"no full recovery after {cap} queries")
        rok = generate_rok(n, params.p, params.e, rng)
        fok, rel = dilute_n_n(rok, params.k)
        if not use_relations:
            rel = []
        if state.n_q == 0:
            s = int(rng.integers(n))
        elif candidates is not None and candidates < n:
            s = optimal_shift(state, fok, rel, rng.choice(n, size=candidates, replace=False))
        else:
            s = optimal_shift(state, fok, rel)
        absorb_query(state, fok, rel, s)
        trace.append(state.row())
        if state.n_q in want and grid is not None:
            snaps[state.n_q] = snapshot_grid(state, *grid)
    return AttackRun(
        state.n_q,
        trace,
        state.conflicts,
        approximate=candidates is not None and candidates < n,
        snapshots=snaps,
    )
