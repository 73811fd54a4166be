"""Oblivious keys as seen by both parties.

Bob knows every bit. Alice knows each bit independently with probability
``p``, and each bit she knows is wrong with probability ``e``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .gf2 import as_bits, to_str

# Alice's per-bit knowledge probability: honest J-protocol and individual USD attack
P_HONEST = 0.25
P_USD = 1 - 1 / sqrt(2)


@dataclass(frozen=True)
class SimParams:
    """Scenario parameters.

    ``N`` items, dilution parameter ``k``, knowledge probability ``p``, error
    probability ``e``, ``r`` sub-keys of length ``M`` (rM-N only), ``g`` MOKs
    per FOK (gkN-N only) and the RNG ``seed``.
    """

    N: int = 225
    k: int = 3
    p: float = P_HONEST
    e: float = 0.0
    r: int = 1
    M: int = 3
    g: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1 or self.k < 1:
            raise ValueError("need N >= 1 and k >= 1")
        if self.g < 1 or self.r < 1 or self.M < 1:
            raise ValueError("need g, r, M >= 1")
        for name in ("p", "e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @property
    def n_bar(self) -> float:
        return self.N * self.p**self.k

    def check_rm(self) -> None:
        if self.N > comb(self.M, self.k):
            raise ValueError(f"N={self.N} exceeds C(M,k)=C({self.M},{self.k})={comb(self.M, self.k)}")

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)


def make_rng(seed: int, run: int = 0) -> np.random.Generator:
    """PCG64 stream for one Monte Carlo run; runs use ``seed ^ run``."""
    return np.random.default_rng((int(seed) ^ int(run)) & 0xFFFFFFFFFFFFFFFF)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.uint8)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TriStateKey:
    """Bob's key bits plus Alice's partial view of them.

    ``value`` is Alice's belief and is kept at 0 wherever ``known`` is 0.
    """

    bob: np.ndarray
    known: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        bob, known, value = (as_bits(x) for x in (self.bob, self.known, self.value))
        if not (bob.shape == known.shape == value.shape) or bob.ndim != 1:
            raise ValueError("bob, known and value must be equal-length vectors")
        object.__setattr__(self, "bob", _frozen(bob))
        object.__setattr__(self, "known", _frozen(known))
        object.__setattr__(self, "value", _frozen(value & known))

    def __len__(self) -> int:
        return self.bob.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriStateKey):
            return NotImplemented
        return (
            np.array_equal(self.bob, other.bob)
            and np.array_equal(self.known, other.known)
            and np.array_equal(self.value, other.value)
        )

    def known_positions(self) -> np.ndarray:
        return np.flatnonzero(self.known)

    def alice_view(self) -> str:
        return "".join(
            ("1" if v else "0") if k else "?" for k, v in zip(self.known, self.value)
        )

    def to_strings(self) -> tuple[str, str, str]:
        """(bob bits, knowledge mask, Alice's view with '?' for unknown)."""
        return to_str(self.bob), to_str(self.known), self.alice_view()

    @classmethod
    def from_strings(cls, bob: str, alice: str) -> "TriStateKey":
        bob = bob.replace(" ", "").replace(",", "")
        alice = alice.replace(" ", "").replace(",", "")
        if len(bob) != len(alice):
            raise ValueError("bob and alice strings differ in length")
        known = [0 if c == "?" else 1 for c in alice]
        value = [1 if c == "1" else 0 for c in alice]
        if set(alice) - {"0", "1", "?"}:
            raise ValueError(f"bad alice view {alice!r}")
        return cls(as_bits(bob), known, value)

    @classmethod
    def fully_known(cls, bob) -> "TriStateKey":
        bob = as_bits(bob)
        return cls(bob, np.ones_like(bob), bob)


def generate_rok(length: int, p: float, e: float, rng: np.random.Generator) -> TriStateKey:
    """Raw oblivious key: uniform Bob bits, Bernoulli(p) knowledge, Bernoulli(e) errors."""
    bob = rng.integers(0, 2, size=length, dtype=np.uint8)
    known = (rng.random(length) < p).astype(np.uint8)
    flips = (rng.random(length) < e).astype(np.uint8)
    return TriStateKey(bob, known, (bob ^ flips) & known)


def known_count(key: TriStateKey) -> int:
    return int(np.count_nonzero(key.known))


def cyclic_shift(key: TriStateKey, s: int) -> TriStateKey:
    """Output position i carries input position (i + s) mod len."""
    n = len(key)
    if not 0 <= s < n:
        raise ValueError(f"shift {s} not in [0, {n})")
    return TriStateKey(np.roll(key.bob, -s), np.roll(key.known, -s), np.roll(key.value, -s))
