"""Matroids stored as canonical bases collections on ground set {0, ..., n-1}."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .intlab import IntMatrix, rank

MAX_GROUND = 4


def _is_prime(q: int) -> bool:
    return q >= 2 and all(q % d for d in range(2, int(q ** 0.5) + 1))


@dataclass(frozen=True, order=True)
class Matroid:
    ground_size: int
    bases: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        canon = tuple(sorted({tuple(sorted(b)) for b in self.bases}))
        if not canon:
            raise ValueError("a matroid needs at least one basis")
        if len({len(b) for b in canon}) != 1:
            raise ValueError("bases must share one cardinality")
        if any(x < 0 or x >= self.ground_size for b in canon for x in b):
            raise ValueError("basis element outside the ground set")
        object.__setattr__(self, "bases", canon)

    @property
    def rank(self) -> int:
        return len(self.bases[0])

    def is_free(self) -> bool:
        return self.rank == self.ground_size

    def label(self) -> str:
        """Readable 1-based label, e.g. 'r1:{1}{2}'."""
        body = "".join("{" + ",".join(str(x + 1) for x in b) + "}" for b in self.bases)
        return f"r{self.rank}:{body}"

    def satisfies_exchange(self) -> bool:
        return satisfies_exchange(self.bases)


def satisfies_exchange(bases: Iterable[Iterable[int]]) -> bool:
    family = {frozenset(b) for b in bases}
    for b1 in family:
        for b2 in family:
            for x in b1 - b2:
                if not any((b1 - {x}) | {y} in family for y in b2 - b1):
                    return False
    return True


def uniform(r: int, n: int) -> Matroid:
    return Matroid(n, tuple(itertools.combinations(range(n), r)))


def free(n: int) -> Matroid:
    return Matroid(n, (tuple(range(n)),))


def vector_matroid(Q, modulus: Optional[int] = None) -> Matroid:
    """Column matroid of Q over Q (modulus None) or over F_q."""
    Q = IntMatrix.coerce(Q)
    if modulus is not None and not _is_prime(modulus):
        raise ValueError(f"modulus {modulus} is not prime")
    n = Q.ncols
    r = rank(Q, modulus)
    bases = [c for c in itertools.combinations(range(n), r) if rank(Q.select_cols(c), modulus) == r]
    return Matroid(n, tuple(bases))


def dual(M: Matroid) -> Matroid:
    ground = set(range(M.ground_size))
    return Matroid(M.ground_size, tuple(tuple(sorted(ground - set(b))) for b in M.bases))


@lru_cache(maxsize=None)
def _all_matroids(n: int) -> tuple[Matroid, ...]:
    out = []
    for r in range(n + 1):
        subsets = list(itertools.combinations(range(n), r))
        for mask in range(1, 1 << len(subsets)):
            fam = [s for i, s in enumerate(subsets) if mask >> i & 1]
            if satisfies_exchange(fam):
                out.append(Matroid(n, tuple(fam)))
    return tuple(sorted(out, key=lambda m: (m.rank, len(m.bases), m.bases)))


def enumerate_matroids(n: int, exclude_full_rank: bool = False) -> list[Matroid]:
    """All labeled matroids on n <= 4 elements, canonically ordered."""
    if n < 0 or n > MAX_GROUND:
        raise ValueError(f"unsupported ground size {n} (at most {MAX_GROUND})")
    ms = _all_matroids(n)
    if exclude_full_rank:
        ms = tuple(m for m in ms if not m.is_free())
    return list(ms)


def is_representation(C, M: Matroid, modulus: Optional[int] = None) -> bool:
    C = IntMatrix.coerce(C)
    if C.ncols != M.ground_size:
        raise ValueError("column count differs from the ground set size")
    return vector_matroid(C, modulus) == M
