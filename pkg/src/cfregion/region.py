"""Rate regions as finite unions of down-closed polyhedra in the nonnegative orthant.

Every polyhedron is {R >= 0 : sum_{k in T} R_k <= r_T}.  Internally it is kept
as its tight support vector s(T) = max_{R in P} sum_{k in T} R_k over all
nonempty T, with +inf for subsets touching an unbounded user.  Two such
polyhedra are equal iff their support vectors agree, and P is a subset of Q
iff s_P <= s_Q componentwise, which makes dominance pruning a vector
comparison.  Regions are closed: membership on the boundary is true.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
MAX_K = 4


class UnboundedPolyhedronError(ValueError):
    def __init__(self, axes):
        self.axes = tuple(axes)
        super().__init__(f"polyhedron is unbounded along users {[a + 1 for a in self.axes]}")


class UnsupportedDimensionError(ValueError):
    pass


def _check_k(K: int, limit: int = MAX_K) -> None:
    if not 1 <= K <= limit:
        raise UnsupportedDimensionError(f"K={K} is outside the supported range 1..{limit}")


class _Geometry:
    """Constant data for one user count: subset masks and vertex solvers."""

    def __init__(self, K: int):
        self.K = K
        masks = sorted(range(1, 1 << K), key=lambda m: (bin(m).count("1"), [k for k in range(K) if m >> k & 1]))
        self.masks = masks
        self.index = {m: i for i, m in enumerate(masks)}
        self.nm = len(masks)
        self.A = np.array([[m >> k & 1 for k in range(K)] for m in masks], dtype=float)
        self.singletons = np.array([self.index[1 << k] for k in range(K)])
        # Hyperplane normals: masks (sum_T R = r) then axes (R_k = 0).
        normals = np.vstack([self.A, np.eye(K)])
        combos, invs = [], []
        for c in itertools.combinations(range(self.nm + K), K):
            M = normals[list(c)]
            if abs(np.linalg.det(M)) > 1e-9:
                combos.append(c)
                invs.append(np.linalg.inv(M))
        self.normals = normals
        self.combos = np.array(combos, dtype=np.int64)
        self.invs = np.array(invs)

    def subset(self, mask: int) -> tuple[int, ...]:
        return tuple(k for k in range(self.K) if mask >> k & 1)


@lru_cache(maxsize=None)
def geometry(K: int) -> _Geometry:
    _check_k(K)
    return _Geometry(K)


def _cap_for(R: np.ndarray) -> float:
    finite = R[np.isfinite(R)]
    top = float(np.max(np.abs(finite))) if finite.size else 0.0
    return 1e3 + 100.0 * (top + 1.0) * R.shape[-1]


def _capped(g: _Geometry, R: np.ndarray, cap: float) -> np.ndarray:
    Rc = R.copy()
    Rc[..., g.singletons] = np.minimum(Rc[..., g.singletons], cap)
    return Rc


def _vertex_candidates(g: _Geometry, Rc: np.ndarray):
    """Candidate vertices for a batch of capped rhs vectors: (N, C, K) points and feasibility."""
    N = Rc.shape[0]
    offsets = np.concatenate([Rc, np.zeros((N, g.K))], axis=1)
    b = offsets[:, g.combos]
    with np.errstate(invalid="ignore"):
        pts = np.einsum("cij,ncj->nci", g.invs, b)
        ok = np.all(np.isfinite(pts), axis=2)
        sums = pts @ g.A.T
        ok &= np.all(sums <= Rc[:, None, :] + TOL * (1 + np.abs(np.where(np.isfinite(Rc), Rc, 0)))[:, None, :], axis=2)
        ok &= np.all(pts >= -TOL, axis=2)
    return pts, sums, ok


def tighten(K: int, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Support vectors for a batch of raw rhs vectors (N, nm).

    Returns (S, empty) where empty[i] marks rows with a negative bound.
    Bounds in [-TOL, 0) are read as 0 so rounding noise cannot empty a region.
    """
    g = geometry(K)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    empty = np.any(R < -TOL, axis=1)
    R = np.where((R < 0) & ~empty[:, None], 0.0, R)
    S = np.full(R.shape, np.inf)
    live = ~empty
    if not np.any(live):
        return S, empty
    Rl = R[live]
    cap = _cap_for(Rl)
    pts, sums, ok = _vertex_candidates(g, _capped(g, Rl, cap))
    vals = np.where(ok[:, :, None], sums, -np.inf).max(axis=1)
    vals[vals >= cap / 2] = np.inf
    S[live] = vals
    return S, empty


def dominated(S: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    """For each row of S, whether some row of frontier contains it."""
    if frontier.shape[0] == 0:
        return np.zeros(S.shape[0], dtype=bool)
    with np.errstate(invalid="ignore"):
        le = S[:, None, :] <= frontier[None, :, :] + TOL
    return np.any(np.all(le, axis=2), axis=1)


def prune(S: np.ndarray) -> np.ndarray:
    """Keep rows not contained in another row (first occurrence wins on ties)."""
    S = np.atleast_2d(S)
    keep: list[int] = []
    # Larger polyhedra first so dominated ones are dropped in one pass.
    finite = np.where(np.isfinite(S), S, 1e300)
    order = np.lexsort(tuple(-finite[:, j] for j in range(S.shape[1] - 1, -1, -1)))
    kept = np.empty((0, S.shape[1]))
    for i in order:
        if dominated(S[i : i + 1], kept)[0]:
            continue
        keep.append(i)
        kept = S[keep]
    return S[sorted(keep)]


@dataclass(frozen=True, order=True)
class RateBound:
    """sum_{k in users} R_k <= bound (users are 0-based)."""

    users: tuple[int, ...]
    bound: float

    def __post_init__(self):
        users = tuple(sorted(set(int(k) for k in self.users)))
        if not users:
            raise ValueError("a rate bound needs a nonempty user subset")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "bound", float(self.bound))


def _mask(users: Iterable[int]) -> int:
    m = 0
    for k in users:
        m |= 1 << k
    return m


class Polyhedron:
    """Closed polyhedron {R >= 0 : sum_T R <= r_T for each bound}."""


    def __init__(self, K: int, bounds: Iterable = ()):
        g = geometry(K)
        R = np.full(g.nm, np.inf)
        for b in bounds:
            b = b if isinstance(b, RateBound) else RateBound(*b)
            if b.users[-1] >= K:
                raise ValueError(f"user {b.users[-1] + 1} exceeds K={K}")
            i = g.index[_mask(b.users)]
            R[i] = min(R[i], b.bound)
        S, empty = tighten(K, R[None, :])
        self.K = K
        self.empty = bool(empty[0])
        self._s = S[0]

    @classmethod
    def from_support(cls, K: int, s: np.ndarray) -> "Polyhedron":
        p = cls.__new__(cls)
        p.K = K
        p.empty = False
        p._s = np.asarray(s, dtype=float)
        return p

    @property
    def support(self) -> np.ndarray:
        return self._s

    @cached_property
    def bounds(self) -> tuple[RateBound, ...]:
        """Irredundant tight bounds in canonical order."""
        if self.empty:
            return (RateBound((0,), -1.0),)
        g = geometry(self.K)
        R = self._s.copy()
        order = sorted((i for i in range(g.nm) if np.isfinite(R[i])), key=lambda i: (-bin(g.masks[i]).count("1"), i))
        for i in order:
            trial = R.copy()
            trial[i] = np.inf
            S, _ = tighten(self.K, trial[None, :])
            if S[0, i] <= R[i] + TOL:
                R = trial
        out = [RateBound(g.subset(g.masks[i]), float(R[i])) for i in range(g.nm) if np.isfinite(R[i])]
        return tuple(sorted(out, key=lambda b: (b.users, b.bound)))

    def unbounded_users(self) -> tuple[int, ...]:
        g = geometry(self.K)
        return tuple(k for k in range(self.K) if not np.isfinite(self._s[g.singletons[k]]))

    def contains_points(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.empty:
            return np.zeros(X.shape[0], dtype=bool)
        g = geometry(self.K)
        with np.errstate(invalid="ignore"):
            ok = np.all(X @ g.A.T <= self._s + TOL, axis=1)
        return ok & np.all(X >= -TOL, axis=1)

    def contains(self, other: "Polyhedron") -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        return bool(np.all(other._s <= self._s + TOL))

    def key(self) -> tuple:
        return tuple((b.users, round(b.bound, 12)) for b in self.bounds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polyhedron):
            return NotImplemented
        if self.empty or other.empty:
            return self.empty and other.empty and self.K == other.K
        return self.K == other.K and self.contains(other) and other.contains(self)

    def __hash__(self):
        return hash((self.K, self.key()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{'+'.join(f'R{k + 1}' for k in b.users)}<={b.bound:.6g}" for b in self.bounds)
        return f"Polyhedron(K={self.K}, {inner})"


def is_empty(p: Polyhedron) -> bool:
    return p.empty


def vertices(p: Polyhedron) -> list[tuple[float, ...]]:
    """Extreme points of a bounded polyhedron, lexicographically sorted (K <= 3)."""
    _check_k(p.K, 3)
    if p.empty:
        return []
    axes = p.unbounded_users()
    if axes:
        raise UnboundedPolyhedronError(axes)
    g = geometry(p.K)
    pts, _, ok = _vertex_candidates(g, p.support[None, :])
    return _dedupe(pts[0][ok[0]])


def _dedupe(P: np.ndarray) -> list[tuple[float, ...]]:
    out: list[np.ndarray] = []
    # Sort on rounded keys so float noise cannot reorder ties such as 1 - 2e-16 vs 1.
    for x in sorted(map(tuple, np.where(np.abs(P) < TOL, 0.0, P)), key=lambda t: tuple(round(v, 9) for v in t)):
        if not out or np.max(np.abs(np.array(x) - out[-1])) > TOL:
            if all(np.max(np.abs(np.array(x) - y)) > TOL for y in out):
                out.append(np.array(x))
    return [tuple(float(v) for v in x) for x in out]


class RateRegion:
    """Finite union of polyhedra over K users; empty members are dropped."""

    def __init__(self, K: int, polyhedra: Iterable[Polyhedron] = (), prune_members: bool = True):
        geometry(K)
        members = [p for p in polyhedra if not p.empty]
        for p in members:
            if p.K != K:
                raise ValueError("member polyhedron has a different user count")
        if prune_members and members:
            S = prune(np.array([p.support for p in members]))
            members = [Polyhedron.from_support(K, s) for s in S]
        self.K = K
        self.polyhedra = tuple(sorted(members, key=lambda p: p.key()))

    @classmethod
    def full(cls, K: int) -> "RateRegion":
        return cls(K, [Polyhedron(K)])

    @classmethod
    def empty_region(cls, K: int) -> "RateRegion":
        return cls(K, [])

    @classmethod
    def from_supports(cls, K: int, S: np.ndarray) -> "RateRegion":
        return cls(K, [Polyhedron.from_support(K, s) for s in np.atleast_2d(S)] if len(S) else [])

    def supports(self) -> np.ndarray:
        return np.array([p.support for p in self.polyhedra]).reshape(len(self.polyhedra), geometry(self.K).nm)

    def is_empty(self) -> bool:
        return not self.polyhedra

    def contains_points(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0], dtype=bool)
        for p in self.polyhedra:
            out |= p.contains_points(X)
        return out

    def contains_point(self, x: Sequence[float]) -> bool:
        return bool(self.contains_points(np.asarray(x, dtype=float)[None, :])[0])

    def __len__(self) -> int:
        return len(self.polyhedra)

    def __repr__(self) -> str:
        return f"RateRegion(K={self.K}, members={list(self.polyhedra)!r})"


def _same_k(a: RateRegion, b: RateRegion) -> None:
    if a.K != b.K:
        raise ValueError("regions have different user counts")


def intersect(a: RateRegion, b: RateRegion) -> RateRegion:
    _same_k(a, b)
    if a.is_empty() or b.is_empty():
        return RateRegion.empty_region(a.K)
    Sa, Sb = a.supports(), b.supports()
    R = np.minimum(Sa[:, None, :], Sb[None, :, :]).reshape(-1, Sa.shape[1])
    S, empty = tighten(a.K, R)
    return RateRegion.from_supports(a.K, S[~empty])


def union(a: RateRegion, b: RateRegion) -> RateRegion:
    _same_k(a, b)
    return RateRegion(a.K, list(a.polyhedra) + list(b.polyhedra))


def _arrangement_points(K: int, planes: list[tuple[int, float]], s_cap: np.ndarray) -> np.ndarray:
    """Intersection points of K hyperplanes (normal index, offset) lying in {0 <= R, A R <= s_cap}."""
    g = geometry(K)
    by_normal: dict[int, list[float]] = {}
    for n, v in planes:
        by_normal.setdefault(n, []).append(v)
    for n in by_normal:
        by_normal[n] = sorted(set(by_normal[n]))
    pts = []
    for c, inv in zip(g.combos, g.invs):
        if not all(int(n) in by_normal for n in c):
            continue
        offs = np.array(list(itertools.product(*(by_normal[int(n)] for n in c))))
        pts.append(offs @ inv.T)
    if not pts:
        return np.empty((0, K))
    P = np.vstack(pts)
    ok = np.all(P >= -TOL, axis=1) & np.all(P @ g.A.T <= s_cap + TOL, axis=1)
    P = P[ok]
    if P.shape[0] == 0:
        return P
    return np.unique(np.round(P, 10), axis=0)


def _member_inside(p: Polyhedron, a: RateRegion) -> bool:
    if any(q.contains(p) for q in a.polyhedra):
        return True
    if a.is_empty():
        return False
    g = geometry(p.K)
    K = p.K
    cap = _cap_for(np.concatenate([p.support, a.supports().ravel()]))
    s_cap = _capped(g, p.support[None, :], cap)[0]
    axis_planes = [(g.nm + k, 0.0) for k in range(K)]
    own = [(i, float(s_cap[i])) for i in range(g.nm) if np.isfinite(s_cap[i])]
    other = [(i, float(q.support[i])) for q in a.polyhedra for i in range(g.nm) if np.isfinite(q.support[i])]
    P = _arrangement_points(K, own + other + axis_planes, s_cap)

    def all_in(X):
        return X.shape[0] == 0 or bool(np.all(a.contains_points(X)))

    if not all_in(P):
        return False
    # A point of p outside the closed down-set a can be pushed up onto a
    # facet of p; the arrangement cells on that facet are then probed by
    # midpoints (1-cells) and triangle centroids (2-cells).
    for i, v in own:
        on = P[np.abs(P @ g.A[i] - v) <= 1e-7]
        n = on.shape[0]
        if n < 2:
            continue
        ii, jj = np.triu_indices(n, 1)
        if not all_in((on[ii] + on[jj]) / 2):
            return False
        if K >= 3 and n >= 3:
            for start in range(0, n, 64):
                tri = np.array(
                    [t for t in itertools.combinations(range(n), 3) if start <= t[0] < start + 64]
                )
                if tri.size and not all_in((on[tri[:, 0]] + on[tri[:, 1]] + on[tri[:, 2]]) / 3):
                    return False
    return True


def region_contains(a: RateRegion, b: RateRegion) -> bool:
    """Whether b is a subset of a (closures, tolerance 1e-9; K <= 3)."""
    _same_k(a, b)
    _check_k(a.K, 3)
    return all(_member_inside(p, a) for p in b.polyhedra)


def region_equal(a: RateRegion, b: RateRegion) -> bool:
    return region_contains(a, b) and region_contains(b, a)


def min_constraint_region(K: int, offsets: Sequence[float], bound: float, users: Sequence[int]) -> RateRegion:
    """{R : min_i (R_{users[i]} - offsets[i]) <= bound} as a union of halfspaces."""
    return RateRegion(K, [Polyhedron(K, [((k,), o + bound)]) for k, o in zip(users, offsets)])


def region_vertices(r: RateRegion) -> list[tuple[float, ...]]:
    """Union of the members' extreme points (bounded members only)."""
    pts = []
    for p in r.polyhedra:
        if not p.unbounded_users():
            pts.extend(vertices(p))
    return _dedupe(np.array(pts)) if pts else []
