"""Compute-forward rate regions from channel specifications.

Three channel families are supported: finite-field and integer discrete
channels (exact pmf arithmetic) and Gaussian multiple-access channels
(closed-form log-determinants).  Every rate bound has the form
sum_{k in T} R_k <= sum_{k in T} H(U_k) - H_B(u|Y) + J(B, M).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from . import region as rg
from .entropy import (
    LOG2_2PIE,
    GaussianSource,
    JointDiscreteSource,
    conditional_algebraic_entropy_discrete,
    gaussian_algebraic_entropy,
    gaussian_conditional_covariance,
    shannon_entropy,
)
from .intlab import (
    IntMatrix,
    adjugate,
    lattice_coordinates,
    mod_centered,
    orthogonal_lattice_basis,
    rank,
    row_lattice_contains,
    rref_mod,
    saturated_basis,
)
from .matroid import Matroid, _is_prime, dual, enumerate_matroids, vector_matroid

MAX_JOINT_STATES = 10**7


class BudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------- specs


class DiscreteSpec:
    """Independent users with finite pmfs, modulation maps and a finite channel.

    ``channel`` maps the tuple of channel inputs (x_1, ..., x_K) to a pmf over
    output symbols.  Without modulation tables x_k = u_k.  With ``q`` set the
    user alphabets are the centered residues and all coefficient arithmetic
    is modulo q.
    """

    kind = "integer"

    def __init__(
        self,
        pmfs: Sequence[Mapping[int, Any]],
        channel: Union[Mapping[tuple, Mapping[Hashable, Any]], Callable[[tuple], Mapping[Hashable, Any]]],
        modulation: Optional[Sequence[Mapping[int, Hashable]]] = None,
        q: Optional[int] = None,
    ):
        if q is not None:
            if q < 3 or not _is_prime(q):
                raise ValueError(f"q={q} must be an odd prime")
            half = (q - 1) // 2
            for p in pmfs:
                if any(abs(int(v)) > half for v in p):
                    raise ValueError("finite-field pmfs must use centered residues")
        self.q = q
        self.pmfs = tuple({int(v): p for v, p in pm.items() if p > 0} for pm in pmfs)
        for pm in self.pmfs:
            if abs(float(sum(pm.values())) - 1.0) > 1e-12:
                raise ValueError("user pmf does not sum to 1")
        self.modulation = tuple(dict(m) for m in modulation) if modulation is not None else None
        self._channel = channel
        self._cache: dict = {}

    @property
    def K(self) -> int:
        return len(self.pmfs)

    @property
    def modulus(self) -> Optional[int]:
        return self.q

    def channel(self, x: tuple) -> Mapping[Hashable, Any]:
        if callable(self._channel):
            return self._channel(x)
        return self._channel[tuple(x)]

    def channel_table(self) -> dict[tuple, dict]:
        """Channel as an explicit table over all reachable input tuples."""
        if not callable(self._channel):
            return {tuple(k): dict(v) for k, v in self._channel.items()}
        alph = [sorted(pm) for pm in self.pmfs]
        table = {}
        for u in itertools.product(*alph):
            x = tuple(self.modulation[k][v] for k, v in enumerate(u)) if self.modulation else u
            table[x] = dict(self.channel(x))
        return table

    @property
    def source(self) -> JointDiscreteSource:
        if "source" not in self._cache:
            n = math.prod(len(p) for p in self.pmfs)
            if not callable(self._channel):
                n *= max((len(v) for v in self._channel.values()), default=1)
            if n > MAX_JOINT_STATES:
                raise BudgetExceeded(f"joint state space exceeds {MAX_JOINT_STATES}")
            self._cache["source"] = JointDiscreteSource.from_channel(self.pmfs, self.channel, self.modulation)
        return self._cache["source"]

    def arrays(self):
        if "arrays" not in self._cache:
            U, Y, P = self.source.arrays()
            self._cache["arrays"] = (U, Y, P, self.source.entropy_y())
        return self._cache["arrays"]


class IntegerSpec(DiscreteSpec):
    kind = "integer"

    def __init__(self, pmfs, channel, modulation=None):
        super().__init__(pmfs, channel, modulation, q=None)


class FiniteFieldSpec(DiscreteSpec):
    kind = "finite_field"

    def __init__(self, q, pmfs, channel, modulation=None):
        super().__init__(pmfs, channel, modulation, q=q)


class GaussianSpec:
    """y = H x + z with unit-variance noise and x_k ~ N(0, P_k).

    The auxiliary variables are u_k = beta_k x_k, so H(U_k) is the
    differential entropy of N(0, beta_k^2 P_k).
    """

    kind = "gaussian"
    modulus = None

    def __init__(self, H, P, beta=None):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        K = H.shape[1]
        self.H = H
        self.P = np.broadcast_to(np.asarray(P, dtype=float), (K,)).copy()
        self.beta = np.ones(K) if beta is None else np.broadcast_to(np.asarray(beta, dtype=float), (K,)).copy()
        self.source: GaussianSource = gaussian_conditional_covariance(H, self.P, self.beta)
        self._cache: dict = {}

    @property
    def K(self) -> int:
        return self.H.shape[1]


ChannelSpec = Union[IntegerSpec, FiniteFieldSpec, GaussianSpec]


@dataclass(frozen=True)
class SearchBudget:
    b_max: int = 3
    c_max: int = 5
    lb_range: Optional[tuple[int, int]] = None
    det_cap: Optional[int] = None

    def __post_init__(self):
        if self.b_max < 1 or self.c_max < 1:
            raise ValueError("budget entry bounds must be positive")
        if self.lb_range is not None and (self.lb_range[0] < 1 or self.lb_range[0] > self.lb_range[1]):
            raise ValueError("invalid L_B range")
        if self.det_cap is not None and self.det_cap < 1:
            raise ValueError("det_cap must be positive")


# ---------------------------------------------------------------- entropy terms


def user_entropies(spec: ChannelSpec) -> np.ndarray:
    if isinstance(spec, GaussianSpec):
        return 0.5 * np.log2(2 * math.pi * math.e * spec.beta**2 * spec.P)
    return np.array([shannon_entropy(p) for p in spec.pmfs])


def _space_key(W: np.ndarray, modulus: Optional[int]) -> tuple:
    W = np.asarray(W, dtype=np.int64)
    if modulus is not None:
        return tuple(map(tuple, rref_mod(IntMatrix(W.tolist(), ncols=W.shape[1]), modulus)))
    if W.shape[0] == 1:
        row = [int(x) for x in W[0]]
        g = math.gcd(*row)
        if g == 0:
            return ()
        lead = next(x for x in row if x)
        s = g if lead > 0 else -g
        return (tuple(x // s for x in row),)
    return saturated_basis(IntMatrix(W.tolist(), ncols=W.shape[1])).rows()


def conditional_entropy_term(spec: ChannelSpec, Q) -> float:
    """H_Q(u | Y) in bits through the reference (non-vectorized) path."""
    Q = IntMatrix.coerce(Q)
    if Q.ncols != spec.K:
        raise ValueError("matrix width differs from the user count")
    if Q.nrows == 0:
        return 0.0
    if isinstance(spec, GaussianSpec):
        return gaussian_algebraic_entropy(Q, spec.source, conditional=True)
    return conditional_algebraic_entropy_discrete(Q, spec.source, spec.modulus)


def _int_dets(M: np.ndarray) -> np.ndarray:
    """Exact determinants of a batch of small (r <= 3) int64 matrices."""
    r = M.shape[-1]
    if r == 1:
        return M[..., 0, 0]
    if r == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if r == 3:
        a = M
        return (
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
        )
    raise ValueError("batched exact determinants support r <= 3")


def max_minor_gcd(W: np.ndarray) -> np.ndarray:
    """d_r(W) for a batch (N, r, K) of full-row-rank integer matrices."""
    N, r, K = W.shape
    g = np.zeros(N, dtype=np.int64)
    for cols in itertools.combinations(range(K), r):
        g = np.gcd(g, np.abs(_int_dets(W[:, :, list(cols)])))
    return g


def gaussian_entropy_batch(spec: GaussianSpec, W: np.ndarray) -> np.ndarray:
    """Closed form (r/2)log2(2 pi e) + (1/2)log2 det(W K W^T) - log2 d_r(W)."""
    W = np.asarray(W, dtype=np.int64)
    N, r, _ = W.shape
    Kc = spec.source.cond_cov
    Wf = W.astype(float)
    G = Wf @ Kc @ np.swapaxes(Wf, 1, 2)
    sign, logdet = np.linalg.slogdet(G)
    d = max_minor_gcd(W)
    out = 0.5 * r * LOG2_2PIE + 0.5 * logdet / math.log(2) - np.log2(np.where(d > 0, d, 1))
    out[(sign <= 0) | (d == 0)] = np.nan
    return out


def _discrete_entropy_numpy(spec: DiscreteSpec, W: np.ndarray) -> float:
    U, Y, P, HY = spec.arrays()
    V = U @ W.T
    if spec.modulus is not None:
        V %= spec.modulus
    keys = np.concatenate([V, Y[:, None]], axis=1)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    ny = len(np.unique(Y))
    if len(counts) == ny:
        return 0.0
    probs = np.bincount(inv.ravel(), weights=P)
    return math.fsum(-p * math.log2(p) for p in probs if p > 0) - HY


def entropy_batch(spec: ChannelSpec, W: np.ndarray) -> np.ndarray:
    """H_W(u | Y) for a batch of full-row-rank coefficient matrices (N, r, K)."""
    W = np.asarray(W, dtype=np.int64)
    if W.shape[1] == 0:
        return np.zeros(W.shape[0])
    if isinstance(spec, GaussianSpec):
        return gaussian_entropy_batch(spec, W)
    cache = spec._cache.setdefault("cond", {})
    out = np.empty(W.shape[0])
    for i, w in enumerate(W):
        key = _space_key(w, spec.modulus)
        if key not in cache:
            cache[key] = _discrete_entropy_numpy(spec, np.array(key, dtype=np.int64).reshape(len(key), W.shape[2]))
        out[i] = cache[key]
    return out


# ---------------------------------------------------------------- candidate enumeration


def primitive_rows(K: int, bound: int) -> list[tuple[int, ...]]:
    """Integer K-vectors with entries in [-bound, bound], gcd 1, first nonzero entry positive."""
    out = []
    for v in itertools.product(range(-bound, bound + 1), repeat=K):
        nz = [x for x in v if x]
        if nz and nz[0] > 0 and math.gcd(*v) == 1:
            out.append(v)
    return sorted(out, key=lambda v: (max(map(abs, v)), sum(map(abs, v)), tuple(-x for x in v)))


def projective_rows(K: int, q: int) -> list[tuple[int, ...]]:
    """Representatives of the nonzero F_q^K vectors up to scaling (first nonzero = 1)."""
    half = (q - 1) // 2
    out = []
    for v in itertools.product(range(-half, half + 1), repeat=K):
        nz = [x for x in v if x]
        if nz and nz[0] == 1:
            out.append(v)
    return sorted(out, key=lambda v: (max(map(abs, v)), sum(map(abs, v)), tuple(-x for x in v)))


@dataclass(frozen=True)
class _Candidates:
    """Generators Y (N, r, L) of r-dimensional subspaces of Q^L or F_q^L."""

    Y: np.ndarray
    dual_vectors: Optional[np.ndarray]  # (N, L) when Y spans the kernel of a primitive normal d
    exhaustive: bool


@lru_cache(maxsize=None)
def _integer_candidates(L: int, r: int, c_max: int) -> _Candidates:
    Ys, duals = [], []
    if r == 1:
        Ys = [[list(v)] for v in primitive_rows(L, c_max)]
    elif r == L - 1:
        for d in primitive_rows(L, c_max):
            Ys.append(orthogonal_lattice_basis(IntMatrix([d])).transpose().tolist())
            duals.append(d)
    else:
        seen = set()
        for combo in itertools.combinations(primitive_rows(L, c_max), r):
            M = IntMatrix(combo)
            if rank(M) < r:
                continue
            key = saturated_basis(M)
            if key not in seen:
                seen.add(key)
                Ys.append(key.tolist())
    return _Candidates(
        Y=np.array(Ys, dtype=np.int64).reshape(len(Ys), r, L),
        dual_vectors=np.array(duals, dtype=np.int64) if duals else None,
        exhaustive=False,
    )


@lru_cache(maxsize=None)
def _field_candidates(L: int, r: int, q: int) -> _Candidates:
    """Every r-dimensional subspace of F_q^L, as its reduced echelon basis."""
    Ys = []
    for pivots in itertools.combinations(range(L), r):
        free = [(i, j) for i in range(r) for j in range(L) if j > pivots[i] and j not in pivots]
        for vals in itertools.product(range(q), repeat=len(free)):
            C = [[0] * L for _ in range(r)]
            for i, p in enumerate(pivots):
                C[i][p] = 1
            for (i, j), v in zip(free, vals):
                C[i][j] = v
            Ys.append([[mod_centered(x, q) for x in row] for row in C])
    return _Candidates(Y=np.array(Ys, dtype=np.int64).reshape(len(Ys), r, L), dual_vectors=None, exhaustive=True)


@lru_cache(maxsize=None)
def _basis_masks(L: int, r: int) -> dict[int, int]:
    """Bitmask over r-subsets of columns (combinations order) -> matroid index."""
    combos = {c: i for i, c in enumerate(itertools.combinations(range(L), r))}
    return {
        sum(1 << combos[b] for b in m.bases): i
        for i, m in enumerate(enumerate_matroids(L))
        if m.rank == r
    }


def matroid_ids(C: np.ndarray, modulus: Optional[int] = None) -> np.ndarray:
    """Index into enumerate_matroids(L) of the column matroid of each C in a batch (N, r, L)."""
    N, r, L = C.shape
    mask = np.zeros(N, dtype=np.int64)
    for bit, cols in enumerate(itertools.combinations(range(L), r)):
        d = _int_dets(C[:, :, list(cols)])
        if modulus is not None:
            d = d % modulus
        mask |= (d != 0).astype(np.int64) << bit
    lookup = _basis_masks(L, r)
    return np.array([lookup.get(int(m), -1) for m in mask], dtype=np.int64)


# ---------------------------------------------------------------- J term


@dataclass(frozen=True)
class JResult:
    value: float
    C: Optional[IntMatrix]
    truncated: bool


def _as_array(B: IntMatrix) -> np.ndarray:
    return np.array(B.tolist(), dtype=np.int64).reshape(B.nrows, B.ncols)


@lru_cache(maxsize=None)
def _row_space(B: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
    """Saturated basis R of B's rational row space and adj(Z) for B = Z R."""
    R = saturated_basis(B)
    return R, adjugate(lattice_coordinates(B, R))


def _r_constants(spec: GaussianSpec, R: IntMatrix) -> dict:
    """Quadratic-form constants of G = R K R^T for the pruning certificates."""
    cache = spec._cache.setdefault("rconst", {})
    if R not in cache:
        Rf = np.array(R.tolist(), dtype=float)
        G = Rf @ spec.source.cond_cov @ Rf.T
        cache[R] = {
            "lam": float(np.linalg.eigvalsh(G)[0]),
            "dual_factor": float(np.linalg.det(G) * np.linalg.eigvalsh(np.linalg.inv(G))[0]),
        }
    return cache[R]


def _certified(spec: ChannelSpec, R: IntMatrix, cands: _Candidates, r: int, best: float, c_max: int) -> bool:
    """Whether no subspace outside the search box can beat ``best``.

    In coordinates y of the saturated basis R the Gaussian objective for
    r = 1 is y G y^T >= lam_min(G) |y|_inf^2, and for hyperplanes with
    primitive normal d it is det(G) d^T G^{-1} d.  Discrete specs are only
    certified at zero entropy.
    """
    if cands.exhaustive:
        return True
    if not isinstance(spec, GaussianSpec):
        return best <= 0.0
    consts = _r_constants(spec, R)
    target = 2.0 ** (2.0 * (best - 0.5 * r * LOG2_2PIE))
    outside = (c_max + 1) ** 2
    if r == 1:
        return consts["lam"] * outside >= target * (1 - 1e-12)
    if cands.dual_vectors is not None:
        return consts["dual_factor"] * outside >= target * (1 - 1e-12)
    return False


def _normalize_rows(C: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(np.abs(C), axis=1)
    C = C // np.where(g > 0, g, 1)[:, None]
    lead = np.array([row[np.flatnonzero(row)[0]] if row.any() else 1 for row in C])
    return C * np.sign(lead)[:, None]


def _j_table(spec: ChannelSpec, B: IntMatrix, r: int, budget: SearchBudget) -> dict[int, JResult]:
    """Minimum H_{CB}(u|Y) per matroid id (rank r) over the candidate set.

    Over Z the candidates are subspaces of B's row space spanned by rows of
    Y R with |Y|_inf <= c_max, R the saturated row-space basis; the
    representation is C = Y adj(Z), for which C B = det(Z) Y R.  Over F_q
    every subspace is enumerated directly in coefficient space.
    """
    cache = spec._cache.setdefault("jtab", {})
    key = (B, r, budget.c_max, budget.det_cap)
    if key in cache:
        return cache[key]
    L = B.nrows
    q = spec.modulus
    if q is not None:
        R = B
        cands = _field_candidates(L, r, q)
        C = cands.Y
        half = (q - 1) // 2
        W = (np.einsum("nrl,lk->nrk", C, _as_array(B)) + half) % q - half
    else:
        R, adjZ = _row_space(B)
        cands = _integer_candidates(L, r, budget.c_max)
        W = np.einsum("nrl,lk->nrk", cands.Y, _as_array(R))
        C = np.einsum("nrl,lm->nrm", cands.Y, _as_array(adjZ))
    ids = matroid_ids(C, q)
    vals = entropy_batch(spec, W)
    if budget.det_cap is not None and q is None:
        d = max_minor_gcd(np.stack([_normalize_rows(c) for c in C]))
        vals = np.where(d <= budget.det_cap, vals, np.nan)
    table: dict[int, JResult] = {}
    for mid in np.unique(ids):
        sel = np.flatnonzero((ids == mid) & ~np.isnan(vals))
        if mid < 0 or sel.size == 0:
            continue
        i = sel[np.argmin(vals[sel])]
        best = float(vals[i])
        Ci = C[i] if q is not None else _normalize_rows(C[i])
        table[int(mid)] = JResult(best, IntMatrix(Ci.tolist(), ncols=L), not _certified(spec, R, cands, r, best, budget.c_max))
    cache[key] = table
    return table


def j_term(spec: ChannelSpec, B, M: Matroid, budget: SearchBudget = SearchBudget()) -> JResult:
    """inf over representations C of M of H_{CB}(u|Y), over the bounded subspace search."""
    B = IntMatrix.coerce(B)
    if M.ground_size != B.nrows:
        raise ValueError("matroid ground set must index the rows of B")
    if M.rank >= B.nrows:
        raise ValueError("the free matroid has no J term")
    if M.rank == 0:
        return JResult(0.0, IntMatrix.empty(B.nrows), False)
    mid = enumerate_matroids(B.nrows).index(M)
    table = _j_table(spec, B, M.rank, budget)
    if mid in table:
        return table[mid]
    # Over F_q a missing matroid is not representable; over Z the box was too small.
    return JResult(math.inf, None, spec.modulus is None)


# ---------------------------------------------------------------- simultaneous region


@dataclass(frozen=True)
class BoundRecord:
    B: tuple[tuple[int, ...], ...]
    matroid: str
    S: tuple[int, ...]
    T: tuple[int, ...]
    bound: float
    user_entropy: float
    h_B: float
    J: float
    C: Optional[tuple[tuple[int, ...], ...]]
    j_truncated: bool


@dataclass
class RegionReport:
    region: rg.RateRegion
    ledger: list[BoundRecord] = field(default_factory=list)
    c_truncated: bool = False
    b_truncated: bool = False
    B_list: list[tuple[tuple[int, ...], ...]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        return self.c_truncated or self.b_truncated


def _cond_B(spec: ChannelSpec, B: IntMatrix) -> float:
    cache = spec._cache.setdefault("hB", {})
    if B not in cache:
        cache[B] = conditional_entropy_term(spec, B)
    return cache[B]


@lru_cache(maxsize=None)
def _column_bases(rows: tuple[tuple[int, ...], ...], modulus: Optional[int]) -> tuple[tuple[int, ...], ...]:
    return vector_matroid(IntMatrix(rows), modulus).bases


def _Q_structure(spec: ChannelSpec, B: IntMatrix, budget: SearchBudget):
    """Per matroid: the union options (rhs vectors) and their ledger records."""
    K = spec.K
    L = B.nrows
    g = rg.geometry(K)
    H = user_entropies(spec)
    hB = _cond_B(spec, B)
    Btup = B.rows()
    out = []
    truncated = False
    for M in enumerate_matroids(L, exclude_full_rank=True):
        jr = j_term(spec, B, M, budget)
        truncated |= jr.truncated
        if not math.isfinite(jr.value):
            continue
        options, records = [], []
        for S in dual(M).bases:
            rhs = np.full(g.nm, np.inf)
            recs = []
            for T in _column_bases(tuple(Btup[i] for i in S), spec.modulus):
                hT = float(sum(H[k] for k in T))
                b = hT - hB + jr.value
                i = g.index[rg._mask(T)]
                rhs[i] = min(rhs[i], b)
                recs.append(
                    BoundRecord(
                        B=Btup,
                        matroid=M.label(),
                        S=S,
                        T=T,
                        bound=b,
                        user_entropy=hT,
                        h_B=hB,
                        J=jr.value,
                        C=jr.C.rows() if jr.C is not None else None,
                        j_truncated=jr.truncated,
                    )
                )
            options.append(rhs)
            records.append(recs)
        out.append((np.array(options), records))
    return out, truncated


def _assemble(K: int, structure) -> np.ndarray:
    """Supports of the DNF of the intersection over matroids of unions over S."""
    g = rg.geometry(K)
    base = np.full(g.nm, np.inf)
    branching = []
    for options, _ in structure:
        if options.shape[0] == 1:
            base = np.minimum(base, options[0])
        else:
            branching.append(options)
    F, empty = rg.tighten(K, base[None, :])
    if empty[0]:
        return np.empty((0, g.nm))
    for options in branching:
        R = np.minimum(F[:, None, :], options[None, :, :]).reshape(-1, g.nm)
        S, empty = rg.tighten(K, R)
        S = S[~empty]
        if S.shape[0] == 0:
            return S
        F = rg.prune(S)
    return F


def simultaneous_Q(spec: ChannelSpec, B, budget: SearchBudget = SearchBudget()) -> RegionReport:
    """Q(B): intersection over non-free matroids M of the union over S of the T-bounds."""
    B = IntMatrix.coerce(B)
    K = spec.K
    if B.ncols != K:
        raise ValueError("B must have one column per user")
    if B.nrows > 4:
        raise ValueError("at most 4 rows (matroid enumeration limit)")
    if rank(B, spec.modulus) != B.nrows:
        raise ValueError("B must have full row rank")
    structure, truncated = _Q_structure(spec, B, budget)
    S = _assemble(K, structure)
    ledger = [r for _, recs in structure for rs in recs for r in rs]
    return RegionReport(
        region=rg.RateRegion.from_supports(K, S) if S.shape[0] else rg.RateRegion.empty_region(K),
        ledger=ledger,
        c_truncated=truncated,
        b_truncated=False,
        B_list=[B.rows()],
    )


def admissible_B(spec: ChannelSpec, A, budget: SearchBudget) -> list[IntMatrix]:
    """Candidate B (sets of normalized rows) whose row lattice contains A's rows."""
    A = IntMatrix.coerce(A)
    K = spec.K
    q = spec.modulus
    rA = rank(A, q)
    if rA != A.nrows:
        raise ValueError("A must have full row rank")
    lo, hi = budget.lb_range or (rA, K)
    lo, hi = max(lo, rA), min(hi, K, 4)
    rows = projective_rows(K, q) if q is not None else primitive_rows(K, budget.b_max)
    out = []
    for L in range(lo, hi + 1):
        for combo in itertools.combinations(rows, L):
            B = IntMatrix(combo)
            if rank(B, q) != L:
                continue
            if row_lattice_contains(B, A, q):
                out.append(B)
    return out


def simultaneous_R(
    spec: ChannelSpec,
    A,
    budget: SearchBudget = SearchBudget(),
    progress: Optional[Callable[[int, int], None]] = None,
) -> RegionReport:
    """Union of Q(B) over admissible B within the budget."""
    K = spec.K
    g = rg.geometry(K)
    Bs = admissible_B(spec, A, budget)
    frontier = np.empty((0, g.nm))
    owner: list[int] = []
    structures = []
    truncated = False
    for n, B in enumerate(Bs):
        structure, tr = _Q_structure(spec, B, budget)
        truncated |= tr
        S = _assemble(K, structure)
        structures.append(structure)
        if S.shape[0]:
            fresh = ~rg.dominated(S, frontier)
            S = S[fresh]
        if S.shape[0]:
            keep = ~rg.dominated(frontier, S) if frontier.shape[0] else np.zeros(0, dtype=bool)
            frontier = np.vstack([frontier[keep], S])
            owner = [o for o, k in zip(owner, keep) if k] + [n] * S.shape[0]
            if S.shape[0] > 1:
                S2 = rg.prune(frontier)
                if S2.shape[0] != frontier.shape[0]:
                    idx = [int(np.flatnonzero(np.all(frontier == s, axis=1))[0]) for s in S2]
                    owner = [owner[i] for i in idx]
                    frontier = S2
        if progress:
            progress(n + 1, len(Bs))
    contributing = sorted(set(owner))
    ledger = [
        r for n in contributing for _, recs in structures[n] for rs in recs for r in rs
    ]
    return RegionReport(
        region=rg.RateRegion.from_supports(K, frontier) if frontier.shape[0] else rg.RateRegion.empty_region(K),
        ledger=ledger,
        c_truncated=truncated,
        b_truncated=spec.modulus is None,
        B_list=[Bs[n].rows() for n in contributing],
    )


# ---------------------------------------------------------------- sequential region


def sequential_box(spec: ChannelSpec, B) -> tuple[np.ndarray, list[float]]:
    """Per-user rate caps for decoding the rows of B in order (inf for absent users)."""
    B = IntMatrix.coerce(B)
    H = user_entropies(spec)
    caps = np.full(spec.K, np.inf)
    prev = 0.0
    hs = []
    for j in range(1, B.nrows + 1):
        cur = _cond_B(spec, B.select_rows(range(j)))
        hs.append(cur)
        for k in range(spec.K):
            b = B[j - 1, k] % spec.modulus if spec.modulus else B[j - 1, k]
            if b:
                caps[k] = min(caps[k], H[k] + prev - cur)
        prev = cur
    return caps, hs


def _box_polyhedron(K: int, caps: np.ndarray) -> rg.Polyhedron:
    return rg.Polyhedron(K, [((k,), float(c)) for k, c in enumerate(caps) if math.isfinite(c)])


def sequential_region(spec: ChannelSpec, A, budget: SearchBudget = SearchBudget()) -> RegionReport:
    """Union of sequential-decoding boxes over admissible B and all row orders."""
    K = spec.K
    boxes = []
    Bs = []
    for B in admissible_B(spec, A, budget):
        for perm in itertools.permutations(range(B.nrows)):
            Bp = B.select_rows(perm)
            caps, _ = sequential_box(spec, Bp)
            boxes.append(_box_polyhedron(K, caps))
            Bs.append(Bp.rows())
    reg = rg.RateRegion(K, boxes)
    keep = {tuple(p.support) for p in reg.polyhedra}
    used = [b for b, p in zip(Bs, boxes) if not p.empty and tuple(p.support) in keep]
    return RegionReport(region=reg, ledger=[], c_truncated=False, b_truncated=spec.modulus is None, B_list=used)


# ---------------------------------------------------------------- two-user special cases


def _require_two(spec: ChannelSpec) -> None:
    if spec.K != 2:
        raise ValueError("two-user evaluator needs K = 2")


def mac_region(spec: ChannelSpec) -> rg.RateRegion:
    _require_two(spec)
    H = user_entropies(spec)
    huy = conditional_entropy_term(spec, IntMatrix.identity(2))
    h1 = conditional_entropy_term(spec, [[1, 0]])
    h2 = conditional_entropy_term(spec, [[0, 1]])
    P = rg.Polyhedron(
        2,
        [((0, 1), H[0] + H[1] - huy), ((0,), H[0] - huy + h2), ((1,), H[1] - huy + h1)],
    )
    return rg.RateRegion(2, [P])


def lmac_region(spec: ChannelSpec, budget: SearchBudget = SearchBudget()) -> rg.RateRegion:
    """MAC pentagon intersected with the min-constraint over both-nonzero c."""
    H = user_entropies(spec)
    huy = conditional_entropy_term(spec, IntMatrix.identity(2))
    jr = j_term(spec, IntMatrix.identity(2), Matroid(2, ((0,), (1,))), budget)
    notch = rg.min_constraint_region(2, [H[0] - huy, H[1] - huy], jr.value, [0, 1])
    return rg.intersect(mac_region(spec), notch)


def notch_condition(spec: ChannelSpec, budget: SearchBudget = SearchBudget()) -> Optional[IntMatrix]:
    """A c with both entries nonzero and 2 H_c(u|Y) < H(u|Y), or None."""
    _require_two(spec)
    huy = conditional_entropy_term(spec, IntMatrix.identity(2))
    jr = j_term(spec, IntMatrix.identity(2), Matroid(2, ((0,), (1,))), budget)
    if jr.C is not None and 2 * jr.value < huy - 1e-12:
        return jr.C
    return None


def single_equation_region(spec: ChannelSpec, a, budget: SearchBudget = SearchBudget()) -> rg.RateRegion:
    """R(a) for one equation: MAC plus the rectangle Q(a) when 2 H_a < H(u|Y), else the LMAC region."""
    _require_two(spec)
    a = IntMatrix.coerce(a)
    if a.shape != (1, 2) or 0 in a.row(0):
        raise ValueError("a must be a 1x2 vector with nonzero entries")
    huy = conditional_entropy_term(spec, IntMatrix.identity(2))
    ha = conditional_entropy_term(spec, a)
    if 2 * ha < huy - 1e-12:
        H = user_entropies(spec)
        rect = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), H[0] - ha), ((1,), H[1] - ha)])])
        return rg.union(mac_region(spec), rect)
    return lmac_region(spec, budget)


def naga11_rate(P: float, h, a) -> float:
    """Closed-form common rate (1/2)log2(P / a^T (I/P + h h^T)^{-1} a) + log2 gcd(|a1|, |a2|)."""
    h = np.asarray(h, dtype=float).reshape(-1)
    a_int = [int(x) for x in np.asarray(a).reshape(-1)]
    if not any(a_int) or P <= 0:
        raise ValueError("need nonzero a and positive power")
    a_f = np.array(a_int, dtype=float)
    M = np.linalg.inv(np.eye(len(h)) / P + np.outer(h, h))
    return 0.5 * math.log2(P / float(a_f @ M @ a_f)) + math.log2(math.gcd(*map(abs, a_int)))


# ---------------------------------------------------------------- F_q embedding


@dataclass(frozen=True)
class EmbedInfo:
    q: int
    tau: int
    threshold: int
    threshold_met: bool
    injective_on_support: Optional[bool]


def support_radius(spec: DiscreteSpec) -> int:
    return max(abs(v) for pm in spec.pmfs for v in pm)


def fq_embed(spec: IntegerSpec, q: int, B=None) -> tuple[FiniteFieldSpec, EmbedInfo]:
    """Reduce an integer spec modulo q (centered residues), keeping the channel.

    The returned info records the threshold (2 tau + 1) * max|B_ij| and
    whether reduction mod q is injective on the values taken by B u.
    """
    if q < 3 or not _is_prime(q):
        raise ValueError(f"q={q} must be an odd prime")
    tau = support_radius(spec)
    if q <= 2 * tau:
        raise ValueError("q too small to embed the user alphabets")
    pmfs = [{mod_centered(v, q): p for v, p in pm.items()} for pm in spec.pmfs]
    back = [{mod_centered(v, q): v for v in pm} for pm in spec.pmfs]
    if spec.modulation is not None:
        modulation = [{mod_centered(v, q): m[v] for v in pm} for pm, m in zip(spec.pmfs, spec.modulation)]
        channel = spec.channel_table()
    else:
        # Inputs were the integers themselves: keep feeding the original symbols.
        modulation = [{r: back[k][r] for r in back[k]} for k in range(spec.K)]
        channel = spec.channel_table()
    out = FiniteFieldSpec(q, pmfs, channel, modulation)
    threshold = 2 * tau + 1
    injective = None
    if B is not None:
        B = IntMatrix.coerce(B)
        threshold = (2 * tau + 1) * B.max_abs()
        vals = {tuple(sum(b * x for b, x in zip(row, u)) for row in B.rows()) for u in itertools.product(*[sorted(p) for p in spec.pmfs])}
        injective = len({tuple(v % q for v in t) for t in vals}) == len(vals)
    return out, EmbedInfo(q, tau, threshold, q > threshold, injective)


def next_prime_above(n: int) -> int:
    p = n + 1
    while not _is_prime(p):
        p += 1
    return p
