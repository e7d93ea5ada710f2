"""Algebraic entropy functionals, in bits.

Discrete sources are pushed forward exactly through integer maps; Gaussian
sources use the closed form built on the Smith factor T(Q).  All entropies
are returned as floats in bits.  Sums of -p log p go through math.fsum so
two pmfs that agree up to relabeling give bit-identical entropies.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from .intlab import IntMatrix, smith_normal_form

LOG2_2PIE = math.log2(2 * math.pi * math.e)
Prob = Union[float, Fraction]


class SingularCovarianceError(ValueError):
    pass


def _entropy_of_probs(probs) -> float:
    return math.fsum(-float(p) * math.log2(float(p)) for p in probs if p > 0) + 0.0


class DiscretePmf:
    """Finitely supported pmf over integer vectors (tuples)."""

    def __init__(self, mass: Mapping[tuple, Prob], tol: float = 1e-12):
        clean: dict[tuple, Prob] = {}
        for k, p in mass.items():
            key = tuple(int(x) for x in (k if isinstance(k, tuple) else (k,)))
            if p < 0:
                raise ValueError("negative probability")
            if p > 0:
                clean[key] = clean.get(key, 0) + p
        if not clean:
            raise ValueError("empty support")
        dims = {len(k) for k in clean}
        if len(dims) != 1:
            raise ValueError("support points have different lengths")
        total = sum(clean.values())
        if abs(float(total) - 1.0) > tol:
            raise ValueError(f"probabilities sum to {float(total)}, not 1")
        self.mass = dict(sorted(clean.items()))
        self.dim = dims.pop()

    @classmethod
    def product(cls, marginals: Sequence[Mapping[int, Prob]]) -> "DiscretePmf":
        mass: dict[tuple, Prob] = {(): 1}
        for m in marginals:
            mass = {k + (int(v),): p * q for k, p in mass.items() for v, q in m.items() if q > 0}
        return cls(mass)

    def __len__(self) -> int:
        return len(self.mass)


def shannon_entropy(p) -> float:
    """H in bits for a DiscretePmf, a mapping to probabilities, or a list of probabilities."""
    if isinstance(p, DiscretePmf):
        return _entropy_of_probs(p.mass.values())
    if isinstance(p, Mapping):
        return _entropy_of_probs(p.values())
    return _entropy_of_probs(p)


def _apply(Q: IntMatrix, u: tuple, modulus: Optional[int]) -> tuple:
    out = tuple(sum(a * b for a, b in zip(row, u)) for row in Q.rows())
    if modulus is not None:
        out = tuple(x % modulus for x in out)
    return out


def pushforward(p: DiscretePmf, Q, modulus: Optional[int] = None) -> dict:
    Q = IntMatrix.coerce(Q)
    if Q.ncols != p.dim:
        raise ValueError("matrix width differs from the pmf dimension")
    out: dict = defaultdict(int)
    for u, pr in p.mass.items():
        out[_apply(Q, u, modulus)] += pr
    return dict(out)


def algebraic_entropy_discrete(Q, p: DiscretePmf, modulus: Optional[int] = None) -> float:
    """H(Qu) by exact pushforward (arithmetic mod q when a modulus is given)."""
    return shannon_entropy(pushforward(p, Q, modulus))


class JointDiscreteSource:
    """Joint pmf of (u, Y) with u an integer K-vector and Y a hashable symbol."""

    def __init__(self, states: Sequence[tuple[tuple, Hashable, Prob]], tol: float = 1e-12):
        merged: dict = defaultdict(int)
        for u, y, p in states:
            if p < 0:
                raise ValueError("negative probability")
            if p > 0:
                merged[(tuple(int(x) for x in u), y)] += p
        if abs(float(sum(merged.values())) - 1.0) > tol:
            raise ValueError("joint probabilities do not sum to 1")
        self.states = [(u, y, p) for (u, y), p in merged.items()]
        self.K = len(self.states[0][0])

    @classmethod
    def from_channel(
        cls,
        pmfs: Sequence[Mapping[int, Prob]],
        channel: Callable[[tuple], Mapping[Hashable, Prob]],
        modulation: Optional[Sequence[Mapping[int, Hashable]]] = None,
    ) -> "JointDiscreteSource":
        """Independent users, per-user modulation x_k(u_k), then P(y | x)."""
        prior = DiscretePmf.product(pmfs)
        states = []
        for u, pu in prior.mass.items():
            x = tuple(modulation[k][v] for k, v in enumerate(u)) if modulation else u
            for y, py in channel(x).items():
                states.append((u, y, pu * py))
        return cls(states)

    def marginal_u(self) -> DiscretePmf:
        out: dict = defaultdict(int)
        for u, _, p in self.states:
            out[u] += p
        return DiscretePmf(out)

    def entropy_y(self) -> float:
        out: dict = defaultdict(int)
        for _, y, p in self.states:
            out[y] += p
        return shannon_entropy(out)

    def arrays(self):
        """(U int64 array, Y index array, float probabilities) in state order."""
        U = np.array([u for u, _, _ in self.states], dtype=np.int64).reshape(len(self.states), self.K)
        labels = {}
        Y = np.array([labels.setdefault(y, len(labels)) for _, y, _ in self.states], dtype=np.int64)
        P = np.array([float(p) for _, _, p in self.states])
        return U, Y, P


def conditional_algebraic_entropy_discrete(Q, s: JointDiscreteSource, modulus: Optional[int] = None) -> float:
    """H(Qu | Y) = H(Qu, Y) - H(Y), by exact marginalization."""
    Q = IntMatrix.coerce(Q)
    if Q.ncols != s.K:
        raise ValueError("matrix width differs from the source dimension")
    joint: dict = defaultdict(int)
    ys: dict = defaultdict(int)
    for u, y, p in s.states:
        joint[(_apply(Q, u, modulus), y)] += p
        ys[y] += p
    if len(joint) == len(ys):
        return 0.0
    return shannon_entropy(joint) - shannon_entropy(ys)


@dataclass(frozen=True)
class GaussianSource:
    """Zero-mean Gaussian u with covariance, plus an optional posterior covariance given Y."""

    cov: np.ndarray
    cond_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("cov", "cond_cov"):
            m = getattr(self, name)
            if m is None:
                continue
            m = np.atleast_2d(np.asarray(m, dtype=float))
            if m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=1e-12, rtol=0):
                raise ValueError(f"{name} must be symmetric")
            try:
                np.linalg.cholesky(m)
            except np.linalg.LinAlgError as exc:
                raise SingularCovarianceError(f"{name} is not positive definite") from exc
            object.__setattr__(self, name, m)

    @property
    def K(self) -> int:
        return self.cov.shape[0]


def log2_det_spd(G: np.ndarray) -> float:
    """log2 det of a symmetric positive-definite matrix."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(G)
    if w[0] <= 0:
        raise SingularCovarianceError("covariance restricted to the row space is singular")
    if w[-1] / w[0] > 1e12:
        return float(np.sum(np.log2(w)))
    L = np.linalg.cholesky(G)
    return float(2.0 * np.sum(np.log2(np.diag(L))))


def gaussian_algebraic_entropy(Q, g: GaussianSource, conditional: bool = False) -> float:
    """(r/2) log2(2 pi e) + (1/2) log2 det(T Sigma T^T) with T from the Smith form of Q."""
    Q = IntMatrix.coerce(Q)
    if Q.ncols != g.K:
        raise ValueError("matrix width differs from the source dimension")
    sigma = g.cond_cov if conditional else g.cov
    if sigma is None:
        raise ValueError("source carries no conditional covariance")
    F = smith_normal_form(Q)
    if F.rank == 0:
        return 0.0
    T = np.array(F.T.tolist(), dtype=float)
    return 0.5 * F.rank * LOG2_2PIE + 0.5 * log2_det_spd(T @ sigma @ T.T)


def gaussian_conditional_covariance(H, P, beta=None) -> GaussianSource:
    """Posterior covariance of u = x / beta given y = Hx + z (unit noise)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    K = H.shape[1]
    P = np.broadcast_to(np.asarray(P, dtype=float), (K,)).copy()
    beta = np.ones(K) if beta is None else np.broadcast_to(np.asarray(beta, dtype=float), (K,)).copy()
    if np.any(P <= 0) or np.any(beta <= 0):
        raise ValueError("powers and scalings must be positive")
    inner = np.linalg.inv(np.diag(1.0 / P) + H.T @ H)
    D = np.diag(beta)
    cond = D @ inner @ D
    cond = 0.5 * (cond + cond.T)
    return GaussianSource(cov=np.diag(beta ** 2 * P), cond_cov=cond)


def row_codes(w: np.ndarray) -> np.ndarray:
    """One sortable key per row of an integer array (mixed radix when it fits in int64)."""
    w = np.atleast_2d(np.asarray(w, dtype=np.int64))
    if w.shape[1] == 1:
        return w[:, 0].copy()
    lo = w.min(axis=0)
    span = w.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2.0**62:
        code = np.zeros(w.shape[0], dtype=np.int64)
        for j in range(w.shape[1]):
            code = code * span[j] + (w[:, j] - lo[j])
        return code
    w = np.ascontiguousarray(w)
    return w.view(np.dtype((np.void, w.dtype.itemsize * w.shape[1]))).ravel()


def plugin_entropy(w: np.ndarray) -> float:
    """Plug-in entropy (bits) of the empirical distribution of the rows of w."""
    _, counts = np.unique(row_codes(w), return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class QuantizedEstimate:
    value: float
    stderr: float
    bias_bound: float
    support_size: int
    n_samples: int


def quantized_entropy_estimate(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    Q,
    nu: float,
    n_samples: int,
    seed: int,
) -> QuantizedEstimate:
    """Plug-in estimate of H(Q floor(nu u)) from an exact histogram of samples.

    The reported bias bound is support_size / n_samples (in bits, scaled by
    1/ln 2 as in the Miller-Madow term).
    """
    if nu < 1:
        raise ValueError("resolution must be at least 1")
    Q = np.array(IntMatrix.coerce(Q).tolist(), dtype=np.int64)
    rng = np.random.default_rng(seed)
    u = np.asarray(sampler(rng, n_samples), dtype=float).reshape(n_samples, -1)
    z = np.floor(nu * u).astype(np.int64)
    keys = row_codes(z @ Q.T)
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    p = counts / n_samples
    value = float(-np.sum(p * np.log2(p)))
    info = -np.log2(p[inv.ravel()])
    stderr = float(np.std(info) / math.sqrt(n_samples))
    return QuantizedEstimate(
        value=value,
        stderr=stderr,
        bias_bound=len(counts) / (n_samples * math.log(2)),
        support_size=len(counts),
        n_samples=n_samples,
    )
