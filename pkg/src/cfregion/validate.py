"""Numerical checks of the supporting entropy and lattice lemmas.

Every check is deterministic for a given seed and reports the worst margin
it observed.  Margins are signed slacks: a check passes when its worst
margin is non-negative.  Limit statements are checked as finite trajectories
with explicit tolerances, never as limits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import cfcore as cf
from .entropy import (
    LOG2_2PIE,
    DiscretePmf,
    algebraic_entropy_discrete,
    gaussian_algebraic_entropy,
    plugin_entropy,
    shannon_entropy,
)
from .intlab import IntMatrix, InconclusiveSearch, determinant, rank, right_inverse, successive_minima

POW2_SCHEDULE = tuple(2**i for i in range(11))


@dataclass
class CheckReport:
    name: str
    trials: int
    worst_margin: float
    passed: bool
    seed: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(name: str, margins: Iterable[float], seed: int, details: dict, trials: Optional[int] = None) -> CheckReport:
    margins = list(margins)
    worst = min(margins) if margins else math.inf
    return CheckReport(
        name=name,
        trials=len(margins) if trials is None else trials,
        worst_margin=float(worst),
        passed=bool(worst >= 0),
        seed=seed,
        details=details,
    )


# ---------------------------------------------------------------- continuous test sources


def _erfc_cell(a: float, b: float, sigma: float) -> float:
    """P(a <= X < b) for X ~ N(0, sigma^2), evaluated on the accurate tail."""
    s = sigma * math.sqrt(2.0)
    if a >= 0:
        return 0.5 * (math.erfc(a / s) - math.erfc(b / s))
    return 0.5 * (math.erfc(-b / s) - math.erfc(-a / s))


@dataclass(frozen=True)
class ContinuousSource:
    """Scalar test density with closed-form h(u) and exact quantized entropies."""

    name: str
    h: float
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    cell_probs: Callable[[int], np.ndarray]

    def quantized_entropy(self, nu: int) -> float:
        """Exact H(floor(nu u)) in bits."""
        return shannon_entropy(self.cell_probs(nu).tolist())


def gaussian_source(sigma: float = 1.0, name: Optional[str] = None) -> ContinuousSource:
    def cells(nu: int) -> np.ndarray:
        n = int(math.ceil(12 * sigma * nu))
        return np.array([_erfc_cell(i / nu, (i + 1) / nu, sigma) for i in range(-n, n)])

    return ContinuousSource(
        name=name or f"gaussian(sigma={sigma:g})",
        h=0.5 * math.log2(2 * math.pi * math.e * sigma**2),
        sampler=lambda rng, n: rng.normal(0.0, sigma, n),
        cell_probs=cells,
    )


def uniform_source(width: int, name: Optional[str] = None) -> ContinuousSource:
    """Uniform on [0, width) for a positive integer width."""
    return ContinuousSource(
        name=name or f"uniform[0,{width})",
        h=math.log2(width),
        sampler=lambda rng, n: rng.uniform(0.0, width, n),
        cell_probs=lambda nu: np.full(width * nu, 1.0 / (width * nu)),
    )


def default_renyi_sources() -> list[ContinuousSource]:
    return [gaussian_source(1.0), gaussian_source(0.3), uniform_source(1), uniform_source(2)]


def check_renyi(
    sources: Optional[Sequence[ContinuousSource]] = None,
    nu_schedule: Sequence[int] = POW2_SCHEDULE,
    n_samples: int = 10**6,
    seed: int = 7,
    tol: float = 0.02,
) -> CheckReport:
    """Sandwich h <= S_nu <= H(floor u) and the chain S_{m nu} <= S_nu.

    S_nu = H(floor(nu u)) - log2 nu.  The sandwich and chain are checked on
    exact cell probabilities (slack 1e-12).  A plug-in estimate from
    n_samples draws must stay within tol of the exact trajectory and its
    terminal value within tol of h.
    """
    sources = list(sources) if sources is not None else default_renyi_sources()
    nus = sorted(set(int(v) for v in nu_schedule))
    if nus[0] < 1:
        raise ValueError("resolutions must be positive integers")
    rng = np.random.default_rng(seed)
    margins, details = [], {}
    for src in sources:
        S = [src.quantized_entropy(nu) - math.log2(nu) for nu in nus]
        H0 = src.quantized_entropy(1)
        u = src.sampler(rng, n_samples)
        S_mc = [plugin_entropy(np.floor(nu * u).astype(np.int64)[:, None]) - math.log2(nu) for nu in nus]
        sandwich = [min(s - src.h, H0 - s) + 1e-12 for s in S]
        chain = [
            S[i] - S[j] + 1e-12
            for i in range(len(nus))
            for j in range(i + 1, len(nus))
            if nus[j] % nus[i] == 0
        ]
        agree = [tol - abs(a - b) for a, b in zip(S_mc, S)]
        terminal = tol - abs(S_mc[-1] - src.h)
        margins += sandwich + chain + agree + [terminal]
        details[src.name] = {
            "h": src.h,
            "nu": nus,
            "S_exact": S,
            "S_estimate": S_mc,
            "terminal_gap": abs(S_mc[-1] - src.h),
        }
    return _report("renyi", margins, seed, details, trials=len(sources))


# ---------------------------------------------------------------- entropy difference bound


def _random_full_row_rank(rng: np.random.Generator, m: int, n: int, bound: int) -> IntMatrix:
    while True:
        T = IntMatrix(rng.integers(-bound, bound + 1, size=(m, n)).tolist())
        if rank(T) == m:
            return T


def _pmf_entropy_of_rows(keys: np.ndarray, probs: np.ndarray) -> float:
    out: dict = {}
    for k, p in zip(map(tuple, keys.tolist()), probs.tolist()):
        out[k] = out.get(k, 0.0) + p
    return shannon_entropy(out)


def check_entropy_difference_bound(trials: int = 1000, seed: int = 7) -> CheckReport:
    """|H(T floor v) - H(floor(T v))| <= m log2(||T||_1 / m) on random finite-atom v.

    ||T||_1 is the entrywise absolute sum.  The bound only uses that the two
    variables differ by an integer vector with at most prod_i ||t_i||_1
    values, so it holds for every v; atoms make both entropies exact.
    """
    rng = np.random.default_rng(seed)
    margins = []
    worst = None
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, min(3, n) + 1))
        T = _random_full_row_rank(rng, m, n, 5)
        Ta = np.array(T.tolist(), dtype=np.int64)
        atoms = int(rng.integers(1, 41))
        scale = float(rng.uniform(0.5, 8.0))
        V = rng.uniform(-scale, scale, size=(atoms, n))
        w = rng.dirichlet(np.ones(atoms))
        lhs = abs(
            _pmf_entropy_of_rows(np.floor(V).astype(np.int64) @ Ta.T, w)
            - _pmf_entropy_of_rows(np.floor(V @ Ta.T).astype(np.int64), w)
        )
        rhs = m * math.log2(np.abs(Ta).sum() / m)
        margin = rhs - lhs + 1e-12
        margins.append(margin)
        if worst is None or margin < worst[0]:
            worst = (margin, T.tolist(), lhs, rhs)
    details = {"violations": sum(m < 0 for m in margins)}
    if worst:
        details.update(worst_T=worst[1], worst_lhs=worst[2], worst_rhs=worst[3])
    return _report("entropy_diff", margins, seed, details)


# ---------------------------------------------------------------- right-invertible discretization


def check_makkuva_wu(
    cases: Optional[Sequence[IntMatrix]] = None,
    nu_schedule: Sequence[int] = POW2_SCHEDULE,
    n_samples: int = 10**6,
    seed: int = 7,
    tol: float = 0.05,
) -> CheckReport:
    """Trajectory of D_nu = H(T floor(nu u)) - H(floor(nu T u)) on iid standard Gaussians.

    Each T must be right-invertible; the terminal |D| must be below tol.
    """
    if cases is None:
        cases = [IntMatrix([[1, 1]]), IntMatrix([[1, 0, 1], [0, 1, 1]]), IntMatrix.identity(2)]
    rng = np.random.default_rng(seed)
    margins, details = [], {}
    for T in map(IntMatrix.coerce, cases):
        if right_inverse(T) is None:
            raise ValueError(f"{T.tolist()} is not right-invertible")
        Ta = np.array(T.tolist(), dtype=np.int64)
        u = rng.standard_normal((n_samples, T.ncols))
        Tu = u @ Ta.T.astype(float)
        traj = []
        for nu in nu_schedule:
            a = plugin_entropy(np.floor(nu * u).astype(np.int64) @ Ta.T)
            b = plugin_entropy(np.floor(nu * Tu).astype(np.int64))
            traj.append(a - b)
        margins.append(tol - abs(traj[-1]))
        details[str(T.tolist())] = {"nu": list(nu_schedule), "discrepancy": traj}
    return _report("makkuva_wu", margins, seed, details)


# ---------------------------------------------------------------- discrete sources


def _scaled(p: DiscretePmf, nu: int) -> DiscretePmf:
    return DiscretePmf({tuple(nu * x for x in u): pr for u, pr in p.mass.items()})


def default_discrete_cases(seed: int) -> list[tuple[str, DiscretePmf, IntMatrix]]:
    half = Fraction(1, 2)
    uni2 = DiscretePmf.product([{0: half, 1: half}] * 2)
    cases = [
        ("uniform{0,1}^2, Q=[1,1]", uni2, IntMatrix([[1, 1]])),
        ("point mass", DiscretePmf({(3, -1): Fraction(1)}), IntMatrix([[1, 1]])),
        ("uniform{0,1}^2, Q=I", uni2, IntMatrix.identity(2)),
    ]
    rng = np.random.default_rng(seed)
    for i in range(5):
        K = int(rng.integers(1, 4))
        marg = []
        for _ in range(K):
            vals = sorted(set(rng.integers(-3, 4, size=int(rng.integers(1, 5))).tolist()))
            wts = rng.integers(1, 6, size=len(vals)).tolist()
            marg.append({v: Fraction(w, sum(wts)) for v, w in zip(vals, wts)})
        m = int(rng.integers(1, K + 1))
        Q = IntMatrix(rng.integers(-2, 3, size=(m, K)).tolist())
        cases.append((f"random-{i}", DiscretePmf.product(marg), Q))
    return cases


def check_discrete_lemma(
    cases: Optional[Sequence[tuple[str, DiscretePmf, IntMatrix]]] = None,
    nus: Iterable[int] = range(1, 65),
    seed: int = 7,
) -> CheckReport:
    """For integer u: H(Q floor(nu u)) = H(Q u) exactly, so H / log2 nu decays like 1/log2 nu."""
    cases = list(cases) if cases is not None else default_discrete_cases(seed)
    nus = list(nus)
    margins, details = [], {}
    for name, p, Q in cases:
        base = algebraic_entropy_discrete(Q, p)
        values = [algebraic_entropy_discrete(Q, _scaled(p, nu)) for nu in nus]
        exact = all(v == base for v in values)
        ratios = [v / math.log2(nu) for v, nu in zip(values, nus) if nu >= 2]
        monotone = all(b <= a for a, b in zip(ratios, ratios[1:]))
        margins.append(0.0 if exact and monotone else -1.0)
        details[name] = {"H": base, "exact": exact, "ratio_at_max_nu": ratios[-1] if ratios else None}
    return _report("discrete", margins, seed, details)


# ---------------------------------------------------------------- lattice counting


def _count_in_box(F: np.ndarray, half: np.ndarray, shift: np.ndarray, limit: int = 2_000_000) -> Optional[int]:
    """|{F z : |F z - shift|_inf <= half}| by exhaustive enumeration (None if the box is too big)."""
    pinv = np.linalg.pinv(F)
    reach = np.abs(pinv) @ (np.abs(shift) + half) + 1e-9
    R = np.floor(reach).astype(int)
    if float(np.prod(2 * R + 1)) > limit:
        return None
    axes = [np.arange(-r, r + 1) for r in R]
    Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, F.shape[1])
    X = Z @ F.T
    inside = np.all(np.abs(X - shift) <= half + 1e-12, axis=1)
    return int(inside.sum())


def _gram_schmidt_norms(F: np.ndarray) -> np.ndarray:
    G = []
    for f in F.T:
        g = f.astype(float).copy()
        for h in G:
            g -= (f @ h) / (h @ h) * h
        G.append(g)
    return np.array([np.linalg.norm(g) for g in G])


def _minima(F: IntMatrix, norm: str) -> list:
    for radius in (3, 6, 12, 24):
        try:
            return successive_minima(F, norm=norm, radius=radius)
        except InconclusiveSearch:
            continue
    raise InconclusiveSearch("successive minima not certified up to radius 24")


def check_lattice_counting(trials: int = 1000, seed: int = 7) -> CheckReport:
    """Van der Corput, Minkowski's second theorem and the Gram-Schmidt counting bound.

    Per trial, on a random full-rank integer lattice of dimension d <= 3:
    vol(K) < (|L cap K| + 1) 2^(d-1) det(L) for a random closed box K;
    (2^d/d!) det <= prod(lambda_i) vol(B) <= 2^d det for the cube and the
    Euclidean ball B (exact Fractions for the cube); and, for a random tall
    basis F, |L(F) cap (rho S_inf + t)| <= prod ceil(2 sqrt(K) rho / |g_l|).
    """
    rng = np.random.default_rng(seed)
    margins = []
    violations = {"van_der_corput": 0, "minkowski_cube": 0, "minkowski_ball": 0, "point_counting": 0}
    for _ in range(trials):
        d = int(rng.integers(1, 4))
        while True:
            F = IntMatrix(rng.integers(-3, 4, size=(d, d)).tolist())
            det = abs(determinant(F))
            if det:
                break
        Fa = np.array(F.tolist(), dtype=float)

        while True:
            half = rng.uniform(0.3, 4.0, size=d)
            count = _count_in_box(Fa, half, np.zeros(d))
            if count is not None:
                break
        vol = float(np.prod(2 * half))
        rhs = (count + 1) * 2 ** (d - 1) * det
        m = (rhs - vol) / rhs
        violations["van_der_corput"] += m <= 0
        margins.append(m)

        lam = _minima(F, "infinity")
        prod = math.prod(lam, start=Fraction(1)) * 2**d
        lo, hi = Fraction(2**d * det, math.factorial(d)), Fraction(2**d * det)
        ok = lo <= prod <= hi
        violations["minkowski_cube"] += not ok
        margins.append(float(min(prod - lo, hi - prod) / hi))

        lam2 = _minima(F, "euclidean")
        ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        prod2 = math.prod(lam2) * ball
        m2 = min(prod2 - float(lo), float(hi) - prod2) / float(hi) + 1e-12
        violations["minkowski_ball"] += m2 < 0
        margins.append(m2)

        K = int(rng.integers(1, 4))
        L = int(rng.integers(1, K + 1))
        while True:
            G = rng.integers(-3, 4, size=(K, L))
            if np.linalg.matrix_rank(G) == L:
                break
        rho = float(rng.uniform(0.5, 3.0))
        t = rng.uniform(-2.0, 2.0, size=K)
        n_pts = _count_in_box(G.astype(float), np.full(K, rho), t)
        if n_pts is None:
            continue
        bound = math.prod(math.ceil(2 * math.sqrt(K) * rho / g) for g in _gram_schmidt_norms(G))
        violations["point_counting"] += n_pts > bound
        margins.append((bound - n_pts) / bound)
    return _report("lattice", margins, seed, {"violations": violations}, trials=trials)


# ---------------------------------------------------------------- chain rule and mutual information


def adder_spec() -> cf.IntegerSpec:
    half = Fraction(1, 2)
    return cf.IntegerSpec([{0: half, 1: half}] * 2, lambda x: {x[0] + x[1]: Fraction(1)})


def pair_spec() -> cf.IntegerSpec:
    half = Fraction(1, 2)
    return cf.IntegerSpec([{0: half, 1: half}] * 2, lambda x: {tuple(x): Fraction(1)})


def random_discrete_spec(rng: np.random.Generator, K: int = 2) -> cf.IntegerSpec:
    pmfs = []
    for _ in range(K):
        vals = sorted(set(rng.integers(-2, 3, size=int(rng.integers(1, 4))).tolist()))
        wts = rng.integers(1, 5, size=len(vals)).tolist()
        pmfs.append({v: Fraction(w, sum(wts)) for v, w in zip(vals, wts)})
    h = rng.integers(-2, 3, size=K).tolist()
    flip = Fraction(int(rng.integers(0, 4)), 8)

    def channel(x):
        s = sum(a * b for a, b in zip(h, x))
        out = {s: 1 - flip}
        out[s + 1] = out.get(s + 1, 0) + flip
        return out

    return cf.IntegerSpec(pmfs, channel)


def _marginal_entropy(states, idx: Sequence[int], with_y: bool) -> float:
    out: dict = {}
    for u, y, p in states:
        key = (tuple(u[i] for i in idx), y if with_y else None)
        out[key] = out.get(key, 0) + p
    return shannon_entropy(out)


def _discrete_chain_mi(spec: cf.DiscreteSpec) -> tuple[float, float, dict]:
    K = spec.K
    states = spec.source.states
    lhs = cf.conditional_entropy_term(spec, IntMatrix.identity(K))
    chain = math.fsum(
        _marginal_entropy(states, range(k + 1), True) - _marginal_entropy(states, range(k), True)
        for k in range(K)
    )
    pu, py = {}, {}
    for u, y, p in states:
        pu[u] = pu.get(u, 0) + p
        py[y] = py.get(y, 0) + p
    mi_direct = math.fsum(
        float(p) * math.log2(float(p) / (float(pu[u]) * float(py[y]))) for u, y, p in states if p > 0
    )
    mi_alg = float(np.sum(cf.user_entropies(spec))) - lhs
    return abs(lhs - chain), abs(mi_direct - mi_alg), {"H(u|Y)": lhs, "I(u;Y)": mi_direct}


def _gaussian_chain_mi(spec: cf.GaussianSpec) -> tuple[float, float, dict]:
    K = spec.K
    Kc = spec.source.cond_cov
    lhs = gaussian_algebraic_entropy(IntMatrix.identity(K), spec.source, conditional=True)
    parts = []
    for k in range(K):
        a, b = Kc[k, k], Kc[k, :k]
        schur = a - (b @ np.linalg.solve(Kc[:k, :k], b) if k else 0.0)
        parts.append(0.5 * LOG2_2PIE + 0.5 * math.log2(schur))
    chain = math.fsum(parts)
    HP = spec.H * spec.P
    mi_direct = 0.5 * float(np.linalg.slogdet(np.eye(spec.H.shape[0]) + HP @ spec.H.T)[1]) / math.log(2)
    mi_alg = gaussian_algebraic_entropy(IntMatrix.identity(K), spec.source) - lhs
    return abs(lhs - chain), abs(mi_direct - mi_alg), {"H(u|Y)": lhs, "I(u;Y)": mi_direct}


def default_chain_specs(seed: int) -> list[tuple[str, object]]:
    rng = np.random.default_rng(seed)
    specs = [("adder", adder_spec()), ("pair", pair_spec())]
    specs += [(f"discrete-{i}", random_discrete_spec(rng, int(rng.integers(2, 4)))) for i in range(4)]
    for i in range(4):
        K = int(rng.integers(2, 4))
        M = int(rng.integers(1, 4))
        specs.append(
            (
                f"gaussian-{i}",
                cf.GaussianSpec(rng.uniform(-2, 2, size=(M, K)), rng.uniform(0.5, 20, size=K), rng.uniform(0.5, 2, size=K)),
            )
        )
    return specs


def check_chain_and_mi(
    specs: Optional[Sequence[tuple[str, object]]] = None,
    seed: int = 7,
    discrete_tol: float = 1e-12,
    gaussian_tol: float = 1e-9,
) -> CheckReport:
    """Chain rule H(u|Y) = sum_k H(u_k|Y,u_<k) and I(u;Y) = H(u) - H(u|Y), each by two routes.

    Discrete specs compare float results of exact pmf marginalizations
    (tolerance covers summation rounding only); Gaussian specs compare the
    Smith-form closed form against Schur complements and log det(I + H P H^T).
    """
    specs = list(specs) if specs is not None else default_chain_specs(seed)
    margins, details = [], {}
    for name, spec in specs:
        if isinstance(spec, cf.GaussianSpec):
            e1, e2, info = _gaussian_chain_mi(spec)
            tol = gaussian_tol
        else:
            e1, e2, info = _discrete_chain_mi(spec)
            tol = discrete_tol
        margins += [tol - e1, tol - e2]
        details[name] = dict(info, chain_error=e1, mi_error=e2)
    return _report("chain_mi", margins, seed, details, trials=len(specs))


# ---------------------------------------------------------------- suite


SUITES = ("renyi", "entropy_diff", "makkuva_wu", "discrete", "lattice", "chain_mi")


def run_suite(suite: str = "all", seed: int = 7, trials: Optional[int] = None) -> list[CheckReport]:
    """Run one named check or all of them with default inputs."""
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name == "renyi":
            out.append(check_renyi(seed=seed))
        elif name == "entropy_diff":
            out.append(check_entropy_difference_bound(trials or 1000, seed))
        elif name == "makkuva_wu":
            out.append(check_makkuva_wu(seed=seed))
        elif name == "discrete":
            out.append(check_discrete_lemma(seed=seed))
        elif name == "lattice":
            out.append(check_lattice_counting(trials or 1000, seed))
        elif name == "chain_mi":
            out.append(check_chain_and_mi(seed=seed))
        else:
            raise ValueError(f"unknown suite {name!r}")
    return out
