"""Small hand-checkable cases across modules, each with an independently derived value."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfregion import cfcore as cf
from cfregion import region as rg
from cfregion import validate as v
from cfregion.entropy import (
    DiscretePmf,
    GaussianSource,
    JointDiscreteSource,
    algebraic_entropy_discrete,
    conditional_algebraic_entropy_discrete,
    gaussian_algebraic_entropy,
    gaussian_conditional_covariance,
    quantized_entropy_estimate,
    shannon_entropy,
)
from cfregion.intlab import (
    IntMatrix,
    determinant,
    is_unimodular,
    mod_centered,
    orthogonal_lattice_basis,
    rank,
    right_inverse,
    row_lattice_contains,
    saturated_basis,
    smith_normal_form,
    successive_minima,
)
from cfregion.matroid import Matroid, dual, enumerate_matroids, free, is_representation, uniform, vector_matroid

half = Fraction(1, 2)
LOG2_2PIE = math.log2(2 * math.pi * math.e)


def unimodular(rng, n, steps=4):
    U = np.eye(n, dtype=np.int64)
    if n == 1:
        return IntMatrix([[int(rng.choice([-1, 1]))]])
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False)
        U[i] += int(rng.integers(-2, 3)) * U[j]
    return IntMatrix(U.tolist())


# ---------------------------------------------------------------- integer algebra


def test_smith_cases():
    F = smith_normal_form(IntMatrix.identity(2))
    assert F.Sigma == (1, 1) and F.reconstruct() == IntMatrix.identity(2)
    assert smith_normal_form([[2, 4], [6, 8]]).Sigma == (2, 4)
    F = smith_normal_form([[4, 6]])
    assert F.Sigma == (2,) and F.T.tolist() in ([[2, 3]], [[-2, -3]])
    F = smith_normal_form([[0, 0], [0, 0]])
    assert F.rank == 0 and F.Sigma == ()


def test_unimodular_cases():
    assert is_unimodular(IntMatrix.identity(3))
    assert is_unimodular([[1, 1], [0, 1]])
    assert not is_unimodular([[2, 0], [0, 1]])
    with pytest.raises(ValueError):
        is_unimodular([[1, 2, 3]])


def test_right_inverse_cases():
    assert right_inverse([[2, 3]]).tolist() == [[-1], [1]]
    assert right_inverse([[2, 4]]) is None
    assert right_inverse(IntMatrix.identity(2)) == IntMatrix.identity(2)
    with pytest.raises(ValueError):
        right_inverse([[1], [2]])


def test_orthogonal_lattice_cases():
    assert orthogonal_lattice_basis([[1, 0]]).tolist() == [[0], [1]]
    assert orthogonal_lattice_basis([[1, 1]]).tolist() in ([[1], [-1]], [[-1], [1]])
    N = orthogonal_lattice_basis([[1, 2]])
    assert N.tolist() in ([[2], [-1]], [[-2], [1]])
    assert row_lattice_contains(N.transpose(), [[4, -2]])
    assert orthogonal_lattice_basis(IntMatrix.identity(2)).ncols == 0


@given(st.integers(0, 10**6))
def test_double_perpendicular_is_saturated_row_space(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    r = int(rng.integers(1, n))
    Q = IntMatrix(rng.integers(-4, 5, size=(r, n)).tolist())
    if right_inverse(Q) is None:
        return
    perp = orthogonal_lattice_basis(Q)
    back = orthogonal_lattice_basis(perp.transpose()).transpose()
    assert row_lattice_contains(back, Q) and row_lattice_contains(Q, back)
    assert row_lattice_contains(saturated_basis(Q), back)


def test_row_lattice_cases():
    assert row_lattice_contains(IntMatrix.identity(2), [[1, 1]])
    assert not row_lattice_contains([[2, 0], [0, 2]], [[1, 1]])
    assert row_lattice_contains([[1, 1]], [[2, 2]])


def test_successive_minima_cases():
    assert successive_minima(IntMatrix.identity(2)) == [1, 1]
    assert successive_minima([[2, 0], [0, 3]]) == [2, 3]
    assert successive_minima(IntMatrix.identity(2), "euclidean") == [1.0, 1.0]


# ---------------------------------------------------------------- matroids


def test_uniform_two_four_over_rationals_and_binary():
    Q = [[1, 0, 1, 1], [0, 1, 1, -1]]
    assert vector_matroid(Q) == uniform(2, 4)
    m2 = vector_matroid(Q, modulus=2)
    assert m2 != uniform(2, 4) and (2, 3) not in m2.bases
    assert vector_matroid(IntMatrix.identity(2)).bases == ((0, 1),)


def test_dual_cases():
    assert dual(uniform(2, 3)) == uniform(1, 3)
    assert dual(free(3)) == Matroid(3, ((),))


def test_representation_cases():
    assert is_representation([[1, 1]], uniform(1, 2))
    assert not is_representation([[1, 0]], uniform(1, 2))
    assert is_representation(IntMatrix.empty(3), Matroid(3, ((),)))
    assert len(enumerate_matroids(2, exclude_full_rank=True)) == 4


@given(st.integers(0, 10**6))
def test_field_matroid_equals_integer_matroid_above_threshold(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    Q = IntMatrix(rng.integers(-5, 6, size=(m, n)).tolist())
    Qf = np.array(Q.tolist(), dtype=float)
    bound = 1 + 2 * math.sqrt(max(np.linalg.det(Qf @ Qf.T), 0.0)) if rank(Q) == m else 1 + 2 * 5**m * math.factorial(m)
    q = cf.next_prime_above(int(bound))
    assert vector_matroid(Q.mod(q), q) == vector_matroid(Q)


@given(st.integers(0, 10**6))
def test_vector_matroid_left_unimodular_invariance(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    Q = IntMatrix(rng.integers(-5, 6, size=(m, n)).tolist())
    assert vector_matroid(unimodular(rng, m) @ Q) == vector_matroid(Q)


# ---------------------------------------------------------------- entropy


def test_entropy_cases():
    assert shannon_entropy([half, half]) == 1.0
    assert shannon_entropy([0.25, 0.5, 0.25]) == 1.5
    assert shannon_entropy([1.0]) == 0.0
    p = DiscretePmf.product([{0: half, 1: half}] * 2)
    assert algebraic_entropy_discrete(IntMatrix.identity(2), p) == 2.0
    assert algebraic_entropy_discrete([[1, -1]], p) == 1.5


def test_conditional_entropy_cases():
    pm = [{0: half, 1: half}, {0: Fraction(1, 4), 2: Fraction(3, 4)}]
    indep = JointDiscreteSource.from_channel(pm, lambda x: {"a": half, "b": half})
    assert conditional_algebraic_entropy_discrete([[1, 1]], indep) == pytest.approx(
        algebraic_entropy_discrete([[1, 1]], DiscretePmf.product(pm)), abs=1e-15
    )
    ident = JointDiscreteSource.from_channel(pm, lambda x: {tuple(x): 1})
    assert conditional_algebraic_entropy_discrete(IntMatrix.identity(2), ident) == 0.0


def test_gaussian_entropy_cases():
    g1 = GaussianSource(np.eye(1))
    assert gaussian_algebraic_entropy([[1]], g1) == pytest.approx(0.5 * LOG2_2PIE)
    assert round(gaussian_algebraic_entropy([[1]], g1), 4) == 2.0471
    assert gaussian_algebraic_entropy([[2]], g1) == gaussian_algebraic_entropy([[1]], g1)
    g2 = GaussianSource(np.eye(2))
    val = gaussian_algebraic_entropy([[1, 1]], g2)
    assert val == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * 2))
    assert round(val, 4) == 2.5471


def test_posterior_covariance_cases():
    g = gaussian_conditional_covariance(np.zeros((1, 2)), [2.0, 3.0], beta=[1.0, 2.0])
    assert np.allclose(g.cond_cov, np.diag([2.0, 12.0]))
    g = gaussian_conditional_covariance([[10.0]], 1.0)
    assert g.cond_cov[0, 0] == pytest.approx(1 / 101)


def test_quantized_estimates():
    pm = [{0: half, 1: half}] * 2
    exact = algebraic_entropy_discrete([[1, 1]], DiscretePmf.product(pm))
    est = quantized_entropy_estimate(lambda rng, n: rng.integers(0, 2, size=(n, 2)), [[1, 1]], 1, 100_000, seed=1)
    assert abs(est.value - exact) < 0.01
    est = quantized_entropy_estimate(lambda rng, n: rng.standard_normal((n, 1)), [[1]], 1024, 10**6, seed=7)
    assert abs(est.value - 10 - 0.5 * LOG2_2PIE) < 0.02


# ---------------------------------------------------------------- regions


def test_intersection_cases():
    X = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 1.0), ((0, 1), 1.5)])])
    assert rg.region_equal(rg.intersect(X, rg.RateRegion.full(2)), X)
    a = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 1.0)])])
    b = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 2.0)])])
    assert rg.region_equal(rg.intersect(a, b), a)
    neg = rg.RateRegion(2, [rg.Polyhedron(2, [((0, 1), -0.1)])])
    assert rg.intersect(neg, X).is_empty()


def test_union_cases():
    box = rg.Polyhedron(2, [((0,), 1.0), ((1,), 1.0)])
    sub = rg.Polyhedron(2, [((0,), 0.5), ((1,), 1.0)])
    X = rg.RateRegion(2, [box])
    assert rg.region_equal(rg.union(X, rg.RateRegion.empty_region(2)), X)
    assert len(rg.union(X, rg.RateRegion(2, [sub]))) == 1
    r1 = rg.Polyhedron(2, [((0,), 2.0), ((1,), 1.0)])
    r2 = rg.Polyhedron(2, [((0,), 1.0), ((1,), 2.0)])
    assert len(rg.RateRegion(2, [r1, r2])) == 2


def test_emptiness_cases():
    assert rg.is_empty(rg.Polyhedron(1, [((0,), -1.0)]))
    assert not rg.is_empty(rg.Polyhedron(2, [((0, 1), 0.0)]))
    assert not rg.is_empty(rg.Polyhedron(3))


def test_vertex_cases():
    assert len(rg.vertices(rg.Polyhedron(2, [((0,), 1.0), ((1,), 1.0)]))) == 4
    assert rg.vertices(rg.Polyhedron(2, [((0,), -1.0)])) == []


def test_containment_cases():
    box = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 1.0), ((1,), 1.0)])])
    halfbox = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 0.5), ((1,), 1.0)])])
    assert rg.region_contains(box, halfbox) and not rg.region_equal(box, halfbox)
    pent = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), 1.0), ((1,), 1.0), ((0, 1), 1.5)])])
    notch = rg.intersect(pent, rg.min_constraint_region(2, [0.5, 0.5], 0.2, [0, 1]))
    assert rg.region_contains(pent, notch) and not rg.region_equal(pent, notch)


def test_min_constraint_membership_matches_direct_evaluation():
    rng = np.random.default_rng(0)
    offsets, bound = [0.7, 0.3], 0.25
    r = rg.min_constraint_region(2, offsets, bound, [0, 1])
    X = rng.uniform(0, 2, size=(10_000, 2))
    direct = np.minimum(X[:, 0] - offsets[0], X[:, 1] - offsets[1]) <= bound
    assert np.array_equal(r.contains_points(X), direct)


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_union_intersection_algebra_pointwise(seed):
    rng = np.random.default_rng(seed)

    def rand_region():
        polys = []
        for _ in range(int(rng.integers(1, 3))):
            bounds = [((k,), float(rng.uniform(0, 3))) for k in range(2)]
            bounds.append(((0, 1), float(rng.uniform(0, 5))))
            polys.append(rg.Polyhedron(2, bounds))
        return rg.RateRegion(2, polys)

    a, b, c = rand_region(), rand_region(), rand_region()
    X = rng.uniform(0, 3.5, size=(10_000, 2))

    def m(r):
        return r.contains_points(X)

    assert np.array_equal(m(rg.union(a, b)), m(rg.union(b, a)))
    assert np.array_equal(m(rg.intersect(a, b)), m(rg.intersect(b, a)))
    assert np.array_equal(m(rg.union(rg.union(a, b), c)), m(rg.union(a, rg.union(b, c))))
    assert np.array_equal(m(rg.intersect(rg.intersect(a, b), c)), m(rg.intersect(a, rg.intersect(b, c))))


# ---------------------------------------------------------------- rate regions


def test_entropy_term_cases():
    assert cf.conditional_entropy_term(v.adder_spec(), IntMatrix.empty(2)) == 0.0
    assert cf.conditional_entropy_term(v.adder_spec(), [[1, 1]]) == 0.0
    g = cf.GaussianSpec([[1, 1, 1]], 3.0)
    assert cf.conditional_entropy_term(g, [[1, 1, 1]]) == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * 0.9))


def test_j_term_adder_is_zero_at_sum():
    jr = cf.j_term(v.adder_spec(), IntMatrix.identity(2), uniform(1, 2), cf.SearchBudget(c_max=3))
    assert jr.value == 0.0 and jr.C == IntMatrix([[1, 1]]) and not jr.truncated


def test_j_term_gaussian_quadratic_form_oracle():
    spec = cf.GaussianSpec([[1, 1]], 10.0)
    K = spec.source.cond_cov
    best = min(
        ((np.array(c) @ K @ np.array(c)) / math.gcd(*c) ** 2, c)
        for c in ((a, b) for a in range(-5, 6) for b in range(-5, 6) if a and b)
    )
    jr = cf.j_term(spec, IntMatrix.identity(2), uniform(1, 2))
    g = math.gcd(*best[1])
    assert [abs(x) for x in jr.C.row(0)] == [abs(x) // g for x in best[1]] == [1, 1]
    assert jr.value == pytest.approx(0.5 * LOG2_2PIE + 0.5 * math.log2(best[0]), abs=1e-12)


def test_single_row_q_is_a_rectangle():
    spec = cf.GaussianSpec([[1.0, 0.8]], 6.0)
    a = [2, 1]
    Q = cf.simultaneous_Q(spec, [a]).region
    H = cf.user_entropies(spec)
    ha = cf.conditional_entropy_term(spec, [a])
    rect = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), H[0] - ha), ((1,), H[1] - ha)])])
    assert rg.region_equal(Q, rect)


def test_negative_bound_gives_empty_branch():
    spec = cf.GaussianSpec([[1.0, 0.0]], 5.0)
    assert cf.simultaneous_Q(spec, [[3, 1]]).region.is_empty()


def test_identity_target_contains_mac_corners():
    h, P = np.array([1.0, 0.6]), np.array([4.0, 9.0])
    spec = cf.GaussianSpec([h.tolist()], P)
    r1 = 0.5 * math.log2(1 + h[0] ** 2 * P[0] / (1 + h[1] ** 2 * P[1]))
    r2 = 0.5 * math.log2(1 + h[1] ** 2 * P[1])
    caps, _ = cf.sequential_box(spec, IntMatrix.identity(2))
    assert caps.tolist() == pytest.approx([r1, r2], abs=1e-9)
    region = cf.simultaneous_R(spec, IntMatrix.identity(2)).region
    assert region.contains_point([r1, r2])
    r1b = 0.5 * math.log2(1 + h[0] ** 2 * P[0])
    r2b = 0.5 * math.log2(1 + h[1] ** 2 * P[1] / (1 + h[0] ** 2 * P[0]))
    assert region.contains_point([r1b, r2b])


def test_gaussian_notch_at_high_power():
    assert cf.notch_condition(cf.GaussianSpec([[1.0, 1.0]], 20.0)) == IntMatrix([[1, 1]])


def test_single_equation_branches():
    adder, pair = v.adder_spec(), v.pair_spec()
    H = cf.user_entropies(adder)
    rect = rg.RateRegion(2, [rg.Polyhedron(2, [((0,), H[0]), ((1,), H[1])])])
    assert rg.region_equal(cf.single_equation_region(adder, [[1, 1]]), rg.union(cf.mac_region(adder), rect))
    assert rg.region_equal(cf.single_equation_region(pair, [[1, 1]]), cf.mac_region(pair))
    g = cf.GaussianSpec([[1.0, 1.0]], 10.0)
    assert rg.region_equal(cf.single_equation_region(g, [[1, 1]]), cf.simultaneous_R(g, [[1, 1]]).region)


def test_naga11_cases():
    assert cf.naga11_rate(10, [1, 1], [1, 1]) == pytest.approx(0.5 * math.log2(10.5), abs=1e-12)
    assert cf.naga11_rate(10, [1, 1], [2, 2]) == pytest.approx(cf.naga11_rate(10, [1, 1], [1, 1]), abs=1e-12)
    assert cf.naga11_rate(3, [1, 0], [0, 1]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        cf.naga11_rate(3, [1, 1], [0, 0])


def test_fq_embed_cases():
    spec = v.adder_spec()
    ff, info = cf.fq_embed(spec, 5, [[1, 1]])
    assert info.threshold == 3 and info.threshold_met
    assert cf.conditional_entropy_term(ff, [[1, 1]]) == cf.conditional_entropy_term(spec, [[1, 1]])
    _, info = cf.fq_embed(spec, 3, [[2, 2]])
    assert info.threshold == 6 and not info.threshold_met
    assert mod_centered(7, 5) == 2 and mod_centered(-3, 5) == 2
    with pytest.raises(ValueError):
        cf.fq_embed(spec, 9)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_region_invariant_under_unimodular_row_operations(seed):
    rng = np.random.default_rng(seed)
    spec = cf.GaussianSpec(rng.uniform(-2, 2, size=(1, 2)), rng.uniform(1, 20, size=2))
    A = IntMatrix([[1, int(rng.integers(-2, 3))]])
    A2 = IntMatrix(rng.integers(-2, 3, size=(2, 2)).tolist())
    for A in (A, A2):
        if rank(A) < A.nrows:
            continue
        U = unimodular(rng, A.nrows)
        budget = cf.SearchBudget(b_max=2)
        a = cf.simultaneous_R(spec, A, budget).region
        b = cf.simultaneous_R(spec, U @ A, budget).region
        assert rg.region_equal(a, b)


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_j_monotone_in_search_box(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 4))
    spec = cf.GaussianSpec(rng.uniform(-3, 3, size=(1, K)), rng.uniform(1, 30, size=K))
    B = IntMatrix.identity(K)
    for M in enumerate_matroids(K, exclude_full_rank=True):
        if M.rank == 0:
            continue
        vals = [cf.j_term(spec, B, M, cf.SearchBudget(c_max=c)).value for c in (1, 2, 4)]
        assert vals[0] >= vals[1] >= vals[2]


# ---------------------------------------------------------------- validation checks


def test_renyi_uniform_cases():
    u1, u2 = v.uniform_source(1), v.uniform_source(2)
    for nu in (1, 2, 4, 64, 1024):
        assert u1.quantized_entropy(nu) - math.log2(nu) == 0.0
        assert u2.quantized_entropy(nu) - math.log2(nu) == pytest.approx(1.0, abs=1e-12)


def test_makkuva_wu_identity_is_zero():
    rep = v.check_makkuva_wu([IntMatrix.identity(2)], nu_schedule=(1, 8, 64), n_samples=50_000)
    assert all(d == 0 for d in rep.details["[[1, 0], [0, 1]]"]["discrepancy"])


def test_entropy_difference_sum_of_uniforms():
    # T floor(v) = 0 surely; floor(v1 + v2) is 0 or 1 with equal probability.
    lhs = abs(0.0 - shannon_entropy([half, half]))
    assert lhs <= 1 * math.log2(2 / 1)


def test_lattice_counting_cases():
    one = np.ones(2)
    assert v._count_in_box(np.eye(2), one, np.zeros(2)) == 9
    assert v._count_in_box(2 * np.eye(2), one, np.zeros(2)) == 1
    assert 4 < (9 + 1) * 2 * 1 and 4 < (1 + 1) * 2 * 4
    lam = successive_minima(IntMatrix.identity(2))
    assert 2 <= lam[0] * lam[1] * 4 <= 4 * abs(determinant(IntMatrix.identity(2)))


def test_chain_rule_independent_observation():
    pm = [{0: half, 1: half}, {0: Fraction(1, 3), 1: Fraction(2, 3)}]
    spec = cf.IntegerSpec(pm, lambda x: {"z": 1})
    rep = v.check_chain_and_mi([("indep", spec)])
    assert rep.passed
    assert rep.details["indep"]["I(u;Y)"] == pytest.approx(0.0, abs=1e-15)
    assert rep.details["indep"]["H(u|Y)"] == pytest.approx(sum(shannon_entropy(m) for m in pm), abs=1e-15)
