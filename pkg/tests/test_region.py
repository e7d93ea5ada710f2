import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfregion.region import (
    Polyhedron,
    RateBound,
    RateRegion,
    UnboundedPolyhedronError,
    UnsupportedDimensionError,
    intersect,
    min_constraint_region,
    region_contains,
    region_equal,
    region_vertices,
    union,
    vertices,
)


def subsets(K):
    return [c for r in range(1, K + 1) for c in itertools.combinations(range(K), r)]


def brute_vertices(K, bounds):
    """Vertices by solving every K-subset of the constraint hyperplanes."""
    rows, rhs = [], []
    for users, b in bounds:
        rows.append([1.0 if k in users else 0.0 for k in range(K)])
        rhs.append(b)
    for k in range(K):
        rows.append([-1.0 if j == k else 0.0 for j in range(K)])
        rhs.append(0.0)
    A, b = np.array(rows), np.array(rhs)
    pts = []
    for idx in itertools.combinations(range(len(rows)), K):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, b[list(idx)])
        if np.all(A @ x <= b + 1e-9):
            x = np.where(np.abs(x) < 1e-12, 0.0, x)
            if not any(np.allclose(x, p, atol=1e-9) for p in pts):
                pts.append(x)
    return sorted(tuple(float(v) for v in p) for p in pts)


def polyhedra(K, bounded=True):
    subs = subsets(K)
    singles = [s for s in subs if len(s) == 1]
    others = [s for s in subs if len(s) > 1]
    val = st.floats(0.0, 4.0).map(lambda v: round(v, 3))
    base = st.tuples(*[val for _ in singles]) if bounded else st.just(())
    extra = st.lists(st.tuples(st.sampled_from(others), val), max_size=len(others))
    return st.tuples(base, extra).map(
        lambda t: Polyhedron(K, [(s, v) for s, v in zip(singles, t[0])] + [(s, v) for s, v in t[1]])
    )


def sample_box(rng, K, n=400, hi=5.0):
    return rng.uniform(0, hi, size=(n, K))


def test_pentagon_vertices():
    p = Polyhedron(2, [((0,), 1), ((1,), 1), ((0, 1), 1.5)])
    assert vertices(p) == [(0.0, 0.0), (0.0, 1.0), (0.5, 1.0), (1.0, 0.0), (1.0, 0.5)]


def test_redundant_bound_dropped():
    p = Polyhedron(2, [((0,), 1), ((1,), 1), ((0, 1), 3)])
    assert p.bounds == (RateBound((0,), 1.0), RateBound((1,), 1.0))


def test_empty_and_unbounded():
    assert Polyhedron(2, [((0,), -1)]).empty
    p = Polyhedron(2, [((0,), 1)])
    assert p.unbounded_users() == (1,)
    with pytest.raises(UnboundedPolyhedronError):
        vertices(p)
    with pytest.raises(ValueError):
        Polyhedron(2, [((2,), 1)])


def test_rate_bound_validation():
    assert RateBound((1, 0, 1), 2).users == (0, 1)
    with pytest.raises(ValueError):
        RateBound((), 1)


def test_union_of_boxes_covers_triangle():
    boxes = RateRegion(2, [Polyhedron(2, [((0,), 1), ((1,), 0.5)]), Polyhedron(2, [((0,), 0.5), ((1,), 1)])])
    small = RateRegion(2, [Polyhedron(2, [((0, 1), 1.0)])])
    big = RateRegion(2, [Polyhedron(2, [((0, 1), 1.2)])])
    assert region_contains(boxes, small)
    assert not region_contains(boxes, big)
    assert not region_contains(big, boxes)
    assert region_contains(RateRegion(2, [Polyhedron(2, [((0, 1), 1.5)])]), boxes)


def test_union_in_three_dimensions():
    a = RateRegion(3, [Polyhedron(3, [((0,), 1), ((1, 2), 1)]), Polyhedron(3, [((0,), 0.5), ((1, 2), 2)])])
    inside = RateRegion(3, [Polyhedron(3, [((0,), 0.5), ((1, 2), 1)])])
    outside = RateRegion(3, [Polyhedron(3, [((0,), 1), ((1, 2), 1.5)])])
    assert region_contains(a, inside)
    assert not region_contains(a, outside)


def test_pruning_removes_dominated_members():
    r = RateRegion(2, [Polyhedron(2, [((0,), 1), ((1,), 1)]), Polyhedron(2, [((0,), 0.5), ((1,), 0.5)])])
    assert len(r) == 1


def test_min_constraint_region():
    r = min_constraint_region(2, [1.0, 2.0], 0.5, [0, 1])
    assert r.contains_point([1.5, 100])
    assert r.contains_point([100, 2.5])
    assert not r.contains_point([1.6, 2.6])


def test_dimension_limit():
    p = Polyhedron(4, [((0,), 1), ((1,), 1), ((2,), 1), ((3,), 1)])
    with pytest.raises(UnsupportedDimensionError):
        vertices(p)


@pytest.mark.parametrize("K", [2, 3])
@given(data=st.data())
def test_vertices_match_brute_force(K, data):
    p = data.draw(polyhedra(K))
    if p.empty:
        assert vertices(p) == []
        return
    bounds = [(b.users, b.bound) for b in p.bounds]
    got = vertices(p)
    ref = brute_vertices(K, bounds)
    assert len(got) == len(ref)
    assert np.allclose(np.array(got), np.array(ref), atol=1e-9)


@pytest.mark.parametrize("K", [2, 3])
@given(data=st.data())
def test_tightening_preserves_the_set(K, data):
    p = data.draw(polyhedra(K, bounded=False))
    raw = Polyhedron(K, [(b.users, b.bound) for b in p.bounds])
    X = sample_box(np.random.default_rng(0), K)
    assert np.array_equal(p.contains_points(X), raw.contains_points(X))


@pytest.mark.parametrize("K", [2, 3])
@given(data=st.data())
def test_containment_agrees_with_sampling(K, data):
    a = RateRegion(K, data.draw(st.lists(polyhedra(K, bounded=False), min_size=1, max_size=3)))
    b = RateRegion(K, data.draw(st.lists(polyhedra(K), min_size=1, max_size=2)))
    X = np.vstack([sample_box(np.random.default_rng(1), K, hi=4.0)] + [np.array(region_vertices(b)).reshape(-1, K)])
    inside_b = b.contains_points(X)
    contained = region_contains(a, b)
    if contained:
        assert np.all(a.contains_points(X[inside_b]))
    assert region_contains(union(a, b), b)
    assert region_equal(a, a)


@pytest.mark.parametrize("K", [2, 3])
@given(data=st.data())
def test_intersection_and_union_pointwise(K, data):
    a = RateRegion(K, data.draw(st.lists(polyhedra(K, bounded=False), min_size=1, max_size=3)))
    b = RateRegion(K, data.draw(st.lists(polyhedra(K, bounded=False), min_size=1, max_size=3)))
    X = sample_box(np.random.default_rng(2), K)
    assert np.array_equal(intersect(a, b).contains_points(X), a.contains_points(X) & b.contains_points(X))
    assert np.array_equal(union(a, b).contains_points(X), a.contains_points(X) | b.contains_points(X))
    assert region_contains(a, intersect(a, b))


def test_region_user_count_mismatch():
    with pytest.raises(ValueError):
        union(RateRegion.full(2), RateRegion.full(3))
    with pytest.raises(ValueError):
        RateRegion(2, [Polyhedron(3)])
