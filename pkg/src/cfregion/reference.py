"""Worked examples with independently computed reference values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cfcore as cf
from . import region as rg
from .intlab import IntMatrix
from .validate import adder_spec, pair_spec

EXAMPLE_A = IntMatrix([[1, 1, 1]])
POINT_A_ROWS = IntMatrix([[1, 1, 1]])
POINT_B_ROWS = IntMatrix([[1, 0, 0], [0, 1, 1]])
EXAMPLE_BUDGET = cf.SearchBudget(b_max=2, c_max=5)

MIMO_H = ((1.0, 1.5, 0.75), (0.75, 1.0, 1.5), (1.5, 0.75, 1.0))


def gmac3_spec() -> cf.GaussianSpec:
    """Three users, one receive antenna, unit gains, power 3."""
    return cf.GaussianSpec([[1.0, 1.0, 1.0]], 3.0)


def gmac3_mimo_spec() -> cf.GaussianSpec:
    """Three users, three receive antennas, power 2."""
    return cf.GaussianSpec(MIMO_H, 2.0)


# Closed forms for the single-antenna example: the posterior covariance is
# 3I - 0.9J, so [1,1,1] K [1,1,1]^T = 0.9 and the [[1,0,0],[0,1,1]] Gram
# determinant is 1.8.
GMAC3_POINT_A = (0.5 * math.log2(10 / 3),) * 3
GMAC3_POINT_B = (0.5 * math.log2(10 / 7), 0.5 * math.log2(3.5), 0.5 * math.log2(3.5))


def sequential_point_direct(spec: cf.GaussianSpec, B) -> tuple[float, ...]:
    """Sequential corner point from log-determinants of prefix Gram matrices.

    Valid for B whose prefixes are all right-invertible, where the algebraic
    entropy reduces to (j/2) log2(2 pi e) + (1/2) log2 det(B_j K B_j^T).
    """
    B = np.array(IntMatrix.coerce(B).tolist(), dtype=float)
    K = spec.source.cond_cov
    P = spec.P * spec.beta**2
    caps = np.full(spec.K, np.inf)
    prev = 0.0
    for j in range(1, B.shape[0] + 1):
        Bj = B[:j]
        cur = 0.5 * j * math.log2(2 * math.pi * math.e) + 0.5 * math.log2(np.linalg.det(Bj @ K @ Bj.T))
        for k in np.flatnonzero(B[j - 1]):
            caps[k] = min(caps[k], 0.5 * math.log2(2 * math.pi * math.e * P[k]) + prev - cur)
        prev = cur
    return tuple(float(c) for c in caps)


@dataclass
class ExampleOutcome:
    name: str
    agree: bool
    payload: dict


def run_gaussian_example(name: str, spec: cf.GaussianSpec, reference: dict, budget=EXAMPLE_BUDGET, tol=1e-5) -> ExampleOutcome:
    """Compute sequential points and the simultaneous region; compare with references."""
    sim = cf.simultaneous_R(spec, EXAMPLE_A, budget)
    seq = cf.sequential_region(spec, EXAMPLE_A, budget)
    points = {}
    agree = True
    for label, B in (("A", POINT_A_ROWS), ("B", POINT_B_ROWS)):
        caps, _ = cf.sequential_box(spec, B)
        ref = reference[label]
        gap = max(abs(a - b) for a, b in zip(caps, ref))
        inside = sim.region.contains_point(caps)
        agree &= gap < tol and inside
        points[label] = {"rows": B.tolist(), "point": caps.tolist(), "reference": list(ref), "max_gap": gap, "in_simultaneous": inside}
    nested = rg.region_contains(sim.region, seq.region)
    agree &= nested
    payload = {
        "points": points,
        "sequential_inside_simultaneous": nested,
        "simultaneous_members": len(sim.region),
        "B_count": len(cf.admissible_B(spec, EXAMPLE_A, budget)),
    }
    return ExampleOutcome(name, bool(agree), payload)


def gmac3(budget=EXAMPLE_BUDGET) -> ExampleOutcome:
    return run_gaussian_example("gmac3", gmac3_spec(), {"A": GMAC3_POINT_A, "B": GMAC3_POINT_B}, budget)


def gmac3_mimo(budget=EXAMPLE_BUDGET) -> ExampleOutcome:
    spec = gmac3_mimo_spec()
    ref = {"A": sequential_point_direct(spec, POINT_A_ROWS), "B": sequential_point_direct(spec, POINT_B_ROWS)}
    return run_gaussian_example("gmac3_mimo", spec, ref, budget)


def random_naga11_instance(rng: np.random.Generator) -> tuple[float, list[float], list[int]]:
    P = float(rng.uniform(1.0, 50.0))
    h = rng.uniform(-3.0, 3.0, size=2).tolist()
    a = [int(x) for x in rng.choice([v for v in range(-4, 5) if v], size=2)]
    return P, h, a


def generic_single_equation_bound(P: float, h, a) -> tuple[float, float]:
    """Per-user bounds of Q(a) on the generic path (L_B = 1, rank-0 matroid)."""
    spec = cf.GaussianSpec([list(h)], P)
    rep = cf.simultaneous_Q(spec, [list(a)], cf.SearchBudget())
    per_user = [math.inf, math.inf]
    for rec in rep.ledger:
        if len(rec.T) == 1:
            per_user[rec.T[0]] = min(per_user[rec.T[0]], rec.bound)
    return per_user[0], per_user[1]


def naga11(n: int = 100, seed: int = 7, tol: float = 1e-9) -> ExampleOutcome:
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for _ in range(n):
        P, h, a = random_naga11_instance(rng)
        closed = cf.naga11_rate(P, h, a)
        g1, g2 = generic_single_equation_bound(P, h, a)
        delta = max(abs(g1 - closed), abs(g2 - closed))
        worst = max(worst, delta)
        rows.append({"P": P, "h": h, "a": a, "closed_form": closed, "generic": [g1, g2], "delta": delta})
    return ExampleOutcome("naga11", worst < tol, {"max_delta": worst, "rows": rows})


def lmac_adder(budget: cf.SearchBudget = cf.SearchBudget()) -> ExampleOutcome:
    """Adder channel has a notch; the noiseless pair does not."""
    out = {}
    agree = True
    for name, spec, expect_notch in (("adder", adder_spec(), True), ("pair", pair_spec(), False)):
        c = cf.notch_condition(spec, budget)
        mac = cf.mac_region(spec)
        lmac = cf.lmac_region(spec, budget)
        equal = rg.region_equal(mac, lmac)
        strict = rg.region_contains(mac, lmac) and not equal
        ok = (c is not None and strict) if expect_notch else (c is None and equal)
        agree &= ok
        out[name] = {
            "notch": c.tolist() if c is not None else None,
            "lmac_equals_mac": equal,
            "lmac_strictly_inside_mac": strict,
        }
    return ExampleOutcome("lmac_adder", bool(agree), out)


EXAMPLES = {"gmac3": gmac3, "gmac3_mimo": gmac3_mimo, "naga11": naga11, "lmac_adder": lmac_adder}
