from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hedgecone.geometry import Polyhedron
from hedgecone.linprog import INFEASIBLE, OPTIMAL, UNBOUNDED, Lp, LpResult, optimize_over

small_rats = st.fractions(
    min_value=Fraction(-9), max_value=Fraction(9), max_denominator=12
)


def test_simple_bounded_minimum():
    lp = Lp()
    x, y = lp.vars(2, nonneg=True)
    lp.add({x: 1, y: 1}, ">=", 2)
    lp.add({x: 1}, "<=", 5)
    res = lp.minimize({x: 3, y: 1})
    assert res.status == OPTIMAL
    assert res.value == 2
    assert (res[x], res[y]) == (0, 2)


def test_free_variables_and_equalities():
    lp = Lp()
    x, y = lp.vars(2)
    lp.add({x: 1, y: 2}, "==", 4)
    lp.add({x: 1, y: -1}, ">=", -5)
    res = lp.maximize({y: 1})
    assert res.status == OPTIMAL
    assert res.value == 3
    assert res[x] == -2


def test_infeasible_detection():
    lp = Lp()
    x = lp.var(nonneg=True)
    lp.add({x: 1}, ">=", 3)
    lp.add({x: 1}, "<=", 1)
    assert lp.minimize({x: 1}).status == INFEASIBLE


def test_unbounded_detection():
    lp = Lp()
    x = lp.var()
    lp.add({x: 1}, ">=", 0)
    res = lp.maximize({x: 1})
    assert res.status == UNBOUNDED
    assert res.value is None


def test_result_indexing_requires_solution():
    res = LpResult(INFEASIBLE)
    with pytest.raises(ValueError):
        res[0]


def test_degenerate_cone_lp_terminates():
    # Homogeneous rows with a single normalization: the kind of highly
    # degenerate instance the solver sees constantly.
    lp = Lp()
    xs = lp.vars(4)
    for i in range(4):
        for k in range(i + 1, 4):
            lp.add({xs[i]: 3, xs[k]: -1}, ">=", 0)
            lp.add({xs[k]: 3, xs[i]: -1}, ">=", 0)
    lp.add({xs[0]: 1}, "==", 1)
    res = lp.minimize({xs[3]: 1})
    assert res.status == OPTIMAL
    assert res.value == Fraction(1, 3)


def test_duplicate_coefficients_accumulate():
    lp = Lp()
    x = lp.var(nonneg=True)
    lp.add([(x, 1), (x, 2)], ">=", 6)
    res = lp.minimize({x: 1})
    assert res.value == 2


def test_rejects_unknown_operator_and_variable():
    lp = Lp()
    x = lp.var()
    with pytest.raises(ValueError):
        lp.add({x: 1}, ">", 0)
    with pytest.raises(ValueError):
        lp.add({x + 1: 1}, ">=", 0)


@given(
    st.lists(small_rats, min_size=2, max_size=4),
    st.lists(small_rats, min_size=2, max_size=4),
    st.lists(small_rats, min_size=2, max_size=4),
)
@settings(max_examples=100, deadline=None)
def test_box_lp_solution_picks_extremes(lo, hi, cost):
    n = min(len(lo), len(hi), len(cost))
    lo, hi, cost = lo[:n], hi[:n], cost[:n]
    hi = [max(l, h) for l, h in zip(lo, hi)]
    lp = Lp()
    xs = lp.vars(n)
    for x, l, h in zip(xs, lo, hi):
        lp.add({x: 1}, ">=", l)
        lp.add({x: 1}, "<=", h)
    res = lp.minimize({x: c for x, c in zip(xs, cost)})
    assert res.status == OPTIMAL
    expected = sum(c * (h if c < 0 else l) for c, l, h in zip(cost, lo, hi))
    assert res.value == expected


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=25, deadline=None)
def test_solver_is_deterministic(seed):
    import random

    def build():
        lp = Lp()
        xs = lp.vars(3, nonneg=True)
        r = random.Random(seed)
        for _ in range(6):
            lp.add(
                {x: Fraction(r.randint(-4, 4)) for x in xs},
                ">=",
                Fraction(r.randint(-3, 0)),
            )
        lp.add({x: 1 for x in xs}, "<=", 10)
        return lp.minimize({xs[0]: 1, xs[1]: -1, xs[2]: 1})

    a, b = build(), build()
    assert (a.status, a.value, a.x) == (b.status, b.value, b.x)


def test_optimize_over_polytope_matches_vertices():
    square = Polyhedron.from_vrep(2, points=[(0, 0), (2, 0), (0, 2), (2, 2)])
    res = optimize_over(square, [1, 1], "max")
    assert res.status == OPTIMAL and res.value == 4
    res = optimize_over(square, [1, -3], "min")
    assert res.status == OPTIMAL and res.value == -6
    with pytest.raises(ValueError):
        optimize_over(square, [1], "min")
