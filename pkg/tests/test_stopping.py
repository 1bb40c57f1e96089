from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hedgecone.market import ValidationError
from hedgecone.stopping import (
    chi_from_lambda,
    chi_star,
    chi_to_json,
    evaluate_at,
    from_ordinary,
    parse_chi,
    validate_chi,
    weighted_tail,
)

HALF_AT_U = {
    "R": Fraction(0),
    "U": Fraction(3, 4),
    "D": Fraction(0),
    "UU": Fraction(1, 4),
    "UD": Fraction(1, 4),
    "DU": Fraction(1),
    "DD": Fraction(1),
}


def test_validate_chi_accepts_a_gradual_plan(toy):
    validate_chi(toy, HALF_AT_U)


@pytest.mark.parametrize(
    "mutate, phrase",
    [
        (lambda c: c.pop("UD"), "missing values"),
        (lambda c: c.update(U=Fraction(-1, 4)), "negative exercise fraction"),
        (lambda c: c.update(DU=Fraction(1, 2)), "sums to"),
        (lambda c: c.update(zz=Fraction(0)), "unknown node"),
    ],
)
def test_validate_chi_rejects(toy, mutate, phrase):
    chi = dict(HALF_AT_U)
    mutate(chi)
    with pytest.raises(ValidationError, match=phrase):
        validate_chi(toy, chi)


def test_chi_star_tail_masses(toy):
    star = chi_star(toy, HALF_AT_U)
    assert star == {
        "R": 1,
        "U": 1,
        "D": 1,
        "UU": Fraction(1, 4),
        "UD": Fraction(1, 4),
        "DU": 1,
        "DD": 1,
    }


def test_weighted_tail_recurrence_and_evaluation(toy):
    xi = {nid: toy.nodes[nid].xi for nid in toy.order}
    tails = weighted_tail(toy, xi, HALF_AT_U)
    assert set(tails) == set(toy.leaves())
    for leaf, seq in tails.items():
        path = toy.path_to(leaf)
        assert len(seq) == len(path) + 1
        assert seq[-1] == (0, 0)
        for t, nid in enumerate(path):
            chi_x = tuple(HALF_AT_U[nid] * x for x in xi[nid])
            assert seq[t] == tuple(a + b for a, b in zip(chi_x, seq[t + 1]))
    # the t=0 entry is the full exercise-weighted payoff
    values = evaluate_at(toy, xi, HALF_AT_U)
    assert values["UU"] == (Fraction(1, 2), Fraction(1))  # 3/4*(0,4) + 1/4*(2,-8)
    assert values["UD"] == (0, 3)
    assert values["DU"] == (0, 0)
    assert tails["UU"][0] == values["UU"]


def test_weighted_tail_scalar_values(toy):
    X = {nid: Fraction(idx) for idx, nid in enumerate(toy.order)}
    vals = evaluate_at(toy, X, HALF_AT_U)
    assert vals["DD"] == X["DD"]  # all mass stops at the leaf on that path


def test_from_ordinary_embeds_indicators(toy):
    chi = from_ordinary(toy, {"U": True, "D": True})
    assert chi["U"] == 1 and chi["D"] == 1 and chi["R"] == 0
    assert all(chi[leaf] == 0 for leaf in toy.leaves())
    validate_chi(toy, chi)
    # stopping twice along a path keeps only the first stop
    chi = from_ordinary(toy, {"U": True, "UU": True, "D": True})
    assert chi["UU"] == 0


def test_from_ordinary_requires_full_coverage(toy):
    with pytest.raises(ValidationError, match="no stopping node"):
        from_ordinary(toy, {"U": True})
    with pytest.raises(ValidationError, match="unknown nodes"):
        from_ordinary(toy, {"zz": True, "R": True})


def test_chi_from_lambda_conditional_fractions(toy):
    lam = {"R": Fraction(1, 2), "U": Fraction(1, 3), "D": Fraction(0)}
    chi = chi_from_lambda(toy, lam)
    assert chi["R"] == Fraction(1, 2)
    assert chi["U"] == Fraction(1, 6)
    assert chi["UU"] == Fraction(1, 3)
    assert chi["DU"] == Fraction(1, 2)
    validate_chi(toy, chi)


def test_chi_from_lambda_rejects_out_of_range(toy):
    with pytest.raises(ValidationError, match="outside"):
        chi_from_lambda(toy, {"R": Fraction(3, 2), "U": 0, "D": 0})


def test_parse_chi_round_trip(toy):
    doc = chi_to_json(HALF_AT_U)
    assert doc["chi"]["U"] == "3/4"
    assert parse_chi(toy, doc) == HALF_AT_U


def test_parse_chi_rejects_malformed(toy):
    with pytest.raises(ValidationError, match="stopping-time document"):
        parse_chi(toy, {"nope": {}})
    with pytest.raises(ValidationError, match="unknown node"):
        parse_chi(toy, {"chi": {"zz": "1"}})


@st.composite
def _toy_lambdas(draw):
    frac = st.fractions(min_value=0, max_value=1, max_denominator=8)
    return {nid: draw(frac) for nid in ("R", "U", "D")}


@given(lam=_toy_lambdas())
@settings(max_examples=60, deadline=None)
def test_chi_from_lambda_always_validates(toy, lam):
    chi = chi_from_lambda(toy, lam)
    validate_chi(toy, chi)
    star = chi_star(toy, chi)
    for leaf in toy.leaves():
        assert star[leaf] == chi[leaf]
