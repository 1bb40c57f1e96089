from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_arbitrage_free_model
from hedgecone.european import european_ask, european_dual, european_sets
from hedgecone.market import TreeRequiredError, ValidationError, load_model

CLAIM_AT_UU = {"UU": ["2", "-8"], "UD": ["0", "0"], "DU": ["0", "0"], "DD": ["0", "0"]}


def test_claim_at_single_leaf_prices_exactly(toy):
    assert european_ask(toy, CLAIM_AT_UU, j=2) == 4
    assert european_ask(toy, CLAIM_AT_UU, j=1) == Fraction(4, 5)
    value, flow = european_dual(toy, CLAIM_AT_UU, j=2)
    assert value == 4
    assert flow[toy.root] == (5, 1)
    # conservation at the root family
    for i in range(2):
        assert flow["U"][i] + flow["D"][i] == flow["R"][i]


def test_received_claim_costs_nothing(toy):
    zeta = {"UU": ["0", "0"], "UD": ["0", "0"], "DU": ["0", "0"], "DD": ["0", "-1"]}
    assert european_ask(toy, zeta, j=2) == 0
    value, _ = european_dual(toy, zeta, j=2)
    assert value == 0


def test_sets_recursion_shapes(toy):
    sets = european_sets(toy, CLAIM_AT_UU)
    assert set(sets) == set(toy.order)
    lo, hi = sets["R"].axis_interval(2)
    assert lo == 4 and hi is None
    # at an unaffected leaf the set is the plain solvency cone
    assert sets["DD"].member((0, 0))
    assert not sets["UU"].member((0, 0))
    assert sets["UU"].member((2, -8))


def test_rejects_malformed_inputs(toy):
    with pytest.raises(ValidationError, match="missing a payoff"):
        european_ask(toy, {"UU": ["2", "-8"]})
    with pytest.raises(ValidationError, match="currency index"):
        european_ask(toy, CLAIM_AT_UU, j=3)
    with pytest.raises(ValidationError, match="currency index"):
        european_dual(toy, CLAIM_AT_UU, j=0)


def test_dual_requires_tree():
    pi = [["1", "2"], ["2", "1"]]
    doc = {
        "d": 2,
        "T": 2,
        "nodes": [
            {"id": "r", "t": 0, "succ": ["u", "d"], "pi": pi, "xi": ["0", "0"]},
            {"id": "u", "t": 1, "succ": ["m"], "pi": pi, "xi": ["0", "0"]},
            {"id": "d", "t": 1, "succ": ["m"], "pi": pi, "xi": ["0", "0"]},
            {"id": "m", "t": 2, "succ": [], "pi": pi, "xi": ["0", "0"]},
        ],
    }
    model = load_model(doc)
    with pytest.raises(TreeRequiredError):
        european_dual(model, {"m": ["1", "0"]})


@st.composite
def _toy_claims(draw):
    val = st.integers(-5, 5)
    return {
        leaf: [str(draw(val)), str(draw(val))]
        for leaf in ("UU", "UD", "DU", "DD")
    }


@given(zeta=_toy_claims())
@settings(max_examples=40, deadline=None)
def test_strong_duality_on_toy_claims(toy, zeta):
    for j in (1, 2):
        value, flow = european_dual(toy, zeta, j)
        assert value == european_ask(toy, zeta, j)
        assert flow["R"][j - 1] == 1


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_strong_duality_on_random_models(seed):
    rng = random.Random(seed)
    model, _pair = random_arbitrage_free_model(rng)
    zeta = {
        leaf: [rng.randint(-3, 3) for _ in range(model.d)] for leaf in model.leaves()
    }
    value, _ = european_dual(model, zeta, 1)
    assert value == european_ask(model, zeta, 1)
