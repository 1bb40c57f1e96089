from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hedgecone.geometry import Polyhedron
from hedgecone.market import (
    LatticeParams,
    TreeRequiredError,
    ValidationError,
    check_arbitrage_strategy,
    check_no_arbitrage,
    dual_solvency_cone,
    generate_currency_lattice,
    load_model,
    solvency_cone,
    solvency_generators,
)

from conftest import random_arbitrage_free_model


def tiny_doc(**overrides):
    doc = {
        "d": 2,
        "T": 1,
        "nodes": [
            {"id": "r", "t": 0, "succ": ["a"], "pi": [["1", "2"], ["2", "1"]], "xi": ["0", "0"]},
            {"id": "a", "t": 1, "succ": [], "pi": [["1", "2"], ["2", "1"]], "xi": ["1", "0"]},
        ],
    }
    doc.update(overrides)
    return doc


def test_load_model_happy_path(toy):
    assert toy.d == 2 and toy.T == 2 and toy.is_tree
    assert toy.root == "R"
    assert toy.order[0] == "R"
    assert toy.leaves() == ["UU", "UD", "DU", "DD"]
    assert toy.path_to("DU") == ["R", "D", "DU"]
    assert toy.nodes["U"].xi == (0, 4)
    assert toy.nodes["U"].pi[1][0] == 9


@pytest.mark.parametrize(
    "mutate, phrase",
    [
        (lambda d: d.pop("d"), "missing 'd'"),
        (lambda d: d.update(d=0), "positive integer"),
        (lambda d: d.update(nodes=[]), "nonempty array"),
        (lambda d: d["nodes"].append(dict(d["nodes"][1])), "duplicate node id"),
        (lambda d: d["nodes"][0]["succ"].append("zz"), "unknown successor"),
        (lambda d: d["nodes"][1].update(t=0), "not at time 1"),
        (lambda d: d["nodes"][0].update(pi=[["1", "2"]]), "2x2 matrix"),
        (lambda d: d["nodes"][0]["pi"][0].__setitem__(0, "3"), "must be 1"),
        (lambda d: d["nodes"][0]["pi"][0].__setitem__(1, "-2"), "must be positive"),
        (lambda d: d["nodes"][0].update(xi=["1"]), "length 2"),
        (lambda d: d["nodes"][1].update(succ=["r"]), "terminal nodes"),
        (
            # a second parentless component is caught by the root check
            lambda d: d["nodes"].append(
                {"id": "b", "t": 1, "succ": [], "pi": [["1", "2"], ["2", "1"]], "xi": ["0", "0"]}
            ),
            "exactly one root",
        ),
    ],
)
def test_load_model_rejects_malformed(mutate, phrase):
    doc = tiny_doc()
    mutate(doc)
    with pytest.raises(ValidationError) as err:
        load_model(doc)
    assert phrase in str(err.value)


def test_load_model_rejects_floats():
    doc = tiny_doc()
    doc["nodes"][0]["pi"][0][1] = 2.0
    with pytest.raises(ValidationError, match="float"):
        load_model(doc)


def test_recombining_dag_loads_but_blocks_path_operations():
    pi = [["1", "2"], ["2", "1"]]
    doc = {
        "d": 2,
        "T": 2,
        "nodes": [
            {"id": "r", "t": 0, "succ": ["u", "d"], "pi": pi},
            {"id": "u", "t": 1, "succ": ["m"], "pi": pi},
            {"id": "d", "t": 1, "succ": ["m"], "pi": pi},
            {"id": "m", "t": 2, "succ": [], "pi": pi},
        ],
    }
    model = load_model(doc)
    assert not model.is_tree
    assert sorted(model.nodes["m"].parents) == ["d", "u"]
    with pytest.raises(TreeRequiredError):
        model.path_to("m")
    with pytest.raises(TreeRequiredError):
        check_no_arbitrage(model)


def test_solvency_cone_toy_root(toy):
    K = solvency_cone(toy, "R")
    # at R one unit of currency 1 trades against 5 units of currency 2 both ways
    assert K.member((Fraction(1, 5), -1)) and K.member((-1, 5))
    assert not K.member((Fraction(1, 10), -1))
    assert K.member((1, 0)) and K.member((0, 1))
    assert not K.member((-1, 4))
    gens = solvency_generators(toy.nodes["R"], 2)
    assert [tuple(g) for g in gens] == [
        (1, 0),
        (0, 1),
        (Fraction(1, 5), -1),
        (-1, 5),
    ]


def test_dual_solvency_cone_toy_root(toy):
    # R is frictionless, so the consistent price cone is a single ray
    Ks = dual_solvency_cone(toy, "R")
    assert Ks.member((1, Fraction(1, 5))) and Ks.member((5, 1))
    assert not Ks.member((1, 1))
    assert not Ks.member((-1, Fraction(-1, 5)))
    K = solvency_cone(toy, "R")
    assert Ks.set_eq(K.polar())
    # U has a genuine bid-ask spread: a two-dimensional price cone
    Ku = dual_solvency_cone(toy, "U")
    assert Ku.member((3, 1)) and Ku.member((9, 1)) and Ku.member((5, 1))
    assert not Ku.member((2, 1)) and not Ku.member((10, 1))


def test_no_arbitrage_on_toy(toy):
    res = check_no_arbitrage(toy, 1)
    assert res.ok and res.margin == Fraction(3, 65)
    assert res.arbitrage is None
    pair = res.pair
    assert pair.q["R"] == 1
    for nid, node in toy.nodes.items():
        s = pair.S[nid]
        assert s[0] == 1  # normalized to currency 1
        assert dual_solvency_cone(toy, nid).member(s)
        if node.succ:
            for i in range(2):
                assert pair.q[nid] * s[i] == sum(
                    pair.q[c] * pair.S[c][i] for c in node.succ
                )


def test_no_arbitrage_currency_index_validation(toy):
    with pytest.raises(ValidationError):
        check_no_arbitrage(toy, 0)
    with pytest.raises(ValidationError):
        check_no_arbitrage(toy, 3)


def test_arbitrage_detected_with_witness():
    # Frictionless rates that drift upward: buying currency 2 at time 0 and
    # selling at time 1 is a money pump.
    doc = {
        "d": 2,
        "T": 1,
        "nodes": [
            {"id": "r", "t": 0, "succ": ["a"], "pi": [["1", "1"], ["1", "1"]]},
            {"id": "a", "t": 1, "succ": [], "pi": [["1", "1/2"], ["2", "1"]]},
        ],
    }
    model = load_model(doc)
    res = check_no_arbitrage(model)
    assert not res.ok
    assert res.pair is None and res.arbitrage is not None
    assert check_arbitrage_strategy(model, res.arbitrage)


def test_check_arbitrage_strategy_rejects_zero(toy):
    bogus = {
        "holdings": {nid: ["0", "0"] for nid in toy.order if toy.nodes[nid].succ},
        "terminal": {nid: ["0", "0"] for nid in toy.leaves()},
    }
    assert not check_arbitrage_strategy(toy, bogus)


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=15, deadline=None)
def test_random_models_are_arbitrage_free(seed):
    model, pair = random_arbitrage_free_model(random.Random(seed))
    res = check_no_arbitrage(model, 1)
    assert res.ok and res.margin > 0
    assert res.pair is not None


def test_generate_currency_lattice_shape():
    params = LatticeParams(steps=2, digits=6)
    doc = generate_currency_lattice(params)
    model = load_model(doc)
    assert model.d == 3 and model.T == 3  # padding appends one settlement step
    assert doc["meta"]["padding_step"] == 3
    assert not model.is_tree  # recombining by construction
    # the binomial pair recombines: level t carries (t+1)^2 states
    assert len(model.times[1]) == 4 and len(model.times[2]) == 9
    assert len(model.times[3]) == 16
    for node in model.walk():
        for j in range(3):
            assert node.pi[j][j] == 1
            for k in range(3):
                assert node.pi[j][k] > 0
    # the option delivers both foreign currencies against the strike in
    # currency 3 at every exercisable node; padding nodes pay nothing
    for node in model.walk():
        if node.t <= params.steps:
            assert node.xi == (-1, -1, params.strike)
        else:
            assert node.xi == (0, 0, 0)


def test_generate_lattice_padding_toggle():
    a = load_model(generate_currency_lattice(LatticeParams(steps=2, digits=6, padding=False)))
    b = load_model(generate_currency_lattice(LatticeParams(steps=2, digits=6, padding=True)))
    assert a.T == 2 and b.T == 3
    # the settlement layer keeps evolving the rates: (3+1)^2 extra states
    assert len(b.nodes) == len(a.nodes) + 16
    # both models agree on every exercisable node
    for nid, node in a.nodes.items():
        other = b.nodes[nid]
        assert other.pi == node.pi and other.xi == node.xi
    # the extra layer never pays out
    for leaf in b.leaves():
        assert b.nodes[leaf].xi == (0, 0, 0)


def test_lattice_cost_shock_hits_only_the_shock_time():
    doc = generate_currency_lattice(LatticeParams(steps=2, digits=6))
    model = load_model(doc)
    root_pi = model.nodes["t0_1_1"].pi
    shocked_pi = model.nodes["t1_1_1"].pi
    k_shock = Fraction(1, 10)
    k_base = Fraction(5, 1000)
    # infer the applied cost from the product pi[0][2] * pi[2][0] = (1+k)^2
    prod_root = root_pi[0][2] * root_pi[2][0]
    prod_shock = shocked_pi[0][2] * shocked_pi[2][0]
    assert prod_root == (1 + k_base) ** 2
    assert prod_shock == (1 + k_shock) ** 2
