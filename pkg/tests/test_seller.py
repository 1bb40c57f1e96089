from __future__ import annotations

import random
from fractions import Fraction

import pytest

from conftest import random_arbitrage_free_model
from hedgecone.geometry import Polyhedron
from hedgecone.market import ValidationError
from hedgecone.seller import (
    ask_price,
    check_hedge,
    construct_sets,
    dual_certificate,
    extract_hedge,
    gradual_hedge_evaluate,
    verify_certificate,
)
from hedgecone.stopping import from_ordinary

# Hand-checked optimal certificate for the toy model in currency 2: stop
# three quarters of the position at the up node, the rest at its children,
# with all pricing mass on the up-up path.
CERT_STOP_THREE_QUARTERS_AT_U = {
    "side": "seller",
    "currency": 2,
    "value": "5",
    "chi": {"R": "0", "U": "3/4", "D": "0", "UU": "1/4", "UD": "1/4", "DU": "1", "DD": "1"},
    "q": {"R": "1", "U": "1", "D": "0", "UU": "1", "UD": "0", "DU": "0", "DD": "0"},
    "S": {
        "R": ["5", "1"],
        "U": ["4", "1"],
        "D": ["2", "1"],
        "UU": ["8", "1"],
        "UD": ["4", "1"],
        "DU": ["3", "1"],
        "DD": ["1", "1"],
    },
}

# Canonical half-space descriptions of the seller endowment sets, derived by
# hand from the toy model's bands: R (5,5); U (3,9); D (2,2); UU (4,8);
# UD (4,4); DU (3,3); DD (1,1) with payoff (0,4) at U and (2,-8) at UU.
EXPECTED_Z_AD = {
    "R": [((5, 1), 5)],
    "U": [((4, 1), 4), ((8, 1), 8)],
    "D": [((2, 1), 0)],
    "UU": [((4, 1), 0), ((8, 1), 8)],
    "UD": [((4, 1), 0)],
    "DU": [((3, 1), 0)],
    "DD": [((1, 1), 0)],
}


def test_toy_ask_prices(toy):
    assert ask_price(toy, 2) == 5
    assert ask_price(toy, 1) == 1


@pytest.mark.parametrize("j", [0, 3, -1])
def test_ask_rejects_bad_currency(toy, j):
    with pytest.raises(ValidationError) as err:
        ask_price(toy, j)
    assert "currency index" in str(err.value)


def test_endowment_sets_match_hand_computation(toy):
    sets = construct_sets(toy)
    assert set(sets.Z) == set(toy.order)
    for nid, ineqs in EXPECTED_Z_AD.items():
        expected = Polyhedron.from_hrep(2, ineqs)
        assert sets.Z[nid].set_eq(expected), f"endowment set mismatch at {nid}"
    # U and V bracket Z at interior nodes
    for nid in ("R", "U", "D"):
        assert sets.U[nid].contains(sets.Z[nid])
        assert sets.V[nid].contains(sets.Z[nid])


def test_extract_hedge_roundtrip(toy):
    hedge = extract_hedge(toy, ["0", "5"])
    assert hedge["side"] == "seller"
    assert hedge["endowment"] == ["0", "5"]
    assert hedge["holdings"]["R"] == ["0", "5"]
    assert set(hedge["holdings"]) == set(toy.order)
    # unwind plans exist exactly at the non-terminal nodes
    assert set(hedge["carry_plans"]) == {"R", "U", "D"}
    assert set(hedge["exercise_plans"]) == {"R", "U", "D"}
    assert check_hedge(toy, hedge)


def test_extract_hedge_above_ask_also_works(toy):
    hedge = extract_hedge(toy, ["1/3", "11/2"])
    assert check_hedge(toy, hedge)


def test_extract_hedge_rejects_insufficient_endowment(toy):
    with pytest.raises(ValidationError) as err:
        extract_hedge(toy, ["0", "4"])
    assert "not a superhedging endowment" in str(err.value)


def test_check_hedge_detects_tampering(toy):
    hedge = extract_hedge(toy, ["0", "5"])

    bad = {**hedge, "endowment": ["0", "6"]}
    assert not check_hedge(toy, bad)

    bad = {**hedge, "holdings": {**hedge["holdings"], "UU": ["1", "-9"]}}
    assert not check_hedge(toy, bad)

    # siblings must carry identical portfolios
    bumped = [str(Fraction(hedge["holdings"]["UD"][0]) + 1), hedge["holdings"]["UD"][1]]
    bad = {**hedge, "holdings": {**hedge["holdings"], "UD": bumped}}
    assert not check_hedge(toy, bad)

    with pytest.raises(ValidationError):
        check_hedge(toy, {"side": "seller"})


STOP_SETS = [
    ["R"],
    ["U", "D"],
    ["U", "DU", "DD"],
    ["UU", "UD", "D"],
    ["UU", "UD", "DU", "DD"],
]


@pytest.mark.parametrize("stop", STOP_SETS, ids=["-".join(s) for s in STOP_SETS])
def test_hedge_covers_every_ordinary_stopping_time(toy, stop):
    hedge = extract_hedge(toy, ["0", "5"])
    chi = from_ordinary(toy, {nid: True for nid in stop})
    report = gradual_hedge_evaluate(toy, hedge, chi)
    assert report["ok"]
    assert report["Y"]["R"] == ["0", "5"]


def test_hedge_covers_mixed_plan(toy):
    hedge = extract_hedge(toy, ["0", "5"])
    chi = {"R": "0", "U": "3/4", "D": "0", "UU": "1/4", "UD": "1/4", "DU": "1", "DD": "1"}
    report = gradual_hedge_evaluate(toy, hedge, chi)
    assert report["ok"]


def test_evaluation_flags_underfunded_holdings(toy):
    hedge = extract_hedge(toy, ["0", "5"])
    # strip a leaf below its own payoff: exercising everything there fails
    hedge["holdings"]["UU"] = ["1", "-9"]
    chi = from_ordinary(toy, {nid: True for nid in ("UU", "UD", "DU", "DD")})
    report = gradual_hedge_evaluate(toy, hedge, chi)
    assert not report["ok"]


def test_dual_certificate_toy(toy):
    cert = dual_certificate(toy, 2)
    assert cert["value"] == "5"
    assert cert["side"] == "seller"
    assert verify_certificate(toy, cert)
    assert verify_certificate(toy, cert, j=2)
    hedge = extract_hedge(toy, ["0", "5"])
    assert verify_certificate(toy, cert, hedge=hedge)

    assert dual_certificate(toy, 1)["value"] == "1"


def test_hand_built_certificate_verifies(toy):
    assert verify_certificate(toy, CERT_STOP_THREE_QUARTERS_AT_U)
    hedge = extract_hedge(toy, ["0", "5"])
    assert verify_certificate(toy, CERT_STOP_THREE_QUARTERS_AT_U, hedge=hedge)


@pytest.mark.parametrize(
    "mutate, reason",
    [
        (lambda c: c.update(value="6"), "wrong value"),
        (lambda c: c["chi"].update(U="1"), "plan mass overflows"),
        (lambda c: c["q"].update(U="2"), "measure inconsistent"),
        (lambda c: c["S"].update(U=["9", "1"]), "price outside dual cone"),
        (lambda c: c["S"].update(R=["5", "2"]), "price not normalized"),
        (lambda c: c.update(side="buyer"), "wrong side"),
        (lambda c: c["q"].update(R="-1", U="-1", UU="-1"), "negative mass"),
    ],
)
def test_certificate_tampering_fails(toy, mutate, reason):
    cert = {
        **CERT_STOP_THREE_QUARTERS_AT_U,
        "chi": dict(CERT_STOP_THREE_QUARTERS_AT_U["chi"]),
        "q": dict(CERT_STOP_THREE_QUARTERS_AT_U["q"]),
        "S": dict(CERT_STOP_THREE_QUARTERS_AT_U["S"]),
    }
    mutate(cert)
    assert not verify_certificate(toy, cert), reason


def test_certificate_currency_mismatch(toy):
    assert not verify_certificate(toy, CERT_STOP_THREE_QUARTERS_AT_U, j=1)


def test_price_bound_fails_for_underfunded_hedge(toy):
    hedge = extract_hedge(toy, ["0", "5"])
    fake = {**hedge, "holdings": {nid: ["0", "0"] for nid in toy.order}}
    assert not verify_certificate(toy, CERT_STOP_THREE_QUARTERS_AT_U, hedge=fake)


def test_random_models_strong_duality_and_hedges():
    rng = random.Random(20260814)
    for _ in range(8):
        model, _pair = random_arbitrage_free_model(rng)
        for j in range(1, model.d + 1):
            ask = ask_price(model, j)
            cert = dual_certificate(model, j)
            assert Fraction(cert["value"]) == ask
            assert verify_certificate(model, cert, j=j)
            x0 = ["0"] * model.d
            x0[j - 1] = str(ask)
            hedge = extract_hedge(model, x0)
            assert check_hedge(model, hedge)
            assert verify_certificate(model, cert, j=j, hedge=hedge)
