from __future__ import annotations

import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from hedgecone.market import Model, PricingPair, load_model, load_model_file

TOY_PATH = Path(__file__).resolve().parent.parent / "models" / "toy.json"


@pytest.fixture(scope="session")
def toy() -> Model:
    return load_model_file(str(TOY_PATH))


@pytest.fixture(scope="session")
def toy_path() -> Path:
    return TOY_PATH


@pytest.fixture(scope="session")
def toy_doc() -> dict:
    return json.loads(TOY_PATH.read_text())


def random_arbitrage_free_model(
    rng: random.Random,
    d: int | None = None,
    depth: int | None = None,
) -> tuple[Model, PricingPair]:
    """A random tree model that is arbitrage-free by construction.

    Prices are built backward from an explicit strictly consistent pricing
    pair (q, S): child prices are chosen so that q-expectations recover the
    parent price exactly, and exchange rates add a strictly positive
    friction on top of the price ratios.  Returns the model together with
    the pair that witnesses no-arbitrage (normalized to currency 1).
    """
    d = d if d is not None else rng.choice([2, 3])
    depth = depth if depth is not None else rng.choice([1, 2, 3])

    def rand_pos() -> Fraction:
        return Fraction(rng.randint(1, 12), rng.randint(1, 12))

    def rand_friction() -> Fraction:
        return Fraction(rng.randint(1, 25), 100)

    def rand_payoff() -> Fraction:
        return Fraction(rng.randint(-4, 8), rng.choice([1, 2, 4]))

    S: dict[str, tuple[Fraction, ...]] = {}
    q: dict[str, Fraction] = {}
    nodes: list[dict] = []

    def pi_from_price(s: tuple[Fraction, ...]) -> list[list[str]]:
        pi = [[None] * d for _ in range(d)]
        for a in range(d):
            for b in range(d):
                if a == b:
                    pi[a][b] = "1"
                else:
                    pi[a][b] = str((s[b] / s[a]) * (1 + rand_friction()))
        return pi

    def grow(nid: str, t: int, parent: str | None) -> None:
        n_children = 0 if t == depth else rng.choice([2, 2, 3])
        succ = [f"{nid}{k}" for k in range(n_children)]
        payoff = [str(rand_payoff()) for _ in range(d)]
        nodes.append(
            {
                "id": nid,
                "t": t,
                "parent": parent,
                "succ": succ,
                "lattice_key": None,
                "pi": pi_from_price(S[nid]),
                "xi": payoff,
            }
        )
        if not succ:
            return
        weights = [Fraction(rng.randint(1, 9)) for _ in succ]
        total_w = sum(weights)
        cond = [w / total_w for w in weights]
        # Per-coordinate multipliers with coordinate 0 pinned to 1 keep
        # S^1 = 1 along the whole tree while preserving the martingale
        # identity sum_k cond_k * S_child_k = S_parent exactly.
        mults = [
            tuple([Fraction(1)] + [rand_pos() for _ in range(d - 1)]) for _ in succ
        ]
        denom = [sum(cond[k] * mults[k][i] for k in range(len(succ))) for i in range(d)]
        for k, child in enumerate(succ):
            S[child] = tuple(S[nid][i] * mults[k][i] / denom[i] for i in range(d))
            q[child] = q[nid] * cond[k]
            grow(child, t + 1, nid)

    S["n"] = tuple([Fraction(1)] + [rand_pos() for _ in range(d - 1)])
    q["n"] = Fraction(1)
    grow("n", 0, None)

    model = load_model({"d": d, "T": depth, "nodes": nodes})
    return model, PricingPair(j=1, q=q, S=S)
