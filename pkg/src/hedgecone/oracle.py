"""Reference prices for instant (all-at-once) exercise, solved by brute force.

These are deliberately independent of the backward-induction machinery so the
two can cross-check each other: the seller price comes from one flattened
linear program over all portfolio processes (valid because the seller must
cover every node and predictability ties siblings to one variable), the buyer
price from enumerating ordinary stopping times outright.  Enumeration grows
exponentially, so it refuses trees beyond a configurable budget rather than
stalling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .buyer import bid_price
from .linprog import Lp, OPTIMAL, UNBOUNDED
from .market import Model, ValidationError, solvency_cone
from .rational import Rat
from .seller import ask_price

DEFAULT_ENUMERATION_BUDGET = 20_000


class ResourceLimitError(RuntimeError):
    """Raised instead of attempting an enumeration that would not finish."""


def instant_ask_oracle(model: Model, j: int = 1) -> Rat:
    """Cheapest x in currency j covering instant exercise at every node,
    as a single linear program over all portfolio processes."""
    model.require_tree("the flattened ask program")
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    lp = Lp()
    x = lp.var()
    out = {nid: lp.vars(model.d) for nid in model.order if model.nodes[nid].succ}

    def arrival(nid: str):
        """Coefficient map and constant offset of the portfolio entering nid."""
        parent = model.parent(nid)
        if parent is None:
            return {i: ({x: Fraction(1)} if i == j - 1 else {}) for i in range(model.d)}
        return {i: {out[parent][i]: Fraction(1)} for i in range(model.d)}

    for node in model.walk():
        arr = arrival(node.id)
        for n, _o in solvency_cone(model, node.id).hrep():
            coeffs: dict[int, Fraction] = {}
            for i in range(model.d):
                for var, c in arr[i].items():
                    coeffs[var] = coeffs.get(var, Fraction(0)) + n[i] * c
            rhs = sum(n[i] * node.xi[i] for i in range(model.d))
            lp.add(coeffs, ">=", rhs)
            if node.succ:
                shifted = dict(coeffs)
                for i in range(model.d):
                    v = out[node.id][i]
                    shifted[v] = shifted.get(v, Fraction(0)) - n[i]
                lp.add(shifted, ">=", 0)
    res = lp.minimize({x: Fraction(1)})
    if res.status == UNBOUNDED:
        raise ValidationError("the instant ask is unbounded below (the model admits arbitrage)")
    assert res.status == OPTIMAL, "flattened ask program failed"
    assert res.value is not None
    return res.value


def _count_stopping_times(model: Model, budget: int) -> int:
    counts: dict[str, int] = {}
    for nid in reversed(model.order):
        node = model.nodes[nid]
        if not node.succ:
            counts[nid] = 1
            continue
        total = 1
        for s in node.succ:
            total *= counts[s]
            if total > budget:
                return budget + 1
        counts[nid] = total + 1
        if counts[nid] > budget:
            return budget + 1
    return counts[model.root]


def _stopping_sets(model: Model, nid: str):
    """All ways to stop every path through nid: either stop here, or pick a
    stopping set inside each child subtree."""
    node = model.nodes[nid]
    yield [nid]
    if node.succ:
        for combo in product(*(list(_stopping_sets(model, s)) for s in node.succ)):
            merged: list[str] = []
            for part in combo:
                merged.extend(part)
            yield merged


def _stopped_value(model: Model, j: int, stopped: list[str]) -> Rat:
    stop = set(stopped)
    interior: set[str] = set()
    frontier = [model.root]
    while frontier:
        nid = frontier.pop()
        if nid in stop:
            continue
        interior.add(nid)
        frontier.extend(model.nodes[nid].succ)

    lp = Lp()
    x = lp.var()
    out = {nid: lp.vars(model.d) for nid in interior}

    def arrival(nid: str):
        parent = model.parent(nid)
        if parent is None:
            return {i: ({x: Fraction(-1)} if i == j - 1 else {}) for i in range(model.d)}
        return {i: {out[parent][i]: Fraction(1)} for i in range(model.d)}

    for nid in model.order:
        if nid not in stop and nid not in interior:
            continue
        node = model.nodes[nid]
        arr = arrival(nid)
        for n, _o in solvency_cone(model, nid).hrep():
            coeffs: dict[int, Fraction] = {}
            for i in range(model.d):
                for var, c in arr[i].items():
                    coeffs[var] = coeffs.get(var, Fraction(0)) + n[i] * c
            if nid in stop:
                rhs = -sum(n[i] * node.xi[i] for i in range(model.d))
                lp.add(coeffs, ">=", rhs)
            else:
                for i in range(model.d):
                    v = out[nid][i]
                    coeffs[v] = coeffs.get(v, Fraction(0)) - n[i]
                lp.add(coeffs, ">=", 0)
    res = lp.maximize({x: Fraction(1)})
    if res.status == UNBOUNDED:
        raise ValidationError("the instant bid is unbounded (the model admits arbitrage)")
    assert res.status == OPTIMAL, "stopped-value program failed"
    assert res.value is not None
    return res.value


def instant_bid_oracle(
    model: Model, j: int = 1, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> Rat:
    """Best x the buyer can pay in currency j under ordinary stopping times,
    by enumerating every stopping time and pricing each one.

    Raises ResourceLimitError when the tree admits more than ``budget``
    stopping times.
    """
    model.require_tree("stopping-time enumeration")
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    count = _count_stopping_times(model, budget)
    if count > budget:
        raise ResourceLimitError(
            f"more than {budget} stopping times to enumerate; "
            "raise the budget or use the gradual machinery"
        )
    best: Rat | None = None
    for stopped in _stopping_sets(model, model.root):
        value = _stopped_value(model, j, stopped)
        if best is None or value > best:
            best = value
    assert best is not None
    return best


@dataclass(frozen=True)
class PriceQuadruple:
    """The four prices in currency j: instant bid <= gradual bid <=
    gradual ask <= instant ask."""

    instant_bid: Rat
    gradual_bid: Rat
    gradual_ask: Rat
    instant_ask: Rat


def price_quadruple(
    model: Model, j: int = 1, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> PriceQuadruple:
    """All four prices at once, with the ordering invariant enforced."""
    quad = PriceQuadruple(
        instant_bid=instant_bid_oracle(model, j, budget),
        gradual_bid=bid_price(model, j),
        gradual_ask=ask_price(model, j),
        instant_ask=instant_ask_oracle(model, j),
    )
    assert (
        quad.instant_bid <= quad.gradual_bid <= quad.gradual_ask <= quad.instant_ask
    ), f"price ordering violated: {quad}"
    return quad
