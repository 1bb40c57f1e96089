"""Superhedging of claims paid only at maturity, primal and dual.

The backward recursion here deliberately uses the instant solvency cones K
rather than the deferred cones Q: when nothing is delivered before maturity,
postponed liquidation buys nothing that rebalancing through the tree does not
already provide, and the plain recursion keeps the sets as small as possible.

The dual linear program prices the same claim through consistent state-price
flows rho (one vector per node, dual-feasible for the node's solvency cone,
conserved across each family of children, normalized in the pricing currency
at the root); its optimum equals the primal price exactly.
"""

from __future__ import annotations

from typing import Mapping

from .geometry import Polyhedron
from .linprog import INFEASIBLE, Lp, OPTIMAL
from .market import Model, ValidationError, solvency_cone, solvency_generators
from .rational import Rat, Vec, parse_vec


def _parse_zeta(model: Model, zeta: Mapping[str, object]) -> dict[str, Vec]:
    out: dict[str, Vec] = {}
    for nid in model.leaves():
        if nid not in zeta:
            raise ValidationError(f"terminal claim missing a payoff at leaf {nid!r}")
        out[nid] = parse_vec(zeta[nid], model.d)
    return out


def _check_currency(model: Model, j: int) -> None:
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")


def european_sets(model: Model, zeta: Mapping[str, object]) -> dict[str, Polyhedron]:
    """Endowment sets hedging a terminal claim: zeta + K at the leaves,
    (intersection of the children's sets) + K inside."""
    z = _parse_zeta(model, zeta)
    sets: dict[str, Polyhedron] = {}
    for nid in reversed(model.order):
        node = model.nodes[nid]
        K = solvency_cone(model, nid)
        if not node.succ:
            sets[nid] = K.translate(z[nid])
        else:
            carry = sets[node.succ[0]].intersect(*(sets[s] for s in node.succ[1:]))
            sets[nid] = carry.minkowski_sum(K)
    return sets


def european_ask(model: Model, zeta: Mapping[str, object], j: int = 1) -> Rat:
    """Cheapest x such that x units of currency j superhedge the claim."""
    _check_currency(model, j)
    lo, _hi = european_sets(model, zeta)[model.root].axis_interval(j)
    if lo is None:
        raise ValidationError("the hedging price is unbounded below (the model admits arbitrage)")
    return lo


def european_dual(model: Model, zeta: Mapping[str, object], j: int = 1) -> tuple[Rat, dict[str, Vec]]:
    """Best lower price bound via state-price flows (trees only).

    Returns ``(value, rho)`` where ``value = max E(zeta . S_T)`` over
    consistent flows and ``rho`` maps each node to its optimal state-price
    vector; the value equals :func:`european_ask` exactly.
    """
    model.require_tree("the state-price flow program")
    _check_currency(model, j)
    z = _parse_zeta(model, zeta)
    lp = Lp()
    rho = {nid: lp.vars(model.d) for nid in model.order}
    for node in model.walk():
        for g in solvency_generators(node, model.d):
            lp.add_dot(rho[node.id], g, ">=", 0)
        if node.succ:
            for i in range(model.d):
                lp.add({rho[node.id][i]: 1, **{rho[s][i]: -1 for s in node.succ}}, "==", 0)
    lp.add({rho[model.root][j - 1]: 1}, "==", 1)
    objective = {rho[nid][i]: z[nid][i] for nid in model.leaves() for i in range(model.d)}
    res = lp.maximize(objective)
    if res.status == INFEASIBLE:
        raise ValidationError("no consistent state-price flow exists (the model admits arbitrage)")
    if res.status != OPTIMAL:
        raise ValidationError("the dual value is unbounded (the model admits arbitrage)")
    flow = {nid: tuple(res[v] for v in rho[nid]) for nid in model.order}
    assert res.value is not None
    return res.value, flow
