"""Seller side of gradual exercise: endowment sets, ask price, hedges,
exercise-weighted wealth, and dual certificates.

Backward induction over the event tree builds three families of sets per
node: U (deliver the whole position now), V (rebalance into something that
still hedges every successor), and Z = U intersect V (hedge whatever split
between the two the holder picks).  The ask price is the cheapest point of
the root Z along the pricing-currency axis.

The dual certificate is a mixed exercise plan together with a pricing
measure and price vectors whose weighted payoff equals the ask exactly; it
is built top-down by splitting each node's incoming state-price mass between
immediate exercise and continuation through two support-function linear
programs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .deferred import (
    check_liquidation,
    deferred_cones,
    liquidation_strategy,
    support_directions,
)
from .geometry import Polyhedron
from .linprog import Lp, OPTIMAL, UNBOUNDED
from .market import Model, ValidationError, check_no_arbitrage, solvency_cone
from .rational import Rat, Vec, fmt_rat, fmt_vec, parse_rat, parse_vec
from .stopping import Chi, chi_star, parse_chi, validate_chi


@dataclass(frozen=True)
class SellerSets:
    """Per-node endowment sets; ``W`` and ``V`` exist at non-terminal nodes."""

    U: dict[str, Polyhedron]
    W: dict[str, Polyhedron]
    V: dict[str, Polyhedron]
    Z: dict[str, Polyhedron]


def construct_sets(model: Model) -> SellerSets:
    """Backward induction for the seller's superhedging sets.  Cached."""
    cached = model._cache.get("seller_sets")
    if cached is None:
        Q = deferred_cones(model)
        U: dict[str, Polyhedron] = {}
        W: dict[str, Polyhedron] = {}
        V: dict[str, Polyhedron] = {}
        Z: dict[str, Polyhedron] = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            U[nid] = Q[nid].translate(node.xi)
            if not node.succ:
                Z[nid] = U[nid]
            else:
                W[nid] = Z[node.succ[0]].intersect(*(Z[s] for s in node.succ[1:]))
                V[nid] = W[nid].minkowski_sum(Q[nid])
                Z[nid] = U[nid].intersect(V[nid])
        cached = SellerSets(U=U, W=W, V=V, Z=Z)
        model._cache["seller_sets"] = cached
    return cached


def ask_price(model: Model, j: int = 1) -> Rat:
    """Cheapest x such that x units of currency j superhedge gradual exercise."""
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    lo, _hi = construct_sets(model).Z[model.root].axis_interval(j)
    if lo is None:
        raise ValidationError("the ask price is unbounded below (the model admits arbitrage)")
    return lo


def construct_set_bounds(
    model: Model, decimals: int = 12
) -> tuple[dict[str, Polyhedron], dict[str, Polyhedron]]:
    """Certified per-node enclosures ``inner[nid] <= Z[nid] <= outer[nid]``.

    Same device as the buyer-side bounds: every step of the backward
    recursion is inclusion-monotone, so replacing each level by a
    support-based inner (resp. outer) approximation along directions sampled
    from the node's deferred dual cone - with grid-rounded data - keeps
    containment by induction while both the coordinate digits and the face
    counts stay bounded per level.  The root is kept unsimplified (grid
    rounding only).  Cached per ``decimals``.
    """
    key = ("seller_bounds", decimals)
    cached = model._cache.get(key)
    if cached is None:
        Q = deferred_cones(model)
        inner: dict[str, Polyhedron] = {}
        outer: dict[str, Polyhedron] = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            U = Q[nid].translate(node.xi)
            dirs = support_directions(model, nid)
            for Z, shrink in ((inner, True), (outer, False)):
                if not node.succ:
                    exact = U
                else:
                    W = Z[node.succ[0]].intersect(*(Z[s] for s in node.succ[1:]))
                    exact = U.intersect(W.minkowski_sum(Q[nid]))
                if nid == model.root:
                    Z[nid] = (
                        exact.rounded_inside(decimals)
                        if shrink
                        else exact.rounded_outside(decimals)
                    )
                elif shrink:
                    Z[nid] = exact.vertex_selected_inside(dirs, decimals)
                else:
                    Z[nid] = exact.support_rounded_outside(dirs, decimals)
        cached = (inner, outer)
        model._cache[key] = cached
    return cached


def ask_bounds(model: Model, j: int = 1, decimals: int = 12) -> tuple[Rat, Rat]:
    """Certified enclosure (lower, upper) of the exact ask price in currency j."""
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    inner, outer = construct_set_bounds(model, decimals)
    lo_in, _ = inner[model.root].axis_interval(j)
    lo_out, _ = outer[model.root].axis_interval(j)
    if lo_out is None:
        raise ValidationError("the ask price is unbounded below (the model admits arbitrage)")
    assert lo_in is not None and lo_in >= lo_out
    return lo_out, lo_in


# ---------------------------------------------------------------------------
# hedge extraction and evaluation


def _carry_holding(model: Model, sets: SellerSets, node, y: Vec) -> Vec:
    """Next-period portfolio: split y = w + k with w hedging every successor
    and k deferred-solvent, minimizing the total carried holdings (plain
    feasibility when that objective is unbounded)."""
    Q = deferred_cones(model)
    lp = Lp()
    w = lp.vars(model.d)
    k = lp.vars(model.d)
    for i in range(model.d):
        lp.add({w[i]: 1, k[i]: 1}, "==", y[i])
    for n, o in sets.W[node.id].hrep():
        lp.add_dot(w, n, ">=", o)
    for n, o in Q[node.id].hrep():
        lp.add_dot(k, n, ">=", o)
    res = lp.minimize({v: Fraction(1) for v in w})
    if res.status == UNBOUNDED:
        res = lp.minimize({})
    if res.status != OPTIMAL:  # pragma: no cover - y in V guarantees feasibility
        raise ValidationError(f"internal: carry split failed at node {node.id!r}")
    return tuple(res[v] for v in w)


def extract_hedge(model: Model, x0) -> dict:
    """Forward extraction of a superhedging strategy from endowment ``x0``.

    Returns a document with the portfolio held entering each node plus the
    unwind plans for both per-node residues (the rebalancing leftover
    y_t - y_{t+1} and the exercise leftover y_t - xi_t), so the
    exercise-weighted wealth of the hedge can be reproduced exactly.
    """
    model.require_tree("hedge extraction")
    x0v = parse_vec(x0, model.d)
    sets = construct_sets(model)
    if not sets.Z[model.root].member(x0v):
        raise ValidationError(
            f"not a superhedging endowment: {fmt_vec(x0v)} lies outside the root endowment set"
        )
    holdings: dict[str, Vec] = {model.root: x0v}
    for nid in model.order:
        node = model.nodes[nid]
        if not node.succ:
            continue
        carry = _carry_holding(model, sets, node, holdings[nid])
        for s in node.succ:
            holdings[s] = carry
    carry_plans: dict[str, dict] = {}
    exercise_plans: dict[str, dict] = {}
    for nid in model.order:
        node = model.nodes[nid]
        if not node.succ:
            continue
        y = holdings[nid]
        nxt = holdings[node.succ[0]]
        carry_plans[nid] = liquidation_strategy(
            model, nid, tuple(a - b for a, b in zip(y, nxt))
        )
        exercise_plans[nid] = liquidation_strategy(
            model, nid, tuple(a - b for a, b in zip(y, node.xi))
        )
    return {
        "side": "seller",
        "endowment": [fmt_rat(c) for c in x0v],
        "holdings": {nid: [fmt_rat(c) for c in holdings[nid]] for nid in model.order},
        "carry_plans": carry_plans,
        "exercise_plans": exercise_plans,
    }


def check_hedge(model: Model, hedge: dict) -> bool:
    """True iff the documented portfolios superhedge gradual exercise:
    every node can deliver the payoff out of its holdings with a
    deferred-solvent leftover, and every rebalancing leftover is
    deferred-solvent too.  Unwind plans, when present, are re-verified."""
    try:
        endowment = parse_vec(hedge["endowment"], model.d)
        holdings = {nid: parse_vec(hedge["holdings"][nid], model.d) for nid in model.order}
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"malformed hedge document: {exc}") from exc
    if holdings[model.root] != endowment:
        return False
    Q = deferred_cones(model)
    for node in model.walk():
        y = holdings[node.id]
        if not Q[node.id].member(tuple(a - b for a, b in zip(y, node.xi))):
            return False
        if node.succ:
            carried = [holdings[s] for s in node.succ]
            if len({tuple(c) for c in carried}) != 1:
                return False
            if not Q[node.id].member(tuple(a - b for a, b in zip(y, carried[0]))):
                return False
    if model.is_tree:
        for key, residue_of in (
            ("carry_plans", lambda n: holdings[n.succ[0]]),
            ("exercise_plans", lambda n: n.xi),
        ):
            for nid, plan in hedge.get(key, {}).items():
                node = model.nodes[nid]
                expected = tuple(a - b for a, b in zip(holdings[nid], residue_of(node)))
                if plan.get("start") != nid:
                    return False
                if parse_vec(plan.get("bundle", ()), model.d) != expected:
                    return False
                if not check_liquidation(model, plan):
                    return False
    return True


def _chi_map(model: Model, chi) -> Chi:
    if isinstance(chi, dict) and "chi" in chi:
        return parse_chi(model, chi)
    return {nid: parse_rat(v) for nid, v in chi.items()}


def gradual_hedge_evaluate(model: Model, hedge: dict, chi) -> dict:
    """Exercise-weighted wealth of a hedge under the mixed exercise plan chi.

    The wealth entering a node keeps the still-live fraction of the current
    portfolio and adds, for every earlier step, the carried remains of that
    step's rebalancing residue (weighted by the mass still live afterwards)
    and of its exercise residue (weighted by the mass exercised there).
    Verifies the per-step delivery inequalities; ``ok`` reports the verdict.
    """
    model.require_tree("exercise-weighted hedge evaluation")
    chi_m = _chi_map(model, chi)
    validate_chi(model, chi_m)
    star = chi_star(model, chi_m)
    try:
        holdings = {nid: parse_vec(hedge["holdings"][nid], model.d) for nid in model.order}
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"malformed hedge document: {exc}") from exc

    def plan_for(kind: str, nid: str, bundle: Vec) -> dict[str, Vec]:
        stored = hedge.get(kind, {}).get(nid)
        if stored is None:
            stored = liquidation_strategy(model, nid, bundle)
        return {k: parse_vec(v, model.d) for k, v in stored["holdings"].items()}

    carry_part: dict[str, dict[str, Vec]] = {}
    exercise_part: dict[str, dict[str, Vec]] = {}
    for node in model.walk():
        if not node.succ:
            continue
        y = holdings[node.id]
        nxt = holdings[node.succ[0]]
        carry_part[node.id] = plan_for(
            "carry_plans", node.id, tuple(a - b for a, b in zip(y, nxt))
        )
        exercise_part[node.id] = plan_for(
            "exercise_plans", node.id, tuple(a - b for a, b in zip(y, node.xi))
        )

    wealth: dict[str, Vec] = {}
    for nid in model.order:
        acc = [star[nid] * c for c in holdings[nid]]
        for anc in model.path_to(nid)[:-1]:
            after = star[anc] - chi_m[anc]
            zpart = carry_part[anc][nid]
            xpart = exercise_part[anc][nid]
            for i in range(model.d):
                acc[i] += after * zpart[i] + chi_m[anc] * xpart[i]
        wealth[nid] = tuple(acc)

    ok = True
    for node in model.walk():
        K = solvency_cone(model, node.id)
        paid = tuple(w - chi_m[node.id] * x for w, x in zip(wealth[node.id], node.xi))
        if node.succ:
            for s in node.succ:
                if not K.member(tuple(a - b for a, b in zip(paid, wealth[s]))):
                    ok = False
        elif not K.member(paid):
            ok = False
    return {
        "Y": {nid: [fmt_rat(c) for c in wealth[nid]] for nid in model.order},
        "ok": ok,
    }


# ---------------------------------------------------------------------------
# dual certificates


def _split_exercise(model: Model, sets: SellerSets, node, y: Vec) -> tuple[Vec, Vec]:
    """Split the incoming state-price vector y = a + b between immediate
    exercise and continuation, minimizing the implied price bound
    -a.xi + (support of the continuation sets at b); both parts stay
    dual-feasible for the node's deferred cone."""
    Q = deferred_cones(model)
    lp = Lp()
    a = lp.vars(model.d)
    b = lp.vars(model.d)
    r = lp.var()
    for i in range(model.d):
        lp.add({a[i]: 1, b[i]: 1}, "==", y[i])
    _pts, q_rays = Q[node.id].vrep()
    for ray in q_rays:
        lp.add_dot(a, ray, ">=", 0)
        lp.add_dot(b, ray, ">=", 0)
    w_pts, w_rays = sets.W[node.id].vrep()
    for ray in w_rays:
        lp.add_dot(b, ray, ">=", 0)
    for p in w_pts:
        lp.add({r: 1, **{b[i]: p[i] for i in range(model.d)}}, ">=", 0)
    objective: dict[int, Fraction] = {r: Fraction(1)}
    for i in range(model.d):
        objective[a[i]] = -node.xi[i]
    res = lp.minimize(objective)
    assert res.status == OPTIMAL, f"exercise split failed at node {node.id!r}"
    return tuple(res[v] for v in a), tuple(res[v] for v in b)


def _split_children(model: Model, sets: SellerSets, node, b: Vec) -> dict[str, Vec]:
    """Distribute the continuation vector b across the children,
    maximizing the summed price bounds of their endowment sets; each share
    stays dual-feasible for its child's recession cone."""
    lp = Lp()
    shares = {s: lp.vars(model.d) for s in node.succ}
    slack = {s: lp.var() for s in node.succ}
    for i in range(model.d):
        lp.add({shares[s][i]: 1 for s in node.succ}, "==", b[i])
    for s in node.succ:
        z_pts, z_rays = sets.Z[s].vrep()
        for ray in z_rays:
            lp.add_dot(shares[s], ray, ">=", 0)
        for p in z_pts:
            lp.add({slack[s]: 1, **{shares[s][i]: p[i] for i in range(model.d)}}, ">=", 0)
    res = lp.minimize({slack[s]: Fraction(1) for s in node.succ})
    assert res.status == OPTIMAL, f"child split failed at node {node.id!r}"
    return {s: tuple(res[v] for v in shares[s]) for s in node.succ}


def dual_certificate(model: Model, j: int = 1) -> dict:
    """Optimal certificate: exercise plan chi, pricing measure q, and price
    vectors S with value E_q((xi.S)_chi) equal to the ask price exactly.

    The root linear program recovers the price as the best lower bound
    s.x over the root endowment set; the top-down pass then splits each
    node's incoming state-price mass between exercise and continuation.
    Branches that receive no mass are padded with the strictly positive
    no-arbitrage pair so the price vectors stay dual-feasible everywhere.
    """
    model.require_tree("dual certificate construction")
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    na = check_no_arbitrage(model, j)
    if not na.ok:
        raise ValidationError("the model admits arbitrage; no dual certificate exists")
    assert na.pair is not None
    ref_q = {nid: parse_rat(na.pair.q[nid]) for nid in model.order}
    ref_S = {nid: parse_vec(na.pair.S[nid], model.d) for nid in model.order}
    sets = construct_sets(model)

    pts, rays = sets.Z[model.root].vrep()
    lp = Lp()
    s_var = lp.vars(model.d)
    m = lp.var()
    for ray in rays:
        lp.add_dot(s_var, ray, ">=", 0)
    lp.add({s_var[j - 1]: 1}, "==", 1)
    for p in pts:
        lp.add({m: -1, **{s_var[i]: p[i] for i in range(model.d)}}, ">=", 0)
    res = lp.maximize({m: Fraction(1)})
    assert res.status == OPTIMAL, "root price program failed"
    value = res.value
    assert value == ask_price(model, j)

    chi: dict[str, Fraction] = {}
    qhat: dict[str, Fraction] = {}
    S: dict[str, Vec] = {}
    zero = tuple(Fraction(0) for _ in range(model.d))
    stack: list[tuple[str, Vec, Fraction, Fraction]] = [
        (model.root, tuple(res[v] for v in s_var), Fraction(1), Fraction(1))
    ]
    while stack:
        nid, y, mass, live = stack.pop()
        node = model.nodes[nid]
        tau = y[j - 1]
        qhat[nid] = mass
        if tau == 0:
            # dead branch: exercise whatever plan mass is left right away and
            # continue the measure along the reference pair
            chi[nid] = live
            S[nid] = ref_S[nid]
            for s in node.succ:
                stack.append((s, zero, mass * ref_q[s] / ref_q[nid], Fraction(0)))
            continue
        if not node.succ:
            chi[nid] = live
            S[nid] = tuple(c / tau for c in y)
            continue
        a, b = _split_exercise(model, sets, node, y)
        chi[nid] = a[j - 1] / tau * live
        S[nid] = tuple(c / a[j - 1] for c in a) if a[j - 1] > 0 else tuple(c / tau for c in y)
        if b[j - 1] == 0:
            for s in node.succ:
                stack.append((s, zero, mass * ref_q[s] / ref_q[nid], Fraction(0)))
        else:
            shares = _split_children(model, sets, node, b)
            for s in node.succ:
                c = shares[s]
                stack.append((s, c, mass * c[j - 1] / b[j - 1], live - chi[nid]))

    total = sum(
        (
            qhat[nid] * chi[nid] * sum(x * sv for x, sv in zip(model.nodes[nid].xi, S[nid]))
            for nid in model.order
        ),
        Fraction(0),
    )
    assert total == value, "certificate value disagrees with the root program"
    return {
        "side": "seller",
        "currency": j,
        "value": fmt_rat(value),
        "chi": {nid: fmt_rat(chi[nid]) for nid in model.order},
        "q": {nid: fmt_rat(qhat[nid]) for nid in model.order},
        "S": {nid: [fmt_rat(c) for c in S[nid]] for nid in model.order},
    }


def _certificate_violation(
    model: Model, cert: dict, j: int | None = None, hedge: dict | None = None
) -> str | None:
    """First violated certificate condition, or None when all hold."""
    model.require_tree("certificate verification")
    if cert.get("side", "seller") != "seller":
        return "certificate side"
    if j is None:
        j = int(cert.get("currency", 1))
    if not 1 <= j <= model.d:
        return "currency index"
    if "currency" in cert and int(cert["currency"]) != j:
        return "currency index"
    try:
        value = parse_rat(cert["value"])
        chi = {nid: parse_rat(cert["chi"][nid]) for nid in model.order}
        qhat = {nid: parse_rat(cert["q"][nid]) for nid in model.order}
        S = {nid: parse_vec(cert["S"][nid], model.d) for nid in model.order}
    except (KeyError, TypeError, AttributeError, ValueError):
        return "certificate document shape"
    try:
        validate_chi(model, chi)
    except ValidationError as exc:
        return f"exercise plan: {exc}"
    if qhat[model.root] != 1 or any(v < 0 for v in qhat.values()):
        return "pricing measure"
    for node in model.walk():
        if node.succ and sum(qhat[s] for s in node.succ) != qhat[node.id]:
            return f"pricing-measure consistency at node {node.id!r}"
    Q = deferred_cones(model)
    rays = {nid: Q[nid].vrep()[1] for nid in model.order}
    for nid in model.order:
        if S[nid][j - 1] != 1:
            return f"price normalization at node {nid!r}"
        if any(sum(c * r for c, r in zip(S[nid], ray)) < 0 for ray in rays[nid]):
            return f"dual-cone membership at node {nid!r}"
    tail: dict[str, Vec] = {}
    scalar_tail: dict[str, Fraction] = {}
    for nid in reversed(model.order):
        node = model.nodes[nid]
        weight = qhat[nid] * chi[nid]
        here = tuple(weight * c for c in S[nid])
        here_s = weight * sum(x * c for x, c in zip(node.xi, S[nid]))
        if not node.succ:
            tail[nid] = here
            scalar_tail[nid] = here_s
            continue
        child_sum = tuple(sum(tail[s][i] for s in node.succ) for i in range(model.d))
        if qhat[nid] > 0 and any(
            sum(c * r for c, r in zip(child_sum, ray)) < 0 for ray in rays[nid]
        ):
            return f"continuation-price membership at node {nid!r}"
        tail[nid] = tuple(h + c for h, c in zip(here, child_sum))
        scalar_tail[nid] = here_s + sum(scalar_tail[s] for s in node.succ)
    if scalar_tail[model.root] != value:
        return "certificate value"
    if hedge is not None:
        try:
            holdings = {nid: parse_vec(hedge["holdings"][nid], model.d) for nid in model.order}
        except (KeyError, TypeError, AttributeError, ValueError):
            return "hedge document shape"
        for nid in model.order:
            if qhat[nid] == 0:
                continue
            lhs = sum(h * t for h, t in zip(holdings[nid], tail[nid]))
            if lhs < scalar_tail[nid]:
                return f"price-bound inequality at node {nid!r}"
    return None


def verify_certificate(
    model: Model, cert: dict, j: int | None = None, hedge: dict | None = None
) -> bool:
    """True iff the certificate is a valid dual pair for gradual exercise:
    chi is a mixed exercise plan, q a pricing measure, S normalized price
    vectors dual-feasible for the deferred cones with dual-feasible
    continuation values, and the stated value matches E_q((xi.S)_chi).
    With a hedge supplied, also checks the per-node price-bound inequality
    between the hedge's holdings and the certificate's tail values."""
    return _certificate_violation(model, cert, j, hedge) is None
