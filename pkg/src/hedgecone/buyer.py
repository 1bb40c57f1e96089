"""Buyer side of gradual exercise: endowment sets, bid price, strategy
extraction, and dual certificates.

The buyer receives the payoff stream and chooses the exercise plan, so the
backward recursion takes the convex hull of "exercise everything now"
(U = -xi + Q) and "continue" (V = (intersection of the children's sets) + Q)
instead of their intersection; points of the root set along the pricing axis
are the endowments -x from which some plan of the buyer's own choosing ends
solvent, and the bid price is the largest such x.

Dual certificates price the extracted plan as a European claim through a
consistent state-price flow; the resulting pair (measure, normalized price
vectors) is a martingale under instant solvency, and the certificate's value
equals the bid exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .deferred import deferred_cones, liquidation_strategy, support_directions
from .european import european_dual
from .geometry import Polyhedron
from .linprog import Lp, OPTIMAL
from .market import (
    Model,
    ValidationError,
    check_no_arbitrage,
    solvency_cone,
    solvency_generators,
)
from .rational import Rat, Vec, fmt_rat, fmt_vec, parse_rat, parse_vec
from .stopping import validate_chi


@dataclass(frozen=True)
class BuyerSets:
    """Per-node endowment sets; ``W`` and ``V`` exist at non-terminal nodes."""

    U: dict[str, Polyhedron]
    W: dict[str, Polyhedron]
    V: dict[str, Polyhedron]
    Z: dict[str, Polyhedron]


def construct_sets(model: Model) -> BuyerSets:
    """Backward induction for the buyer's superhedging sets.  Cached."""
    cached = model._cache.get("buyer_sets")
    if cached is None:
        Q = deferred_cones(model)
        U: dict[str, Polyhedron] = {}
        W: dict[str, Polyhedron] = {}
        V: dict[str, Polyhedron] = {}
        Z: dict[str, Polyhedron] = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            U[nid] = Q[nid].translate(tuple(-x for x in node.xi))
            if not node.succ:
                Z[nid] = U[nid]
            else:
                W[nid] = Z[node.succ[0]].intersect(*(Z[s] for s in node.succ[1:]))
                V[nid] = W[nid].minkowski_sum(Q[nid])
                Z[nid] = U[nid].convex_hull_closed(V[nid])
        cached = BuyerSets(U=U, W=W, V=V, Z=Z)
        model._cache["buyer_sets"] = cached
    return cached


def bid_price(model: Model, j: int = 1) -> Rat:
    """Largest x the buyer can pay in currency j and still end solvent under
    an exercise plan of their own choosing."""
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    lo, _hi = construct_sets(model).Z[model.root].axis_interval(j)
    if lo is None:
        raise ValidationError("the bid price is unbounded (the model admits arbitrage)")
    return -lo


def construct_set_bounds(
    model: Model, decimals: int = 12
) -> tuple[dict[str, Polyhedron], dict[str, Polyhedron]]:
    """Certified per-node enclosures ``inner[nid] <= Z[nid] <= outer[nid]``.

    The exact recursion grows both the coordinate digits (roughly twofold per
    time step) and the face counts of the sets, which makes deep models
    intractable exactly.  Every step is inclusion-monotone, so replacing each
    level by a support-based inner (resp. outer) approximation along
    directions sampled from the node's deferred dual cone - with grid-rounded
    data - yields certified two-sided bounds whose size stays bounded per
    level.  Support values agree exactly along every sampled direction, so
    the gap only reflects the angular resolution of the sampling.  The root
    is kept unsimplified (grid rounding only) so its faces stay faithful.
    Cached per ``decimals``.
    """
    key = ("buyer_bounds", decimals)
    cached = model._cache.get(key)
    if cached is None:
        Q = deferred_cones(model)
        inner: dict[str, Polyhedron] = {}
        outer: dict[str, Polyhedron] = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            U = Q[nid].translate(tuple(-x for x in node.xi))
            dirs = support_directions(model, nid)
            for Z, shrink in ((inner, True), (outer, False)):
                if not node.succ:
                    exact = U
                else:
                    W = Z[node.succ[0]].intersect(*(Z[s] for s in node.succ[1:]))
                    exact = U.convex_hull_closed(W.minkowski_sum(Q[nid]))
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


def bid_bounds(model: Model, j: int = 1, decimals: int = 12) -> tuple[Rat, Rat]:
    """Certified enclosure (lower, upper) of the exact bid price in currency j.

    Runs the grid-rounded recursions of :func:`construct_set_bounds`; the gap
    shrinks with ``decimals`` (one grid step per vertex coordinate per level).
    """
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    inner, outer = construct_set_bounds(model, decimals)
    lo_in, _ = inner[model.root].axis_interval(j)
    lo_out, _ = outer[model.root].axis_interval(j)
    if lo_out is None:
        raise ValidationError("the bid price is unbounded (the model admits arbitrage)")
    assert lo_in is not None and lo_in >= lo_out
    return -lo_in, -lo_out


# ---------------------------------------------------------------------------
# strategy extraction


def _exercise_split(model: Model, sets: BuyerSets, node, z: Vec, p: Rat):
    """Split the position at a node between exercising a fraction alpha of
    the remaining plan mass p now and continuing with mass beta = p - alpha,
    preferring the largest immediate exercise.  Returns (alpha, beta, znext)
    where znext is the portfolio carried into every child."""
    Q = deferred_cones(model)
    w_pts, w_rays = sets.W[node.id].vrep()
    lp = Lp()
    alpha = lp.var(nonneg=True)
    mu = [lp.var(nonneg=True) for _ in w_pts]
    nu = [lp.var(nonneg=True) for _ in w_rays]
    qv = lp.vars(model.d)
    for n, o in Q[node.id].hrep():
        lp.add_dot(qv, n, ">=", o)
    lp.add({alpha: 1, **{v: 1 for v in mu}}, "==", p)
    for i in range(model.d):
        coeffs: dict[int, Fraction] = {alpha: -node.xi[i], qv[i]: Fraction(1)}
        for v, pt in zip(mu, w_pts):
            coeffs[v] = pt[i]
        for v, ray in zip(nu, w_rays):
            coeffs[v] = ray[i]
        lp.add(coeffs, "==", z[i])
    res = lp.maximize({alpha: Fraction(1)})
    assert res.status == OPTIMAL, f"exercise split failed at node {node.id!r}"
    znext = tuple(
        sum((res[v] * pt[i] for v, pt in zip(mu, w_pts)), Fraction(0))
        + sum((res[v] * ray[i] for v, ray in zip(nu, w_rays)), Fraction(0))
        for i in range(model.d)
    )
    beta = sum((res[v] for v in mu), Fraction(0))
    return res[alpha], beta, znext


def extract_strategy(model: Model, x0) -> dict:
    """Forward extraction of an exercise plan and portfolio process from the
    endowment ``x0`` (for a price of x the buyer starts at -x in the pricing
    currency).

    Each node exercises the largest plan fraction its position supports and
    carries the rest; whatever the rebalancing leaves over is deferred-solvent
    and unwound by an attached plan.  The documented holdings fold those
    unwinding plans back in, so they satisfy the per-step solvency conditions
    under instant solvency cones.
    """
    model.require_tree("strategy extraction")
    x0v = parse_vec(x0, model.d)
    sets = construct_sets(model)
    if not sets.Z[model.root].member(x0v):
        raise ValidationError(
            f"not a buyer superhedging endowment: {fmt_vec(x0v)} lies outside "
            "the root endowment set"
        )
    carry: dict[str, Vec] = {model.root: x0v}
    mass: dict[str, Fraction] = {model.root: Fraction(1)}
    chi: dict[str, Fraction] = {}
    plans: dict[str, dict] = {}
    for nid in model.order:
        node = model.nodes[nid]
        z, p = carry[nid], mass[nid]
        if not node.succ:
            chi[nid] = p
            final = tuple(c + p * x for c, x in zip(z, node.xi))
            assert solvency_cone(model, nid).member(final), f"terminal gap at node {nid!r}"
            continue
        alpha, beta, znext = _exercise_split(model, sets, node, z, p)
        chi[nid] = alpha
        residue = tuple(c + alpha * x - n for c, x, n in zip(z, node.xi, znext))
        plans[nid] = liquidation_strategy(model, nid, residue)
        for s in node.succ:
            carry[s] = znext
            mass[s] = beta
    holdings: dict[str, Vec] = {}
    for nid in model.order:
        acc = list(carry[nid])
        for anc in model.path_to(nid)[:-1]:
            extra = parse_vec(plans[anc]["holdings"][nid], model.d)
            for i in range(model.d):
                acc[i] += extra[i]
        holdings[nid] = tuple(acc)
    return {
        "side": "buyer",
        "endowment": [fmt_rat(c) for c in x0v],
        "chi": {nid: fmt_rat(chi[nid]) for nid in model.order},
        "holdings": {nid: [fmt_rat(c) for c in holdings[nid]] for nid in model.order},
        "mass": {nid: fmt_rat(mass[nid]) for nid in model.order},
        "carry": {nid: [fmt_rat(c) for c in carry[nid]] for nid in model.order},
        "plans": plans,
    }


def check_strategy(model: Model, strategy: dict) -> bool:
    """True iff the documented plan and portfolios are self-financing for the
    buyer: starting from the endowment, each step's position plus the
    exercised payoff fraction covers the next position up to instant
    solvency, ending solvent at the leaves."""
    try:
        endowment = parse_vec(strategy["endowment"], model.d)
        chi = {nid: parse_rat(strategy["chi"][nid]) for nid in model.order}
        holdings = {nid: parse_vec(strategy["holdings"][nid], model.d) for nid in model.order}
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"malformed strategy document: {exc}") from exc
    try:
        validate_chi(model, chi)
    except ValidationError:
        return False
    if holdings[model.root] != endowment:
        return False
    for node in model.walk():
        K = solvency_cone(model, node.id)
        paid = tuple(h + chi[node.id] * x for h, x in zip(holdings[node.id], node.xi))
        if not node.succ:
            if not K.member(paid):
                return False
            continue
        carried = [holdings[s] for s in node.succ]
        if len({tuple(c) for c in carried}) != 1:
            return False
        if not K.member(tuple(a - b for a, b in zip(paid, carried[0]))):
            return False
    return True


# ---------------------------------------------------------------------------
# dual certificates


def dual_certificate(model: Model, j: int = 1) -> dict:
    """Optimal certificate: the extracted exercise plan chi priced by the
    worst consistent pricing pair, with value E_q((xi.S)_chi) equal to the
    bid exactly.

    The plan is extracted at the bid endowment; pricing it reduces to a
    terminal claim (the plan's accumulated payoff per leaf) handled by the
    state-price flow program.  Nodes the flow never reaches get the strictly
    positive no-arbitrage pair, which keeps the martingale property intact
    because an unreachable node's whole subtree carries zero mass.
    """
    model.require_tree("dual certificate construction")
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    na = check_no_arbitrage(model, j)
    if not na.ok:
        raise ValidationError("the model admits arbitrage; no dual certificate exists")
    assert na.pair is not None
    ref_S = {nid: parse_vec(na.pair.S[nid], model.d) for nid in model.order}
    bid = bid_price(model, j)
    x0 = [Fraction(0)] * model.d
    x0[j - 1] = -bid
    strategy = extract_strategy(model, x0)
    chi = {nid: parse_rat(strategy["chi"][nid]) for nid in model.order}
    zeta = {
        leaf: tuple(
            -sum(chi[nid] * model.nodes[nid].xi[i] for nid in model.path_to(leaf))
            for i in range(model.d)
        )
        for leaf in model.leaves()
    }
    claim_value, flow = european_dual(model, zeta, j)
    assert claim_value == -bid, "claim reduction disagrees with the bid"
    qhat = {nid: flow[nid][j - 1] for nid in model.order}
    S = {
        nid: tuple(c / qhat[nid] for c in flow[nid]) if qhat[nid] > 0 else ref_S[nid]
        for nid in model.order
    }
    value = sum(
        (
            qhat[nid] * chi[nid] * sum(x * sv for x, sv in zip(model.nodes[nid].xi, S[nid]))
            for nid in model.order
        ),
        Fraction(0),
    )
    assert value == bid, "certificate value disagrees with the bid"
    return {
        "side": "buyer",
        "currency": j,
        "value": fmt_rat(value),
        "chi": {nid: fmt_rat(chi[nid]) for nid in model.order},
        "q": {nid: fmt_rat(qhat[nid]) for nid in model.order},
        "S": {nid: [fmt_rat(c) for c in S[nid]] for nid in model.order},
    }


def _certificate_violation(model: Model, cert: dict, j: int | None = None) -> str | None:
    """First violated certificate condition, or None when all hold."""
    if cert.get("side", "buyer") != "buyer":
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
        if S[node.id][j - 1] != 1:
            return f"price normalization at node {node.id!r}"
        if any(
            sum(c * g for c, g in zip(S[node.id], gen)) < 0
            for gen in solvency_generators(node, model.d)
        ):
            return f"price-cone membership at node {node.id!r}"
        state_price = tuple(qhat[node.id] * c for c in S[node.id])
        if node.succ:
            for i in range(model.d):
                if sum(qhat[s] * S[s][i] for s in node.succ) != state_price[i]:
                    return f"martingale consistency at node {node.id!r}"
    total = sum(
        (
            qhat[nid] * chi[nid] * sum(x * sv for x, sv in zip(model.nodes[nid].xi, S[nid]))
            for nid in model.order
        ),
        Fraction(0),
    )
    if total != value:
        return "certificate value"
    return None


def verify_certificate(model: Model, cert: dict, j: int | None = None) -> bool:
    """True iff the certificate is a valid buyer dual pair: chi a mixed
    exercise plan, (q, S) a consistent pricing pair for instant solvency
    (normalized, dual-feasible, exactly a martingale), and the stated value
    equal to E_q((xi.S)_chi)."""
    return _certificate_violation(model, cert, j) is None
