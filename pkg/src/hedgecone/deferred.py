"""Deferred solvency: cone process, dual cones, and liquidation plans.

A bundle is *deferred-solvent* at a node when it can be unwound over the
remaining steps instead of instantly: part of it is liquidated on the spot
(a solvency-cone member) and the rest is carried forward into a bundle that
every successor can still unwind.  This yields a cone process Q with
Q = K at terminal nodes and Q = (intersection of the children's Q) + K
inside; K ⊆ Q always.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .geometry import Polyhedron
from .linprog import OPTIMAL, UNBOUNDED, Lp
from .market import (
    Model,
    PricingPair,
    ValidationError,
    dual_solvency_cone,
    solvency_cone,
    solvency_generators,
)
from .rational import Vec, fmt_rat, fmt_vec, parse_rat, parse_vec

ConeProcess = dict[str, Polyhedron]


def _dot(a, b) -> Fraction:
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def deferred_cones(model: Model) -> ConeProcess:
    """The cone process Q of deferred solvency, per node id.  Cached."""
    cached = model._cache.get("Q")
    if cached is None:
        cached = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            K = solvency_cone(model, nid)
            if not node.succ:
                cached[nid] = K
            else:
                carry = cached[node.succ[0]].intersect(*(cached[s] for s in node.succ[1:]))
                cached[nid] = carry.minkowski_sum(K)
        model._cache["Q"] = cached
    return cached


def deferred_duals(model: Model, cross_check: bool = False) -> ConeProcess:
    """Duals Q* of the deferred cones, by the mirrored recursion
    Q*(node) = conv(union of children's Q*) ∩ K*(node).

    With ``cross_check`` every node is also verified against the polar of
    the corresponding deferred cone (slow; intended for debugging).
    """
    cached = model._cache.get("Qdual")
    if cached is None:
        cached = {}
        for nid in reversed(model.order):
            node = model.nodes[nid]
            Kd = dual_solvency_cone(model, nid)
            if not node.succ:
                cached[nid] = Kd
            else:
                rays: list[list[Fraction]] = []
                for s in node.succ:
                    _pts, rs = cached[s].vrep()
                    rays.extend([list(r) for r in rs])
                hull = Polyhedron.cone_from_rays(model.d, rays)
                cached[nid] = hull.intersect(Kd)
        model._cache["Qdual"] = cached
    if cross_check:
        cones = deferred_cones(model)
        for nid, dual in cached.items():
            assert dual.set_eq(cones[nid].polar()), f"dual recursion mismatch at node {nid!r}"
    return cached


def _primitive_int(v: tuple[int, ...]) -> tuple[int, ...]:
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    return tuple(x // g for x in v) if g else v


def support_directions(model: Model, nid: str) -> list[tuple[int, ...]]:
    """Integer directions sampling the deferred dual cone at a node.

    The extreme rays of Q* plus their pairwise 1:1 / 2:1 / 1:2 combinations
    and the centroid, rescaled to comparable magnitude first.  Every facet
    normal of a set whose recession cone is Q lies in Q*, so these are the
    natural probe directions for support-based enclosures of such sets, and
    including the extreme rays themselves pins the enclosure's recession
    cone to exactly Q.  Cached per node.
    """
    cache = model._cache.setdefault("support_dirs", {})
    dirs = cache.get(nid)
    if dirs is None:
        _pts, rays = deferred_duals(model)[nid].vrep()
        base = [tuple(int(x) for x in r) for r in rays]
        target = max((max(abs(v) for v in r).bit_length() for r in base), default=0)
        aligned = [
            tuple(v << (target - max(abs(v) for v in r).bit_length()) for v in r)
            for r in base
        ]
        combos = list(base)
        for i in range(len(aligned)):
            for k in range(i + 1, len(aligned)):
                a, b = aligned[i], aligned[k]
                combos.append(tuple(x + y for x, y in zip(a, b)))
                combos.append(tuple(2 * x + y for x, y in zip(a, b)))
                combos.append(tuple(x + 2 * y for x, y in zip(a, b)))
        if len(aligned) > 2:
            combos.append(tuple(sum(col) for col in zip(*aligned)))
        dirs = sorted({_primitive_int(v) for v in combos})
        cache[nid] = dirs
    return dirs


# ---------------------------------------------------------------------------
# liquidation


def _carry_split(model: Model, node, bundle: Vec) -> Vec:
    """Split bundle = carry + spot with carry feasible for every child and
    spot instantly solvent, minimizing the total spot liquidation (falls back
    to plain feasibility when that objective is unbounded)."""
    Q = deferred_cones(model)
    lp = Lp()
    carry = lp.vars(model.d)
    spot = lp.vars(model.d)
    for i in range(model.d):
        lp.add({carry[i]: 1, spot[i]: 1}, "==", bundle[i])
    for s in node.succ:
        for n, o in Q[s].hrep():
            lp.add_dot(carry, n, ">=", o)
    for n, o in solvency_cone(model, node.id).hrep():
        lp.add_dot(spot, n, ">=", o)
    res = lp.minimize({v: Fraction(1) for v in spot})
    if res.status == UNBOUNDED:
        res = lp.minimize({})
    if res.status != OPTIMAL:  # pragma: no cover - guarded by the membership test
        raise ValidationError(f"internal: carry split failed at node {node.id!r}")
    return tuple(res[v] for v in carry)


def liquidation_strategy(model: Model, node_id: str, z) -> dict:
    """Unwind plan for bundle ``z`` held at a node (trees only).

    Returns ``{"start", "bundle", "holdings"}`` where ``holdings`` maps every
    strict descendant to the bundle carried into it; siblings receive the same
    bundle (the carry is chosen before the next step is revealed), and bundles
    carried into terminal nodes are instantly solvent there.

    Raises ValidationError when ``z`` is not deferred-solvent at the node.
    """
    model.require_tree("liquidation")
    if node_id not in model.nodes:
        raise ValidationError(f"unknown node {node_id!r}")
    bundle = parse_vec(z, model.d)
    if not deferred_cones(model)[node_id].member(bundle):
        raise ValidationError(
            f"bundle {fmt_vec(bundle)} is not deferred-solvent at node {node_id!r}"
        )
    holdings: dict[str, Vec] = {}
    stack: list[tuple[str, Vec]] = [(node_id, bundle)]
    while stack:
        nid, cur = stack.pop()
        node = model.nodes[nid]
        if not node.succ:
            continue
        carry = _carry_split(model, node, cur)
        for s in node.succ:
            holdings[s] = carry
            stack.append((s, carry))
    return {
        "start": node_id,
        "bundle": [fmt_rat(c) for c in bundle],
        "holdings": {nid: [fmt_rat(c) for c in v] for nid, v in sorted(holdings.items())},
    }


def check_liquidation(model: Model, strategy: dict) -> bool:
    """True iff the documented plan unwinds its bundle: each rebalancing
    leaves an instantly solvent spot position and terminal carries are
    instantly solvent."""
    model.require_tree("liquidation verification")
    try:
        start = strategy["start"]
        bundle = parse_vec(strategy["bundle"], model.d)
        holdings = {nid: parse_vec(v, model.d) for nid, v in strategy["holdings"].items()}
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"malformed liquidation document: {exc}") from exc
    if start not in model.nodes:
        return False
    stack = [(start, bundle)]
    while stack:
        nid, cur = stack.pop()
        node = model.nodes[nid]
        if not node.succ:
            if not solvency_cone(model, nid).member(cur):
                return False
            continue
        carried = [holdings.get(s) for s in node.succ]
        if any(c is None for c in carried) or len({tuple(c) for c in carried}) != 1:
            return False
        spot = tuple(a - b for a, b in zip(cur, carried[0]))
        if not solvency_cone(model, nid).member(spot):
            return False
        stack.extend((s, carried[0]) for s in node.succ)
    return True


# ---------------------------------------------------------------------------
# pricing pairs against a cone process


def verify_pair_QS(model: Model, pair: PricingPair, against: str = "K") -> bool:
    """True iff ``pair`` is a strictly positive consistent pricing pair whose
    state-price vectors q·S are dual-feasible for the chosen cone process
    ("K" = instant solvency, "Q" = deferred solvency).
    """
    model.require_tree("pricing-pair verification")
    if against not in ("K", "Q"):
        raise ValidationError('against must be "K" or "Q"')
    if not 1 <= pair.j <= model.d:
        raise ValidationError(f"currency index {pair.j} out of range 1..{model.d}")
    try:
        q = {nid: parse_rat(pair.q[nid]) for nid in model.order}
        S = {nid: parse_vec(pair.S[nid], model.d) for nid in model.order}
    except (KeyError, ValueError, TypeError):
        return False
    if q[model.root] != 1:
        return False
    if any(v <= 0 for v in q.values()):
        return False
    if any(S[nid][pair.j - 1] != 1 for nid in model.order):
        return False
    cones = deferred_cones(model) if against == "Q" else None
    for node in model.walk():
        rho = tuple(q[node.id] * c for c in S[node.id])
        if against == "K":
            if any(_dot(rho, g) < 0 for g in solvency_generators(node, model.d)):
                return False
        else:
            _pts, rays = cones[node.id].vrep()
            if any(_dot(rho, r) < 0 for r in rays):
                return False
        if node.succ:
            for i in range(model.d):
                if sum(q[s] * S[s][i] for s in node.succ) != rho[i]:
                    return False
    return True
