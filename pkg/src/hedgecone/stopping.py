"""Mixed (randomised) stopping times and their evaluation operators.

A mixed stopping time assigns each node a fraction chi >= 0 of the position
exercised there, with total mass exactly 1 along every root-to-leaf path.  The
tail process chi*_t = sum_{s>=t} chi_s is the mass still unexercised entering
time t; ordinary stopping times embed as indicator mixed times.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .market import Model, ValidationError
from .rational import Rat, fmt_rat, parse_rat

Chi = dict[str, Fraction]


def parse_chi(model: Model, doc: dict) -> Chi:
    if not isinstance(doc, dict) or "chi" not in doc or not isinstance(doc["chi"], dict):
        raise ValidationError("stopping-time document must be {\"chi\": {node_id: rational}}")
    chi: Chi = {}
    for nid, value in doc["chi"].items():
        if nid not in model.nodes:
            raise ValidationError(f"stopping time mentions unknown node {nid!r}")
        chi[nid] = parse_rat(value)
    return chi


def chi_to_json(chi: Mapping[str, Rat]) -> dict:
    return {"chi": {nid: fmt_rat(v) for nid, v in sorted(chi.items())}}


def validate_chi(model: Model, chi: Mapping[str, Rat]) -> None:
    """Check adaptedness (a value at every node), nonnegativity, and unit
    path sums; on recombining models the cumulative mass entering a node must
    also agree across its predecessors."""
    missing = [nid for nid in model.order if nid not in chi]
    if missing:
        raise ValidationError(f"stopping time missing values at nodes: {missing[:5]}")
    for nid, v in chi.items():
        if nid not in model.nodes:
            raise ValidationError(f"stopping time mentions unknown node {nid!r}")
        if v < 0:
            raise ValidationError(f"negative exercise fraction at node {nid!r}")
    cum: dict[str, Fraction] = {}
    for node in model.walk():
        if node.id == model.root:
            cum[node.id] = Fraction(chi[node.id])
            continue
        values = {cum[p] + chi[node.id] for p in node.parents}
        if len(values) != 1:
            raise ValidationError(
                f"cumulative exercised mass at node {node.id!r} differs across predecessors"
            )
        cum[node.id] = values.pop()
    for leaf in model.leaves():
        if cum[leaf] != 1:
            raise ValidationError(
                f"exercise mass along the path to {leaf!r} sums to {cum[leaf]}, not 1"
            )


def chi_star(model: Model, chi: Mapping[str, Rat]) -> Chi:
    """Unexercised tail mass entering each node: chi*_t = 1 - sum_{s<t} chi_s."""
    star: Chi = {}
    for node in model.walk():
        if node.id == model.root:
            star[node.id] = Fraction(1)
        else:
            p = node.parents[0]
            star[node.id] = star[p] - Fraction(chi[p])
    return star


def _as_value(x):
    if isinstance(x, (tuple, list)):
        return tuple(Fraction(v) for v in x)
    return Fraction(x)


def _add(a, b):
    if isinstance(a, tuple):
        return tuple(x + y for x, y in zip(a, b))
    return a + b


def _scale(c: Fraction, a):
    if isinstance(a, tuple):
        return tuple(c * x for x in a)
    return c * a


def weighted_tail(model: Model, X: Mapping[str, object], chi: Mapping[str, Rat]) -> dict[str, list]:
    """Per leaf, the tail sums X^{chi*}_t = sum_{s>=t} chi_s X_s along its path.

    Returns {leaf_id: [value at t=0, ..., value at t=T, zero]}; X may be
    scalar- or vector-valued (uniformly).  Satisfies
    X^{chi*}_t = chi_t X_t + X^{chi*}_{t+1} exactly.
    """
    model.require_tree("pathwise tail evaluation")
    out: dict[str, list] = {}
    for leaf in model.leaves():
        path = model.path_to(leaf)
        vals = [_scale(Fraction(chi[nid]), _as_value(X[nid])) for nid in path]
        zero = _scale(Fraction(0), _as_value(X[leaf]))
        tails = [zero]
        for v in reversed(vals):
            tails.append(_add(v, tails[-1]))
        out[leaf] = tails[::-1]
    return out


def evaluate_at(model: Model, X: Mapping[str, object], chi: Mapping[str, Rat]) -> dict[str, object]:
    """X_chi = sum_t chi_t X_t per root-to-leaf path, keyed by leaf."""
    return {leaf: tails[0] for leaf, tails in weighted_tail(model, X, chi).items()}


def from_ordinary(model: Model, stop: Mapping[str, bool]) -> Chi:
    """Indicator embedding of an ordinary stopping time given as a stop flag
    per node (exactly one stopping node along every path)."""
    unknown = [nid for nid in stop if nid not in model.nodes]
    if unknown:
        raise ValidationError(f"stopping region mentions unknown nodes: {unknown[:5]}")
    chi: Chi = {}
    stopped: dict[str, bool] = {}
    for node in model.walk():
        before = {stopped[p] for p in node.parents} if node.parents else {False}
        if len(before) != 1:
            raise ValidationError(
                f"stopping region is not path-consistent at node {node.id!r}"
            )
        already = before.pop()
        here = bool(stop.get(node.id, False)) and not already
        if not node.succ and not already and not here:
            raise ValidationError(f"no stopping node on the path to {node.id!r}")
        chi[node.id] = Fraction(1) if here else Fraction(0)
        stopped[node.id] = already or here
    validate_chi(model, chi)
    return chi


def chi_from_lambda(model: Model, lam: Mapping[str, Rat]) -> Chi:
    """Build chi from conditional exercise fractions: chi_t = lambda_t chi*_t
    (lambda must be 1 at terminal nodes)."""
    chi: Chi = {}
    star: Chi = {}
    for node in model.walk():
        if node.id == model.root:
            star[node.id] = Fraction(1)
        else:
            p = node.parents[0]
            star[node.id] = star[p] - chi[p]
        l = Fraction(lam[node.id]) if node.succ else Fraction(1)
        if not 0 <= l <= 1:
            raise ValidationError(f"conditional exercise fraction at {node.id!r} outside [0,1]")
        chi[node.id] = l * star[node.id]
    return chi
