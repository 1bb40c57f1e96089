"""Finite multi-currency market models with proportional transaction costs.

A model is a finite event tree (or recombining DAG) over times 0..T.  Each
node carries a d-by-d exchange-rate matrix pi (pi[j][k] = units of currency j
buying one unit of currency k, diagonal 1, all entries positive) and a payoff
vector xi in physical units.  The solvency cone at a node is

    K = cone({e_i} u {pi[j][k] e_j - e_k : j != k}),

the set of portfolios that can be liquidated to the zero portfolio.  Its dual
K* = {y : y . x >= 0 for all x in K} is the cone of consistent price vectors.

Backward-induction operations accept recombining DAGs (shared successors);
forward constructions (hedges, strategy extraction, dual recursions) need the
path structure and require trees.
"""

from __future__ import annotations

import decimal
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .geometry import Polyhedron
from .linprog import INFEASIBLE, Lp, OPTIMAL, UNBOUNDED
from .rational import Rat, Vec, fmt_rat, parse_rat, parse_vec, round_sig_digits


class ValidationError(ValueError):
    """Model or artifact document violates the format contract."""


class TreeRequiredError(ValidationError):
    """Operation needs an event tree but the model is a recombining DAG."""


@dataclass(frozen=True)
class Node:
    id: str
    t: int
    pi: tuple[tuple[Rat, ...], ...]
    xi: Vec
    succ: tuple[str, ...]
    parents: tuple[str, ...]
    lattice_key: str | None = None


@dataclass
class Model:
    d: int
    T: int
    nodes: dict[str, Node]
    order: list[str]
    root: str
    times: list[list[str]]
    is_tree: bool
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def children(self, node_id: str) -> list[Node]:
        return [self.nodes[s] for s in self.nodes[node_id].succ]

    def parent(self, node_id: str) -> str | None:
        p = self.nodes[node_id].parents
        if len(p) > 1:
            raise TreeRequiredError(f"node {node_id!r} has multiple predecessors")
        return p[0] if p else None

    def leaves(self) -> list[str]:
        return self.times[self.T]

    def path_to(self, node_id: str) -> list[str]:
        """Root-to-node path of ids (tree only)."""
        path = [node_id]
        while (p := self.parent(path[-1])) is not None:
            path.append(p)
        return path[::-1]

    def require_tree(self, what: str) -> None:
        if not self.is_tree:
            raise TreeRequiredError(
                f"{what} requires an event tree; this model is a recombining "
                "lattice (some node has several predecessors)"
            )

    def walk(self) -> Iterator[Node]:
        for node_id in self.order:
            yield self.nodes[node_id]


def load_model(doc: dict) -> Model:
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    for key in ("d", "T", "nodes"):
        if key not in doc:
            raise ValidationError(f"model document is missing {key!r}")
    d, T = doc["d"], doc["T"]
    if not isinstance(d, int) or d < 1:
        raise ValidationError("'d' must be a positive integer")
    if not isinstance(T, int) or T < 0:
        raise ValidationError("'T' must be a nonnegative integer")
    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ValidationError("'nodes' must be a nonempty array")

    ids: list[str] = []
    raw_by_id: dict[str, dict] = {}
    for item in raw_nodes:
        if not isinstance(item, dict):
            raise ValidationError("each node must be an object")
        nid = item.get("id")
        if not isinstance(nid, str) or not nid:
            raise ValidationError(f"node id must be a nonempty string, got {nid!r}")
        if nid in raw_by_id:
            raise ValidationError(f"duplicate node id {nid!r}")
        ids.append(nid)
        raw_by_id[nid] = item

    parents: dict[str, list[str]] = {nid: [] for nid in ids}
    for nid in ids:
        item = raw_by_id[nid]
        succ = item.get("succ", [])
        if not isinstance(succ, list) or not all(isinstance(s, str) for s in succ):
            raise ValidationError(f"node {nid!r}: 'succ' must be an array of ids")
        if len(set(succ)) != len(succ):
            raise ValidationError(f"node {nid!r}: duplicate successor")
        for s in succ:
            if s not in raw_by_id:
                raise ValidationError(f"node {nid!r}: unknown successor {s!r}")
            parents[s].append(nid)

    nodes: dict[str, Node] = {}
    for nid in ids:
        item = raw_by_id[nid]
        t = item.get("t")
        if not isinstance(t, int) or not 0 <= t <= T:
            raise ValidationError(f"node {nid!r}: 't' must be an integer in 0..{T}")
        succ = tuple(item.get("succ", []))
        if (t == T) != (len(succ) == 0):
            raise ValidationError(
                f"node {nid!r}: terminal nodes are exactly those at t = T = {T}"
            )
        for s in succ:
            if raw_by_id[s].get("t") != t + 1:
                raise ValidationError(f"node {nid!r}: successor {s!r} is not at time {t + 1}")
        try:
            pi_rows = item["pi"]
            if not isinstance(pi_rows, list) or len(pi_rows) != d:
                raise ValidationError(f"node {nid!r}: 'pi' must be a {d}x{d} matrix")
            pi = tuple(parse_vec(row, d) for row in pi_rows)
            xi = parse_vec(item.get("xi", [0] * d), d)
        except ValidationError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ValidationError(f"node {nid!r}: {exc}") from exc
        for jj in range(d):
            if pi[jj][jj] != 1:
                raise ValidationError(f"node {nid!r}: pi[{jj}][{jj}] must be 1")
            for kk in range(d):
                if pi[jj][kk] <= 0:
                    raise ValidationError(f"node {nid!r}: pi entries must be positive")
        declared_parent = item.get("parent")
        if declared_parent is not None:
            if not isinstance(declared_parent, str) or declared_parent not in parents[nid]:
                raise ValidationError(
                    f"node {nid!r}: 'parent' must be null or one of its predecessors"
                )
        lattice_key = item.get("lattice_key")
        if lattice_key is not None and not isinstance(lattice_key, str):
            raise ValidationError(f"node {nid!r}: 'lattice_key' must be a string or null")
        nodes[nid] = Node(
            id=nid, t=t, pi=pi, xi=xi, succ=succ,
            parents=tuple(parents[nid]), lattice_key=lattice_key,
        )

    roots = [nid for nid in ids if not parents[nid]]
    if len(roots) != 1 or nodes[roots[0]].t != 0:
        raise ValidationError("the model must have exactly one root node, at t = 0")
    root = roots[0]

    reached = {root}
    frontier = [root]
    while frontier:
        nid = frontier.pop()
        for s in nodes[nid].succ:
            if s not in reached:
                reached.add(s)
                frontier.append(s)
    unreached = [nid for nid in ids if nid not in reached]
    if unreached:
        raise ValidationError(f"nodes not reachable from the root: {unreached[:5]}")

    times: list[list[str]] = [[] for _ in range(T + 1)]
    for nid in ids:
        times[nodes[nid].t].append(nid)
    if any(not layer for layer in times):
        raise ValidationError("every time 0..T must carry at least one node")

    is_tree = all(len(nodes[nid].parents) == 1 for nid in ids if nid != root)
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ValidationError("'meta' must be an object")
    return Model(d=d, T=T, nodes=nodes, order=ids, root=root, times=times,
                 is_tree=is_tree, meta=meta)


def load_model_file(path: str) -> Model:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    return load_model(doc)


# ---------------------------------------------------------------------------
# solvency cones


def solvency_generators(node: Node, d: int) -> list[list[Fraction]]:
    """Raw generating rays of the solvency cone (units + exchange vectors)."""
    gens: list[list[Fraction]] = []
    for i in range(d):
        e = [Fraction(0)] * d
        e[i] = Fraction(1)
        gens.append(e)
    for j in range(d):
        for k in range(d):
            if j != k:
                v = [Fraction(0)] * d
                v[j] = node.pi[j][k]
                v[k] = Fraction(-1)
                gens.append(v)
    return gens


def solvency_cone(model: Model, node_id: str) -> Polyhedron:
    cache = model._cache.setdefault("K", {})
    if node_id not in cache:
        node = model.nodes[node_id]
        cone = Polyhedron.cone_from_rays(model.d, solvency_generators(node, model.d))
        cache[node_id] = cone.canonical()
    return cache[node_id]


def dual_solvency_cone(model: Model, node_id: str) -> Polyhedron:
    cache = model._cache.setdefault("Kdual", {})
    if node_id not in cache:
        node = model.nodes[node_id]
        gens = solvency_generators(node, model.d)
        cache[node_id] = Polyhedron.cone_from_normals(model.d, gens).canonical()
    return cache[node_id]


# ---------------------------------------------------------------------------
# no-arbitrage


@dataclass(frozen=True)
class PricingPair:
    """Equivalent pricing pair: weights q > 0 (root mass 1) and consistent
    prices S with S^j = 1, S_node in K*_node, and q_mu S_mu = sum_children q_nu S_nu."""

    j: int
    q: dict[str, Rat]
    S: dict[str, Vec]


@dataclass(frozen=True)
class NoArbitrageResult:
    ok: bool
    margin: Rat
    pair: PricingPair | None = None
    arbitrage: dict | None = None


def check_no_arbitrage(model: Model, j: int = 1) -> NoArbitrageResult:
    """Decide absence of arbitrage; return an equivalent pricing pair or an
    explicit arbitrage strategy (trees only)."""
    model.require_tree("no-arbitrage certification")
    if not 1 <= j <= model.d:
        raise ValidationError(f"currency index {j} out of range 1..{model.d}")
    lp = Lp()
    rho = {node.id: lp.vars(model.d) for node in model.walk()}
    m = lp.var()
    for node in model.walk():
        for g in solvency_generators(node, model.d):
            lp.add_dot(rho[node.id], g, ">=", 0)
        lp.add({rho[node.id][j - 1]: 1, m: -1}, ">=", 0)
        if node.succ:
            for i in range(model.d):
                coeffs = {rho[node.id][i]: Fraction(1)}
                for s in node.succ:
                    coeffs[rho[s][i]] = Fraction(-1)
                lp.add(coeffs, "==", 0)
    lp.add({rho[model.root][j - 1]: 1}, "==", 1)
    res = lp.maximize({m: 1})
    if res.status == INFEASIBLE:
        # no consistent price system at all
        return NoArbitrageResult(False, Fraction(0), arbitrage=_arbitrage_strategy(model))
    assert res.status == OPTIMAL  # m <= rho_root_j = 1, so never unbounded
    if res.value > 0:
        q = {nid: res[rho[nid][j - 1]] for nid in model.order}
        S = {nid: tuple(res[v] / q[nid] for v in rho[nid]) for nid in model.order}
        return NoArbitrageResult(True, res.value, pair=PricingPair(j, q, S))
    return NoArbitrageResult(False, res.value, arbitrage=_arbitrage_strategy(model))


def _arbitrage_strategy(model: Model) -> dict:
    """Explicit arbitrage: post-trade holdings per non-terminal node and a
    dominated nonnegative, nonzero terminal consumption."""
    lp = Lp()
    hold = {nid: lp.vars(model.d) for nid in model.order if model.nodes[nid].succ}
    consume = {nid: lp.vars(model.d, nonneg=True) for nid in model.leaves()}

    def incoming(node: Node) -> list[int] | None:
        if node.id == model.root:
            return None
        return hold[node.parents[0]]

    for node in model.walk():
        K = solvency_cone(model, node.id)
        prev = incoming(node)
        out = hold.get(node.id) or consume[node.id]
        # previous holdings minus new holdings must be solvent at this node
        for n, _o in K.hrep():
            coeffs: dict[int, Fraction] = {}
            for i in range(model.d):
                if prev is not None:
                    coeffs[prev[i]] = coeffs.get(prev[i], Fraction(0)) + n[i]
                coeffs[out[i]] = coeffs.get(out[i], Fraction(0)) - n[i]
            lp.add(coeffs, ">=", 0)
    total = {v: Fraction(1) for vs in consume.values() for v in vs}
    res = lp.maximize(total)
    if res.status == UNBOUNDED:
        # cap the haul to obtain an explicit finite witness
        lp.add(total, "<=", 1)
        res = lp.maximize(total)
    assert res.status == OPTIMAL and res.value > 0
    return {
        "holdings": {nid: [fmt_rat(res[v]) for v in vs] for nid, vs in hold.items()},
        "terminal": {nid: [fmt_rat(res[v]) for v in vs] for nid, vs in consume.items()},
    }


def check_arbitrage_strategy(model: Model, strategy: dict) -> bool:
    """True iff the documented strategy starts from nothing, is self-financing,
    and dominates a nonnegative, nonzero terminal consumption."""
    model.require_tree("arbitrage strategy verification")
    try:
        hold = {nid: parse_vec(v, model.d) for nid, v in strategy["holdings"].items()}
        consume = {nid: parse_vec(v, model.d) for nid, v in strategy["terminal"].items()}
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ValidationError(f"malformed strategy document: {exc}") from exc
    if set(consume) != set(model.leaves()):
        return False
    if any(x < 0 for vec in consume.values() for x in vec):
        return False
    if all(x == 0 for vec in consume.values() for x in vec):
        return False
    zero = tuple(Fraction(0) for _ in range(model.d))
    for node in model.walk():
        prev = zero if node.id == model.root else hold[node.parents[0]]
        out = hold[node.id] if node.succ else consume[node.id]
        if node.succ and node.id not in hold:
            return False
        diff = tuple(a - b for a, b in zip(prev, out))
        if not solvency_cone(model, node.id).member(diff):
            return False
    return True


# ---------------------------------------------------------------------------
# recombining currency lattice generator


@dataclass(frozen=True)
class LatticeParams:
    """Three-currency recombining lattice driven by two correlated binomial
    log-price factors, with proportional costs and a basket-put payoff.

    Transaction costs are time-dependent: `cost_shock` applies at
    `shock_time` (a temporary loss of liquidity), `cost` everywhere else.
    """

    rate1: Rat = Fraction(40)
    rate2: Rat = Fraction(50)
    sigma1: Rat = Fraction(15, 100)
    sigma2: Rat = Fraction(10, 100)
    corr: Rat = Fraction(1, 2)
    horizon: Rat = Fraction(1)
    steps: int = 10
    cost: Rat = Fraction(5, 1000)
    cost_shock: Rat = Fraction(1, 10)
    shock_time: int = 1
    strike: Rat = Fraction(90)
    digits: int = 12
    padding: bool = True


def generate_currency_lattice(params: LatticeParams = LatticeParams()) -> dict:
    """Model document for the recombining three-currency lattice.

    Exchange rates come from two correlated geometric binomial factors,
    evaluated in high-precision decimal and rounded to `digits` significant
    digits before exact rational arithmetic.  When `padding` is set, the rate
    process runs one extra final step carrying zero payoff so the holder can
    always decline exercise and liquidation can be deferred past the last
    exercise date; the extra time index is flagged in metadata.
    """
    p = params
    if p.steps < 1:
        raise ValidationError("steps must be >= 1")
    T_doc = p.steps + 1 if p.padding else p.steps
    with decimal.localcontext() as ctx:
        ctx.prec = p.digits + 25
        D = decimal.Decimal
        dt = D(p.horizon.numerator) / D(p.horizon.denominator) / D(p.steps)
        sqrt_dt = dt.sqrt()
        s1 = D(p.sigma1.numerator) / D(p.sigma1.denominator)
        s2 = D(p.sigma2.numerator) / D(p.sigma2.denominator)
        corr = D(p.corr.numerator) / D(p.corr.denominator)
        ortho = (1 - corr * corr).sqrt()

        def rate1(t: int, j1: int) -> Fraction:
            expo = -s1 * s1 * t * dt / 2 + (2 * j1 - t - 2) * s1 * sqrt_dt
            val = D(p.rate1.numerator) / D(p.rate1.denominator) * expo.exp()
            return round_sig_digits(val, p.digits)

        def rate2(t: int, j1: int, j2: int) -> Fraction:
            drift = (2 * j1 - t - 2) * corr + (2 * j2 - t - 2) * ortho
            expo = -s2 * s2 * t * dt / 2 + drift * s2 * sqrt_dt
            val = D(p.rate2.numerator) / D(p.rate2.denominator) * expo.exp()
            return round_sig_digits(val, p.digits)

        rates: dict[tuple[int, int, int], tuple[Fraction, Fraction]] = {}
        for t in range(T_doc + 1):
            for j1 in range(1, t + 2):
                for j2 in range(1, t + 2):
                    rates[(t, j1, j2)] = (rate1(t, j1), rate2(t, j1, j2))

    def pi_matrix(t: int, e1: Fraction, e2: Fraction) -> list[list[str]]:
        k = p.cost_shock if t == p.shock_time else p.cost
        rows = [
            [Fraction(1), (e2 / e1) * (1 + k), (1 / e1) * (1 + k)],
            [(e1 / e2) * (1 + k), Fraction(1), (1 / e2) * (1 + k)],
            [e1 * (1 + k), e2 * (1 + k), Fraction(1)],
        ]
        return [[fmt_rat(x) for x in row] for row in rows]

    payoff = [fmt_rat(-Fraction(1)), fmt_rat(-Fraction(1)), fmt_rat(p.strike)]
    zero = ["0", "0", "0"]

    def node_id(t: int, j1: int, j2: int) -> str:
        return f"t{t}_{j1}_{j2}"

    nodes = []
    for t in range(T_doc + 1):
        for j1 in range(1, t + 2):
            for j2 in range(1, t + 2):
                e1, e2 = rates[(t, j1, j2)]
                if t < T_doc:
                    succ = [node_id(t + 1, j1 + a, j2 + b) for a in (0, 1) for b in (0, 1)]
                else:
                    succ = []
                nodes.append({
                    "id": node_id(t, j1, j2),
                    "t": t,
                    "parent": None,
                    "succ": succ,
                    "lattice_key": node_id(t, j1, j2),
                    "pi": pi_matrix(t, e1, e2),
                    "xi": payoff if t <= p.steps else zero,
                })
    meta = {
        "generator": "currency-lattice",
        "significant_digits": p.digits,
        "parameters": {
            "rate1": fmt_rat(p.rate1), "rate2": fmt_rat(p.rate2),
            "sigma1": fmt_rat(p.sigma1), "sigma2": fmt_rat(p.sigma2),
            "corr": fmt_rat(p.corr), "horizon": fmt_rat(p.horizon),
            "steps": p.steps, "cost": fmt_rat(p.cost),
            "cost_shock": fmt_rat(p.cost_shock), "shock_time": p.shock_time,
            "strike": fmt_rat(p.strike),
        },
    }
    if p.padding:
        meta["padding_step"] = p.steps + 1
    return {"d": 3, "T": T_doc, "nodes": nodes, "meta": meta}
