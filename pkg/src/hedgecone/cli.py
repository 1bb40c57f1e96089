"""Command-line interface: validation, pricing runs, artifact emission and
verification, set export, and lattice generation.

Reports are deterministic JSON on stdout (sorted keys, no timestamps); pass
--timing to append wall-clock measurements.  Exit codes: 0 success, 2 invalid
input, 3 verification failure, 4 refused resource budget.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import buyer, oracle, seller
from .deferred import check_liquidation, deferred_cones
from .geometry import GeometryError, poly_to_json
from .market import (
    LatticeParams,
    Model,
    ValidationError,
    check_arbitrage_strategy,
    check_no_arbitrage,
    generate_currency_lattice,
    load_model_file,
    solvency_cone,
)
from .rational import fmt_rat, parse_rat, rat_to_decimal_str

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_VERIFICATION = 3
EXIT_RESOURCE = 4


def _threads() -> int:
    raw = os.environ.get("HEDGECONE_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"HEDGECONE_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"HEDGECONE_THREADS must be >= 1, got {n}")
    return n


def _model_summary(path: str, model: Model) -> dict:
    return {
        "path": path,
        "sha256": hashlib.sha256(Path(path).read_bytes()).hexdigest(),
        "d": model.d,
        "T": model.T,
        "nodes": len(model.nodes),
        "tree": model.is_tree,
    }


def _price_entry(value, places: int) -> dict:
    return {"exact": fmt_rat(value), "decimal": rat_to_decimal_str(value, places)}


def _write_artifact(out_dir: str, name: str, doc: dict) -> str:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    target.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return str(target)


# ---------------------------------------------------------------------------
# commands (each returns (report, exit_code))


def cmd_validate(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    report: dict = {"command": "validate", "model": _model_summary(args.model, model)}
    code = EXIT_OK
    if model.is_tree:
        result = check_no_arbitrage(model, args.currency)
        report["arbitrage_free"] = result.ok
        report["margin"] = fmt_rat(result.margin)
        if not result.ok:
            report["arbitrage"] = result.arbitrage
            code = EXIT_VERIFICATION
    else:
        report["arbitrage_free"] = None
        report["note"] = "no-arbitrage check requires an event tree; skipped"
    return report, code


def cmd_price(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    j = args.currency
    prices: dict = {}
    if args.instant:
        if args.side in ("seller", "both"):
            prices["ask"] = _price_entry(oracle.instant_ask_oracle(model, j), args.places)
        if args.side in ("buyer", "both"):
            prices["bid"] = _price_entry(
                oracle.instant_bid_oracle(model, j, args.budget), args.places
            )
    else:
        if args.side in ("seller", "both"):
            prices["ask"] = _price_entry(seller.ask_price(model, j), args.places)
        if args.side in ("buyer", "both"):
            prices["bid"] = _price_entry(buyer.bid_price(model, j), args.places)
    summary = ", ".join(
        f"{kind} {prices[kind]['exact']}" for kind in ("bid", "ask") if kind in prices
    )
    report = {
        "command": "price",
        "model": _model_summary(args.model, model),
        "currency": j,
        "exercise": "instant" if args.instant else "gradual",
        "prices": prices,
        "summary": summary,
    }
    return report, EXIT_OK


def cmd_hedge(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    j = args.currency
    if args.side == "seller":
        x = parse_rat(args.endowment) if args.endowment else seller.ask_price(model, j)
        x0 = [0] * model.d
        x0[j - 1] = x
        doc = seller.extract_hedge(model, x0)
        ok = seller.check_hedge(model, doc)
        name = f"hedge_seller_c{j}.json"
    else:
        x = parse_rat(args.endowment) if args.endowment else -buyer.bid_price(model, j)
        x0 = [0] * model.d
        x0[j - 1] = x
        doc = buyer.extract_strategy(model, x0)
        ok = buyer.check_strategy(model, doc)
        name = f"strategy_buyer_c{j}.json"
    path = _write_artifact(args.out, name, doc)
    report = {
        "command": "hedge",
        "model": _model_summary(args.model, model),
        "side": args.side,
        "currency": j,
        "endowment": doc["endowment"],
        "artifact": path,
        "verified": ok,
    }
    return report, EXIT_OK if ok else EXIT_VERIFICATION


def cmd_dual(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    j = args.currency
    if args.side == "seller":
        cert = seller.dual_certificate(model, j)
        violation = seller._certificate_violation(model, cert, j)
    else:
        cert = buyer.dual_certificate(model, j)
        violation = buyer._certificate_violation(model, cert, j)
    path = _write_artifact(args.out, f"dual_{args.side}_c{j}.json", cert)
    report = {
        "command": "dual",
        "model": _model_summary(args.model, model),
        "side": args.side,
        "currency": j,
        "value": {"exact": cert["value"], "decimal": rat_to_decimal_str(parse_rat(cert["value"]), args.places)},
        "artifact": path,
        "verified": violation is None,
    }
    if violation is not None:  # pragma: no cover - construction is self-verifying
        report["violation"] = violation
    return report, EXIT_OK if violation is None else EXIT_VERIFICATION


def _verify_one(model: Model, doc: dict) -> tuple[str, bool, str | None]:
    """Classify an artifact and verify it; returns (kind, ok, violation)."""
    side = doc.get("side")
    if side == "seller" and "value" in doc:
        violation = seller._certificate_violation(model, doc)
        return "seller-certificate", violation is None, violation
    if side == "buyer" and "value" in doc:
        violation = buyer._certificate_violation(model, doc)
        return "buyer-certificate", violation is None, violation
    if side == "seller" and "holdings" in doc:
        ok = seller.check_hedge(model, doc)
        return "seller-hedge", ok, None if ok else "hedging conditions"
    if side == "buyer" and "holdings" in doc:
        ok = buyer.check_strategy(model, doc)
        return "buyer-strategy", ok, None if ok else "self-financing conditions"
    if "start" in doc and "bundle" in doc:
        ok = check_liquidation(model, doc)
        return "liquidation-plan", ok, None if ok else "liquidation conditions"
    if "terminal" in doc and "holdings" in doc:
        ok = check_arbitrage_strategy(model, doc)
        return "arbitrage-strategy", ok, None if ok else "arbitrage conditions"
    raise ValidationError("unrecognized artifact document")


def cmd_verify(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    results = []
    all_ok = True
    for artifact in args.artifacts:
        with open(artifact) as fh:
            doc = json.load(fh)
        kind, ok, violation = _verify_one(model, doc)
        entry: dict = {"path": artifact, "kind": kind, "ok": ok}
        if violation is not None:
            entry["violation"] = violation
        results.append(entry)
        all_ok = all_ok and ok
    report = {
        "command": "verify",
        "model": _model_summary(args.model, model),
        "artifacts": results,
        "ok": all_ok,
    }
    return report, EXIT_OK if all_ok else EXIT_VERIFICATION


def cmd_export_sets(args) -> tuple[dict, int]:
    model = load_model_file(args.model)
    if args.which == "ad":
        polys = seller.construct_sets(model).Z
    elif args.which == "bd":
        polys = buyer.construct_sets(model).Z
    elif args.which == "Q":
        polys = deferred_cones(model)
    else:
        polys = {nid: solvency_cone(model, nid) for nid in model.order}
    files = []
    for nid in model.order:
        doc = poly_to_json(polys[nid])
        doc["node"] = nid
        doc["which"] = args.which
        files.append(_write_artifact(args.out, f"{args.which}_{nid}.json", doc))
    report = {
        "command": "export-sets",
        "model": _model_summary(args.model, model),
        "which": args.which,
        "out": args.out,
        "files": sorted(files),
    }
    return report, EXIT_OK


def cmd_generate(args) -> tuple[dict, int]:
    params = LatticeParams(
        rate1=parse_rat(args.rate1),
        rate2=parse_rat(args.rate2),
        sigma1=parse_rat(args.sigma1),
        sigma2=parse_rat(args.sigma2),
        corr=parse_rat(args.corr),
        horizon=parse_rat(args.horizon),
        steps=args.steps,
        cost=parse_rat(args.cost),
        cost_shock=parse_rat(args.cost_shock),
        shock_time=args.shock_time,
        strike=parse_rat(args.strike),
        digits=args.digits,
        padding=not args.no_padding,
    )
    doc = generate_currency_lattice(params)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return {}, EXIT_OK
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(text)
    report = {
        "command": "generate",
        "out": args.out,
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "nodes": len(doc["nodes"]),
        "steps": args.steps,
    }
    return report, EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hedgecone",
        description="Exact pricing of gradually exercisable options under "
        "proportional transaction costs.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="model JSON file")
        p.add_argument("--currency", type=int, default=1, metavar="J",
                       help="pricing currency index (1-based, default 1)")
        p.add_argument("--timing", action="store_true",
                       help="append wall-clock timing to the report")

    p = sub.add_parser("validate", help="structural and no-arbitrage checks")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("price", help="bid/ask prices")
    common(p)
    p.add_argument("--side", choices=("seller", "buyer", "both"), default="both")
    p.add_argument("--instant", action="store_true",
                   help="price all-at-once exercise via the oracle programs")
    p.add_argument("--budget", type=int, default=oracle.DEFAULT_ENUMERATION_BUDGET,
                   help="stopping-time enumeration budget for --instant bids")
    p.add_argument("--places", type=int, default=3, help="decimal places (default 3)")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("hedge", help="extract a hedge (seller) or strategy (buyer)")
    common(p)
    p.add_argument("--side", choices=("seller", "buyer"), default="seller")
    p.add_argument("--endowment", metavar="RAT",
                   help="initial holding in the pricing currency "
                   "(default: the corresponding price)")
    p.add_argument("--out", default=".", help="artifact directory (default .)")
    p.set_defaults(func=cmd_hedge)

    p = sub.add_parser("dual", help="construct and verify a dual certificate")
    common(p)
    p.add_argument("--side", choices=("seller", "buyer"), default="seller")
    p.add_argument("--out", default=".", help="artifact directory (default .)")
    p.add_argument("--places", type=int, default=3, help="decimal places (default 3)")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("verify", help="re-check emitted artifacts independently")
    common(p)
    p.add_argument("artifacts", nargs="+", help="artifact JSON files")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-sets", help="per-node polyhedra as JSON for plotting")
    common(p)
    p.add_argument("--which", choices=("ad", "bd", "Q", "K"), required=True,
                   help="ad/bd: seller/buyer endowment sets; Q/K: cone processes")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.set_defaults(func=cmd_export_sets)

    p = sub.add_parser("generate", help="write a recombining three-currency lattice")
    defaults = LatticeParams()
    p.add_argument("--rate1", default=fmt_rat(defaults.rate1))
    p.add_argument("--rate2", default=fmt_rat(defaults.rate2))
    p.add_argument("--sigma1", default=fmt_rat(defaults.sigma1))
    p.add_argument("--sigma2", default=fmt_rat(defaults.sigma2))
    p.add_argument("--corr", default=fmt_rat(defaults.corr))
    p.add_argument("--horizon", default=fmt_rat(defaults.horizon))
    p.add_argument("--steps", type=int, default=defaults.steps)
    p.add_argument("--cost", default=fmt_rat(defaults.cost))
    p.add_argument("--cost-shock", default=fmt_rat(defaults.cost_shock))
    p.add_argument("--shock-time", type=int, default=defaults.shock_time)
    p.add_argument("--strike", default=fmt_rat(defaults.strike))
    p.add_argument("--digits", type=int, default=defaults.digits)
    p.add_argument("--no-padding", action="store_true",
                   help="omit the zero-payoff liquidation step after maturity")
    p.add_argument("--out", help="model file to write (default: stdout)")
    p.add_argument("--timing", action="store_true",
                   help="append wall-clock timing to the report")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        _threads()
        report, code = args.func(args)
    except oracle.ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, GeometryError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if report:
        if args.timing:
            report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
        print(json.dumps(report, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
