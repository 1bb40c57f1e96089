"""hedgecone: exact pricing and hedging of gradually exercised options
under proportional transaction costs in finite multi-currency tree models."""

from .buyer import BuyerSets, bid_price, check_strategy, extract_strategy
from .buyer import construct_sets as construct_buyer_sets
from .buyer import dual_certificate as buyer_dual_certificate
from .buyer import verify_certificate as verify_buyer_certificate
from .deferred import (
    check_liquidation,
    deferred_cones,
    deferred_duals,
    liquidation_strategy,
    verify_pair_QS,
)
from .european import european_ask, european_dual, european_sets
from .geometry import GeometryError, Polyhedron, poly_from_json, poly_to_json
from .market import (
    LatticeParams,
    Model,
    NoArbitrageResult,
    Node,
    PricingPair,
    TreeRequiredError,
    ValidationError,
    check_arbitrage_strategy,
    check_no_arbitrage,
    dual_solvency_cone,
    generate_currency_lattice,
    load_model,
    load_model_file,
    solvency_cone,
)
from .oracle import (
    PriceQuadruple,
    ResourceLimitError,
    instant_ask_oracle,
    instant_bid_oracle,
    price_quadruple,
)
from .rational import Rat, Vec, fmt_rat, fmt_vec, parse_rat, parse_vec
from .seller import SellerSets, ask_price, check_hedge, extract_hedge, gradual_hedge_evaluate
from .seller import construct_sets as construct_seller_sets
from .seller import dual_certificate as seller_dual_certificate
from .seller import verify_certificate as verify_seller_certificate
from .stopping import chi_from_lambda, chi_star, from_ordinary, validate_chi

__version__ = "0.1.0"

__all__ = [
    "BuyerSets",
    "GeometryError",
    "LatticeParams",
    "Model",
    "NoArbitrageResult",
    "Node",
    "Polyhedron",
    "PriceQuadruple",
    "PricingPair",
    "Rat",
    "ResourceLimitError",
    "SellerSets",
    "TreeRequiredError",
    "ValidationError",
    "Vec",
    "ask_price",
    "bid_price",
    "buyer_dual_certificate",
    "check_arbitrage_strategy",
    "check_hedge",
    "check_liquidation",
    "check_no_arbitrage",
    "check_strategy",
    "chi_from_lambda",
    "chi_star",
    "construct_buyer_sets",
    "construct_seller_sets",
    "deferred_cones",
    "deferred_duals",
    "dual_solvency_cone",
    "european_ask",
    "european_dual",
    "european_sets",
    "extract_hedge",
    "extract_strategy",
    "fmt_rat",
    "fmt_vec",
    "from_ordinary",
    "generate_currency_lattice",
    "gradual_hedge_evaluate",
    "instant_ask_oracle",
    "instant_bid_oracle",
    "liquidation_strategy",
    "load_model",
    "load_model_file",
    "parse_rat",
    "parse_vec",
    "poly_from_json",
    "poly_to_json",
    "price_quadruple",
    "seller_dual_certificate",
    "solvency_cone",
    "validate_chi",
    "verify_buyer_certificate",
    "verify_pair_QS",
    "verify_seller_certificate",
]
