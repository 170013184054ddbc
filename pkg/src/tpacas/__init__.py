"""Private combinatorial auction for single-minded bidders over committed bids."""

from .auction import AuctionConfig, auction_group, run_auction, topology_leak_probability, verify_auction
from .group import GroupParams, generate_group, modp_1024, toy_group
from .oracle import AuctionInstance, Bid, icasm_solve, load_instance, optimal_welfare
from .ppc import Outcome, Role, decide, legacy_vc_run, ppc_run, zkp_verify

__all__ = [
    "AuctionConfig",
    "AuctionInstance",
    "Bid",
    "GroupParams",
    "Outcome",
    "Role",
    "auction_group",
    "decide",
    "generate_group",
    "icasm_solve",
    "legacy_vc_run",
    "load_instance",
    "modp_1024",
    "optimal_welfare",
    "ppc_run",
    "run_auction",
    "toy_group",
    "topology_leak_probability",
    "verify_auction",
    "zkp_verify",
]
