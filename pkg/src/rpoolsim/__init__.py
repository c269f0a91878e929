"""Deterministic simulator for recoverable wrapped tokens and R-Pools.

The package models a recoverable token wrapper (settled/unsettled balances,
freezes, clawbacks), an automated-market pool priced by a risk-oracle
quorum and bonding curve, an order-book pool, and the analysis of the
LP-shorting attack against the automated design.  Everything is integer- or
rational-exact and driven by an explicit clock, so runs replay bit-for-bit.
"""

from .amm import AmmPool, PoolState, SwapReceipt, settled_multiplier
from .attack import (
    AttackScenario,
    ProfitBreakdown,
    end_to_end_attack_replay,
    exact_profit,
    exact_threshold,
    is_cap_safe,
    profitability_threshold,
    simulate_attack,
)
from .errors import ERRORS_BY_NAME, RPoolError
from .ledger import Account, BaseLedger, UnsettledRecord, WrapperLedger
from .oracle import (
    ConstantRiskModel,
    HashSignatureScheme,
    RatingEntity,
    RiskReport,
    SignerRegistry,
    TaintAwareRiskModel,
    canonical_encode,
    issue_report,
    median_quote,
    validate_reports,
)
from .orderbook import Bid, Fill, OrderBook
from .rates import PPM, format_rate, parse_rate

__all__ = [
    "Account",
    "AmmPool",
    "AttackScenario",
    "BaseLedger",
    "Bid",
    "ConstantRiskModel",
    "ERRORS_BY_NAME",
    "Fill",
    "HashSignatureScheme",
    "OrderBook",
    "PPM",
    "PoolState",
    "ProfitBreakdown",
    "RPoolError",
    "RatingEntity",
    "RiskReport",
    "SignerRegistry",
    "SwapReceipt",
    "TaintAwareRiskModel",
    "UnsettledRecord",
    "WrapperLedger",
    "canonical_encode",
    "end_to_end_attack_replay",
    "exact_profit",
    "exact_threshold",
    "format_rate",
    "is_cap_safe",
    "issue_report",
    "median_quote",
    "parse_rate",
    "profitability_threshold",
    "settled_multiplier",
    "simulate_attack",
    "validate_reports",
]
