"""LP-shorting attack analysis.

The attack: short the pool's LP tokens, steal wrapped tokens from a victim
protocol, launder them through the pool at rate x/p, let the recovery drain
the pool (depressing the LP token price), then close the short at the lower
price.  Profit is x + b - m: the swap payout, plus the short-sale proceeds,
minus the buy-back cost.

The lending market and DEX are modeled analytically at spot prices — the
price of an LP token is pool-total/lp-supply before the recovery and drops
by at most the swap payout afterwards.  Spot equality is the worst case for
the safety claim, so it is what the cap bound must survive.

Core result, exact in rationals: profit exceeds the plain-theft baseline p
only when the exchange rate strictly exceeds lp_supply/(lp_supply+shorted).
Shorting everything pushes that threshold down to 1/2; shorting at most 10%
keeps it above 10/11 (~91%).  A pool rate cap at or below the threshold is
therefore safe, with equality allowed because profitability is strict.

Integer bookkeeping rounds against the attacker (proceeds floor, costs
ceil); agreement between the integer model and exact rationals is within
three token units, and the live end-to-end replay matches the integer model
exactly when the pool's multiplier saturates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .amm import AmmPool
from .errors import InvalidScenario, ZeroShort
from .ledger import BaseLedger, WrapperLedger
from .oracle import ConstantRiskModel, RatingEntity, RiskModel, SignerRegistry, issue_report
from .rates import PPM, check_rate


def _ceil_div(numerator: int, denominator: int) -> int:
    return -(-numerator // denominator)


@dataclass(frozen=True)
class AttackScenario:
    """Parameters of one LP-shorting attempt.

    ``pool_total`` and ``lp_supply`` are equal until the pool's first
    recovery event and the former never exceeds the latter afterwards.
    """

    pool_total: int   # tokens managed by the pool, settled plus unsettled
    lp_supply: int    # LP tokens in circulation
    collateral: int   # posted at the lending protocol
    shorted: int      # LP tokens borrowed and sold
    stolen: int       # tokens taken from the victim protocol
    rate_ppm: int     # pool exchange rate obtained for the stolen tokens

    def __post_init__(self) -> None:
        if self.lp_supply <= 0 or self.pool_total <= 0:
            raise InvalidScenario("pool total and LP supply must be positive")
        if self.pool_total > self.lp_supply:
            raise InvalidScenario("pool total cannot exceed LP supply")
        if not 0 <= self.shorted <= self.lp_supply:
            raise InvalidScenario("short must be between 0 and the LP supply")
        if self.collateral < 0:
            raise InvalidScenario("collateral cannot be negative")
        if self.stolen <= 0:
            raise InvalidScenario("stolen amount must be positive")
        if not 0 <= self.rate_ppm <= PPM:
            raise InvalidScenario("rate must lie in [0, 1]")

    @property
    def borrow_limit_respected(self) -> bool:
        """Whether the short stays within the spot borrowing power of the collateral."""
        return self.shorted * self.pool_total <= self.collateral * self.lp_supply


@dataclass(frozen=True)
class ProfitBreakdown:
    swap_out: int        # x: base received from the pool
    sale_proceeds: int   # b: short sale of LP tokens at the pre-attack price
    buyback_cost: int    # m: repurchase at the post-recovery price
    profit: int          # x + b - m
    stolen: int          # the plain-theft baseline p
    #: m >= collateral*(pool_total-x)/pool_total, evaluated only when the
    #: short saturates the borrow limit; None otherwise.
    meets_collateral_bound: bool | None

    @property
    def exceeds_stolen(self) -> bool:
        return self.profit > self.stolen


def _breakdown(
    scenario: AttackScenario, swap_out: int, total_before: int, total_after: int
) -> ProfitBreakdown:
    sale = scenario.shorted * total_before // scenario.lp_supply
    buyback = _ceil_div(scenario.shorted * total_after, scenario.lp_supply)
    at_limit = scenario.shorted == (
        scenario.collateral * scenario.lp_supply // scenario.pool_total
    )
    bound = None
    if at_limit and scenario.shorted > 0:
        bound = buyback * scenario.pool_total >= scenario.collateral * (
            scenario.pool_total - swap_out
        )
    return ProfitBreakdown(
        swap_out=swap_out,
        sale_proceeds=sale,
        buyback_cost=buyback,
        profit=swap_out + sale - buyback,
        stolen=scenario.stolen,
        meets_collateral_bound=bound,
    )


def simulate_attack(scenario: AttackScenario) -> ProfitBreakdown:
    """Analytic replay of the seven attack steps in integer arithmetic.

    The pool gains the stolen tokens, pays out the swap, then loses the
    stolen tokens to the recovery: net change is minus the swap payout, so
    the LP spot price falls from total/supply to (total-x)/supply.
    """
    swap_out = scenario.stolen * scenario.rate_ppm // PPM
    if swap_out > scenario.pool_total:
        raise InvalidScenario(
            f"swap payout {swap_out} exceeds pool capacity {scenario.pool_total}"
        )
    return _breakdown(
        scenario, swap_out, scenario.pool_total, scenario.pool_total - swap_out
    )


def exact_profit(scenario: AttackScenario, rate: Fraction | None = None) -> Fraction:
    """Attack profit in exact rationals (the model the safety bound lives in)."""
    if rate is None:
        rate = Fraction(scenario.rate_ppm, PPM)
    total = Fraction(scenario.pool_total)
    swap_out = Fraction(scenario.stolen) * rate
    sale = Fraction(scenario.shorted) * total / scenario.lp_supply
    buyback = Fraction(scenario.shorted) * (total - swap_out) / scenario.lp_supply
    return swap_out + sale - buyback


def profitability_threshold(lp_supply: int, shorted: int) -> int:
    """Minimum exchange rate (ppm, floored) at which the attack can beat
    plain theft: lp_supply / (lp_supply + shorted)."""
    if shorted == 0:
        raise ZeroShort("threshold undefined for a zero short")
    if not 0 < shorted <= lp_supply:
        raise InvalidScenario("short must be between 1 and the LP supply")
    return lp_supply * PPM // (lp_supply + shorted)


def exact_threshold(lp_supply: int, shorted: int) -> Fraction:
    if shorted == 0:
        raise ZeroShort("threshold undefined for a zero short")
    return Fraction(lp_supply, lp_supply + shorted)


def is_cap_safe(rate_cap_ppm: int, max_short_fraction_ppm: int) -> bool:
    """True iff the rate cap makes the attack unprofitable for any attacker
    able to short at most the given fraction of LP tokens.

    Profitability requires the rate to *strictly* exceed 1/(1+f), so a cap
    exactly at the threshold is still safe.  The comparison is exact.
    """
    check_rate(rate_cap_ppm)
    if not 0 < max_short_fraction_ppm <= PPM:
        raise ValueError("short fraction must be in (0, 1]")
    # cap <= 1 / (1 + f), cross-multiplied in integers.
    return rate_cap_ppm * (PPM + max_short_fraction_ppm) <= PPM * PPM


REPLAY_WINDOW = 86_400


def end_to_end_attack_replay(
    scenario: AttackScenario,
    *,
    rate_cap_ppm: int = PPM,
    risk_bounds: tuple[int, int] = (0, PPM),
    model: RiskModel | None = None,
) -> ProfitBreakdown:
    """Execute the attack against live ledger and pool instances.

    The pool, its oracle, the theft, the swap, and the recovery all run for
    real; only the lending desk and the DEX legs are priced analytically at
    spot from the live pool totals.  Pool rejections (rate bounds, nonce)
    propagate to the caller.
    """
    pool_total, lp_supply = scenario.pool_total, scenario.lp_supply
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=REPLAY_WINDOW, arbitrator="arbiter")
    registry = SignerRegistry()
    secret, public = registry.scheme.keygen("lender")
    registry.register("lender", public)
    pool = AmmPool(
        ledger,
        "pool",
        registry,
        kappa_ppm=500_000,
        risk_bounds=risk_bounds,
        min_quorum=1,
        min_lp_deposit=1,
        rate_cap_ppm=PPM,
    )
    now = 0
    base.mint("lender", lp_supply)
    pool.deposit("lender", lp_supply, now)

    # A prior recovery event brings the pool total down to the scenario's
    # value while leaving the LP supply untouched: an early thief swaps the
    # shortfall through at rate 1 and the arbitrator claws it back.
    shortfall = lp_supply - pool_total
    if shortfall:
        base.mint("early-victim", shortfall)
        ledger.wrap("early-victim", shortfall, now)
        ledger.transfer("early-victim", "early-thief", shortfall, False, now)
        permissive = RatingEntity("lender", secret, ConstantRiskModel(PPM))
        report = issue_report(
            permissive, registry, "early-thief", shortfall, now, 60, ledger
        )
        receipt = pool.swap("early-thief", shortfall, [report], now)
        plan = ledger.plan_recovery(receipt.transfer_in_id, shortfall, now)
        ledger.freeze("arbiter", plan, "prior-case", now)
        ledger.recover("arbiter", "prior-case", "early-victim", now)
    pool.rate_cap_ppm = rate_cap_ppm

    total_before = ledger.balance_of("pool", True, now)
    base.mint("victim-protocol", scenario.stolen)
    ledger.wrap("victim-protocol", scenario.stolen, now)
    ledger.transfer("victim-protocol", "marvin", scenario.stolen, False, now)

    entity = RatingEntity(
        "lender", secret, model or ConstantRiskModel(scenario.rate_ppm)
    )
    report = issue_report(
        entity, registry, "marvin", scenario.stolen, now, 60, ledger
    )
    receipt = pool.swap("marvin", scenario.stolen, [report], now)

    plan = ledger.plan_recovery(receipt.transfer_in_id, scenario.stolen, now)
    ledger.freeze("arbiter", plan, "theft-case", now)
    ledger.recover("arbiter", "theft-case", "victim-protocol", now)
    total_after = ledger.balance_of("pool", True, now)

    swap_out = base.balance("marvin")
    assert swap_out == receipt.amount_out
    return _breakdown(scenario, swap_out, total_before, total_after)
