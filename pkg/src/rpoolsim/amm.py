"""The automated-market pool exchanging unsettled wrapper tokens for base.

The pool's ledger account holds only wrapper tokens: LP deposits arrive as
base and are wrapped immediately, swap payouts are unwrapped on the way
out, so no base ever rests at the pool address between operations.  Swap
pricing is the median oracle quote scaled by a bonding-curve multiplier
that decays once the pool's settled fraction drops below the configured
threshold, then clamped by a hard rate cap (the LP-shorting defense).

LP shares are an internal map rather than tokens on the ledger; their
market price during attacks is modeled analytically in the attack lab.

Deposits mint shares against the pool's *current* total, so newcomers are
not diluted by clawbacks that predate them.  Withdrawals pay out the pool's
settled:unsettled mix pro rata — keeping the bonding-curve input ratio
unchanged — with the settled share unwrapped to base and the unsettled
share transferred as wrapper tokens whose window restarts at the LP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import InsufficientLpTokens, InsufficientPoolSettled
from .ledger import WrapperLedger, check_amount
from .oracle import RiskReport, SignerRegistry, validate_reports
from .rates import PPM, check_rate

#: Default hard cap on the effective exchange rate; at or below one half the
#: LP-shorting attack can never beat the attacker's plain-theft baseline.
DEFAULT_RATE_CAP_PPM = 500_000


def settled_multiplier(settled: int, total: int, kappa_ppm: int) -> int:
    """Bonding-curve multiplier min(1, (settled/total)/kappa) in ppm.

    Rises linearly with the pool's settled fraction and saturates at 1 once
    the fraction reaches ``kappa``.  An empty pool quotes 0: it has nothing
    to sell, so it refuses service rather than divide by zero.
    """
    if total == 0:
        return 0
    if not 0 <= settled <= total:
        raise ValueError(f"settled {settled} outside [0, {total}]")
    return min(PPM, settled * PPM * PPM // (total * kappa_ppm))


@dataclass(frozen=True)
class SwapReceipt:
    requestor: str
    amount_in: int
    median_ppm: int
    multiplier_ppm: int
    rate_ppm: int
    amount_out: int
    time: int
    #: ledger id of the inbound unsettled transfer; recovery plans start here
    transfer_in_id: int


class PoolState(NamedTuple):
    settled: int
    unsettled: int
    total: int
    lp_supply: int


@dataclass
class WithdrawalEntry:
    lp: str
    unsettled_out: int
    time: int
    transfer_id: int | None


class AmmPool:
    """Automated R-Pool over one wrapper ledger account."""

    def __init__(
        self,
        ledger: WrapperLedger,
        address: str,
        registry: SignerRegistry,
        *,
        kappa_ppm: int,
        risk_bounds: tuple[int, int],
        min_quorum: int,
        min_lp_deposit: int,
        rate_cap_ppm: int = DEFAULT_RATE_CAP_PPM,
    ) -> None:
        if not 0 < kappa_ppm < PPM:
            raise ValueError("kappa must be strictly between 0 and 1")
        check_rate(risk_bounds[0])
        check_rate(risk_bounds[1])
        if risk_bounds[0] > risk_bounds[1]:
            raise ValueError("risk bounds out of order")
        if min_quorum < 1:
            raise ValueError("quorum must be at least 1")
        check_rate(rate_cap_ppm)
        self.ledger = ledger
        self.address = address
        self.registry = registry
        self.kappa_ppm = kappa_ppm
        self.risk_bounds = risk_bounds
        self.min_quorum = min_quorum
        self.min_lp_deposit = min_lp_deposit
        self.rate_cap_ppm = rate_cap_ppm
        self.lp_supply = 0
        self.lp_holdings: dict[str, int] = {}
        self.withdrawal_log: list[WithdrawalEntry] = []
        self.receipts: list[SwapReceipt] = []
        # Pools must be able to unwrap their settled liquidity.
        if ledger.is_unwrap_disabled(address):
            raise ValueError(f"pool account {address} has unwrapping disabled")

    # -- views -----------------------------------------------------------

    def pool_state(self, now: int) -> PoolState:
        settled, unsettled = self.ledger.settle_view(self.address, now)
        return PoolState(settled, unsettled, settled + unsettled, self.lp_supply)

    # -- liquidity -------------------------------------------------------

    def deposit(self, lp: str, amount: int, now: int) -> int:
        """Add base liquidity; returns the LP tokens minted.

        Shares are priced against the pool total *before* the deposit, so a
        deposit's redeemable value equals the deposit regardless of past
        clawbacks.  The genesis deposit mints one share per token.
        """
        check_amount(amount)
        state = self.pool_state(now)
        if self.lp_supply == 0 or state.total == 0:
            minted = amount
        else:
            minted = amount * self.lp_supply // state.total
        self.ledger.base.transfer(lp, self.address, amount)
        self.ledger.wrap(self.address, amount, now)
        self.lp_holdings[lp] = self.lp_holdings.get(lp, 0) + minted
        self.lp_supply += minted
        return minted

    def withdraw(self, lp: str, lp_tokens: int, now: int) -> tuple[int, int]:
        """Burn LP tokens for the pro-rata pool share.

        Returns ``(base_out, unsettled_out)``: the settled portion is
        unwrapped and paid as base, the unsettled portion is transferred as
        wrapper tokens (window restarting here).  The split preserves the
        pool's settled:unsettled ratio so withdrawals cannot steer the
        bonding curve.
        """
        check_amount(lp_tokens)
        held = self.lp_holdings.get(lp, 0)
        if held < lp_tokens:
            raise InsufficientLpTokens(f"{lp} holds {held}, burning {lp_tokens}")
        state = self.pool_state(now)
        if state.total == 0:
            withdrawn = 0
        else:
            withdrawn = lp_tokens * state.total // self.lp_supply
        if withdrawn:
            unsettled_out = withdrawn * state.unsettled // state.total
            base_out = withdrawn - unsettled_out
        else:
            unsettled_out = base_out = 0

        transfer_id = None
        if unsettled_out:
            transfer_id = self.ledger.transfer_unsettled(
                self.address, lp, unsettled_out, now
            )
        if base_out:
            self.ledger.unwrap_to(self.address, base_out, lp, now)
        self.lp_holdings[lp] = held - lp_tokens
        if self.lp_holdings[lp] == 0:
            del self.lp_holdings[lp]
        self.lp_supply -= lp_tokens
        self.withdrawal_log.append(WithdrawalEntry(lp, unsettled_out, now, transfer_id))
        return base_out, unsettled_out

    # -- swapping --------------------------------------------------------

    def swap(
        self, requestor: str, amount_in: int, reports: list[RiskReport], now: int
    ) -> SwapReceipt:
        """Exchange the requestor's unsettled tokens for base at the quoted rate.

        The full report validation (including the nonce check) runs before
        any state changes; pricing reads the pre-swap pool state, so the
        requestor gets exactly the rate it could have computed beforehand.
        """
        check_amount(amount_in)
        median = validate_reports(self, requestor, amount_in, reports, now, self.ledger)
        state = self.pool_state(now)
        multiplier = settled_multiplier(state.settled, state.total, self.kappa_ppm)
        rate = min(self.rate_cap_ppm, median * multiplier // PPM)
        amount_out = amount_in * rate // PPM
        if state.settled < amount_out:
            raise InsufficientPoolSettled(
                f"pool has {state.settled} settled, swap needs {amount_out}"
            )
        transfer_in = self.ledger.transfer_unsettled(
            requestor, self.address, amount_in, now
        )
        if amount_out:
            self.ledger.unwrap_to(self.address, amount_out, requestor, now)
        receipt = SwapReceipt(
            requestor=requestor,
            amount_in=amount_in,
            median_ppm=median,
            multiplier_ppm=multiplier,
            rate_ppm=rate,
            amount_out=amount_out,
            time=now,
            transfer_in_id=transfer_in,
        )
        self.receipts.append(receipt)
        return receipt
