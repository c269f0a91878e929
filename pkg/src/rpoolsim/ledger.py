"""Recoverable wrapped-token ledger.

Two ledgers cooperate.  A plain base-token ledger tracks ordinary fungible
balances.  The wrapper ledger locks base tokens at its own base-side address
and tracks, per account, a settled balance (immune to clawback, unwrappable
at any time) plus an ordered list of unsettled records still inside the
recovery window.  Every incoming transfer lands as one fresh unsettled
record whose window restarts at the recipient.

Settlement is lazy: there is no background job.  Maturity is evaluated
against the caller-supplied clock, and mutating operations fold matured
records into the settled balance before acting.  A record is settled once
``now >= settlement_time``.  Frozen portions never mature while their case
is open.

Key invariants maintained here and asserted by :meth:`WrapperLedger.check_invariants`:
  - base-token total supply is conserved by every operation;
  - the base tokens locked at the wrapper address equal the sum of all
    settled and unsettled (including frozen) wrapper balances;
  - each account's nonce increments by exactly one for every ledger event
    the account participates in;
  - no operation other than recover/release ever reduces a frozen amount.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .errors import (
    FrozenFunds,
    InsufficientBalance,
    InsufficientBase,
    InsufficientSettled,
    InsufficientUnsettled,
    NotArbitrator,
    SelfTransfer,
    Uncoverable,
    UnknownCase,
    UnwrapDisabled,
    ZeroAmount,
)

#: Sentinel that is never allowed to hold an account.
NOBODY = "<nobody>"

# Spend-source modes recorded in the transfer log.  The public transfer API
# exposes the first two; pools and the order book draw from unsettled
# records only, which is what makes their outbound risk traceable.
SPEND_SETTLED = "settled"
SPEND_SETTLED_THEN_UNSETTLED = "settled+unsettled"
SPEND_UNSETTLED = "unsettled"


def check_amount(amount: int) -> int:
    """Validate a token amount: a positive int (zero is a modeled rejection)."""
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise TypeError(f"amount must be an integer, got {amount!r}")
    if amount < 0:
        raise ValueError(f"negative amount {amount}")
    if amount == 0:
        raise ZeroAmount("amount must be positive")
    return amount


@dataclass
class UnsettledRecord:
    """One freezable chunk of a recipient's balance."""

    record_id: int
    amount: int
    settlement_time: int
    origin_transfer_id: int
    frozen_amount: int = 0

    @property
    def spendable(self) -> int:
        return self.amount - self.frozen_amount


@dataclass
class Account:
    settled: int = 0
    #: ascending (settlement_time, record_id)
    unsettled: list[UnsettledRecord] = field(default_factory=list)
    nonce: int = 0
    unwrap_disabled: bool = False

    def unsettled_total(self) -> int:
        return sum(rec.amount for rec in self.unsettled)

    def frozen_total(self) -> int:
        return sum(rec.frozen_amount for rec in self.unsettled)


@dataclass(frozen=True)
class TransferEntry:
    """Append-only transfer-log row; ``unsettled_spent`` is the portion the
    sender drew from unsettled records, which is what downstream recovery
    liability attaches to."""

    transfer_id: int
    sender: str
    recipient: str
    amount: int
    time: int
    record_ids: tuple[int, ...]
    unsettled_spent: int


@dataclass
class Case:
    case_id: str
    #: (account, record_id, amount) marks placed by the freeze
    entries: list[tuple[str, int, int]]
    status: str = "active"  # active | recovered | released


class BaseLedger:
    """Plain fungible-token ledger backing the wrapper."""

    def __init__(self) -> None:
        self.balances: dict[str, int] = {}
        self.total_supply = 0
        #: shared primitive-event journal (the wrapper appends here too) so
        #: an independent replay oracle can rebuild all state from genesis.
        self.journal: list[tuple] = []

    def balance(self, account: str) -> int:
        return self.balances.get(account, 0)

    def mint(self, account: str, amount: int) -> None:
        check_amount(amount)
        self.balances[account] = self.balance(account) + amount
        self.total_supply += amount
        self.journal.append(("mint", account, amount))

    def transfer(self, sender: str, recipient: str, amount: int) -> None:
        check_amount(amount)
        if self.balance(sender) < amount:
            raise InsufficientBase(
                f"{sender} holds {self.balance(sender)} base, needs {amount}"
            )
        self.balances[sender] -= amount
        self.balances[recipient] = self.balance(recipient) + amount
        self.journal.append(("base_transfer", sender, recipient, amount))


class WrapperLedger:
    """The recoverable wrapper around a :class:`BaseLedger`.

    All operations take an explicit ``now``; the ledger holds no clock of
    its own, which keeps runs deterministic and replayable.
    """

    def __init__(
        self,
        base: BaseLedger,
        *,
        recovery_window: int,
        arbitrator: str,
        address: str = "<wrapper>",
    ) -> None:
        if recovery_window < 0:
            raise ValueError("recovery window must be non-negative")
        self.base = base
        self.recovery_window = recovery_window
        self.arbitrator = arbitrator
        self.address = address
        self.accounts: dict[str, Account] = {}
        self.transfer_log: list[TransferEntry] = []
        self.cases: dict[str, Case] = {}
        self._next_record_id = 1
        self._next_transfer_id = 1

    # -- account plumbing ---------------------------------------------------

    def _account(self, name: str) -> Account:
        if name in (self.arbitrator, self.address, NOBODY):
            raise ValueError(f"{name!r} is reserved and cannot hold an account")
        acct = self.accounts.get(name)
        if acct is None:
            acct = Account()
            self.accounts[name] = acct
        return acct

    def _settle_account(self, acct: Account, now: int) -> None:
        """Fold matured, unfrozen value into the settled balance."""
        kept: list[UnsettledRecord] = []
        for rec in acct.unsettled:
            if rec.settlement_time <= now:
                movable = rec.amount - rec.frozen_amount
                if movable:
                    acct.settled += movable
                if rec.frozen_amount:
                    # Frozen remainder stays unsettled until the case closes.
                    rec.amount = rec.frozen_amount
                    kept.append(rec)
            else:
                kept.append(rec)
        acct.unsettled = kept

    # -- views ---------------------------------------------------------------

    def settle_view(self, account: str, now: int) -> tuple[int, int]:
        """Effective (settled, unsettled) balances at ``now``; pure."""
        acct = self.accounts.get(account)
        if acct is None:
            return 0, 0
        settled = acct.settled
        unsettled = 0
        for rec in acct.unsettled:
            if rec.settlement_time <= now:
                settled += rec.amount - rec.frozen_amount
                unsettled += rec.frozen_amount
            else:
                unsettled += rec.amount
        return settled, unsettled

    def balance_of(self, account: str, include_unsettled: bool, now: int) -> int:
        settled, unsettled = self.settle_view(account, now)
        return settled + unsettled if include_unsettled else settled

    def available_unsettled(self, account: str, now: int) -> int:
        """Unsettled value at ``now`` that is not under an active freeze."""
        acct = self.accounts.get(account)
        if acct is None:
            return 0
        return sum(
            rec.spendable for rec in acct.unsettled if rec.settlement_time > now
        )

    def nonce(self, account: str) -> int:
        acct = self.accounts.get(account)
        return 0 if acct is None else acct.nonce

    def is_unwrap_disabled(self, account: str) -> bool:
        acct = self.accounts.get(account)
        return False if acct is None else acct.unwrap_disabled

    def base_locked(self) -> int:
        return self.base.balance(self.address)

    def wrapped_total(self) -> int:
        return sum(
            acct.settled + acct.unsettled_total() for acct in self.accounts.values()
        )

    # -- wrapping ------------------------------------------------------------

    def wrap(self, caller: str, amount: int, now: int) -> None:
        """Lock base tokens and mint the same amount of settled wrapper tokens."""
        check_amount(amount)
        if self.base.balance(caller) < amount:
            raise InsufficientBase(
                f"{caller} holds {self.base.balance(caller)} base, needs {amount}"
            )
        acct = self._account(caller)
        self._settle_account(acct, now)
        self.base.transfer(caller, self.address, amount)
        acct.settled += amount
        acct.nonce += 1
        self.base.journal.append(("wrap", caller, amount, now))

    def unwrap(self, caller: str, amount: int, now: int) -> None:
        self.unwrap_to(caller, amount, caller, now)

    def unwrap_to(self, caller: str, amount: int, to: str, now: int) -> None:
        """Burn settled wrapper tokens and release base tokens to ``to``."""
        check_amount(amount)
        acct = self.accounts.get(caller)
        if acct is not None and acct.unwrap_disabled:
            raise UnwrapDisabled(f"unwrapping is disabled for {caller}")
        settled, _ = self.settle_view(caller, now)
        if settled < amount:
            raise InsufficientSettled(
                f"{caller} has {settled} settled, needs {amount}; "
                "unsettled tokens cannot be unwrapped"
            )
        assert acct is not None
        self._settle_account(acct, now)
        acct.settled -= amount
        acct.nonce += 1
        self.base.transfer(self.address, to, amount)
        self.base.journal.append(("unwrap", caller, to, amount, now))

    def disable_unwrap(self, caller: str) -> None:
        """Permanently disable unwrapping for the caller; idempotent."""
        acct = self._account(caller)
        acct.unwrap_disabled = True
        self.base.journal.append(("disable_unwrap", caller))

    # -- transfers -----------------------------------------------------------

    def transfer(
        self,
        sender: str,
        recipient: str,
        amount: int,
        include_unsettled: bool,
        now: int,
    ) -> int:
        """Move wrapper tokens; the recipient gets one fresh unsettled record.

        With ``include_unsettled`` the settled balance is spent first, then
        unsettled records in ascending settlement-time order.  Frozen
        portions are never spendable.  Returns the transfer id.
        """
        mode = SPEND_SETTLED_THEN_UNSETTLED if include_unsettled else SPEND_SETTLED
        return self._transfer(sender, recipient, amount, mode, now)

    def transfer_unsettled(
        self, sender: str, recipient: str, amount: int, now: int
    ) -> int:
        """Transfer drawing from unsettled records only (pool/book internals)."""
        return self._transfer(sender, recipient, amount, SPEND_UNSETTLED, now)

    def _transfer(
        self, sender: str, recipient: str, amount: int, mode: str, now: int
    ) -> int:
        check_amount(amount)
        if sender == recipient:
            raise SelfTransfer(f"{sender} cannot transfer to itself")

        settled, _ = self.settle_view(sender, now)
        spendable_unsettled = self.available_unsettled(sender, now)
        acct = self.accounts.get(sender)
        frozen = 0 if acct is None else acct.frozen_total()
        if mode == SPEND_SETTLED:
            available, with_frozen = settled, settled
        elif mode == SPEND_SETTLED_THEN_UNSETTLED:
            available = settled + spendable_unsettled
            with_frozen = available + frozen
        else:
            available = spendable_unsettled
            with_frozen = available + frozen
        if available < amount:
            if with_frozen >= amount:
                raise FrozenFunds(
                    f"{sender} has {available} spendable; {frozen} frozen"
                )
            raise InsufficientBalance(
                f"{sender} has {available} spendable, needs {amount}"
            )

        recipient_acct = self._account(recipient)
        sender_acct = self.accounts[sender]
        self._settle_account(sender_acct, now)
        unsettled_spent = self._spend(sender_acct, amount, mode)

        transfer_id = self._next_transfer_id
        self._next_transfer_id += 1
        record = UnsettledRecord(
            record_id=self._next_record_id,
            amount=amount,
            settlement_time=now + self.recovery_window,
            origin_transfer_id=transfer_id,
        )
        self._next_record_id += 1
        bisect.insort(
            recipient_acct.unsettled,
            record,
            key=lambda r: (r.settlement_time, r.record_id),
        )
        self.transfer_log.append(
            TransferEntry(
                transfer_id=transfer_id,
                sender=sender,
                recipient=recipient,
                amount=amount,
                time=now,
                record_ids=(record.record_id,),
                unsettled_spent=unsettled_spent,
            )
        )
        sender_acct.nonce += 1
        recipient_acct.nonce += 1
        self.base.journal.append(("transfer", sender, recipient, amount, mode, now))
        return transfer_id

    @staticmethod
    def _spend(acct: Account, amount: int, mode: str) -> int:
        remaining = amount
        if mode != SPEND_UNSETTLED:
            take = min(acct.settled, remaining)
            acct.settled -= take
            remaining -= take
        unsettled_spent = 0
        if remaining:
            kept: list[UnsettledRecord] = []
            for rec in acct.unsettled:
                if remaining:
                    take = min(rec.spendable, remaining)
                    rec.amount -= take
                    remaining -= take
                    unsettled_spent += take
                if rec.amount:
                    kept.append(rec)
            acct.unsettled = kept
        assert remaining == 0, "spend called without sufficient validated funds"
        return unsettled_spent

    # -- freezing and recovery ------------------------------------------------

    def freeze(
        self,
        caller: str,
        targets: list[tuple[str, int]],
        case_id: str,
        now: int,
    ) -> None:
        """Mark unsettled value on the target accounts under ``case_id``.

        Marks are placed on records in ascending settlement-time order.
        Frozen value cannot be spent and cannot mature until the case closes
        via :meth:`recover` or :meth:`release`.
        """
        if caller != self.arbitrator:
            raise NotArbitrator(f"{caller} is not the arbitrator")
        if case_id in self.cases:
            raise UnknownCase(f"case {case_id!r} already used")
        if not targets:
            raise ValueError("freeze requires at least one target")
        wanted: dict[str, int] = {}
        for account, amount in targets:
            check_amount(amount)
            wanted[account] = wanted.get(account, 0) + amount
        for account, total in wanted.items():
            available = self.available_unsettled(account, now)
            if available < total:
                raise InsufficientUnsettled(
                    f"{account} has {available} freezable unsettled, needs {total}"
                )

        entries: list[tuple[str, int, int]] = []
        for account, total in wanted.items():
            acct = self.accounts[account]
            self._settle_account(acct, now)
            remaining = total
            for rec in acct.unsettled:
                if not remaining:
                    break
                take = min(rec.spendable, remaining)
                if take:
                    rec.frozen_amount += take
                    entries.append((account, rec.record_id, take))
                    remaining -= take
            assert remaining == 0
            acct.nonce += 1
        self.cases[case_id] = Case(case_id, entries)
        self.base.journal.append(
            ("freeze", case_id, tuple(sorted(wanted.items())), now)
        )

    def recover(self, caller: str, case_id: str, victim: str, now: int) -> int:
        """Move all frozen value of the case into the victim's settled balance."""
        if caller != self.arbitrator:
            raise NotArbitrator(f"{caller} is not the arbitrator")
        case = self.cases.get(case_id)
        if case is None or case.status != "active":
            raise UnknownCase(f"no active case {case_id!r}")
        victim_acct = self._account(victim)
        self._settle_account(victim_acct, now)

        total = 0
        affected: list[str] = []
        for account, record_id, amount in case.entries:
            acct = self.accounts[account]
            rec = next(r for r in acct.unsettled if r.record_id == record_id)
            rec.frozen_amount -= amount
            rec.amount -= amount
            total += amount
            if account not in affected:
                affected.append(account)
        for account in affected:
            acct = self.accounts[account]
            acct.unsettled = [rec for rec in acct.unsettled if rec.amount]
            acct.nonce += 1
        victim_acct.settled += total
        victim_acct.nonce += 1
        case.status = "recovered"
        self.base.journal.append(("recover", case_id, victim, now))
        return total

    def release(self, caller: str, case_id: str, now: int) -> None:
        """Lift the case's freeze; records resume maturing normally."""
        if caller != self.arbitrator:
            raise NotArbitrator(f"{caller} is not the arbitrator")
        case = self.cases.get(case_id)
        if case is None or case.status != "active":
            raise UnknownCase(f"no active case {case_id!r}")
        affected: list[str] = []
        for account, record_id, amount in case.entries:
            acct = self.accounts[account]
            rec = next(r for r in acct.unsettled if r.record_id == record_id)
            rec.frozen_amount -= amount
            if account not in affected:
                affected.append(account)
        for account in affected:
            self.accounts[account].nonce += 1
        case.status = "released"
        self.base.journal.append(("release", case_id, now))

    def plan_recovery(
        self, tainted_transfer_id: int, amount: int, now: int
    ) -> list[tuple[str, int]]:
        """Compute freeze targets covering ``amount`` of a tainted transfer.

        The direct recipient's remaining unsettled value is targeted first.
        Any deficiency falls on recipients of the direct recipient's
        subsequent unsettled outflows, most recent first — so parties that
        withdrew risky funds after the tainted inflow still share the loss.
        The returned plan always totals exactly ``amount`` and every target
        holds enough freezable unsettled for the follow-up freeze to succeed.
        """
        check_amount(amount)
        entry = self._transfer_entry(tainted_transfer_id)
        if amount > entry.amount:
            raise ValueError(
                f"cannot recover {amount} of a {entry.amount}-token transfer"
            )
        plan: dict[str, int] = {}
        remaining = amount

        recipient = entry.recipient
        take = min(remaining, self.available_unsettled(recipient, now))
        if take:
            plan[recipient] = take
            remaining -= take

        if remaining:
            outflows = [
                e
                for e in self.transfer_log
                if e.sender == recipient
                and e.transfer_id > tainted_transfer_id
                and e.unsettled_spent > 0
            ]
            for out in reversed(outflows):  # most recent first
                if not remaining:
                    break
                headroom = self.available_unsettled(out.recipient, now) - plan.get(
                    out.recipient, 0
                )
                take = min(remaining, out.unsettled_spent, headroom)
                if take > 0:
                    plan[out.recipient] = plan.get(out.recipient, 0) + take
                    remaining -= take
        if remaining:
            raise Uncoverable(
                f"only {amount - remaining} of {amount} reachable from "
                f"transfer {tainted_transfer_id}"
            )
        return list(plan.items())

    def _transfer_entry(self, transfer_id: int) -> TransferEntry:
        index = transfer_id - 1
        if not 0 <= index < len(self.transfer_log):
            raise ValueError(f"unknown transfer id {transfer_id}")
        return self.transfer_log[index]

    # -- genesis and invariants ------------------------------------------------

    def genesis_settled(self, account: str, amount: int) -> None:
        """Endow an account with settled wrapper tokens at time zero.

        Mints the backing base supply directly into the wrapper's locked
        address, so conservation holds from the first event.  Does not touch
        the nonce: genesis is state, not an event.
        """
        check_amount(amount)
        acct = self._account(account)
        self.base.mint(self.address, amount)
        acct.settled += amount
        self.base.journal.append(("genesis_settled", account, amount))

    def check_invariants(self) -> None:
        assert self.base.total_supply == sum(self.base.balances.values()), (
            "base supply out of balance"
        )
        assert self.base_locked() == self.wrapped_total(), (
            f"locked base {self.base_locked()} != wrapped total {self.wrapped_total()}"
        )
        for name, acct in self.accounts.items():
            assert acct.settled >= 0, f"{name} settled negative"
            last = (-1, -1)
            for rec in acct.unsettled:
                assert rec.amount > 0, f"{name} holds an empty record"
                assert 0 <= rec.frozen_amount <= rec.amount, (
                    f"{name} record {rec.record_id} frozen amount out of range"
                )
                key = (rec.settlement_time, rec.record_id)
                assert key > last, f"{name} records out of order"
                last = key
