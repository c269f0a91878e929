"""Scenario execution: builds the world, drives every module on the script
clock, evaluates expectations, and emits a deterministic event log.

Each step produces one event record capturing the action, its outcome
(``ok`` or the raised error's name), the operation result, and the
effective balance deltas it caused.  Replaying the same script always
yields byte-identical JSON lines: there is no wall clock and no ambient
randomness anywhere in the engine.

Steps that declare ``expect_error`` must fail with exactly that error and
must leave the world untouched; the runner verifies the latter with a
state digest.  Failures of either kind surface as failed assertions in the
report rather than exceptions, so a scenario always runs to the end.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .amm import AmmPool
from .errors import RPoolError
from .ledger import BaseLedger, WrapperLedger
from .oracle import (
    ConstantRiskModel,
    RatingEntity,
    RiskReport,
    SignerRegistry,
    TaintAwareRiskModel,
    issue_report,
)
from .orderbook import OrderBook
from .rates import format_rate
from .scenario import ScenarioScript, Step


@dataclass(frozen=True)
class EventRecord:
    seq: int
    time: int
    action: str
    params: dict
    outcome: str  # "ok" or an error name
    result: object
    deltas: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "time": self.time,
                "action": self.action,
                "params": self.params,
                "outcome": self.outcome,
                "result": self.result,
                "deltas": self.deltas,
            },
            sort_keys=True,
            separators=(",", ":"),
        )


@dataclass(frozen=True)
class AssertionResult:
    seq: int
    description: str
    passed: bool
    expected: object
    observed: object


@dataclass
class RunResult:
    name: str
    events: list[EventRecord] = field(default_factory=list)
    assertions: list[AssertionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def event_log_lines(self) -> list[str]:
        return [event.to_json() for event in self.events]


class ScenarioRunner:
    """One isolated world per runner; run() executes the whole script."""

    def __init__(self, script: ScenarioScript, name: str = "scenario") -> None:
        self.script = script
        self.name = name
        self.base = BaseLedger()
        self.ledger = WrapperLedger(
            self.base,
            recovery_window=script.window,
            arbitrator=script.arbitrator,
        )
        self.registry = SignerRegistry()
        self.tainted: set[int] = set()
        self.entities: dict[str, RatingEntity] = {}
        self.pools: dict[str, AmmPool] = {}
        self.books: dict[str, OrderBook] = {}
        self.reports: dict[str, RiskReport] = {}
        self.transfers: dict[str, int] = {}
        self.bids: dict[str, int] = {}
        self._build_world()

    def _build_world(self) -> None:
        for acct in self.script.accounts:
            if acct.base:
                self.base.mint(acct.name, acct.base)
            if acct.settled:
                self.ledger.genesis_settled(acct.name, acct.settled)
        for spec in self.script.signers:
            secret, public = self.registry.scheme.keygen(spec.name)
            self.registry.register(spec.name, public, authorized=spec.authorized)
            if spec.model == "constant":
                model = ConstantRiskModel(spec.rate_ppm)
            else:
                model = TaintAwareRiskModel(self.tainted, spec.rate_ppm)
            self.entities[spec.name] = RatingEntity(spec.name, secret, model)
        for spec in self.script.pools:
            self.pools[spec.name] = AmmPool(
                self.ledger,
                spec.name,
                self.registry,
                kappa_ppm=spec.kappa_ppm,
                risk_bounds=(spec.risk_lo_ppm, spec.risk_hi_ppm),
                min_quorum=spec.min_quorum,
                min_lp_deposit=spec.min_lp_deposit,
                rate_cap_ppm=spec.rate_cap_ppm,
            )
        for name in self.script.books:
            self.books[name] = OrderBook(self.ledger)

    # -- state observation ---------------------------------------------------

    def _snapshot(self, now: int) -> dict[str, tuple[int, int, int, int]]:
        names = set(self.base.balances) | set(self.ledger.accounts)
        names.discard(self.ledger.address)
        out = {}
        for name in names:
            settled, unsettled = self.ledger.settle_view(name, now)
            out[name] = (self.base.balance(name), settled, unsettled, self.ledger.nonce(name))
        return out

    @staticmethod
    def _deltas(
        before: dict[str, tuple[int, int, int, int]],
        after: dict[str, tuple[int, int, int, int]],
    ) -> dict:
        deltas: dict[str, dict[str, int]] = {}
        for name in sorted(set(before) | set(after)):
            old = before.get(name, (0, 0, 0, 0))
            new = after.get(name, (0, 0, 0, 0))
            changed = {
                label: new[i] - old[i]
                for i, label in enumerate(("base", "settled", "unsettled", "nonce"))
                if new[i] != old[i]
            }
            if changed:
                deltas[name] = changed
        return deltas

    def state_digest(self) -> str:
        """Hash of the complete raw world state (empty accounts excluded)."""
        accounts = {
            name: (
                acct.settled,
                acct.nonce,
                acct.unwrap_disabled,
                [
                    (r.record_id, r.amount, r.settlement_time, r.origin_transfer_id, r.frozen_amount)
                    for r in acct.unsettled
                ],
            )
            for name, acct in sorted(self.ledger.accounts.items())
            if (acct.settled, acct.nonce, acct.unwrap_disabled, acct.unsettled)
            != (0, 0, False, [])
        }
        state = {
            "base": sorted((k, v) for k, v in self.base.balances.items() if v),
            "supply": self.base.total_supply,
            "accounts": accounts,
            "cases": {
                cid: (case.status, case.entries)
                for cid, case in sorted(self.ledger.cases.items())
            },
            "pools": {
                name: (pool.lp_supply, sorted(pool.lp_holdings.items()), len(pool.receipts))
                for name, pool in sorted(self.pools.items())
            },
            "books": {
                name: [
                    (b.bid_id, b.bidder, b.amount, b.min_rate_ppm, b.expiry, b.nonce_at_post, b.status)
                    for b in book.bids.values()
                ]
                for name, book in sorted(self.books.items())
            },
        }
        blob = json.dumps(state, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    # -- execution -------------------------------------------------------------

    def run(self) -> RunResult:
        result = RunResult(self.name)
        for seq, step in enumerate(self.script.steps, start=1):
            self._run_step(seq, step, result)
            self.ledger.check_invariants()
        return result

    def _run_step(self, seq: int, step: Step, result: RunResult) -> None:
        before = self._snapshot(step.time)
        digest_before = self.state_digest() if step.expect_error else None
        checks: list[tuple[str, object, object]] = []
        outcome = "ok"
        op_result: object = None
        try:
            op_result = self._dispatch(step, checks)
        except RPoolError as exc:
            outcome = exc.name
            checks = []  # result expectations are moot on failure

        if step.expect_error is not None:
            ok = outcome == step.expect_error
            result.assertions.append(
                AssertionResult(
                    seq,
                    f"step {seq} ({step.action}) fails with {step.expect_error}",
                    ok,
                    step.expect_error,
                    outcome,
                )
            )
            if outcome != "ok" and self.state_digest() != digest_before:
                result.assertions.append(
                    AssertionResult(
                        seq,
                        f"step {seq} ({step.action}) leaves state unchanged on error",
                        False,
                        "unchanged state",
                        "state changed",
                    )
                )
        elif outcome != "ok":
            result.assertions.append(
                AssertionResult(
                    seq,
                    f"step {seq} ({step.action}) succeeds",
                    False,
                    "ok",
                    outcome,
                )
            )
        for description, expected, observed in checks:
            result.assertions.append(
                AssertionResult(
                    seq, f"step {seq}: {description}", expected == observed, expected, observed
                )
            )
        after = self._snapshot(step.time)
        result.events.append(
            EventRecord(
                seq=seq,
                time=step.time,
                action=step.action,
                params=_json_params(step.params),
                outcome=outcome,
                result=op_result,
                deltas=self._deltas(before, after),
            )
        )

    # -- dispatch ----------------------------------------------------------------

    def _dispatch(self, step: Step, checks: list) -> object:
        p = step.params
        now = step.time
        action = step.action
        if action == "mint_base":
            self.base.mint(str(p["account"]), int(p["amount"]))  # type: ignore[arg-type]
            return None
        if action == "wrap":
            self.ledger.wrap(str(p["account"]), int(p["amount"]), now)  # type: ignore[arg-type]
            return None
        if action == "unwrap":
            account = str(p["account"])
            to = str(p.get("to", account))
            self.ledger.unwrap_to(account, int(p["amount"]), to, now)  # type: ignore[arg-type]
            return None
        if action == "transfer":
            tid = self.ledger.transfer(
                str(p["from"]),
                str(p["to"]),
                int(p["amount"]),  # type: ignore[arg-type]
                bool(p.get("unsettled", False)),
                now,
            )
            self._label_transfer(p, tid)
            return {"transfer_id": tid}
        if action == "disable_unwrap":
            self.ledger.disable_unwrap(str(p["account"]))
            return None
        if action == "deposit":
            pool = self.pools[str(p["pool"])]
            minted = pool.deposit(str(p["lp"]), int(p["amount"]), now)  # type: ignore[arg-type]
            self._check(checks, p, "expect_minted", "minted LP tokens", minted)
            return {"minted": minted}
        if action == "withdraw":
            pool = self.pools[str(p["pool"])]
            base_out, unsettled_out = pool.withdraw(str(p["lp"]), int(p["tokens"]), now)  # type: ignore[arg-type]
            self._check(checks, p, "expect_base", "base out", base_out)
            self._check(checks, p, "expect_unsettled", "unsettled out", unsettled_out)
            return {"base": base_out, "unsettled": unsettled_out}
        if action == "issue_report":
            entity = self.entities[str(p["signer"])]
            report = issue_report(
                entity,
                self.registry,
                str(p["requestor"]),
                int(p["amount"]),  # type: ignore[arg-type]
                now,
                int(p["ttl"]),  # type: ignore[arg-type]
                self.ledger,
            )
            self.reports[str(p["as"])] = report
            if "expect_quote" in p:
                checks.append(
                    (
                        f"report quote == {format_rate(int(p['expect_quote']))}",  # type: ignore[arg-type]
                        int(p["expect_quote"]),  # type: ignore[arg-type]
                        report.quote_ppm,
                    )
                )
            return {"quote_ppm": report.quote_ppm, "nonce": report.account_nonce}
        if action == "swap":
            pool = self.pools[str(p["pool"])]
            reports = [self.reports[str(label)] for label in p["reports"]]  # type: ignore[union-attr]
            receipt = pool.swap(str(p["requestor"]), int(p["amount"]), reports, now)  # type: ignore[arg-type]
            self._label_transfer(p, receipt.transfer_in_id)
            self._check(checks, p, "expect_out", "swap payout", receipt.amount_out)
            if "expect_rate" in p:
                checks.append(
                    (
                        f"effective rate == {format_rate(int(p['expect_rate']))}",  # type: ignore[arg-type]
                        int(p["expect_rate"]),  # type: ignore[arg-type]
                        receipt.rate_ppm,
                    )
                )
            return {
                "out": receipt.amount_out,
                "rate_ppm": receipt.rate_ppm,
                "median_ppm": receipt.median_ppm,
                "multiplier_ppm": receipt.multiplier_ppm,
                "transfer_id": receipt.transfer_in_id,
            }
        if action == "post_bid":
            book = self.books[str(p["book"])]
            bid_id = book.post_bid(
                str(p["bidder"]),
                int(p["amount"]),  # type: ignore[arg-type]
                int(p["min_rate"]),  # type: ignore[arg-type]
                int(p["expiry"]),  # type: ignore[arg-type]
                now,
            )
            if "as" in p:
                self.bids[str(p["as"])] = bid_id
            return {"bid_id": bid_id}
        if action == "cancel_bid":
            book = self.books[str(p["book"])]
            book.cancel_bid(str(p["by"]), self._bid_id(p["bid"]))
            return None
        if action == "match_bid":
            book = self.books[str(p["book"])]
            fill = book.match_bid(
                str(p["lp"]), self._bid_id(p["bid"]), int(p["offer"]), now  # type: ignore[arg-type]
            )
            return {
                "unsettled": fill.amount_unsettled,
                "base": fill.base_paid,
                "transfer_id": fill.transfer_id,
            }
        if action == "freeze":
            by = str(p.get("by", self.script.arbitrator))
            if "targets" in p:
                targets = list(p["targets"])  # type: ignore[arg-type]
            else:
                targets = self.ledger.plan_recovery(
                    self.transfers[str(p["transfer"])], int(p["amount"]), now  # type: ignore[arg-type]
                )
            self.ledger.freeze(by, targets, str(p["case"]), now)
            return {"targets": [[name, amount] for name, amount in targets]}
        if action == "recover":
            by = str(p.get("by", self.script.arbitrator))
            amount = self.ledger.recover(by, str(p["case"]), str(p["victim"]), now)
            self._check(checks, p, "expect_amount", "recovered amount", amount)
            return {"amount": amount}
        if action == "release":
            by = str(p.get("by", self.script.arbitrator))
            self.ledger.release(by, str(p["case"]), now)
            return None
        if action == "plan_recovery":
            plan = self.ledger.plan_recovery(
                self.transfers[str(p["transfer"])], int(p["amount"]), now  # type: ignore[arg-type]
            )
            if "expect" in p:
                checks.append(
                    (
                        "recovery plan",
                        [list(t) for t in p["expect"]],  # type: ignore[union-attr]
                        [list(t) for t in plan],
                    )
                )
            return [[name, amount] for name, amount in plan]
        if action == "advance":
            return None
        if action == "assert":
            self._assert(step, checks)
            return None
        raise AssertionError(f"unhandled action {action}")

    def _label_transfer(self, params: dict, transfer_id: int) -> None:
        if "as" in params:
            self.transfers[str(params["as"])] = transfer_id
        if params.get("tainted"):
            self.tainted.add(transfer_id)

    def _bid_id(self, ref: object) -> int:
        return ref if isinstance(ref, int) else self.bids[str(ref)]

    @staticmethod
    def _check(checks: list, params: dict, key: str, what: str, observed: int) -> None:
        if key in params:
            checks.append((f"{what} == {params[key]}", params[key], observed))

    def _assert(self, step: Step, checks: list) -> None:
        p = step.params
        now = step.time
        kind = str(p["kind"])
        if kind == "balance":
            account = str(p["account"])
            settled, unsettled = self.ledger.settle_view(account, now)
            if "settled" in p:
                checks.append((f"{account} settled", p["settled"], settled))
            if "unsettled" in p:
                checks.append((f"{account} unsettled", p["unsettled"], unsettled))
        elif kind == "base":
            account = str(p["account"])
            checks.append((f"{account} base", p["amount"], self.base.balance(account)))
        elif kind == "nonce":
            account = str(p["account"])
            checks.append((f"{account} nonce", p["value"], self.ledger.nonce(account)))
        elif kind == "pool":
            pool = self.pools[str(p["pool"])]
            state = pool.pool_state(now)
            for key in ("settled", "unsettled", "total", "lp_supply"):
                if key in p:
                    checks.append(
                        (f"pool {pool.address} {key}", p[key], getattr(state, key))
                    )
        elif kind == "lp":
            pool = self.pools[str(p["pool"])]
            account = str(p["account"])
            checks.append(
                (
                    f"{account} LP tokens in {pool.address}",
                    p["amount"],
                    pool.lp_holdings.get(account, 0),
                )
            )
        elif kind == "bid":
            book = self.books[str(p["book"])]
            bid = book.bids.get(self._bid_id(p["bid"]))
            status = "absent" if bid is None else bid.status
            checks.append((f"bid {p['bid']} status", p["status"], status))


def _json_params(params: dict[str, object]) -> dict:
    out = {}
    for key, value in params.items():
        if isinstance(value, list) and value and isinstance(value[0], tuple):
            out[key] = [[name, amount] for name, amount in value]  # type: ignore[misc]
        else:
            out[key] = value
    return out


def run_scenario(script: ScenarioScript, name: str = "scenario") -> RunResult:
    """Execute a parsed script in a fresh, isolated world."""
    return ScenarioRunner(script, name).run()
