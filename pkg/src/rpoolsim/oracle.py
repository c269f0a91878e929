"""Risk-rating entities, signed risk reports, and quorum validation.

A rating entity quotes the payable fraction of a proposed swap — one minus
its estimated clawback probability — and signs a report binding the quote to
the requestor, the amount, the requestor's current account nonce, and an
expiry.  The nonce binding is the anti-laundering defense: any balance
event touching the requestor between issuance and the swap invalidates the
report, which also rejects flash-loan-style atomic flows by construction.

The aggregator side is a pure function: given a pool's configuration and a
list of reports it either returns the median quote or raises the error for
the first failed check.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Protocol

from .errors import (
    BadSignature,
    DuplicateSigner,
    EmptyQuoteSet,
    OutOfRiskBounds,
    QuorumTooSmall,
    ReportExpired,
    RequestMismatch,
    SignerNotAuthorized,
    SignerNotLp,
    StaleNonce,
    UnknownSigner,
)
from .ledger import WrapperLedger
from .rates import check_rate


def canonical_encode(
    requestor: str,
    amount: int,
    account_nonce: int,
    expiry: int,
    quote_ppm: int,
    signer_id: str,
) -> bytes:
    """Deterministic byte encoding of a report's signed fields.

    Fixed-order concatenation: requestor bytes, amount (16-byte big-endian),
    account nonce (8-byte), expiry (8-byte), quote (4-byte), signer bytes.
    """
    if not 0 <= amount < 1 << 128:
        raise ValueError(f"amount {amount} not encodable in 16 bytes")
    return (
        requestor.encode()
        + amount.to_bytes(16, "big")
        + account_nonce.to_bytes(8, "big")
        + expiry.to_bytes(8, "big")
        + quote_ppm.to_bytes(4, "big")
        + signer_id.encode()
    )


class HashSignatureScheme:
    """Keyed-hash signatures for simulation use: sign = H(secret || message).

    Key pairs are symmetric (verification key equals the signing secret),
    which is fine at desk scale; a real asymmetric scheme can be swapped in
    behind the same keygen/sign/verify surface.
    """

    def keygen(self, seed: str) -> tuple[bytes, bytes]:
        secret = hashlib.sha256(b"rpool-signer:" + seed.encode()).digest()
        return secret, secret

    def sign(self, secret: bytes, message: bytes) -> bytes:
        return hashlib.sha256(secret + message).digest()

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        expected = hashlib.sha256(public_key + message).digest()
        return hmac.compare_digest(expected, signature)


@dataclass(frozen=True)
class RiskReport:
    requestor: str
    amount: int
    account_nonce: int
    expiry: int
    quote_ppm: int
    signer_id: str
    signature: bytes

    def signed_bytes(self) -> bytes:
        return canonical_encode(
            self.requestor,
            self.amount,
            self.account_nonce,
            self.expiry,
            self.quote_ppm,
            self.signer_id,
        )


class SignerRegistry:
    """Authorized rating entities and their verification keys."""

    def __init__(self, scheme: HashSignatureScheme | None = None) -> None:
        self.scheme = scheme or HashSignatureScheme()
        self._signers: dict[str, tuple[bytes, bool]] = {}

    def register(self, signer_id: str, public_key: bytes, authorized: bool = True) -> None:
        self._signers[signer_id] = (public_key, authorized)

    def set_authorized(self, signer_id: str, authorized: bool) -> None:
        key, _ = self._signers[signer_id]
        self._signers[signer_id] = (key, authorized)

    def is_registered(self, signer_id: str) -> bool:
        return signer_id in self._signers

    def is_authorized(self, signer_id: str) -> bool:
        entry = self._signers.get(signer_id)
        return entry is not None and entry[1]

    def public_key(self, signer_id: str) -> bytes:
        return self._signers[signer_id][0]


class RiskModel(Protocol):
    def quote(
        self, ledger: WrapperLedger, requestor: str, amount: int, now: int
    ) -> int: ...


@dataclass(frozen=True)
class ConstantRiskModel:
    """Quotes the same rate for every request."""

    rate_ppm: int

    def quote(self, ledger: WrapperLedger, requestor: str, amount: int, now: int) -> int:
        return self.rate_ppm


@dataclass
class TaintAwareRiskModel:
    """Quotes zero (maximal risk) for holders of tainted funds.

    A requestor holding any unsettled record whose origin transfer is in the
    tainted set is rated unswappable; everyone else gets ``clean_rate_ppm``.
    The tainted set is shared with the scenario driver, which marks transfer
    ids as thefts are scripted.
    """

    tainted_transfer_ids: set[int]
    clean_rate_ppm: int

    def quote(self, ledger: WrapperLedger, requestor: str, amount: int, now: int) -> int:
        acct = ledger.accounts.get(requestor)
        if acct is not None:
            for rec in acct.unsettled:
                if rec.origin_transfer_id in self.tainted_transfer_ids:
                    return 0
        return self.clean_rate_ppm


@dataclass(frozen=True)
class RatingEntity:
    """A simulated risk-rating entity holding its signing secret."""

    signer_id: str
    secret: bytes
    model: RiskModel


def issue_report(
    entity: RatingEntity,
    registry: SignerRegistry,
    requestor: str,
    amount: int,
    now: int,
    ttl: int,
    ledger: WrapperLedger,
) -> RiskReport:
    """Produce a signed report for the requestor's current account state."""
    if not registry.is_registered(entity.signer_id):
        raise UnknownSigner(f"{entity.signer_id} is not registered")
    if ttl <= 0:
        raise ValueError("report ttl must be positive")
    quote = check_rate(entity.model.quote(ledger, requestor, amount, now))
    account_nonce = ledger.nonce(requestor)
    expiry = now + ttl
    message = canonical_encode(requestor, amount, account_nonce, expiry, quote, entity.signer_id)
    signature = registry.scheme.sign(entity.secret, message)
    return RiskReport(requestor, amount, account_nonce, expiry, quote, entity.signer_id, signature)


def median_quote(quotes: list[int]) -> int:
    """Median rate; even cardinality takes the floored mean of the middle pair."""
    if not quotes:
        raise EmptyQuoteSet("median of zero quotes")
    ordered = sorted(quotes)
    n = len(ordered)
    if n % 2:
        return ordered[n // 2]
    return (ordered[n // 2 - 1] + ordered[n // 2]) // 2


def validate_reports(
    pool,
    requestor: str,
    amount: int,
    reports: list[RiskReport],
    now: int,
    ledger: WrapperLedger,
) -> int:
    """Run the pool's swap-validation checks and return the median quote.

    Checks run in a fixed order over the whole report set, so the outcome is
    invariant under permutation of ``reports``:

      1. quorum size        6. expiry (strict: now < expiry)
      2. unique signers     7. requestor/amount match the request
      3. signers are LPs    8. signatures verify
      4. signers authorized 9. median inside the pool's risk bounds
      5. nonces current
    """
    if len(reports) < pool.min_quorum:
        raise QuorumTooSmall(f"{len(reports)} reports, quorum is {pool.min_quorum}")
    signer_ids = [r.signer_id for r in reports]
    if len(set(signer_ids)) != len(signer_ids):
        raise DuplicateSigner("reports share a signer")
    for report in reports:
        holding = pool.lp_holdings.get(report.signer_id, 0)
        if holding <= 0 or holding < pool.min_lp_deposit:
            raise SignerNotLp(
                f"{report.signer_id} holds {holding} LP tokens, "
                f"minimum deposit is {pool.min_lp_deposit}"
            )
    registry: SignerRegistry = pool.registry
    for report in reports:
        if not registry.is_authorized(report.signer_id):
            raise SignerNotAuthorized(f"{report.signer_id} is not authorized")
    current_nonce = ledger.nonce(requestor)
    for report in reports:
        if report.account_nonce != current_nonce:
            raise StaleNonce(
                f"report nonce {report.account_nonce} != current {current_nonce}"
            )
    for report in reports:
        if not now < report.expiry:
            raise ReportExpired(f"report expired at {report.expiry}, now {now}")
    for report in reports:
        if report.requestor != requestor or report.amount != amount:
            raise RequestMismatch(
                f"report is for ({report.requestor}, {report.amount}), "
                f"request is ({requestor}, {amount})"
            )
    for report in reports:
        if not registry.scheme.verify(
            registry.public_key(report.signer_id), report.signed_bytes(), report.signature
        ):
            raise BadSignature(f"signature by {report.signer_id} does not verify")
    median = median_quote([r.quote_ppm for r in reports])
    lo, hi = pool.risk_bounds
    if not lo <= median <= hi:
        raise OutOfRiskBounds(f"median {median} ppm outside [{lo}, {hi}]")
    return median
