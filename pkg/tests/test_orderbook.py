"""Order-book pool: bid lifecycle, the match gauntlet, atomicity, and the
LP-borne loss example."""

import pytest

from rpoolsim import OrderBook
from rpoolsim.errors import (
    BadExpiry,
    BidExpired,
    BidNotOpen,
    InsufficientBase,
    InsufficientUnsettled,
    NotBidder,
    QuoteTooLow,
    StaleNonce,
    ZeroAmount,
)

from conftest import ARB, give_unsettled


def state_summary(base, ledger, book, now):
    return (
        dict(base.balances),
        {name: ledger.settle_view(name, now) for name in ledger.accounts},
        {name: ledger.nonce(name) for name in ledger.accounts},
        [(b.bid_id, b.status) for b in book.bids.values()],
    )


@pytest.fixture
def booked(world):
    base, ledger = world
    book = OrderBook(ledger)
    base.mint("lp", 200)
    give_unsettled(base, ledger, "alice", 100, now=0)
    return base, ledger, book


class TestPostBid:
    def test_posts_open_bid(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 600000, 600, 0)
        bid = book.bids[bid_id]
        assert bid.status == "open"
        assert bid.nonce_at_post == ledger.nonce("alice")

    def test_bad_expiry(self, booked):
        _, _, book = booked
        with pytest.raises(BadExpiry):
            book.post_bid("alice", 100, 600000, 0, 0)

    def test_zero_amount(self, booked):
        _, _, book = booked
        with pytest.raises(ZeroAmount):
            book.post_bid("alice", 0, 600000, 600, 0)

    def test_needs_unsettled_balance(self, booked):
        _, _, book = booked
        with pytest.raises(InsufficientUnsettled):
            book.post_bid("alice", 101, 600000, 600, 0)


class TestCancelBid:
    def test_owner_cancels(self, booked):
        _, _, book = booked
        bid_id = book.post_bid("alice", 100, 600000, 600, 0)
        book.cancel_bid("alice", bid_id)
        assert book.bids[bid_id].status == "cancelled"
        assert book.open_bids() == []

    def test_stranger_cannot(self, booked):
        _, _, book = booked
        bid_id = book.post_bid("alice", 100, 600000, 600, 0)
        with pytest.raises(NotBidder):
            book.cancel_bid("eve", bid_id)

    def test_filled_bid_not_cancellable(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 600000, 600, 0)
        book.match_bid("lp", bid_id, 60, 1)
        with pytest.raises(BidNotOpen):
            book.cancel_bid("alice", bid_id)

    def test_unknown_bid(self, booked):
        _, _, book = booked
        with pytest.raises(BidNotOpen):
            book.cancel_bid("alice", 99)


class TestMatchBid:
    def test_threshold_rounds_for_the_bidder(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 600000, 600, 0)
        with pytest.raises(QuoteTooLow):
            book.match_bid("lp", bid_id, 59, 1)
        fill = book.match_bid("lp", bid_id, 60, 1)
        assert fill.base_paid == 60
        assert base.balance("alice") == 60
        assert base.balance("lp") == 140
        assert ledger.settle_view("lp", 1) == (0, 100)

    def test_ceil_on_fractional_ask(self, booked):
        _, _, book = booked
        bid_id = book.post_bid("alice", 100, 555000, 600, 0)  # ask ceil(55.5) = 56
        with pytest.raises(QuoteTooLow):
            book.match_bid("lp", bid_id, 55, 1)

    def test_expiry_is_strict(self, booked):
        _, _, book = booked
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        with pytest.raises(BidExpired):
            book.match_bid("lp", bid_id, 50, 600)

    def test_nonce_guard(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        give_unsettled(base, ledger, "alice", 5, now=1, source="drip")
        with pytest.raises(StaleNonce):
            book.match_bid("lp", bid_id, 50, 2)
        assert book.bids[bid_id].status == "open"

    def test_lp_needs_base(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        with pytest.raises(InsufficientBase):
            book.match_bid("pauper", bid_id, 50, 1)

    def test_no_double_fill(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        book.match_bid("lp", bid_id, 50, 1)
        with pytest.raises(BidNotOpen):
            book.match_bid("lp", bid_id, 50, 1)
        assert len(book.fills) == 1

    def test_rejections_are_non_destructive(self, booked):
        base, ledger, book = booked
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        before = state_summary(base, ledger, book, 2)
        for lp, offer, now, exc in (
            ("lp", 49, 2, QuoteTooLow),
            ("pauper", 50, 2, InsufficientBase),
            ("lp", 50, 600, BidExpired),
        ):
            with pytest.raises(exc):
                book.match_bid(lp, bid_id, offer, now)
            assert state_summary(base, ledger, book, 2) == before

    def test_conserves_supply(self, booked):
        base, ledger, book = booked
        supply = base.total_supply
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        book.match_bid("lp", bid_id, 50, 1)
        ledger.check_invariants()
        assert base.total_supply == supply


class TestLpBearsRecoveryRisk:
    def test_net_loss_equals_payment(self, booked):
        """Fill 100 unsettled for 50 base; clawback leaves the LP -50 net."""
        base, ledger, book = booked
        lp_base_start = base.balance("lp")
        bid_id = book.post_bid("alice", 100, 500000, 600, 0)
        book.match_bid("lp", bid_id, 50, 1)
        ledger.freeze(ARB, [("lp", 100)], "c1", 2)
        ledger.recover(ARB, "c1", "victim", 2)
        assert base.balance("lp") == lp_base_start - 50
        assert ledger.settle_view("lp", 2) == (0, 0)
        assert ledger.settle_view("victim", 2) == (100, 0)
