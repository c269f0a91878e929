"""Property suites: oracle equivalence against the naive replay model,
conservation, settlement monotonicity, nonce accounting, median robustness,
and pool fairness under randomized traffic."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpoolsim import (
    BaseLedger,
    ConstantRiskModel,
    RatingEntity,
    WrapperLedger,
    issue_report,
    median_quote,
    parse_rate,
    format_rate,
)
from rpoolsim.errors import RPoolError
from rpoolsim.oracle import validate_reports
from rpoolsim.rates import PPM

from conftest import ARB, WINDOW, give_unsettled, make_pool, quorum
from naive_ledger import replay, assert_matches

ACCOUNTS = ["a", "b", "c", "d"]


def _random_ledger_op(rng, base, ledger, now):
    """Apply one random ledger event; modeled rejections are fine."""
    kind = rng.choice(
        ["wrap", "unwrap", "transfer", "transfer_u", "freeze", "recover", "release", "disable"]
    )
    who = rng.choice(ACCOUNTS)
    other = rng.choice([a for a in ACCOUNTS if a != who])
    amount = rng.randrange(1, 60)
    try:
        if kind == "wrap":
            ledger.wrap(who, amount, now)
        elif kind == "unwrap":
            ledger.unwrap(who, amount, now)
        elif kind == "transfer":
            ledger.transfer(who, other, amount, rng.random() < 0.5, now)
        elif kind == "transfer_u":
            ledger.transfer_unsettled(who, other, amount, now)
        elif kind == "freeze":
            case = f"case{rng.randrange(1000)}"
            ledger.freeze(ARB, [(who, amount)], case, now)
        elif kind == "recover":
            active = [c for c, case in ledger.cases.items() if case.status == "active"]
            if active:
                ledger.recover(ARB, rng.choice(active), other, now)
        elif kind == "release":
            active = [c for c, case in ledger.cases.items() if case.status == "active"]
            if active:
                ledger.release(ARB, rng.choice(active), now)
        elif kind == "disable":
            ledger.disable_unwrap(who)
    except RPoolError:
        pass


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), events=st.integers(1, 20))
def test_oracle_equivalence_small_instances(seed, events):
    """Random sequences over <= 4 accounts match the brute-force replay."""
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    for name in ACCOUNTS:
        base.mint(name, 200)
    now = 0
    for _ in range(events):
        now += rng.randrange(0, WINDOW // 3)
        _random_ledger_op(rng, base, ledger, now)
        ledger.check_invariants()
    model = replay(base.journal, WINDOW)
    assert_matches(model, ledger, now)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    amounts=st.lists(st.integers(1, 100), min_size=1, max_size=5),
)
def test_settlement_monotone_in_time(seed, amounts):
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    for i, amount in enumerate(amounts):
        give_unsettled(base, ledger, "a", amount, now=rng.randrange(0, 5000), source=f"s{i}")
    last = -1
    for now in range(0, 2 * WINDOW, 7919):
        settled, unsettled = ledger.settle_view("a", now)
        assert settled >= last
        assert settled + unsettled == sum(amounts)
        last = settled


def test_nonces_count_participating_events(world):
    base, ledger = world
    base.mint("a", 500)
    expected = {"a": 0, "b": 0, "v": 0}
    ledger.wrap("a", 300, 0)
    expected["a"] += 1
    ledger.transfer("a", "b", 120, False, 0)
    expected["a"] += 1
    expected["b"] += 1
    ledger.unwrap("a", 50, 0)
    expected["a"] += 1
    ledger.freeze(ARB, [("b", 40)], "c1", 0)
    expected["b"] += 1
    ledger.recover(ARB, "c1", "v", 0)
    expected["b"] += 1
    expected["v"] += 1
    ledger.freeze(ARB, [("b", 10)], "c2", 0)
    expected["b"] += 1
    ledger.release(ARB, "c2", 0)
    expected["b"] += 1
    for name, count in expected.items():
        assert ledger.nonce(name) == count, name


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_frozen_amounts_only_move_via_case_close(seed):
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    give_unsettled(base, ledger, "a", 100, now=0)
    frozen = rng.randrange(1, 100)
    ledger.freeze(ARB, [("a", frozen)], "c1", 0)
    for _ in range(10):
        try:
            ledger.transfer("a", "b", rng.randrange(1, 120), True, rng.randrange(0, WINDOW))
        except RPoolError:
            pass
        assert ledger.accounts["a"].frozen_total() == frozen
    ledger.release(ARB, "c1", 0)
    assert ledger.accounts["a"].frozen_total() == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), amount=st.integers(1, 200))
def test_plan_recovery_always_freezable(seed, amount):
    """Whenever a plan is produced, it totals the request and freezes cleanly."""
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    give_unsettled(base, ledger, "thief", 200, now=0, source="victim")
    tainted = ledger.transfer_unsettled("thief", "pool", 200, 5)
    # scatter post-taint outflows
    for i in range(rng.randrange(0, 4)):
        out = rng.randrange(1, 80)
        try:
            ledger.transfer_unsettled("pool", f"w{i}", out, 10 + i)
        except RPoolError:
            pass
    try:
        plan = ledger.plan_recovery(tainted, amount, 20)
    except RPoolError:
        return
    assert sum(q for _, q in plan) == amount
    ledger.freeze(ARB, plan, "c1", 20)  # must not raise


def _brute_force_median_floor(unchanged, k):
    """Lowest achievable median when k quotes are adversarial: the
    (ceil(n/2) - k)-th smallest unchanged quote anchors it."""
    n = len(unchanged) + k
    ordered = sorted(unchanged)
    return ordered[-(-n // 2) - k - 1]


@pytest.mark.parametrize("n", range(1, 8))
def test_median_robustness_brute_force(n):
    rng = random.Random(n)
    grid = [0, 250000, 500000, 750000, PPM]
    for _ in range(200):
        quotes = [rng.choice(grid) for _ in range(n)]
        for k in range(0, -(-n // 2)):  # k < ceil(n/2)
            unchanged = quotes[: n - k]
            floor = _brute_force_median_floor(unchanged, k)
            # all-zero adversarial quotes are the exact worst case
            assert median_quote(unchanged + [0] * k) >= floor
            for _ in range(20):
                adversarial = [rng.choice(grid) for _ in range(k)]
                assert median_quote(unchanged + adversarial) >= floor


@settings(max_examples=100, deadline=None)
@given(ppm=st.integers(0, PPM))
def test_rate_format_parse_round_trip(ppm):
    assert parse_rate(format_rate(ppm)) == ppm


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    deposit=st.integers(1, 10_000),
)
def test_share_value_fairness(seed, deposit):
    """A fresh deposit's redeemable value is within 2 units of the deposit."""
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    lp_amount = rng.randrange(1, 5000)
    pool, _ = make_pool(base, ledger, lp_deposits=(("lp1", lp_amount),))
    # accrued spread keeps the share price below 2x, the domain where the
    # two-unit slack bound holds; swaps can only add value at rate <= 1
    if rng.random() < 0.7 and lp_amount > 1:
        give_unsettled(
            base, ledger, "pool", rng.randrange(1, lp_amount), now=0, source="donor"
        )
    base.mint("newlp", deposit)
    minted = pool.deposit("newlp", deposit, 0)
    state = pool.pool_state(0)
    redeemable = minted * state.total // pool.lp_supply
    assert deposit - 2 <= redeemable <= deposit


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_withdraw_preserves_ratio_within_rounding(seed):
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    lp_amount = rng.randrange(10, 5000)
    pool, _ = make_pool(base, ledger, lp_deposits=(("lp1", lp_amount),))
    give_unsettled(base, ledger, "pool", rng.randrange(1, 4000), now=0, source="donor")
    state = pool.pool_state(0)
    burn = rng.randrange(1, lp_amount + 1)
    withdrawn = burn * state.total // pool.lp_supply
    base_out, unsettled_out = pool.withdraw("lp1", burn, 0)
    assert base_out + unsettled_out == withdrawn
    # the unsettled slice is the floored pro-rata share: off by < 1 unit
    assert abs(unsettled_out * state.total - withdrawn * state.unsettled) < state.total


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), claw=st.integers(1, 100))
def test_loss_socialization_uniform(seed, claw):
    rng = random.Random(seed)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    deposits = [(f"lp{i}", rng.randrange(1, 400)) for i in range(rng.randrange(2, 5))]
    pool, rater = make_pool(base, ledger, lp_deposits=tuple(deposits))
    tainted = give_unsettled(base, ledger, "thief", claw, now=0, source="victim")
    reports = quorum(pool, rater, "thief", claw, 0, ledger)
    try:
        pool.swap("thief", claw, reports, 0)
    except RPoolError:
        return
    state = pool.pool_state(0)
    before = {
        lp: held * state.total // pool.lp_supply for lp, held in pool.lp_holdings.items()
    }
    ledger.freeze(ARB, [("pool", claw)], "c1", 0)
    ledger.recover(ARB, "c1", "victim", 0)
    after_state = pool.pool_state(0)
    for lp, held in pool.lp_holdings.items():
        redeemable = held * after_state.total // pool.lp_supply
        expected = before[lp] * after_state.total // state.total
        assert abs(redeemable - expected) <= 2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_swap_payout_monotone_in_amount(seed):
    rng = random.Random(seed)
    rate_ppm = rng.randrange(0, PPM + 1)
    outs = []
    for amount in (10, 40, 70, 100):
        base = BaseLedger()
        ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
        pool, rater = make_pool(
            base, ledger, lp_deposits=(("lp1", 500),), rater_rate_ppm=rate_ppm,
        )
        give_unsettled(base, ledger, "alice", 100, now=0)
        reports = quorum(pool, rater, "alice", amount, 0, ledger)
        outs.append(pool.swap("alice", amount, reports, 0).amount_out)
    assert outs == sorted(outs)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_every_receipt_respects_the_cap(seed):
    rng = random.Random(seed)
    cap = rng.randrange(0, PPM + 1)
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    pool, rater = make_pool(
        base, ledger, lp_deposits=(("lp1", 1000),),
        rate_cap_ppm=cap, rater_rate_ppm=rng.randrange(0, PPM + 1),
    )
    for i in range(3):
        amount = rng.randrange(1, 200)
        give_unsettled(base, ledger, f"u{i}", amount, now=i)
        reports = quorum(pool, rater, f"u{i}", amount, i, ledger)
        try:
            receipt = pool.swap(f"u{i}", amount, reports, i)
        except RPoolError:
            continue
        assert receipt.rate_ppm <= cap
    for receipt in pool.receipts:
        assert receipt.rate_ppm <= pool.rate_cap_ppm


def test_validate_reports_permutation_invariance(world):
    import itertools

    base, ledger = world
    pool, _ = make_pool(
        base, ledger,
        lp_deposits=(("s1", 50), ("s2", 50), ("s3", 50), ("s4", 50)),
        min_quorum=2,
    )
    registry = pool.registry
    reports = []
    for name, rate in (("s1", 10), ("s2", 999990), ("s3", 400000), ("s4", 400001)):
        secret, public = registry.scheme.keygen(name)
        registry.register(name, public)
        entity = RatingEntity(name, secret, ConstantRiskModel(rate))
        reports.append(issue_report(entity, registry, "alice", 9, 0, 60, ledger))
    medians = {
        validate_reports(pool, "alice", 9, list(perm), 0, ledger)
        for perm in itertools.permutations(reports)
    }
    assert len(medians) == 1
