import pytest

from rpoolsim import (
    AmmPool,
    BaseLedger,
    ConstantRiskModel,
    RatingEntity,
    SignerRegistry,
    WrapperLedger,
    issue_report,
)

WINDOW = 86_400
ARB = "arb"


@pytest.fixture
def world():
    base = BaseLedger()
    ledger = WrapperLedger(base, recovery_window=WINDOW, arbitrator=ARB)
    return base, ledger


def make_pool(
    base,
    ledger,
    *,
    lp_deposits=(("lp1", 100), ("lp2", 100)),
    kappa_ppm=500_000,
    risk_bounds=(0, 1_000_000),
    min_quorum=1,
    min_lp_deposit=1,
    rate_cap_ppm=500_000,
    rater_rate_ppm=500_000,
):
    """A funded pool plus one registered rating entity (the first LP)."""
    registry = SignerRegistry()
    pool = AmmPool(
        ledger,
        "pool",
        registry,
        kappa_ppm=kappa_ppm,
        risk_bounds=risk_bounds,
        min_quorum=min_quorum,
        min_lp_deposit=min_lp_deposit,
        rate_cap_ppm=rate_cap_ppm,
    )
    for lp, amount in lp_deposits:
        base.mint(lp, amount)
        pool.deposit(lp, amount, 0)
    rater_name = lp_deposits[0][0]
    secret, public = registry.scheme.keygen(rater_name)
    registry.register(rater_name, public)
    rater = RatingEntity(rater_name, secret, ConstantRiskModel(rater_rate_ppm))
    return pool, rater


def quorum(pool, rater, requestor, amount, now, ledger, ttl=600):
    """Issue one valid report per required signer (single-rater pools)."""
    return [issue_report(rater, pool.registry, requestor, amount, now, ttl, ledger)]


def give_unsettled(base, ledger, account, amount, now=0, source="faucet"):
    """Put `amount` of unsettled tokens in `account` via a fresh transfer."""
    base.mint(source, amount)
    ledger.wrap(source, amount, now)
    return ledger.transfer(source, account, amount, False, now)
