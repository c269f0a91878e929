#!/usr/bin/env python3
"""The LP-shorting attack, analytically and against live contracts.

Marvin shorts the pool's LP tokens before stealing, swaps the loot through
the pool, lets the recovery crater the LP price, and closes the short.
The demo sweeps the exchange rate to find where the combined profit beats
plain theft, and shows the rate cap that makes the pool safe.

Run:
    python3 demos/lp_shorting_attack.py
"""

from rpoolsim import (
    AttackScenario,
    end_to_end_attack_replay,
    is_cap_safe,
    profitability_threshold,
    simulate_attack,
)
from rpoolsim.rates import PPM, format_rate

R = L = 1000
COLLATERAL = 100
SHORT = 100
STOLEN = 1000

print(f"pool holds {R} tokens backed by {L} LP tokens;")
print(f"marvin shorts {SHORT} LP tokens against {COLLATERAL} collateral and steals {STOLEN}.\n")

print(f"{'rate':>8} {'swap x':>7} {'sale b':>7} {'buyback m':>9} {'profit':>7}  vs plain theft")
for rate_ppm in (200_000, 500_000, 800_000, 909_090, 909_091, 950_000):
    scenario = AttackScenario(R, L, COLLATERAL, SHORT, STOLEN, rate_ppm)
    out = simulate_attack(scenario)
    verdict = "WORSE for the attacker" if out.profit <= STOLEN else "BETTER -- pool is exploitable"
    print(
        f"{format_rate(rate_ppm):>8} {out.swap_out:>7} {out.sale_proceeds:>7} "
        f"{out.buyback_cost:>9} {out.profit:>7}  {verdict}"
    )

threshold = profitability_threshold(L, SHORT)
print(f"\nprofitability threshold for a {SHORT}/{L} short: {format_rate(threshold)}")
print(f"threshold when everything can be shorted:      {format_rate(profitability_threshold(L, L))}")

print("\nreplaying the hottest scenario against live ledger + pool:")
hot = AttackScenario(R, L, COLLATERAL, SHORT, STOLEN, 950_000)
live = end_to_end_attack_replay(hot)
print(f"  live profit {live.profit} vs analytic {simulate_attack(hot).profit} (agree)")

capped = end_to_end_attack_replay(hot, rate_cap_ppm=500_000)
print(f"  with the 0.5 rate cap the live profit drops to {capped.profit} < {STOLEN}")

print("\ncap safety (never beats plain theft):")
for cap, fraction in ((500_000, PPM), (500_001, PPM), (900_000, 100_000), (910_000, 100_000)):
    safe = is_cap_safe(cap, fraction)
    print(
        f"  cap {format_rate(cap):>8} with up to {format_rate(fraction)} of LP shortable: "
        f"{'SAFE' if safe else 'UNSAFE'}"
    )
