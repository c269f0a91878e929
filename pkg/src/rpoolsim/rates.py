"""Parts-per-million rate arithmetic.

Exchange rates live in [0, 1] and are carried as integer parts-per-million
so every computation is exact and reproducible.  Products floor by default;
a ceiling variant exists for the one place a floor would undercut a bidder's
stated minimum price.
"""

from __future__ import annotations

import re

PPM = 1_000_000

_RATE_RE = re.compile(r"(\d+)(?:\.(\d*))?")


def check_rate(rate_ppm: int) -> int:
    """Validate a ppm rate, returning it unchanged."""
    if not isinstance(rate_ppm, int) or isinstance(rate_ppm, bool):
        raise TypeError(f"rate must be an integer ppm value, got {rate_ppm!r}")
    if not 0 <= rate_ppm <= PPM:
        raise ValueError(f"rate {rate_ppm} ppm outside [0, {PPM}]")
    return rate_ppm


def mul_rate(amount: int, rate_ppm: int) -> int:
    """floor(amount * rate)."""
    return amount * rate_ppm // PPM


def mul_rate_ceil(amount: int, rate_ppm: int) -> int:
    """ceil(amount * rate)."""
    return -(-(amount * rate_ppm) // PPM)


def ratio_ppm(numerator: int, denominator: int) -> int:
    """floor(numerator / denominator) expressed in ppm."""
    return numerator * PPM // denominator


def parse_rate(text: str) -> int:
    """Parse a decimal rate string ("0.6", "1", ".25") into ppm.

    Rejects values outside [0, 1] and anything needing more than six
    decimal places, so every accepted rate is exactly representable.
    """
    text = text.strip()
    if text.startswith("."):
        text = "0" + text
    m = _RATE_RE.fullmatch(text)
    if m is None:
        raise ValueError(f"malformed rate {text!r}")
    whole, frac = m.group(1), m.group(2) or ""
    if m.group(2) is not None and frac == "":
        raise ValueError(f"malformed rate {text!r}")
    if len(frac) > 6:
        raise ValueError(f"rate {text!r} has more than six decimal places")
    ppm = int(whole) * PPM + int((frac + "000000")[:6])
    if ppm > PPM:
        raise ValueError(f"rate {text!r} exceeds 1")
    return ppm


def format_rate(rate_ppm: int) -> str:
    """Render a ppm rate as the shortest exact decimal ("0.5", "1", "0.909090")."""
    check_rate(rate_ppm)
    whole, frac = divmod(rate_ppm, PPM)
    if frac == 0:
        return str(whole)
    return f"{whole}.{frac:06d}".rstrip("0")
