"""Scenario script parsing and canonical formatting.

A scenario is line-oriented text: a header declaring the token config,
genesis accounts, rating entities, pools, and order books, followed by one
step per line.  Step times are non-decreasing and drive the simulated
clock.  The full grammar ships in docs/scenario-format.md; the essentials:

    config window=86400 arbitrator=arb
    account alice base=100
    signer rater model=constant rate=0.6
    pool main kappa_ppm=500000 min_quorum=1
    book ob
    at 0 wrap account=alice amount=100
    at 0 transfer from=alice to=bob amount=40 as=t1
    at 60 swap pool=main requestor=bob amount=40 reports=r1 expect_error=StaleNonce

Amounts are plain integers; rates are decimals with at most six places and
convert exactly to ppm.  Unknown directives, actions, or fields are
rejected with a located :class:`ParseError`.  Steps may carry ``as=`` labels
naming the transfer/report/bid they produce, ``expect_*`` result checks,
and ``expect_error=`` for steps that must fail with exactly that error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ERRORS_BY_NAME
from .rates import PPM, format_rate, parse_rate

DEFAULT_WINDOW = 86_400
DEFAULT_ARBITRATOR = "arbiter"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*")
_TOKEN_RE = re.compile(r"\S+")

BID_STATUSES = ("open", "cancelled", "filled")

# Parameter schemas: name -> (type, required).  Types: int, name, rate,
# bool, label (backward data-flow reference), labels, targets, ref
# (label-or-int), status.
ACTION_SPECS: dict[str, dict[str, tuple[str, bool]]] = {
    "mint_base": {"account": ("name", True), "amount": ("int", True)},
    "wrap": {"account": ("name", True), "amount": ("int", True)},
    "unwrap": {
        "account": ("name", True),
        "amount": ("int", True),
        "to": ("name", False),
    },
    "transfer": {
        "from": ("name", True),
        "to": ("name", True),
        "amount": ("int", True),
        "unsettled": ("bool", False),
        "as": ("label", False),
        "tainted": ("bool", False),
    },
    "disable_unwrap": {"account": ("name", True)},
    "deposit": {
        "pool": ("name", True),
        "lp": ("name", True),
        "amount": ("int", True),
        "expect_minted": ("int", False),
    },
    "withdraw": {
        "pool": ("name", True),
        "lp": ("name", True),
        "tokens": ("int", True),
        "expect_base": ("int", False),
        "expect_unsettled": ("int", False),
    },
    "issue_report": {
        "signer": ("name", True),
        "requestor": ("name", True),
        "amount": ("int", True),
        "ttl": ("int", True),
        "as": ("label", True),
        "expect_quote": ("rate", False),
    },
    "swap": {
        "pool": ("name", True),
        "requestor": ("name", True),
        "amount": ("int", True),
        "reports": ("labels", True),
        "as": ("label", False),
        "tainted": ("bool", False),
        "expect_out": ("int", False),
        "expect_rate": ("rate", False),
    },
    "post_bid": {
        "book": ("name", True),
        "bidder": ("name", True),
        "amount": ("int", True),
        "min_rate": ("rate", True),
        "expiry": ("int", True),
        "as": ("label", False),
    },
    "cancel_bid": {
        "book": ("name", True),
        "bid": ("ref", True),
        "by": ("name", True),
    },
    "match_bid": {
        "book": ("name", True),
        "bid": ("ref", True),
        "lp": ("name", True),
        "offer": ("int", True),
    },
    "freeze": {
        "case": ("name", True),
        "targets": ("targets", False),
        "transfer": ("label", False),
        "amount": ("int", False),
        "by": ("name", False),
    },
    "recover": {
        "case": ("name", True),
        "victim": ("name", True),
        "by": ("name", False),
        "expect_amount": ("int", False),
    },
    "release": {"case": ("name", True), "by": ("name", False)},
    "plan_recovery": {
        "transfer": ("label", True),
        "amount": ("int", True),
        "expect": ("targets", False),
    },
    "advance": {},
    "assert": {
        "kind": ("name", True),
        "account": ("name", False),
        "pool": ("name", False),
        "book": ("name", False),
        "bid": ("ref", False),
        "settled": ("int", False),
        "unsettled": ("int", False),
        "amount": ("int", False),
        "value": ("int", False),
        "total": ("int", False),
        "lp_supply": ("int", False),
        "status": ("status", False),
    },
}

ASSERT_KINDS: dict[str, tuple[set[str], set[str]]] = {
    # kind -> (required params, optional comparison params; at least one
    # comparison must be present)
    "balance": ({"account"}, {"settled", "unsettled"}),
    "base": ({"account", "amount"}, set()),
    "nonce": ({"account", "value"}, set()),
    "pool": ({"pool"}, {"settled", "unsettled", "total", "lp_supply"}),
    "lp": ({"pool", "account", "amount"}, set()),
    "bid": ({"book", "bid", "status"}, set()),
}

#: actions on which expect_error is meaningless and rejected
NO_EXPECT_ERROR = {"advance", "assert"}


class ParseError(Exception):
    """Scenario text rejected; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


@dataclass(frozen=True)
class GenesisAccount:
    name: str
    base: int = 0
    settled: int = 0


@dataclass(frozen=True)
class SignerSpec:
    name: str
    model: str  # constant | taint
    rate_ppm: int
    authorized: bool = True


@dataclass(frozen=True)
class PoolSpec:
    name: str
    kappa_ppm: int
    risk_lo_ppm: int = 0
    risk_hi_ppm: int = PPM
    min_quorum: int = 1
    min_lp_deposit: int = 1
    rate_cap_ppm: int = 500_000


@dataclass(frozen=True)
class Step:
    #: source line, for diagnostics only; not part of step identity
    line: int = field(compare=False)
    time: int
    action: str
    params: dict[str, object]
    expect_error: str | None = None


@dataclass
class ScenarioScript:
    window: int = DEFAULT_WINDOW
    arbitrator: str = DEFAULT_ARBITRATOR
    accounts: list[GenesisAccount] = field(default_factory=list)
    signers: list[SignerSpec] = field(default_factory=list)
    pools: list[PoolSpec] = field(default_factory=list)
    books: list[str] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)


def _tokens(line: str) -> list[tuple[int, str]]:
    """(1-based column, token) pairs, comment-stripped."""
    out = []
    for m in _TOKEN_RE.finditer(line):
        if m.group().startswith("#"):
            break
        out.append((m.start() + 1, m.group()))
    return out


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.script = ScenarioScript()
        self.saw_config = False
        self.names_seen: dict[str, str] = {}  # name -> declaring directive
        self.labels: dict[str, str] = {}  # label -> kind (report/transfer/bid)
        self.last_time: int | None = None
        self.line_no = 0
        self.col = 1

    def fail(self, message: str, col: int | None = None) -> ParseError:
        return ParseError(message, self.line_no, self.col if col is None else col)

    # -- field helpers -----------------------------------------------------

    def split_fields(
        self, tokens: list[tuple[int, str]]
    ) -> dict[str, tuple[int, str]]:
        fields: dict[str, tuple[int, str]] = {}
        for col, token in tokens:
            if "=" not in token:
                raise self.fail(f"expected key=value, got {token!r}", col)
            key, value = token.split("=", 1)
            if key in fields:
                raise self.fail(f"duplicate field {key!r}", col)
            fields[key] = (col, value)
        return fields

    def parse_int(self, key: str, raw: tuple[int, str]) -> int:
        col, value = raw
        if not value.isdigit():
            raise self.fail(f"{key} must be a non-negative integer, got {value!r}", col)
        return int(value)

    def parse_name(self, key: str, raw: tuple[int, str]) -> str:
        col, value = raw
        if not _NAME_RE.fullmatch(value):
            raise self.fail(f"{key} must be a name, got {value!r}", col)
        return value

    def parse_rate_field(self, key: str, raw: tuple[int, str]) -> int:
        col, value = raw
        try:
            return parse_rate(value)
        except ValueError as exc:
            raise self.fail(f"{key}: {exc}", col) from None

    def parse_bool(self, key: str, raw: tuple[int, str]) -> bool:
        col, value = raw
        if value not in ("true", "false"):
            raise self.fail(f"{key} must be true or false, got {value!r}", col)
        return value == "true"

    def parse_targets(self, key: str, raw: tuple[int, str]) -> list[tuple[str, int]]:
        col, value = raw
        targets = []
        for part in value.split(","):
            if ":" not in part:
                raise self.fail(f"{key} entries are name:amount, got {part!r}", col)
            name, amount = part.rsplit(":", 1)
            if not _NAME_RE.fullmatch(name) or not amount.isdigit():
                raise self.fail(f"{key} entries are name:amount, got {part!r}", col)
            targets.append((name, int(amount)))
        return targets

    # -- directives ----------------------------------------------------------

    def handle_config(self, tokens: list[tuple[int, str]]) -> None:
        if self.saw_config:
            raise self.fail("duplicate config directive")
        if self.script.steps:
            raise self.fail("config must precede all steps")
        self.saw_config = True
        fields = self.split_fields(tokens)
        for key, raw in fields.items():
            if key == "window":
                self.script.window = self.parse_int(key, raw)
            elif key == "arbitrator":
                self.script.arbitrator = self.parse_name(key, raw)
            else:
                raise self.fail(f"unknown config field {key!r}", raw[0])

    def declare(self, name: str, directive: str, col: int) -> None:
        if name in self.names_seen:
            raise self.fail(
                f"{name!r} already declared as {self.names_seen[name]}", col
            )
        self.names_seen[name] = directive

    def handle_account(self, tokens: list[tuple[int, str]]) -> None:
        if not tokens:
            raise self.fail("account needs a name")
        col, name = tokens[0]
        name = self.parse_name("account", (col, name))
        fields = self.split_fields(tokens[1:])
        base = settled = 0
        for key, raw in fields.items():
            if key == "base":
                base = self.parse_int(key, raw)
            elif key == "settled":
                settled = self.parse_int(key, raw)
            else:
                raise self.fail(f"unknown account field {key!r}", raw[0])
        self.declare(name, "account", col)
        self.script.accounts.append(GenesisAccount(name, base, settled))

    def handle_signer(self, tokens: list[tuple[int, str]]) -> None:
        if not tokens:
            raise self.fail("signer needs a name")
        col, name = tokens[0]
        name = self.parse_name("signer", (col, name))
        fields = self.split_fields(tokens[1:])
        model = None
        rate_ppm = PPM
        authorized = True
        for key, raw in fields.items():
            if key == "model":
                if raw[1] not in ("constant", "taint"):
                    raise self.fail(
                        f"signer model must be constant or taint, got {raw[1]!r}",
                        raw[0],
                    )
                model = raw[1]
            elif key == "rate":
                rate_ppm = self.parse_rate_field(key, raw)
            elif key == "authorized":
                authorized = self.parse_bool(key, raw)
            else:
                raise self.fail(f"unknown signer field {key!r}", raw[0])
        if model is None:
            raise self.fail(f"signer {name} needs model=constant|taint", col)
        # Signers share the ledger namespace with accounts (they are LPs),
        # so the name may already be declared as an account.
        if self.names_seen.get(name) not in (None, "account"):
            raise self.fail(
                f"{name!r} already declared as {self.names_seen[name]}", col
            )
        if any(s.name == name for s in self.script.signers):
            raise self.fail(f"duplicate signer {name!r}", col)
        self.script.signers.append(SignerSpec(name, model, rate_ppm, authorized))

    def handle_pool(self, tokens: list[tuple[int, str]]) -> None:
        if not tokens:
            raise self.fail("pool needs a name")
        col, name = tokens[0]
        name = self.parse_name("pool", (col, name))
        fields = self.split_fields(tokens[1:])
        values = {}
        for key, raw in fields.items():
            if key in (
                "kappa_ppm",
                "risk_lo_ppm",
                "risk_hi_ppm",
                "min_quorum",
                "min_lp_deposit",
                "rate_cap_ppm",
            ):
                values[key] = self.parse_int(key, raw)
            else:
                raise self.fail(f"unknown pool field {key!r}", raw[0])
        if "kappa_ppm" not in values:
            raise self.fail(f"pool {name} needs kappa_ppm", col)
        if not 0 < values["kappa_ppm"] < PPM:
            raise self.fail("kappa_ppm must be strictly between 0 and 1000000", col)
        self.declare(name, "pool", col)
        self.script.pools.append(PoolSpec(name=name, **values))

    def handle_book(self, tokens: list[tuple[int, str]]) -> None:
        if len(tokens) != 1:
            raise self.fail("book takes exactly one name")
        col, name = tokens[0]
        name = self.parse_name("book", (col, name))
        self.declare(name, "book", col)
        self.script.books.append(name)

    # -- steps -----------------------------------------------------------------

    def handle_step(self, tokens: list[tuple[int, str]]) -> None:
        if len(tokens) < 2:
            raise self.fail("step syntax is: at <time> <action> [key=value ...]")
        time = self.parse_int("time", tokens[0])
        if self.last_time is not None and time < self.last_time:
            raise self.fail(
                f"time {time} decreases (previous step at {self.last_time})",
                tokens[0][0],
            )
        self.last_time = time
        col, action = tokens[1]
        if action not in ACTION_SPECS:
            raise self.fail(f"unknown action {action!r}", col)
        spec = ACTION_SPECS[action]
        fields = self.split_fields(tokens[2:])

        expect_error = None
        if "expect_error" in fields:
            if action in NO_EXPECT_ERROR:
                raise self.fail(
                    f"expect_error is not allowed on {action!r}",
                    fields["expect_error"][0],
                )
            err_col, err_name = fields.pop("expect_error")
            if err_name not in ERRORS_BY_NAME:
                raise self.fail(f"unknown error name {err_name!r}", err_col)
            expect_error = err_name

        params: dict[str, object] = {}
        for key, raw in fields.items():
            if key not in spec:
                raise self.fail(f"unknown field {key!r} for {action}", raw[0])
            kind = spec[key][0]
            if kind == "int":
                params[key] = self.parse_int(key, raw)
            elif kind == "name":
                params[key] = self.parse_name(key, raw)
            elif kind == "rate":
                params[key] = self.parse_rate_field(key, raw)
            elif kind == "bool":
                params[key] = self.parse_bool(key, raw)
            elif kind == "label":
                params[key] = self.parse_name(key, raw)
            elif kind == "labels":
                params[key] = [
                    self.parse_name(key, (raw[0], part))
                    for part in raw[1].split(",")
                ]
            elif kind == "targets":
                params[key] = self.parse_targets(key, raw)
            elif kind == "ref":
                params[key] = int(raw[1]) if raw[1].isdigit() else self.parse_name(key, raw)
            elif kind == "status":
                if raw[1] not in BID_STATUSES:
                    raise self.fail(f"status must be one of {BID_STATUSES}", raw[0])
                params[key] = raw[1]
        for key, (kind, required) in spec.items():
            if required and key not in params:
                raise self.fail(f"{action} requires {key}=", col)

        self.check_step_semantics(action, params, col)
        self.script.steps.append(Step(self.line_no, time, action, params, expect_error))

    def check_step_semantics(
        self, action: str, params: dict[str, object], col: int
    ) -> None:
        def need(kind: str, name: object) -> None:
            if self.names_seen.get(str(name)) != kind:
                raise self.fail(f"{name!r} is not a declared {kind}", col)

        if "pool" in params:
            need("pool", params["pool"])
        if "book" in params:
            need("book", params["book"])
        if action == "issue_report":
            if not any(s.name == params["signer"] for s in self.script.signers):
                raise self.fail(f"{params['signer']!r} is not a declared signer", col)

        if action == "freeze":
            by_targets = "targets" in params
            by_plan = "transfer" in params or "amount" in params
            if by_targets == by_plan:
                raise self.fail(
                    "freeze takes either targets= or transfer=+amount=", col
                )
            if by_plan and not ("transfer" in params and "amount" in params):
                raise self.fail("freeze by plan needs both transfer= and amount=", col)

        if action == "assert":
            kind = str(params["kind"])
            if kind not in ASSERT_KINDS:
                raise self.fail(f"unknown assert kind {kind!r}", col)
            required, comparisons = ASSERT_KINDS[kind]
            allowed = required | comparisons | {"kind"}
            for key in params:
                if key not in allowed:
                    raise self.fail(f"assert {kind} does not take {key}=", col)
            for key in required:
                if key not in params:
                    raise self.fail(f"assert {kind} requires {key}=", col)
            if comparisons and not (comparisons & params.keys()):
                raise self.fail(
                    f"assert {kind} needs at least one of "
                    f"{sorted(comparisons)}", col
                )

        # backward label references
        for key, want in (("reports", "report"), ("transfer", "transfer")):
            if key in params:
                values = params[key] if isinstance(params[key], list) else [params[key]]
                for label in values:
                    if self.labels.get(str(label)) != want:
                        raise self.fail(
                            f"{label!r} does not label an earlier {want}", col
                        )
        if "bid" in params and not isinstance(params["bid"], int):
            if self.labels.get(str(params["bid"])) != "bid":
                raise self.fail(
                    f"{params['bid']!r} does not label an earlier bid", col
                )

        if "as" in params:
            label = str(params["as"])
            if label in self.labels:
                raise self.fail(f"label {label!r} already used", col)
            kind = {
                "transfer": "transfer",
                "swap": "transfer",
                "issue_report": "report",
                "post_bid": "bid",
            }[action]
            self.labels[label] = kind

    # -- driver -------------------------------------------------------------

    def parse(self) -> ScenarioScript:
        for self.line_no, line in enumerate(self.text.splitlines(), start=1):
            tokens = _tokens(line)
            if not tokens:
                continue
            col, head = tokens[0]
            self.col = col
            if head == "config":
                self.handle_config(tokens[1:])
            elif head == "account":
                self.handle_account(tokens[1:])
            elif head == "signer":
                self.handle_signer(tokens[1:])
            elif head == "pool":
                self.handle_pool(tokens[1:])
            elif head == "book":
                self.handle_book(tokens[1:])
            elif head == "at":
                self.handle_step(tokens[1:])
            else:
                raise self.fail(f"unknown directive {head!r}")
        return self.script


def parse_scenario(text: str) -> ScenarioScript:
    """Parse scenario text; raises :class:`ParseError` with line/column."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# canonical formatting
# ---------------------------------------------------------------------------

_RATE_KEYS = {"min_rate", "expect_rate", "expect_quote", "rate"}


def _format_value(key: str, value: object) -> str:
    if key in _RATE_KEYS:
        return format_rate(int(value))  # type: ignore[arg-type]
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        if value and isinstance(value[0], tuple):
            return ",".join(f"{name}:{amount}" for name, amount in value)
        return ",".join(str(v) for v in value)
    return str(value)


def format_scenario(script: ScenarioScript) -> str:
    """Render a script in canonical form: normalized spacing, schema-ordered
    fields, defaults made explicit for pools, comments dropped."""
    lines = [f"config window={script.window} arbitrator={script.arbitrator}", ""]
    for acct in script.accounts:
        parts = [f"account {acct.name}"]
        if acct.base:
            parts.append(f"base={acct.base}")
        if acct.settled:
            parts.append(f"settled={acct.settled}")
        lines.append(" ".join(parts))
    if script.accounts:
        lines.append("")
    for signer in script.signers:
        line = (
            f"signer {signer.name} model={signer.model} "
            f"rate={format_rate(signer.rate_ppm)}"
        )
        if not signer.authorized:
            line += " authorized=false"
        lines.append(line)
    if script.signers:
        lines.append("")
    for pool in script.pools:
        lines.append(
            f"pool {pool.name} kappa_ppm={pool.kappa_ppm} "
            f"risk_lo_ppm={pool.risk_lo_ppm} risk_hi_ppm={pool.risk_hi_ppm} "
            f"min_quorum={pool.min_quorum} min_lp_deposit={pool.min_lp_deposit} "
            f"rate_cap_ppm={pool.rate_cap_ppm}"
        )
    if script.pools:
        lines.append("")
    for book in script.books:
        lines.append(f"book {book}")
    if script.books:
        lines.append("")
    for step in script.steps:
        parts = [f"at {step.time} {step.action}"]
        for key in ACTION_SPECS[step.action]:
            if key in step.params:
                parts.append(f"{key}={_format_value(key, step.params[key])}")
        if step.expect_error:
            parts.append(f"expect_error={step.expect_error}")
        lines.append(" ".join(parts))
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
