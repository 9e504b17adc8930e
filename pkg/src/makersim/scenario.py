"""Scenario files: JSON Lines, one timestamped event per line.

Each line looks like::

    {"t": 0, "seq": 1, "op": "generate", "args": {"vault": 1, "caller": "alice", "amount": "100"}}

``seq`` breaks ties between events at the same ``t``; it defaults to the
line number. Amounts and prices are decimal strings. A ``random_walk`` line
is expanded at parse time into seeded ``set_price`` events, so a run only
needs the scenario text and the seed.
"""

from __future__ import annotations

import decimal
import hashlib
import json
import random
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .numerics import parse_wad


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# arg name -> kind; a trailing "?" marks the arg optional
SCHEMAS: dict[str, dict[str, str]] = {
    "faucet": {"account": "account", "collateral": "str", "amount": "wad"},
    "set_price": {"asset": "str", "price": "wad"},
    "open_vault": {"owner": "account", "collateral": "str"},
    "deposit": {"vault": "int", "caller": "account", "amount": "wad"},
    "generate": {"vault": "int", "caller": "account", "amount": "wad"},
    "repay": {"vault": "int", "caller": "account", "amount": "wad"},
    "withdraw": {"vault": "int", "caller": "account", "amount": "wad"},
    "close": {"vault": "int", "caller": "account"},
    "transfer": {"token": "str", "src": "account", "dst": "account", "amount": "wad"},
    "dsr_deposit": {"account": "account", "amount": "wad"},
    "dsr_withdraw": {"account": "account", "amount": "wad"},
    "propose": {"param": "str", "value": "any", "deadline": "int", "collateral?": "str"},
    "vote": {"proposal": "int", "account": "account", "support?": "bool"},
    "tally": {"proposal": "int"},
    "trigger_shutdown": {"reason?": "str"},
    "withdraw_excess": {"vault": "int", "caller": "account"},
    "redeem": {"holder": "account", "amount": "wad"},
    "fund_keeper": {"src": "account", "amount": "wad", "token?": "str"},
    "scan_and_liquidate": {},
    "buy_and_burn": {},
    "checkpoint": {},
    "random_walk": {
        "collateral": "str",
        "start": "wad",
        "steps": "int",
        "interval": "int",
        "drift?": "decimal",
        "vol?": "decimal",
    },
}


@dataclass(frozen=True)
class Event:
    t: int
    seq: int
    op: str
    args: dict = field(default_factory=dict)
    line: int = 0
    sub: int = 0  # position within a random_walk expansion

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.t, self.seq, self.sub, self.line)

    def describe(self) -> dict:
        return {"t": self.t, "seq": self.seq, "op": self.op, "line": self.line, "sub": self.sub}


def _coerce(kind: str, value, name: str, line: int):
    if kind == "any":
        return value
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ScenarioError(f"{name} must be a non-negative integer", line)
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ScenarioError(f"{name} must be true/false", line)
        return value
    if kind == "wad":
        try:
            return parse_wad(value)
        except ValueError as exc:
            raise ScenarioError(f"{name}: {exc}", line) from None
    if kind == "decimal":
        if not isinstance(value, str):
            raise ScenarioError(f"{name} must be a decimal string", line)
        try:
            d = Decimal(value)
        except decimal.InvalidOperation:
            raise ScenarioError(f"{name}: invalid decimal {value!r}", line) from None
        if not d.is_finite():
            raise ScenarioError(f"{name} must be finite", line)
        return value
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"{name} must be a non-empty string", line)
    if kind == "account" and value.startswith("@"):
        raise ScenarioError(f"{name}: account names may not start with '@'", line)
    return value


def _parse_args(op: str, raw, line: int) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ScenarioError("args must be an object", line)
    schema = SCHEMAS[op]
    names = {k.rstrip("?"): k.endswith("?") for k in schema}
    unknown = set(raw) - set(names)
    if unknown:
        raise ScenarioError(f"{op}: unknown args {sorted(unknown)}", line)
    out = {}
    for key, kind in schema.items():
        name = key.rstrip("?")
        if name not in raw:
            if not names[name]:
                raise ScenarioError(f"{op}: missing arg {name!r}", line)
            continue
        out[name] = _coerce(kind, raw[name], name, line)
    return out


def walk_seed(seed: int, line: int, collateral: str) -> int:
    digest = hashlib.sha256(f"{seed}:{line}:{collateral}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def random_walk_prices(
    start: int, steps: int, drift: str = "0", vol: str = "0", seed: int = 0
) -> list[int]:
    """Seeded geometric walk of ``steps`` moves, starting price included.

    Each step multiplies the price by ``(1 + drift) * exp(vol * z - vol**2 / 2)``
    where z is an Irwin-Hall approximation of a standard normal built from
    53-bit integer draws. Everything after the draws is Decimal arithmetic
    (``exp`` is correctly rounded), so the path is the same on every
    platform. Prices are floored to wad and never drop below 1 wei.
    """
    if start <= 0:
        raise ValueError("start price must be positive")
    rng = random.Random(seed)
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        growth = 1 + Decimal(drift)
        sigma = Decimal(vol)
        if growth <= 0:
            raise ValueError("drift must be greater than -1")
        if sigma < 0:
            raise ValueError("vol must be non-negative")
        half_var = sigma * sigma / 2
        scale = Decimal(2**53)
        prices = [start]
        price = Decimal(start)
        for _ in range(steps):
            z = sum(Decimal(rng.getrandbits(53)) / scale for _ in range(12)) - 6
            factor = growth if sigma == 0 else growth * (sigma * z - half_var).exp()
            price = Decimal(max(1, int(price * factor)))
            prices.append(int(price))
    return prices


def _expand_walk(ev: Event, seed: int) -> list[Event]:
    a = ev.args
    try:
        prices = random_walk_prices(
            a["start"],
            a["steps"],
            a.get("drift", "0"),
            a.get("vol", "0"),
            walk_seed(seed, ev.line, a["collateral"]),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), ev.line) from None
    if a["interval"] == 0 and a["steps"] > 0:
        raise ScenarioError("random_walk interval must be positive", ev.line)
    return [
        Event(ev.t + k * a["interval"], ev.seq, "set_price", {"asset": a["collateral"], "price": price}, ev.line, k)
        for k, price in enumerate(prices)
    ]


def parse_scenario(text: str, seed: int = 0) -> list[Event]:
    """Parse JSONL text into events sorted by (t, seq); random walks are expanded."""
    explicit: list[Event] = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        if not raw_line.strip():
            continue
        try:
            obj = json.loads(raw_line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise ScenarioError("event must be an object", lineno)
        unknown = set(obj) - {"t", "seq", "op", "args"}
        if unknown:
            raise ScenarioError(f"unknown event fields {sorted(unknown)}", lineno)
        op = obj.get("op")
        if op not in SCHEMAS:
            raise ScenarioError(f"unknown op {op!r}", lineno)
        t = obj.get("t")
        seq = obj.get("seq", lineno)
        for name, value in (("t", t), ("seq", seq)):
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ScenarioError(f"{name} must be a non-negative integer", lineno)
        if (t, seq) in seen:
            raise ScenarioError(f"duplicate (t, seq) = ({t}, {seq}), first on line {seen[(t, seq)]}", lineno)
        seen[(t, seq)] = lineno
        explicit.append(Event(t, seq, op, _parse_args(op, obj.get("args"), lineno), lineno))

    events: list[Event] = []
    for ev in explicit:
        events.extend(_expand_walk(ev, seed) if ev.op == "random_walk" else [ev])
    events.sort(key=lambda e: e.key)
    return events


def load_scenario(path: str | Path, seed: int = 0) -> list[Event]:
    return parse_scenario(Path(path).read_text(), seed)


def dump_event(t: int, seq: int, op: str, args: dict | None = None) -> str:
    """One canonical scenario line."""
    obj = {"t": t, "seq": seq, "op": op, "args": args or {}}
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))

