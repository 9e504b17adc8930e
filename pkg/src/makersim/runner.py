"""Deterministic scenario driver.

Events are applied in (t, seq) order. Before the first event at a new
timestamp every accumulator is accrued to that timestamp. Event-level
failures are recorded with their error code; parse and config errors abort.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from . import governance, liquidation, savings, vaults
from .config import Config
from .errors import InvalidAmount, SimError, UnknownCollateral
from .market import DAI, KEEPER, MKR
from .metrics import protocol_tvl
from .numerics import ArithmeticOverflow, format_wad
from .protocol import Protocol, canonical_json
from .scenario import Event, parse_scenario

log = logging.getLogger(__name__)


def _ledger_for(p: Protocol, token: str):
    if token == DAI:
        return p.dai
    if token == MKR:
        return p.mkr
    if token in p.collateral:
        return p.collateral[token]
    raise UnknownCollateral(f"unknown token {token!r}")


def _transfer(p: Protocol, a: dict):
    _ledger_for(p, a["token"]).transfer(a["src"], a["dst"], a["amount"])


def _fund_keeper(p: Protocol, a: dict):
    _ledger_for(p, a.get("token", DAI)).transfer(a["src"], KEEPER, a["amount"])


def _set_price(p: Protocol, a: dict):
    p.feed.set_price(a["asset"], a["price"])


def _faucet(p: Protocol, a: dict):
    if a["amount"] < 0:
        raise InvalidAmount("negative faucet")
    p.faucet(a["account"], a["collateral"], a["amount"])


def _generate(p: Protocol, a: dict):
    vaults.generate_dai(p, a["vault"], a["caller"], a["amount"])


def _repay(p: Protocol, a: dict):
    split = vaults.repay_dai(p, a["vault"], a["caller"], a["amount"])
    return {"fee": format_wad(split["fee"]), "principal": format_wad(split["principal"])}


def _withdraw_excess(p: Protocol, a: dict):
    return {"returned": format_wad(governance.withdraw_excess_collateral(p, a["vault"], a["caller"]))}


HANDLERS: dict[str, Callable[[Protocol, dict], object]] = {
    "faucet": _faucet,
    "set_price": _set_price,
    "open_vault": lambda p, a: {"vault": vaults.open_vault(p, a["owner"], a["collateral"])},
    "deposit": lambda p, a: vaults.deposit_collateral(p, a["vault"], a["caller"], a["amount"]),
    "generate": _generate,
    "repay": _repay,
    "withdraw": lambda p, a: vaults.withdraw_collateral(p, a["vault"], a["caller"], a["amount"]),
    "close": lambda p, a: vaults.close_vault(p, a["vault"], a["caller"]),
    "transfer": _transfer,
    "dsr_deposit": lambda p, a: savings.dsr_deposit(p, a["account"], a["amount"]),
    "dsr_withdraw": lambda p, a: savings.dsr_withdraw(p, a["account"], a["amount"]),
    "propose": lambda p, a: {
        "proposal": governance.propose(p, a["param"], a["value"], a["deadline"], a.get("collateral"))
    },
    "vote": lambda p, a: {
        "weight": format_wad(governance.vote(p, a["proposal"], a["account"], a.get("support", True)))
    },
    "tally": lambda p, a: governance.tally_and_execute(p, a["proposal"]),
    "trigger_shutdown": lambda p, a: governance.trigger_shutdown(p, a.get("reason", "")),
    "withdraw_excess": _withdraw_excess,
    "redeem": lambda p, a: governance.redeem_dai(p, a["holder"], a["amount"]),
    "fund_keeper": _fund_keeper,
    "scan_and_liquidate": lambda p, a: liquidation.scan_and_liquidate(p),
    "buy_and_burn": lambda p, a: governance.buy_and_burn(p),
    "checkpoint": lambda p, a: None,
}


def apply_event(p: Protocol, ev: Event) -> dict:
    """Advance the clock if needed, apply one event, return its outcome record."""
    if ev.t > p.now:
        p.advance(ev.t)
    outcome = ev.describe()
    try:
        result = HANDLERS[ev.op](p, ev.args)
    except SimError as exc:
        outcome.update(ok=False, error=exc.code, message=str(exc))
        return outcome
    except ArithmeticOverflow as exc:
        outcome.update(ok=False, error="OVERFLOW", message=str(exc))
        return outcome
    outcome["ok"] = True
    if result is not None:
        outcome["result"] = result
    return outcome


@dataclass
class RunResult:
    report: dict
    protocol: Protocol

    @property
    def state_hash(self) -> str:
        return self.report["state_hash"]

    def report_bytes(self) -> bytes:
        return canonical_json(self.report)

    def snapshot_bytes(self) -> bytes:
        return self.protocol.canonical_bytes()


def run_events(events: list[Event], config: Config, audit: bool = True) -> RunResult:
    p = Protocol.from_config(config)
    genesis = p.state_hash()
    outcomes = []
    for ev in events:
        outcomes.append(apply_event(p, ev))
        if audit:
            p.audit()
    errors = sum(1 for o in outcomes if not o["ok"])
    if errors:
        log.info("%d of %d events failed", errors, len(outcomes))
    report = {
        "genesis_hash": genesis,
        "events": outcomes,
        "settlements": [r for r in p.log if r["kind"] in ("collateral_auction", "debt_auction", "buy_and_burn")],
        "proposals": [r for r in p.log if r["kind"] == "proposal"],
        "shutdown": next((r for r in p.log if r["kind"] == "shutdown"), None),
        "final": {
            "now": p.now,
            "tvl": format_wad(protocol_tvl(p)),
            "dai_supply": format_wad(p.dai.total_supply),
            "mkr_supply": format_wad(p.mkr.total_supply),
            "surplus": format_wad(p.surplus),
            "system_debt": format_wad(p.system_debt),
            "live": p.live,
        },
        "state_hash": p.state_hash(),
    }
    return RunResult(report, p)


def run(scenario: str, config: Config, seed: int = 0, audit: bool = True) -> RunResult:
    """Run scenario text (JSONL) under ``config``; ``seed`` only drives random walks."""
    return run_events(parse_scenario(scenario, seed), config, audit=audit)


def replay_check(scenario: str, config: Config, seed: int, expected_hash: str) -> bool:
    return run(scenario, config, seed).state_hash == expected_hash.strip().lower()

