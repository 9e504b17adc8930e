"""MKR-weighted proposals, surplus buy-and-burn, and emergency shutdown."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .errors import (
    InsufficientBalance,
    InvalidAmount,
    InvalidState,
    NotOwner,
    NotShutdown,
    OutOfBounds,
    Shutdown,
    SimError,
    VotingClosed,
)
from .market import END, KEEPER, MKR, VAT, VOW
from .numerics import WAD, annual_to_per_second, format_wad, parse_wad, wad_div, wad_mul
from .vaults import VaultState, current_debt, get_vault, ilk_of

if TYPE_CHECKING:
    from .protocol import Protocol

PARAMS = (
    "liquidation_ratio",
    "stability_rate",
    "dsr_rate",
    "debt_ceiling",
    "liquidation_penalty",
    "add_collateral_type",
    "trigger_shutdown",
)
PER_COLLATERAL = {"liquidation_ratio", "stability_rate", "debt_ceiling", "liquidation_penalty"}


class ProposalState(str, enum.Enum):
    VOTING = "VOTING"
    PASSED = "PASSED"
    FAILED = "FAILED"
    EXECUTED = "EXECUTED"


@dataclass
class Proposal:
    id: int
    param: str
    value: Any  # canonical JSON-ready form, see _normalize_value
    deadline: int
    collateral: str | None = None
    yes: dict[str, int] = field(default_factory=dict)
    no: dict[str, int] = field(default_factory=dict)
    state: ProposalState = ProposalState.VOTING

    def yes_weight(self) -> int:
        return sum(self.yes.values())

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "param": self.param,
            "value": self.value,
            "deadline": self.deadline,
            "collateral": self.collateral,
            "yes": {k: format_wad(v) for k, v in self.yes.items()},
            "no": {k: format_wad(v) for k, v in self.no.items()},
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Proposal:
        return cls(
            id=d["id"],
            param=d["param"],
            value=d["value"],
            deadline=d["deadline"],
            collateral=d["collateral"],
            yes={k: parse_wad(v) for k, v in d["yes"].items()},
            no={k: parse_wad(v) for k, v in d["no"].items()},
            state=ProposalState(d["state"]),
        )


def _wad_arg(value) -> int:
    try:
        return parse_wad(value)
    except ValueError as exc:
        raise OutOfBounds(str(exc)) from None


def _normalize_value(p: Protocol, param: str, value, collateral: str | None):
    """Validate a proposed value against its bounds and return its canonical form."""
    if param not in PARAMS:
        raise OutOfBounds(f"unknown governance parameter {param!r}")
    if param in PER_COLLATERAL:
        if collateral is None:
            raise OutOfBounds(f"{param} needs a collateral id")
        ilk_of(p, collateral)
    if param == "liquidation_ratio":
        ratio = _wad_arg(value)
        if ratio < WAD:
            raise OutOfBounds("liquidation ratio must be >= 1.0")
        return format_wad(ratio)
    if param in ("stability_rate", "dsr_rate"):
        return format_wad(_wad_arg(value))  # annual; negative rejected by the parser
    if param == "debt_ceiling":
        return None if value is None else format_wad(_wad_arg(value))
    if param == "liquidation_penalty":
        penalty = _wad_arg(value)
        if penalty > WAD:
            raise OutOfBounds("liquidation penalty must be <= 1.0")
        return format_wad(penalty)
    if param == "add_collateral_type":
        from .config import CollateralParams, ConfigError

        if not isinstance(value, dict) or "id" not in value:
            raise OutOfBounds("add_collateral_type needs an object with an id")
        cid = value["id"]
        if not isinstance(cid, str) or not cid or cid.startswith("@") or cid in ("DAI", "MKR"):
            raise OutOfBounds(f"invalid collateral id {cid!r}")
        if cid in p.ilks:
            raise OutOfBounds(f"collateral type {cid} already exists")
        rest = {k: v for k, v in value.items() if k not in ("id", "price")}
        try:
            params = CollateralParams.from_dict(rest)
        except (ConfigError, ValueError) as exc:
            raise OutOfBounds(str(exc)) from None
        out = {"id": cid, **params.to_dict()}
        if value.get("price") is not None:
            price = _wad_arg(value["price"])
            if price == 0:
                raise OutOfBounds("price must be positive")
            out["price"] = format_wad(price)
        return out
    # trigger_shutdown: value is a free-form reason
    return "" if value is None else str(value)


def propose(p: Protocol, param: str, value, deadline: int, collateral: str | None = None) -> int:
    canonical = _normalize_value(p, param, value, collateral)
    if not isinstance(deadline, int) or deadline < p.now:
        raise OutOfBounds("deadline must not be in the past")
    pid = len(p.proposals) + 1
    p.proposals[pid] = Proposal(pid, param, canonical, deadline, collateral if param in PER_COLLATERAL else None)
    return pid


def _get_proposal(p: Protocol, pid: int) -> Proposal:
    try:
        return p.proposals[pid]
    except (KeyError, TypeError):
        raise InvalidState(f"no proposal {pid!r}") from None


def vote(p: Protocol, pid: int, account: str, support: bool = True) -> int:
    """Record the voter's current MKR balance as weight, then pay the voting reward.

    Rejected after shutdown, since the reward would mint MKR.
    """
    if not p.live:
        raise Shutdown("voting halted")
    proposal = _get_proposal(p, pid)
    if proposal.state is not ProposalState.VOTING:
        raise VotingClosed(f"proposal {pid} is {proposal.state.value}")
    if p.now >= proposal.deadline:
        raise VotingClosed(f"proposal {pid} expired at {proposal.deadline}")
    weight = p.mkr.balance_of(account)
    side, other = (proposal.yes, proposal.no) if support else (proposal.no, proposal.yes)
    other.pop(account, None)
    side[account] = weight
    if p.vote_reward:
        p.mkr.mint(account, p.vote_reward)
        p.counters.mkr_rewards += p.vote_reward
    return weight


def _execute(p: Protocol, proposal: Proposal, now: int) -> None:
    param, value, cid = proposal.param, proposal.value, proposal.collateral
    if param == "trigger_shutdown":
        trigger_shutdown(p, value or f"proposal {proposal.id}")
        return
    if param == "add_collateral_type":
        if value["id"] in p.ilks:
            raise OutOfBounds(f"collateral type {value['id']} already exists")
        if "price" in value and p.feed.frozen:
            raise Shutdown("reference prices are frozen")
        p.add_collateral_type(
            value["id"],
            liquidation_ratio=parse_wad(value["liquidation_ratio"]),
            stability_rate=annual_to_per_second(parse_wad(value["stability_fee"])),
            liquidation_penalty=parse_wad(value["liquidation_penalty"]),
            debt_ceiling=None if value["debt_ceiling"] is None else parse_wad(value["debt_ceiling"]),
        )
        if "price" in value:
            p.feed.set_price(value["id"], parse_wad(value["price"]))
        return
    if param == "dsr_rate":
        from .savings import set_dsr

        set_dsr(p, annual_to_per_second(parse_wad(value)), now)
        return
    ilk = ilk_of(p, cid)
    if param == "stability_rate":
        if p.live:
            ilk.set_stability_rate(annual_to_per_second(parse_wad(value)), now)
        else:
            # accumulators are frozen after shutdown; only record the rate
            ilk.stability_rate = annual_to_per_second(parse_wad(value))
    elif param == "liquidation_ratio":
        ilk.liquidation_ratio = parse_wad(value)
    elif param == "debt_ceiling":
        ilk.debt_ceiling = None if value is None else parse_wad(value)
    elif param == "liquidation_penalty":
        ilk.liquidation_penalty = parse_wad(value)


def tally_and_execute(p: Protocol, pid: int, now: int | None = None) -> dict:
    """Close voting. Passes on a strict majority (by default) of total MKR supply.

    A passed proposal is applied immediately; if applying it fails the
    proposal stays PASSED and the error code is returned in the outcome.
    """
    if now is not None and now > p.now:
        p.advance(now)
    now = p.now
    proposal = _get_proposal(p, pid)
    if proposal.state is not ProposalState.VOTING:
        raise InvalidState(f"proposal {pid} already tallied")
    if now < proposal.deadline:
        raise VotingClosed(f"proposal {pid} voting open until {proposal.deadline}")
    yes = proposal.yes_weight()
    supply = p.mkr.total_supply
    passed = yes * WAD > p.pass_threshold * supply
    outcome = {
        "kind": "proposal",
        "proposal": pid,
        "param": proposal.param,
        "yes": format_wad(yes),
        "supply": format_wad(supply),
    }
    if not passed:
        proposal.state = ProposalState.FAILED
    else:
        proposal.state = ProposalState.PASSED
        try:
            _execute(p, proposal, now)
            proposal.state = ProposalState.EXECUTED
        except SimError as exc:
            outcome["execution_error"] = exc.code
    outcome["state"] = proposal.state.value
    p.log.append(outcome)
    return outcome


def buy_and_burn(p: Protocol) -> dict:
    """Sell surplus Dai above the floor to the keeper for MKR, and burn that MKR.

    System debt is healed first. If the keeper holds less MKR than the
    surplus would buy, only what it holds is bought.
    """
    from .liquidation import heal

    if not p.live:
        raise Shutdown("surplus auctions halted")
    healed = heal(p)
    excess = p.dai.balance_of(VOW) - p.surplus_floor
    record = {"kind": "buy_and_burn", "healed": format_wad(healed), "dai": format_wad(0), "mkr_burned": format_wad(0)}
    if excess <= 0:
        return record
    price = p.feed.price(MKR)
    mkr_amount = wad_div(excess, price)
    dai_spent = excess
    held = p.mkr.balance_of(KEEPER)
    if mkr_amount > held:
        mkr_amount = held
        dai_spent = wad_mul(held, price)
    if mkr_amount == 0:
        return record
    p.dai.transfer(VOW, KEEPER, dai_spent)
    p.mkr.burn(KEEPER, mkr_amount)
    p.counters.mkr_burned += mkr_amount
    record.update(dai=format_wad(dai_spent), mkr_burned=format_wad(mkr_amount))
    p.log.append(record)
    return record


def trigger_shutdown(p: Protocol, reason: str = "") -> None:
    """Irreversibly stop the system: freeze reference prices, halt issuance and liquidation."""
    if not p.live:
        raise Shutdown("already shut down")
    p.advance(p.now)  # accumulators settle at the shutdown instant
    p.feed.freeze()
    p.live = False
    p.shutdown_reason = reason
    p.shutdown_at = p.now
    p.log.append({"kind": "shutdown", "reason": reason, "at": p.now})


def withdraw_excess_collateral(p: Protocol, vault_id: int, caller: str) -> int:
    """After shutdown: return collateral above debt / frozen price to the owner.

    The debt-covering remainder moves to the redemption pool, the vault's
    principal becomes system debt, and the vault closes.
    """
    if p.live:
        raise NotShutdown("system is live")
    vault = get_vault(p, vault_id)
    if vault.owner != caller:
        raise NotOwner(f"{caller} does not own vault {vault_id}")
    if vault.state is not VaultState.OPEN:
        raise InvalidState(f"vault {vault_id} is {vault.state.value}")
    cid = vault.collateral_id
    debt = current_debt(p, vault)
    covering = wad_div(debt, p.feed.price(cid))
    retained = min(vault.locked, covering)
    excess = vault.locked - retained
    ledger = p.collateral[cid]
    ledger.transfer(VAT, END, retained)
    ledger.transfer(VAT, caller, excess)
    p.ilks[cid].total_normalized_debt -= vault.normalized_debt
    p.system_debt += vault.principal
    vault.locked = 0
    vault.normalized_debt = 0
    vault.principal = 0
    vault.state = VaultState.CLOSED
    return excess


def redeem_dai(p: Protocol, holder: str, amount: int) -> dict:
    """After shutdown: burn Dai for a pro-rata share of the retained collateral pool.

    The Dai is split across collateral types in proportion to the USD value
    each contributes to the pool at frozen prices. Fills are capped by the
    pool and by outstanding system debt; the unfilled remainder stays with
    the holder and is reported.
    """
    if p.live:
        raise NotShutdown("system is live")
    if amount < 0:
        raise InvalidAmount("negative redemption")
    if p.dai.balance_of(holder) < amount:
        raise InsufficientBalance(f"{holder} lacks {format_wad(amount)} Dai")
    pools = {cid: led.balance_of(END) for cid, led in sorted(p.collateral.items()) if led.balance_of(END)}
    values = {cid: units * p.feed.price(cid) for cid, units in pools.items()}
    total = sum(values.values())
    fillable = min(amount, total // WAD, p.system_debt)
    units_out: dict[str, int] = {}
    burned = 0
    if fillable:
        for cid, value in values.items():
            dai_part = fillable * value // total
            units = wad_div(dai_part, p.feed.price(cid))
            assert units <= pools[cid]
            units_out[cid] = units
            burned += dai_part
    p.burn_dai(holder, burned)
    p.system_debt -= burned
    for cid, units in units_out.items():
        if units:
            p.collateral[cid].transfer(END, holder, units)
    return {
        "redeemed": format_wad(burned),
        "remainder": format_wad(amount - burned),
        "collateral": {cid: format_wad(u) for cid, u in units_out.items()},
    }

