"""Unsafe-vault detection, collateral auctions and MKR debt auctions.

Auctions are single-round fixed-price sales to the keeper pool at
oracle price * (1 - auction_discount).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import InvalidAmount, InvalidState, KeeperInsufficient, OutOfBounds, Shutdown, SimError, VaultSafe
from .market import FLIP, KEEPER, MKR, VAT, VOW
from .numerics import WAD, format_wad, parse_wad, wad_div, wad_mul
from .vaults import VaultState, current_debt, get_vault, is_safe

if TYPE_CHECKING:
    from .protocol import Protocol


class AuctionKind(str, enum.Enum):
    COLLATERAL = "COLLATERAL"
    DEBT = "DEBT"


class AuctionState(str, enum.Enum):
    ACTIVE = "ACTIVE"
    SETTLED = "SETTLED"


@dataclass
class Auction:
    id: int
    kind: AuctionKind
    lot: int  # collateral units, or MKR minted for a debt auction
    tab: int  # Dai to raise
    vault_id: int | None = None
    collateral_id: str | None = None
    owner: str | None = None
    principal: int = 0  # vault principal still backing Dai while the auction runs
    state: AuctionState = AuctionState.ACTIVE
    proceeds: int = 0

    @property
    def is_active(self) -> bool:
        return self.state is AuctionState.ACTIVE

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "lot": format_wad(self.lot),
            "tab": format_wad(self.tab),
            "vault_id": self.vault_id,
            "collateral_id": self.collateral_id,
            "owner": self.owner,
            "principal": format_wad(self.principal),
            "state": self.state.value,
            "proceeds": format_wad(self.proceeds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Auction:
        return cls(
            id=d["id"],
            kind=AuctionKind(d["kind"]),
            lot=parse_wad(d["lot"]),
            tab=parse_wad(d["tab"]),
            vault_id=d["vault_id"],
            collateral_id=d["collateral_id"],
            owner=d["owner"],
            principal=parse_wad(d["principal"]),
            state=AuctionState(d["state"]),
            proceeds=parse_wad(d["proceeds"]),
        )


def scan_unsafe(p: Protocol) -> list[int]:
    """OPEN vaults with debt whose ratio is strictly below the liquidation ratio, by id."""
    return [
        vid
        for vid, v in sorted(p.vaults.items())
        if v.state is VaultState.OPEN and v.normalized_debt > 0 and not is_safe(p, v)
    ]


def _next_auction_id(p: Protocol) -> int:
    return len(p.auctions) + 1


def start_liquidation(p: Protocol, vault_id: int) -> Auction:
    if not p.live:
        raise Shutdown("liquidations halted")
    vault = get_vault(p, vault_id)
    if vault.state is VaultState.IN_LIQUIDATION:
        raise InvalidState(f"vault {vault_id} already in liquidation")
    if vault.state is not VaultState.OPEN:
        raise InvalidState(f"vault {vault_id} is {vault.state.value}")
    if vault.normalized_debt == 0 or is_safe(p, vault):
        raise VaultSafe(f"vault {vault_id} is safe")
    ilk = p.ilks[vault.collateral_id]
    debt = current_debt(p, vault)
    auction = Auction(
        id=_next_auction_id(p),
        kind=AuctionKind.COLLATERAL,
        lot=vault.locked,
        tab=wad_mul(debt, WAD + ilk.liquidation_penalty),
        vault_id=vault.id,
        collateral_id=vault.collateral_id,
        owner=vault.owner,
        principal=vault.principal,
    )
    p.collateral[vault.collateral_id].transfer(VAT, FLIP, vault.locked)
    ilk.total_normalized_debt -= vault.normalized_debt
    vault.locked = 0
    vault.normalized_debt = 0
    vault.principal = 0
    vault.state = VaultState.IN_LIQUIDATION
    p.auctions[auction.id] = auction
    return auction


def settle_collateral_auction(p: Protocol, auction_id: int) -> dict:
    """Sell escrowed collateral to the keeper until the tab is raised or the lot runs out.

    Proceeds first retire the vault's outstanding principal (burned); the
    rest, i.e. fees and penalty, goes to the surplus buffer. Principal the
    proceeds could not cover becomes system debt.
    """
    auction = p.auctions.get(auction_id)
    if auction is None or auction.kind is not AuctionKind.COLLATERAL:
        raise InvalidState(f"no collateral auction {auction_id}")
    if not auction.is_active:
        raise InvalidState(f"auction {auction_id} already settled")
    if p.auction_discount >= WAD:
        raise OutOfBounds("auction discount must be below 100%")
    cid = auction.collateral_id
    sale_price = wad_mul(p.feed.price(cid), WAD - p.auction_discount)
    if sale_price == 0:
        raise OutOfBounds("sale price rounds to zero")
    lot_value = wad_mul(auction.lot, sale_price)
    if lot_value <= auction.tab:
        sold, proceeds = auction.lot, lot_value
    else:
        sold = -(-auction.tab * WAD // sale_price)
        proceeds = auction.tab
    if p.dai.balance_of(KEEPER) < proceeds:
        raise KeeperInsufficient(
            f"keeper holds {format_wad(p.dai.balance_of(KEEPER))} Dai, "
            f"auction {auction_id} needs {format_wad(proceeds)}"
        )
    refund = auction.lot - sold
    retired = min(proceeds, auction.principal)
    unbacked = auction.principal - retired

    p.burn_dai(KEEPER, retired)
    p.dai.transfer(KEEPER, VOW, proceeds - retired)
    ledger = p.collateral[cid]
    ledger.transfer(FLIP, KEEPER, sold)
    ledger.transfer(FLIP, auction.owner, refund)
    p.system_debt += unbacked

    auction.state = AuctionState.SETTLED
    auction.proceeds = proceeds
    vault = p.vaults[auction.vault_id]
    vault.state = VaultState.OPEN

    record = {
        "kind": "collateral_auction",
        "auction": auction.id,
        "vault": auction.vault_id,
        "collateral": cid,
        "lot": format_wad(auction.lot),
        "tab": format_wad(auction.tab),
        "sold": format_wad(sold),
        "proceeds": format_wad(proceeds),
        "refund": format_wad(refund),
        "shortfall": format_wad(auction.tab - proceeds),
        "bad_debt": format_wad(unbacked),
    }
    p.log.append(record)
    return record


def heal(p: Protocol) -> int:
    """Cancel surplus Dai against system debt; returns the amount burned."""
    amount = min(p.dai.balance_of(VOW), p.system_debt)
    if amount:
        p.burn_dai(VOW, amount)
        p.system_debt -= amount
    return amount


def run_debt_auction(p: Protocol) -> dict | None:
    """Cover system debt: surplus first, then MKR minted and sold to the keeper.

    If the keeper cannot fund the whole residual, the auction raises what it
    can. Returns None when there was nothing left to cover.
    """
    if not p.live:
        raise Shutdown("debt auctions halted")
    residual = p.system_debt - min(p.dai.balance_of(VOW), p.system_debt)
    if residual:
        price = p.feed.price(MKR) if p.feed.has_price(MKR) else 0
        if price <= 0:
            raise InvalidAmount("MKR price must be positive for a debt auction")
        if p.dai.balance_of(KEEPER) == 0:
            raise KeeperInsufficient("keeper holds no Dai for the debt auction")
    healed = heal(p)
    if residual == 0:
        return None
    raised = min(residual, p.dai.balance_of(KEEPER))
    minted = wad_div(raised, price)
    p.mkr.mint(KEEPER, minted)
    p.counters.mkr_debt_minted += minted
    p.burn_dai(KEEPER, raised)
    p.system_debt -= raised
    auction = Auction(
        id=_next_auction_id(p),
        kind=AuctionKind.DEBT,
        lot=minted,
        tab=residual,
        state=AuctionState.SETTLED,
        proceeds=raised,
    )
    p.auctions[auction.id] = auction
    record = {
        "kind": "debt_auction",
        "auction": auction.id,
        "healed": format_wad(healed),
        "tab": format_wad(residual),
        "raised": format_wad(raised),
        "mkr_minted": format_wad(minted),
        "remaining_debt": format_wad(p.system_debt),
    }
    p.log.append(record)
    return record


def scan_and_liquidate(p: Protocol) -> dict:
    """One liquidation pass: flag, start, settle every active auction, then cover bad debt.

    Bad debt is first cancelled against the surplus buffer; a debt auction
    covers whatever is left.

    After shutdown no vault is flagged and no debt auction runs, but auctions
    started before shutdown can still settle at the frozen prices.
    """
    flagged = scan_unsafe(p) if p.live else []
    started = [start_liquidation(p, vid).id for vid in flagged]
    settled, pending = [], []
    for aid in sorted(p.auctions):
        auction = p.auctions[aid]
        if auction.kind is AuctionKind.COLLATERAL and auction.is_active:
            try:
                settle_collateral_auction(p, aid)
                settled.append(aid)
            except (KeeperInsufficient, OutOfBounds):
                # unfunded keeper or a sale price that rounds to zero: retry on a later pass
                pending.append(aid)
    healed, debt_auction = 0, None
    if p.system_debt and p.live:
        healed = heal(p)
        if p.system_debt:
            try:
                debt_auction = run_debt_auction(p)
            except SimError as exc:
                debt_auction = {"error": exc.code}
    return {
        "flagged": flagged,
        "started": started,
        "settled": settled,
        "pending": pending,
        "healed": format_wad(healed),
        "debt_auction": debt_auction,
    }
