"""Vault lifecycle: open, fund, generate, accrue, repay, withdraw, close."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import (
    CeilingExceeded,
    InsufficientBalance,
    InvalidAmount,
    InvalidState,
    NotOwner,
    Overpayment,
    Shutdown,
    Undercollateralized,
    UnknownCollateral,
    UnknownVault,
)
from .market import VAT, VOW, CollateralType
from .numerics import INF_RATIO, RAY, format_wad, parse_wad, wad_div_ray, wad_div_ray_up

if TYPE_CHECKING:
    from .protocol import Protocol


class VaultState(str, enum.Enum):
    OPEN = "OPEN"
    IN_LIQUIDATION = "IN_LIQUIDATION"
    CLOSED = "CLOSED"


@dataclass
class Vault:
    id: int
    owner: str
    collateral_id: str
    locked: int = 0
    normalized_debt: int = 0
    # Dai this vault minted and has not yet retired; excludes unpaid fees
    principal: int = 0
    state: VaultState = VaultState.OPEN

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "collateral_id": self.collateral_id,
            "locked": format_wad(self.locked),
            "normalized_debt": format_wad(self.normalized_debt),
            "principal": format_wad(self.principal),
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Vault:
        return cls(
            id=d["id"],
            owner=d["owner"],
            collateral_id=d["collateral_id"],
            locked=parse_wad(d["locked"]),
            normalized_debt=parse_wad(d["normalized_debt"]),
            principal=parse_wad(d["principal"]),
            state=VaultState(d["state"]),
        )


def ilk_of(p: Protocol, cid: str) -> CollateralType:
    try:
        return p.ilks[cid]
    except KeyError:
        raise UnknownCollateral(f"unknown collateral type {cid!r}") from None


def get_vault(p: Protocol, vault_id: int) -> Vault:
    try:
        return p.vaults[vault_id]
    except (KeyError, TypeError):
        raise UnknownVault(f"no vault {vault_id!r}") from None


def _owned_open(p: Protocol, vault_id: int, caller: str) -> Vault:
    vault = get_vault(p, vault_id)
    if vault.owner != caller:
        raise NotOwner(f"{caller} does not own vault {vault_id}")
    if vault.state is not VaultState.OPEN:
        raise InvalidState(f"vault {vault_id} is {vault.state.value}")
    return vault


def _amount(amount: int) -> int:
    if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
        raise InvalidAmount(f"amount must be a non-negative integer, got {amount!r}")
    return amount


def debt_of(normalized_debt: int, accumulator: int) -> int:
    return normalized_debt * accumulator // RAY


def current_debt(p: Protocol, vault: Vault) -> int:
    return debt_of(vault.normalized_debt, p.ilks[vault.collateral_id].fee_accumulator)


def _is_safe(locked: int, price: int, debt: int, ratio: int) -> bool:
    # exact: locked*price >= debt*ratio, both sides at wad^2 scale
    return locked * price >= debt * ratio


def is_safe(p: Protocol, vault: Vault) -> bool:
    ilk = p.ilks[vault.collateral_id]
    return _is_safe(vault.locked, p.feed.price(vault.collateral_id), current_debt(p, vault), ilk.liquidation_ratio)


def open_vault(p: Protocol, owner: str, collateral_id: str) -> int:
    if not p.live:
        raise Shutdown("vault creation halted")
    ilk_of(p, collateral_id)
    vault_id = len(p.vaults) + 1
    p.vaults[vault_id] = Vault(vault_id, owner, collateral_id)
    return vault_id


def deposit_collateral(p: Protocol, vault_id: int, caller: str, amount: int) -> None:
    vault = _owned_open(p, vault_id, caller)
    _amount(amount)
    p.collateral[vault.collateral_id].transfer(caller, VAT, amount)
    vault.locked += amount


def max_generatable(p: Protocol, vault_id: int) -> int:
    """Dai the vault could still draw: floor(locked * price / ratio) - debt, clamped at 0.

    When the accumulator is above 1.0 the normalized-debt round-up can cost
    one ulp, so the result is walked down to an amount generate_dai accepts.
    """
    vault = get_vault(p, vault_id)
    if vault.state is not VaultState.OPEN:
        return 0
    ilk = p.ilks[vault.collateral_id]
    price = p.feed.price(vault.collateral_id)
    debt = current_debt(p, vault)
    # exact: no intermediate floor of the collateral value
    room = vault.locked * price // ilk.liquidation_ratio - debt
    while room > 0:
        art = vault.normalized_debt + wad_div_ray_up(room, ilk.fee_accumulator)
        if _is_safe(vault.locked, price, debt_of(art, ilk.fee_accumulator), ilk.liquidation_ratio):
            break
        room -= 1
    return max(room, 0)


def generate_dai(p: Protocol, vault_id: int, caller: str, amount: int) -> None:
    if not p.live:
        raise Shutdown("Dai generation halted")
    vault = _owned_open(p, vault_id, caller)
    _amount(amount)
    if amount == 0:
        return
    ilk = p.ilks[vault.collateral_id]
    # round normalized debt up: the vault never owes less than it drew
    dart = wad_div_ray_up(amount, ilk.fee_accumulator)
    new_art = vault.normalized_debt + dart
    new_debt = debt_of(new_art, ilk.fee_accumulator)
    if not _is_safe(vault.locked, p.feed.price(vault.collateral_id), new_debt, ilk.liquidation_ratio):
        raise Undercollateralized(f"vault {vault_id}: generating {format_wad(amount)} breaches the liquidation ratio")
    ceiling = ilk.debt_ceiling
    if ceiling is not None and debt_of(ilk.total_normalized_debt + dart, ilk.fee_accumulator) > ceiling:
        raise CeilingExceeded(f"{ilk.id}: debt ceiling {format_wad(ilk.debt_ceiling)} reached")
    vault.normalized_debt = new_art
    vault.principal += amount
    ilk.total_normalized_debt += dart
    p.mint_dai(caller, amount)


def accrue_fees(p: Protocol, collateral_id: str, now: int) -> int:
    return ilk_of(p, collateral_id).accrue(now)


def repay_dai(p: Protocol, vault_id: int, caller: str, amount: int) -> dict:
    """Pay back debt. The principal share is burned, the fee share moves to the surplus buffer."""
    vault = _owned_open(p, vault_id, caller)
    _amount(amount)
    ilk = p.ilks[vault.collateral_id]
    debt = current_debt(p, vault)
    if amount > debt:
        raise Overpayment(f"vault {vault_id} owes {format_wad(debt)}, repaying {format_wad(amount)}")
    if p.dai.balance_of(caller) < amount:
        raise InsufficientBalance(f"{caller} lacks {format_wad(amount)} Dai")
    if amount == 0:
        return {"fee": 0, "principal": 0}
    fee = amount * (debt - vault.principal) // debt
    principal_part = amount - fee
    if amount == debt:
        dart = vault.normalized_debt
    else:
        dart = min(wad_div_ray(amount, ilk.fee_accumulator), vault.normalized_debt)
    p.burn_dai(caller, principal_part)
    p.dai.transfer(caller, VOW, fee)
    vault.principal -= principal_part
    vault.normalized_debt -= dart
    ilk.total_normalized_debt -= dart
    return {"fee": fee, "principal": principal_part}


def withdraw_collateral(p: Protocol, vault_id: int, caller: str, amount: int) -> None:
    vault = _owned_open(p, vault_id, caller)
    _amount(amount)
    if amount > vault.locked:
        raise InsufficientBalance(f"vault {vault_id} has {format_wad(vault.locked)} locked")
    debt = current_debt(p, vault)
    if debt:
        ilk = p.ilks[vault.collateral_id]
        if not _is_safe(vault.locked - amount, p.feed.price(vault.collateral_id), debt, ilk.liquidation_ratio):
            raise Undercollateralized(f"vault {vault_id}: withdrawal breaches the liquidation ratio")
    p.collateral[vault.collateral_id].transfer(VAT, caller, amount)
    vault.locked -= amount


def close_vault(p: Protocol, vault_id: int, caller: str) -> None:
    vault = _owned_open(p, vault_id, caller)
    if vault.locked or vault.normalized_debt:
        raise InvalidState(f"vault {vault_id} still holds collateral or debt")
    vault.state = VaultState.CLOSED


def collateralization_ratio(p: Protocol, vault_id: int) -> int:
    """locked value / debt as a wad; INF_RATIO when there is no debt."""
    vault = get_vault(p, vault_id)
    debt = current_debt(p, vault)
    if debt == 0:
        return INF_RATIO
    return vault.locked * p.feed.price(vault.collateral_id) // debt

