"""Dai savings pot: deposit, accrue at the governance-set rate, withdraw any time."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import InsufficientBalance, InvalidAmount, OutOfBounds, TimeRegression
from .market import POT, VOW
from .numerics import (
    RAY,
    format_ray,
    format_wad,
    parse_ray,
    parse_wad,
    ray_mul,
    ray_pow,
    wad_div_ray,
    wad_div_ray_up,
    wad_mul_ray,
)

if TYPE_CHECKING:
    from .protocol import Protocol


@dataclass
class SavingsPot:
    chi: int = RAY
    dsr_rate: int = RAY
    updated_at: int = 0
    chi_base: int = RAY
    base_time: int = 0
    total_normalized: int = 0
    accounts: dict[str, int] = field(default_factory=dict)

    def chi_at(self, now: int) -> int:
        return max(self.chi, ray_mul(self.chi_base, ray_pow(self.dsr_rate, now - self.base_time)))

    def set_rate(self, rate: int, now: int) -> None:
        """Switch the rate; callers accrue to ``now`` first."""
        if rate < RAY:
            raise OutOfBounds("savings rate factor below 1.0")
        self.chi = self.chi_at(now)
        self.updated_at = now
        self.chi_base = self.chi
        self.base_time = now
        self.dsr_rate = rate

    def balance_of(self, account: str) -> int:
        return wad_mul_ray(self.accounts.get(account, 0), self.chi)

    def to_dict(self) -> dict:
        return {
            "chi": format_ray(self.chi),
            "dsr_rate": format_ray(self.dsr_rate),
            "updated_at": self.updated_at,
            "chi_base": format_ray(self.chi_base),
            "base_time": self.base_time,
            "total_normalized": format_wad(self.total_normalized),
            "accounts": {k: format_wad(v) for k, v in self.accounts.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> SavingsPot:
        return cls(
            chi=parse_ray(d["chi"]),
            dsr_rate=parse_ray(d["dsr_rate"]),
            updated_at=d["updated_at"],
            chi_base=parse_ray(d["chi_base"]),
            base_time=d["base_time"],
            total_normalized=parse_wad(d["total_normalized"]),
            accounts={k: parse_wad(v) for k, v in d["accounts"].items()},
        )


def dsr_accrue(p: Protocol, now: int) -> int:
    """Advance chi to ``now`` and fund the interest it implies.

    The pot is topped up to floor(total_normalized * chi); the top-up comes
    out of the surplus buffer, and whatever the buffer cannot cover is minted
    and booked as system debt. Returns the interest funded.
    """
    pot = p.pot
    if now < pot.updated_at:
        raise TimeRegression(f"savings accrual to {now} before {pot.updated_at}")
    pot.chi = pot.chi_at(now)
    pot.updated_at = now
    owed = wad_mul_ray(pot.total_normalized, pot.chi)
    held = p.dai.balance_of(POT)
    if owed <= held:
        return 0
    need = owed - held
    from_surplus = min(need, p.dai.balance_of(VOW))
    p.dai.transfer(VOW, POT, from_surplus)
    minted = need - from_surplus
    if minted:
        p.mint_dai(POT, minted)
        p.system_debt += minted
    return need


def set_dsr(p: Protocol, rate: int, now: int) -> None:
    if p.live:
        dsr_accrue(p, now)
    p.pot.set_rate(rate, now)


def dsr_deposit(p: Protocol, account: str, amount: int) -> None:
    if amount < 0:
        raise InvalidAmount("negative deposit")
    if p.dai.balance_of(account) < amount:
        raise InsufficientBalance(f"{account} lacks {format_wad(amount)} Dai")
    # credited value rounds down; any dust stays in the pot
    normalized = wad_div_ray(amount, p.pot.chi)
    p.dai.transfer(account, POT, amount)
    p.pot.accounts[account] = p.pot.accounts.get(account, 0) + normalized
    p.pot.total_normalized += normalized
    if not p.pot.accounts[account]:
        del p.pot.accounts[account]


def dsr_withdraw(p: Protocol, account: str, amount: int) -> None:
    pot = p.pot
    if amount < 0:
        raise InvalidAmount("negative withdrawal")
    have = pot.balance_of(account)
    if amount > have:
        raise InsufficientBalance(f"{account} has {format_wad(have)} in savings, withdrawing {format_wad(amount)}")
    if amount == 0:
        return
    normalized = pot.accounts[account] if amount == have else wad_div_ray_up(amount, pot.chi)
    p.dai.transfer(POT, account, amount)
    left = pot.accounts[account] - normalized
    if left:
        pot.accounts[account] = left
    else:
        del pot.accounts[account]
    pot.total_normalized -= normalized


def dsr_balance(p: Protocol, account: str) -> int:
    return p.pot.balance_of(account)
