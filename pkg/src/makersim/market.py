"""What the protocol sees: collateral registry, price oracle, token ledgers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import Frozen, InsufficientBalance, InvalidAmount, OutOfBounds, TimeRegression, UnknownCollateral
from .numerics import RAY, WAD, format_ray, format_wad, parse_ray, parse_wad, ray_mul, ray_pow

if TYPE_CHECKING:
    from .protocol import Protocol

# System accounts. User account names may not start with "@".
VAT = "@vat"  # collateral locked in vaults
FLIP = "@flip"  # collateral escrowed in collateral auctions
END = "@end"  # collateral retained for post-shutdown redemption
POT = "@pot"  # Dai held by the savings pot
VOW = "@vow"  # surplus buffer
KEEPER = "@keeper"  # simulated auction counterparty

DAI = "DAI"
MKR = "MKR"


def _opt_wad(value: int | None) -> str | None:
    return None if value is None else format_wad(value)


@dataclass
class CollateralType:
    """Per-asset risk parameters and the stability fee accumulator.

    The accumulator is path independent between rate changes: it is always
    ``rate_base * stability_rate ** (now - rate_base_time)``, so accruing at
    extra intermediate timestamps cannot change the result.
    """

    id: str
    liquidation_ratio: int
    stability_rate: int = RAY
    liquidation_penalty: int = 13 * WAD // 100
    debt_ceiling: int | None = None
    fee_accumulator: int = RAY
    accumulator_updated_at: int = 0
    rate_base: int = RAY
    rate_base_time: int = 0
    total_normalized_debt: int = 0

    def __post_init__(self):
        if self.liquidation_ratio < WAD:
            raise OutOfBounds(f"{self.id}: liquidation ratio below 1.0")
        if self.stability_rate < RAY:
            raise OutOfBounds(f"{self.id}: negative stability rate")

    def accumulator_at(self, now: int) -> int:
        projected = ray_mul(self.rate_base, ray_pow(self.stability_rate, now - self.rate_base_time))
        return max(self.fee_accumulator, projected)

    def accrue(self, now: int) -> int:
        if now < self.accumulator_updated_at:
            raise TimeRegression(f"{self.id}: accrual to {now} before {self.accumulator_updated_at}")
        self.fee_accumulator = self.accumulator_at(now)
        self.accumulator_updated_at = now
        return self.fee_accumulator

    def set_stability_rate(self, rate: int, now: int) -> None:
        if rate < RAY:
            raise OutOfBounds("stability rate factor below 1.0")
        self.accrue(now)
        self.rate_base = self.fee_accumulator
        self.rate_base_time = now
        self.stability_rate = rate

    def total_debt(self) -> int:
        return self.total_normalized_debt * self.fee_accumulator // RAY

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "liquidation_ratio": format_wad(self.liquidation_ratio),
            "stability_rate": format_ray(self.stability_rate),
            "liquidation_penalty": format_wad(self.liquidation_penalty),
            "debt_ceiling": _opt_wad(self.debt_ceiling),
            "fee_accumulator": format_ray(self.fee_accumulator),
            "accumulator_updated_at": self.accumulator_updated_at,
            "rate_base": format_ray(self.rate_base),
            "rate_base_time": self.rate_base_time,
            "total_normalized_debt": format_wad(self.total_normalized_debt),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CollateralType:
        return cls(
            id=d["id"],
            liquidation_ratio=parse_wad(d["liquidation_ratio"]),
            stability_rate=parse_ray(d["stability_rate"]),
            liquidation_penalty=parse_wad(d["liquidation_penalty"]),
            debt_ceiling=None if d["debt_ceiling"] is None else parse_wad(d["debt_ceiling"]),
            fee_accumulator=parse_ray(d["fee_accumulator"]),
            accumulator_updated_at=d["accumulator_updated_at"],
            rate_base=parse_ray(d["rate_base"]),
            rate_base_time=d["rate_base_time"],
            total_normalized_debt=parse_wad(d["total_normalized_debt"]),
        )


@dataclass
class PriceFeed:
    prices: dict[str, int] = field(default_factory=dict)
    frozen: bool = False
    frozen_prices: dict[str, int] = field(default_factory=dict)

    def set_price(self, asset: str, price: int) -> None:
        if self.frozen:
            raise Frozen("reference prices are frozen")
        if price <= 0:
            raise InvalidAmount("price must be positive")
        self.prices[asset] = price

    def price(self, asset: str) -> int:
        source = self.frozen_prices if self.frozen else self.prices
        try:
            return source[asset]
        except KeyError:
            raise UnknownCollateral(f"no price for {asset}") from None

    def has_price(self, asset: str) -> bool:
        return asset in (self.frozen_prices if self.frozen else self.prices)

    def freeze(self) -> None:
        if self.frozen:
            raise Frozen("already frozen")
        self.frozen_prices = dict(self.prices)
        self.frozen = True

    def to_dict(self) -> dict:
        return {
            "prices": {k: format_wad(v) for k, v in self.prices.items()},
            "frozen": self.frozen,
            "frozen_prices": {k: format_wad(v) for k, v in self.frozen_prices.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> PriceFeed:
        return cls(
            prices={k: parse_wad(v) for k, v in d["prices"].items()},
            frozen=d["frozen"],
            frozen_prices={k: parse_wad(v) for k, v in d["frozen_prices"].items()},
        )


@dataclass
class TokenLedger:
    """Balances plus total supply. Zero balances are dropped so that
    equal economic states serialize identically."""

    token: str
    balances: dict[str, int] = field(default_factory=dict)
    total_supply: int = 0

    def balance_of(self, account: str) -> int:
        return self.balances.get(account, 0)

    def _set(self, account: str, amount: int) -> None:
        if amount:
            self.balances[account] = amount
        else:
            self.balances.pop(account, None)

    def mint(self, account: str, amount: int) -> None:
        if amount < 0:
            raise InvalidAmount("negative mint")
        self._set(account, self.balance_of(account) + amount)
        self.total_supply += amount

    def burn(self, account: str, amount: int) -> None:
        if amount < 0:
            raise InvalidAmount("negative burn")
        have = self.balance_of(account)
        if have < amount:
            raise InsufficientBalance(f"{account} holds {format_wad(have)} {self.token}, burning {format_wad(amount)}")
        self._set(account, have - amount)
        self.total_supply -= amount

    def transfer(self, src: str, dst: str, amount: int) -> None:
        if amount < 0:
            raise InvalidAmount("negative transfer")
        have = self.balance_of(src)
        if have < amount:
            raise InsufficientBalance(f"{src} holds {format_wad(have)} {self.token}, moving {format_wad(amount)}")
        self._set(src, have - amount)
        self._set(dst, self.balance_of(dst) + amount)

    def is_conserved(self) -> bool:
        return self.total_supply == sum(self.balances.values()) and all(v > 0 for v in self.balances.values())

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "balances": {k: format_wad(v) for k, v in self.balances.items()},
            "total_supply": format_wad(self.total_supply),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TokenLedger:
        return cls(
            token=d["token"],
            balances={k: parse_wad(v) for k, v in d["balances"].items()},
            total_supply=parse_wad(d["total_supply"]),
        )


def total_collateral_value(protocol: Protocol) -> int:
    """USD value of collateral locked in vaults and auction escrow.

    Summed exactly across collateral types and floored once.
    """
    scaled = 0
    for cid, ledger in protocol.collateral.items():
        units = ledger.balance_of(VAT) + ledger.balance_of(FLIP)
        if units:
            scaled += units * protocol.feed.price(cid)
    return scaled // WAD
