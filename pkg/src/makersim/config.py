"""Run configuration: collateral types, annual rates, auction and governance knobs.

Config files are JSON; every amount or rate is a decimal string::

    {
      "collateral_types": {
        "ETH": {"liquidation_ratio": "1.5", "stability_fee": "0.05",
                "liquidation_penalty": "0.13", "debt_ceiling": null}
      },
      "prices": {"ETH": "150", "MKR": "500"},
      "dsr": "0.01",
      "auction_discount": "0.03",
      "vote_reward": "0.01",
      "surplus_floor": "0",
      "pass_threshold": "0.5",
      "mkr_genesis": {"alice": "100"}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .numerics import WAD, format_wad, parse_wad


class ConfigError(ValueError):
    pass


RESERVED_ASSETS = {"DAI", "MKR"}


@dataclass(frozen=True)
class CollateralParams:
    liquidation_ratio: int
    stability_fee: int = 0  # annual, wad fraction
    liquidation_penalty: int = 13 * WAD // 100
    debt_ceiling: int | None = None

    def to_dict(self) -> dict:
        return {
            "liquidation_ratio": format_wad(self.liquidation_ratio),
            "stability_fee": format_wad(self.stability_fee),
            "liquidation_penalty": format_wad(self.liquidation_penalty),
            "debt_ceiling": None if self.debt_ceiling is None else format_wad(self.debt_ceiling),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CollateralParams:
        unknown = set(d) - {"liquidation_ratio", "stability_fee", "liquidation_penalty", "debt_ceiling"}
        if unknown:
            raise ConfigError(f"unknown collateral fields: {sorted(unknown)}")
        if "liquidation_ratio" not in d:
            raise ConfigError("collateral type needs liquidation_ratio")
        params = cls(
            liquidation_ratio=parse_wad(d["liquidation_ratio"]),
            stability_fee=parse_wad(d.get("stability_fee", "0")),
            liquidation_penalty=parse_wad(d.get("liquidation_penalty", "0.13")),
            debt_ceiling=None if d.get("debt_ceiling") is None else parse_wad(d["debt_ceiling"]),
        )
        params.validate()
        return params

    def validate(self) -> None:
        if self.liquidation_ratio < WAD:
            raise ConfigError("liquidation_ratio must be >= 1.0")
        if self.liquidation_penalty > WAD:
            raise ConfigError("liquidation_penalty must be <= 1.0")


def check_account(name: str) -> str:
    if not isinstance(name, str) or not name or name.startswith("@"):
        raise ConfigError(f"invalid account name: {name!r}")
    return name


@dataclass
class Config:
    collateral_types: dict[str, CollateralParams] = field(default_factory=dict)
    prices: dict[str, int] = field(default_factory=dict)
    dsr: int = 0
    auction_discount: int = 3 * WAD // 100
    vote_reward: int = WAD // 100
    surplus_floor: int = 0
    pass_threshold: int = WAD // 2
    mkr_genesis: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        for cid, params in self.collateral_types.items():
            if not cid or cid.startswith("@") or cid in RESERVED_ASSETS:
                raise ConfigError(f"invalid collateral id: {cid!r}")
            params.validate()
        if self.auction_discount >= WAD:
            raise ConfigError("auction_discount must be < 1.0")
        if self.pass_threshold >= WAD:
            raise ConfigError("pass_threshold must be < 1.0")
        for account in self.mkr_genesis:
            check_account(account)
        for asset, price in self.prices.items():
            if price <= 0:
                raise ConfigError(f"price for {asset} must be positive")

    def to_dict(self) -> dict:
        return {
            "collateral_types": {k: v.to_dict() for k, v in self.collateral_types.items()},
            "prices": {k: format_wad(v) for k, v in self.prices.items()},
            "dsr": format_wad(self.dsr),
            "auction_discount": format_wad(self.auction_discount),
            "vote_reward": format_wad(self.vote_reward),
            "surplus_floor": format_wad(self.surplus_floor),
            "pass_threshold": format_wad(self.pass_threshold),
            "mkr_genesis": {k: format_wad(v) for k, v in self.mkr_genesis.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> Config:
        known = {
            "collateral_types", "prices", "dsr", "auction_discount", "vote_reward",
            "surplus_floor", "pass_threshold", "mkr_genesis",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            cfg = cls(
                collateral_types={k: CollateralParams.from_dict(v) for k, v in d.get("collateral_types", {}).items()},
                prices={k: parse_wad(v) for k, v in d.get("prices", {}).items()},
                dsr=parse_wad(d.get("dsr", "0")),
                auction_discount=parse_wad(d.get("auction_discount", "0.03")),
                vote_reward=parse_wad(d.get("vote_reward", "0.01")),
                surplus_floor=parse_wad(d.get("surplus_floor", "0")),
                pass_threshold=parse_wad(d.get("pass_threshold", "0.5")),
                mkr_genesis={k: parse_wad(v) for k, v in d.get("mkr_genesis", {}).items()},
            )
        except ConfigError:
            raise
        except (ValueError, TypeError, AttributeError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg


def load_config(path: str | Path) -> Config:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return Config.from_dict(data)
