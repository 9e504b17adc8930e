"""The single-writer protocol state and its global audits."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .config import Config
from .errors import TimeRegression
from .governance import Proposal
from .liquidation import Auction
from .market import DAI, FLIP, KEEPER, MKR, POT, VAT, VOW, CollateralType, PriceFeed, TokenLedger
from .numerics import RAY, annual_to_per_second, format_wad, parse_wad
from .savings import SavingsPot, dsr_accrue
from .vaults import Vault, VaultState, accrue_fees, ilk_of


class AuditFailure(AssertionError):
    pass


@dataclass
class Counters:
    dai_minted: int = 0
    dai_burned: int = 0
    mkr_genesis: int = 0
    mkr_rewards: int = 0
    mkr_debt_minted: int = 0
    mkr_burned: int = 0
    collateral_faucet: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dai_minted": format_wad(self.dai_minted),
            "dai_burned": format_wad(self.dai_burned),
            "mkr_genesis": format_wad(self.mkr_genesis),
            "mkr_rewards": format_wad(self.mkr_rewards),
            "mkr_debt_minted": format_wad(self.mkr_debt_minted),
            "mkr_burned": format_wad(self.mkr_burned),
            "collateral_faucet": {k: format_wad(v) for k, v in self.collateral_faucet.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> Counters:
        return cls(
            dai_minted=parse_wad(d["dai_minted"]),
            dai_burned=parse_wad(d["dai_burned"]),
            mkr_genesis=parse_wad(d["mkr_genesis"]),
            mkr_rewards=parse_wad(d["mkr_rewards"]),
            mkr_debt_minted=parse_wad(d["mkr_debt_minted"]),
            mkr_burned=parse_wad(d["mkr_burned"]),
            collateral_faucet={k: parse_wad(v) for k, v in d["collateral_faucet"].items()},
        )


@dataclass
class Protocol:
    """All mutable simulation state.

    Dai accounting keeps one exact identity: Dai supply equals the principal
    still owed by vaults and active auctions plus ``system_debt`` (Dai that
    no vault backs any more, e.g. after a shortfall or unfunded savings
    interest). Accrued-but-unpaid stability fees are not Dai yet; they turn
    into surplus Dai when repaid.
    """

    auction_discount: int = 3 * 10**16
    vote_reward: int = 10**16
    surplus_floor: int = 0
    pass_threshold: int = 5 * 10**17
    now: int = 0
    live: bool = True
    shutdown_reason: str | None = None
    shutdown_at: int | None = None
    ilks: dict[str, CollateralType] = field(default_factory=dict)
    feed: PriceFeed = field(default_factory=PriceFeed)
    dai: TokenLedger = field(default_factory=lambda: TokenLedger(DAI))
    mkr: TokenLedger = field(default_factory=lambda: TokenLedger(MKR))
    collateral: dict[str, TokenLedger] = field(default_factory=dict)
    vaults: dict[int, Vault] = field(default_factory=dict)
    auctions: dict[int, Auction] = field(default_factory=dict)
    pot: SavingsPot = field(default_factory=SavingsPot)
    proposals: dict[int, Proposal] = field(default_factory=dict)
    system_debt: int = 0
    counters: Counters = field(default_factory=Counters)
    # settlement / governance records for the run report; not part of the snapshot
    log: list[dict] = field(default_factory=list, compare=False, repr=False)

    @classmethod
    def from_config(cls, config: Config) -> Protocol:
        config.validate()
        p = cls(
            auction_discount=config.auction_discount,
            vote_reward=config.vote_reward,
            surplus_floor=config.surplus_floor,
            pass_threshold=config.pass_threshold,
        )
        for cid, params in config.collateral_types.items():
            p.add_collateral_type(
                cid,
                liquidation_ratio=params.liquidation_ratio,
                stability_rate=annual_to_per_second(params.stability_fee),
                liquidation_penalty=params.liquidation_penalty,
                debt_ceiling=params.debt_ceiling,
            )
        for asset, price in config.prices.items():
            p.feed.set_price(asset, price)
        p.pot.set_rate(annual_to_per_second(config.dsr), 0)
        for account, amount in config.mkr_genesis.items():
            p.mkr.mint(account, amount)
            p.counters.mkr_genesis += amount
        return p

    def add_collateral_type(self, cid: str, **params) -> CollateralType:
        ilk = CollateralType(cid, rate_base_time=self.now, accumulator_updated_at=self.now, **params)
        self.ilks[cid] = ilk
        self.collateral.setdefault(cid, TokenLedger(cid))
        self.counters.collateral_faucet.setdefault(cid, 0)
        return ilk

    # token plumbing with counters

    def mint_dai(self, account: str, amount: int) -> None:
        self.dai.mint(account, amount)
        self.counters.dai_minted += amount

    def burn_dai(self, account: str, amount: int) -> None:
        self.dai.burn(account, amount)
        self.counters.dai_burned += amount

    def faucet(self, account: str, cid: str, amount: int) -> None:
        ilk_of(self, cid)
        self.collateral[cid].mint(account, amount)
        self.counters.collateral_faucet[cid] += amount

    # clock

    def advance(self, now: int) -> None:
        """Move the clock and accrue fee and savings accumulators to ``now``.

        Accumulators stop at shutdown; the clock still moves.
        """
        if now < self.now:
            raise TimeRegression(f"clock at {self.now}, asked for {now}")
        self.now = now
        if not self.live:
            return
        for cid in sorted(self.ilks):
            accrue_fees(self, cid, now)
        dsr_accrue(self, now)

    # audits

    def audit(self) -> None:
        """Raise AuditFailure unless every global ledger identity holds exactly."""
        ledgers = [self.dai, self.mkr, *self.collateral.values()]
        for ledger in ledgers:
            if not ledger.is_conserved():
                raise AuditFailure(f"{ledger.token}: total supply != sum of balances")

        open_states = (VaultState.OPEN, VaultState.IN_LIQUIDATION)
        principal = sum(v.principal for v in self.vaults.values() if v.state in open_states)
        principal += sum(a.principal for a in self.auctions.values() if a.is_active)
        if self.dai.total_supply != principal + self.system_debt:
            raise AuditFailure(
                f"Dai backing: supply {self.dai.total_supply} != principal {principal} + system debt {self.system_debt}"
            )
        if self.dai.total_supply != self.counters.dai_minted - self.counters.dai_burned:
            raise AuditFailure("Dai supply != minted - burned")

        c = self.counters
        expected_mkr = c.mkr_genesis + c.mkr_rewards + c.mkr_debt_minted - c.mkr_burned
        if self.mkr.total_supply != expected_mkr:
            raise AuditFailure(f"MKR supply {self.mkr.total_supply} != genesis+rewards+debt mints-burns {expected_mkr}")

        for cid, ledger in self.collateral.items():
            if ledger.total_supply != c.collateral_faucet.get(cid, 0):
                raise AuditFailure(f"{cid}: collateral supply != total faucet")
            locked = sum(v.locked for v in self.vaults.values() if v.collateral_id == cid)
            if ledger.balance_of(VAT) != locked:
                raise AuditFailure(f"{cid}: vat balance {ledger.balance_of(VAT)} != sum locked {locked}")
            escrow = sum(a.lot for a in self.auctions.values() if a.is_active and a.collateral_id == cid)
            if ledger.balance_of(FLIP) != escrow:
                raise AuditFailure(f"{cid}: auction escrow mismatch")
            art = sum(
                v.normalized_debt for v in self.vaults.values() if v.collateral_id == cid
            )
            if self.ilks[cid].total_normalized_debt != art:
                raise AuditFailure(f"{cid}: normalized debt total mismatch")

        for v in self.vaults.values():
            if v.state is VaultState.CLOSED and (v.locked or v.normalized_debt or v.principal):
                raise AuditFailure(f"vault {v.id} closed but not empty")
            if v.state is not VaultState.OPEN and v.normalized_debt:
                raise AuditFailure(f"vault {v.id} carries debt outside OPEN")

        if sum(self.pot.accounts.values()) != self.pot.total_normalized:
            raise AuditFailure("pot normalized total mismatch")
        owed = self.pot.total_normalized * self.pot.chi // RAY
        if self.dai.balance_of(POT) < owed:
            raise AuditFailure("pot holds less Dai than it owes")

    # serialization

    def snapshot(self) -> dict:
        return {
            "params": {
                "auction_discount": format_wad(self.auction_discount),
                "vote_reward": format_wad(self.vote_reward),
                "surplus_floor": format_wad(self.surplus_floor),
                "pass_threshold": format_wad(self.pass_threshold),
            },
            "now": self.now,
            "live": self.live,
            "shutdown_reason": self.shutdown_reason,
            "shutdown_at": self.shutdown_at,
            "ilks": {k: v.to_dict() for k, v in self.ilks.items()},
            "feed": self.feed.to_dict(),
            "dai": self.dai.to_dict(),
            "mkr": self.mkr.to_dict(),
            "collateral": {k: v.to_dict() for k, v in self.collateral.items()},
            "vaults": {str(k): v.to_dict() for k, v in self.vaults.items()},
            "auctions": {str(k): v.to_dict() for k, v in self.auctions.items()},
            "pot": self.pot.to_dict(),
            "proposals": {str(k): v.to_dict() for k, v in self.proposals.items()},
            "system_debt": format_wad(self.system_debt),
            "counters": self.counters.to_dict(),
        }

    @classmethod
    def from_snapshot(cls, d: dict) -> Protocol:
        params = d["params"]
        return cls(
            auction_discount=parse_wad(params["auction_discount"]),
            vote_reward=parse_wad(params["vote_reward"]),
            surplus_floor=parse_wad(params["surplus_floor"]),
            pass_threshold=parse_wad(params["pass_threshold"]),
            now=d["now"],
            live=d["live"],
            shutdown_reason=d["shutdown_reason"],
            shutdown_at=d["shutdown_at"],
            ilks={k: CollateralType.from_dict(v) for k, v in d["ilks"].items()},
            feed=PriceFeed.from_dict(d["feed"]),
            dai=TokenLedger.from_dict(d["dai"]),
            mkr=TokenLedger.from_dict(d["mkr"]),
            collateral={k: TokenLedger.from_dict(v) for k, v in d["collateral"].items()},
            vaults={int(k): Vault.from_dict(v) for k, v in d["vaults"].items()},
            auctions={int(k): Auction.from_dict(v) for k, v in d["auctions"].items()},
            pot=SavingsPot.from_dict(d["pot"]),
            proposals={int(k): Proposal.from_dict(v) for k, v in d["proposals"].items()},
            system_debt=parse_wad(d["system_debt"]),
            counters=Counters.from_dict(d["counters"]),
        )

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.snapshot())

    def state_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    @property
    def surplus(self) -> int:
        return self.dai.balance_of(VOW)

    @property
    def keeper_dai(self) -> int:
        return self.dai.balance_of(KEEPER)


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")
