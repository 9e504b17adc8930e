"""Seeded random scenario generation for stress and conservation testing.

The generator drives a live Protocol while it writes events, so amounts are
picked from actual balances and limits; some events are still made to fail
on purpose. The output is ordinary scenario JSONL and replays on its own.
"""

from __future__ import annotations

import random

from .config import CollateralParams, Config
from .numerics import WAD, format_wad
from .protocol import Protocol
from .runner import apply_event
from .savings import dsr_balance
from .scenario import Event, _parse_args, dump_event
from .vaults import VaultState, current_debt, max_generatable

USERS = [f"u{i}" for i in range(8)]


def default_config() -> Config:
    return Config(
        collateral_types={
            "ETH": CollateralParams(liquidation_ratio=3 * WAD // 2, stability_fee=5 * WAD // 100),
            "WBTC": CollateralParams(liquidation_ratio=13 * WAD // 10, stability_fee=2 * WAD // 100,
                                     liquidation_penalty=WAD // 10),
        },
        prices={"ETH": 2000 * WAD, "WBTC": 30000 * WAD, "MKR": 1000 * WAD},
        dsr=WAD // 100,
        vote_reward=WAD // 100,
        mkr_genesis={u: 100 * WAD for u in USERS},
    )


class ScenarioBuilder:
    def __init__(self, seed: int, config: Config | None = None):
        self.rng = random.Random(seed)
        self.config = config or default_config()
        self.p = Protocol.from_config(self.config)
        self.t = 0
        self.seq = 0
        self.lines: list[str] = []
        self.crash = False

    def emit(self, op: str, args: dict | None = None) -> dict:
        self.seq += 1
        args = args or {}
        self.lines.append(dump_event(self.t, self.seq, op, args))
        ev = Event(self.t, self.seq, op, _parse_args(op, args, self.seq), self.seq)
        return apply_event(self.p, ev)

    def frac(self, amount: int) -> int:
        if amount <= 0:
            return 0
        return amount * self.rng.randint(1, 1000) // 1000

    def cids(self) -> list[str]:
        return sorted(self.p.ilks)

    def vault_ids(self, state=VaultState.OPEN) -> list[int]:
        return [vid for vid, v in sorted(self.p.vaults.items()) if v.state is state]

    # individual event kinds

    def price_move(self) -> None:
        cid = self.rng.choice(self.cids())
        if self.p.feed.frozen:
            self.emit("set_price", {"asset": cid, "price": "1"})
            return
        price = self.p.feed.price(cid)
        lo, hi = (700, 1020) if self.crash else (950, 1050)
        new = max(1, price * self.rng.randint(lo, hi) // 1000)
        self.emit("set_price", {"asset": cid, "price": format_wad(new)})

    def faucet(self) -> None:
        cid = self.rng.choice(self.cids())
        unit = WAD if cid == "ETH" else WAD // 10
        self.emit("faucet", {"account": self.rng.choice(USERS), "collateral": cid,
                             "amount": format_wad(unit * self.rng.randint(1, 20))})

    def open_vault(self) -> None:
        self.emit("open_vault", {"owner": self.rng.choice(USERS), "collateral": self.rng.choice(self.cids())})

    def _pick_vault(self) -> tuple[int, str] | None:
        ids = self.vault_ids()
        if not ids:
            return None
        vid = self.rng.choice(ids)
        owner = self.p.vaults[vid].owner
        if self.rng.random() < 0.05:
            owner = self.rng.choice(USERS)  # sometimes a non-owner
        return vid, owner

    def deposit(self) -> None:
        pick = self._pick_vault()
        if pick:
            vid, caller = pick
            free = self.p.collateral[self.p.vaults[vid].collateral_id].balance_of(caller)
            self.emit("deposit", {"vault": vid, "caller": caller, "amount": format_wad(self.frac(free))})

    def generate(self) -> None:
        pick = self._pick_vault()
        if pick:
            vid, caller = pick
            room = max_generatable(self.p, vid) if self.p.live else 0
            amount = room if self.rng.random() < 0.3 else self.frac(room)
            if self.rng.random() < 0.05:
                amount += 1  # one ulp past the limit
            self.emit("generate", {"vault": vid, "caller": caller, "amount": format_wad(amount)})

    def repay(self) -> None:
        pick = self._pick_vault()
        if pick:
            vid, caller = pick
            owed = current_debt(self.p, self.p.vaults[vid])
            have = self.p.dai.balance_of(caller)
            amount = min(owed, have) if self.rng.random() < 0.3 else self.frac(min(owed, have))
            self.emit("repay", {"vault": vid, "caller": caller, "amount": format_wad(amount)})

    def withdraw(self) -> None:
        pick = self._pick_vault()
        if pick:
            vid, caller = pick
            self.emit("withdraw", {"vault": vid, "caller": caller,
                                   "amount": format_wad(self.frac(self.p.vaults[vid].locked))})

    def close(self) -> None:
        pick = self._pick_vault()
        if pick:
            vid, caller = pick
            self.emit("close", {"vault": vid, "caller": caller})

    def transfer(self) -> None:
        src, dst = self.rng.sample(USERS, 2)
        token = self.rng.choice(["DAI", "DAI", "MKR"])
        ledger = self.p.dai if token == "DAI" else self.p.mkr
        self.emit("transfer", {"token": token, "src": src, "dst": dst,
                               "amount": format_wad(self.frac(ledger.balance_of(src)))})

    def dsr(self) -> None:
        user = self.rng.choice(USERS)
        if self.rng.random() < 0.5:
            self.emit("dsr_deposit", {"account": user, "amount": format_wad(self.frac(self.p.dai.balance_of(user)))})
        else:
            bal = dsr_balance(self.p, user)
            amount = bal if self.rng.random() < 0.4 else self.frac(bal)
            self.emit("dsr_withdraw", {"account": user, "amount": format_wad(amount)})

    def fund_keeper(self) -> None:
        user = self.rng.choice(USERS)
        if self.rng.random() < 0.9:
            amount = self.frac(self.p.dai.balance_of(user))
            self.emit("fund_keeper", {"src": user, "token": "DAI", "amount": format_wad(amount)})
        else:
            # keep most MKR with the voters
            amount = self.frac(self.p.mkr.balance_of(user)) // 20
            self.emit("fund_keeper", {"src": user, "token": "MKR", "amount": format_wad(amount)})

    def governance(self) -> None:
        voting = [(pid, pr) for pid, pr in sorted(self.p.proposals.items()) if pr.state.value == "VOTING"]
        votable = [pid for pid, pr in voting if pr.deadline > self.t]
        due = [pid for pid, pr in voting if pr.deadline <= self.t]
        roll = self.rng.random()
        if due and roll < 0.3:
            self.emit("tally", {"proposal": self.rng.choice(due)})
        elif votable and roll < 0.97:
            # concentrate on the oldest open proposal, often with a large holder, so some of them pass
            pid = votable[0] if self.rng.random() < 0.7 else self.rng.choice(votable)
            pr = self.p.proposals[pid]
            fresh = [u for u in USERS if u not in pr.yes and u not in pr.no]
            if fresh and self.rng.random() < 0.5:
                account = max(fresh, key=self.p.mkr.balance_of)
            else:
                account = self.rng.choice(USERS)
            self.emit("vote", {"proposal": pid, "account": account, "support": self.rng.random() < 0.8})
        else:
            cid = self.rng.choice(self.cids())
            param, value = self.rng.choice([
                ("stability_rate", f"0.0{self.rng.randint(0, 9)}"),
                ("liquidation_ratio", f"1.{self.rng.randint(2, 7)}"),
                ("dsr_rate", f"0.0{self.rng.randint(0, 5)}"),
                ("liquidation_penalty", f"0.{self.rng.randint(5, 20):02d}"),
                ("debt_ceiling", str(self.rng.randint(10_000, 10_000_000))),
            ])
            args = {"param": param, "value": value, "deadline": self.t + self.rng.randint(10, 40) * 86400}
            if param != "dsr_rate":
                args["collateral"] = cid
            self.emit("propose", args)

    def withdraw_excess(self) -> None:
        ids = self.vault_ids()
        if ids:
            vid = self.rng.choice(ids)
            self.emit("withdraw_excess", {"vault": vid, "caller": self.p.vaults[vid].owner})

    def redeem(self) -> None:
        user = self.rng.choice(USERS)
        have = self.p.dai.balance_of(user)
        amount = have if self.rng.random() < 0.5 else self.frac(have)
        self.emit("redeem", {"holder": user, "amount": format_wad(amount)})

    # driver

    def build(self, n_events: int, crash: bool = False, shutdown_after: int | None = None) -> list[str]:
        self.crash = crash
        for user in USERS:
            for cid in self.cids():
                self.emit("faucet", {"account": user, "collateral": cid, "amount": "10"})
        live_mix = [
            (self.price_move, 10), (self.faucet, 3), (self.open_vault, 5), (self.deposit, 12),
            (self.generate, 14), (self.repay, 9), (self.withdraw, 6), (self.close, 2),
            (self.transfer, 6), (self.dsr, 7), (self.fund_keeper, 5),
            (lambda: self.emit("scan_and_liquidate"), 5), (lambda: self.emit("buy_and_burn"), 2),
            (self.governance, 4), (lambda: self.emit("checkpoint"), 1),
        ]
        dead_mix = [
            (self.withdraw_excess, 10), (self.redeem, 8), (self.generate, 3), (self.open_vault, 2),
            (self.dsr, 4), (self.transfer, 3), (self.repay, 3), (self.price_move, 2),
            (lambda: self.emit("scan_and_liquidate"), 1),
        ]
        while len(self.lines) < n_events:
            if shutdown_after is not None and self.p.live and len(self.lines) >= shutdown_after:
                self.emit("trigger_shutdown", {"reason": "scenario directive"})
                continue
            self.t += self.rng.choice([0, 0, 1, 60, 600, 3600, 86400])
            mix = live_mix if self.p.live else dead_mix
            action = self.rng.choices([m[0] for m in mix], weights=[m[1] for m in mix])[0]
            action()
        return self.lines


def random_scenario(seed: int, n_events: int = 1000, crash: bool = False, shutdown_after: int | None = None,
                    config: Config | None = None) -> str:
    builder = ScenarioBuilder(seed, config)
    return "\n".join(builder.build(n_events, crash=crash, shutdown_after=shutdown_after)) + "\n"


