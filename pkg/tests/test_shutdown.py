import pytest

from makersim.errors import Frozen, InsufficientBalance, NotOwner, NotShutdown, Shutdown
from makersim.governance import redeem_dai, trigger_shutdown, withdraw_excess_collateral
from makersim.liquidation import run_debt_auction, scan_and_liquidate, start_liquidation
from makersim.market import END, KEEPER
from makersim.numerics import WAD, parse_wad
from makersim.savings import dsr_deposit, dsr_withdraw
from makersim.vaults import VaultState, generate_dai, open_vault
from conftest import funded_vault


class TestTrigger:
    def test_mint_paths_rejected(self, protocol):
        vid = funded_vault(protocol, eth=10 * WAD, debt=10 * WAD)
        trigger_shutdown(protocol, "peg broken")
        with pytest.raises(Shutdown) as exc:
            generate_dai(protocol, vid, "alice", 1)
        assert exc.value.code == "SHUTDOWN"
        with pytest.raises(Shutdown):
            open_vault(protocol, "alice", "ETH")
        with pytest.raises(Shutdown):
            run_debt_auction(protocol)

    def test_twice(self, protocol):
        trigger_shutdown(protocol)
        with pytest.raises(Shutdown):
            trigger_shutdown(protocol)

    def test_prices_frozen(self, protocol):
        trigger_shutdown(protocol)
        before = protocol.feed.to_dict()
        with pytest.raises(Frozen):
            protocol.feed.set_price("ETH", WAD)
        assert protocol.feed.to_dict() == before

    def test_no_new_liquidations(self, protocol):
        funded_vault(protocol, debt=100 * WAD)
        protocol.feed.set_price("ETH", 100 * WAD)
        trigger_shutdown(protocol)
        assert scan_and_liquidate(protocol)["flagged"] == []
        with pytest.raises(Shutdown):
            start_liquidation(protocol, 1)

    def test_pending_auction_still_settles(self, protocol):
        vid = funded_vault(protocol, debt=100 * WAD)
        funded_vault(protocol, owner="whale", eth=100 * WAD, debt=200 * WAD)
        protocol.feed.set_price("ETH", 140 * WAD)
        start_liquidation(protocol, vid)
        trigger_shutdown(protocol)
        protocol.dai.transfer("whale", KEEPER, 200 * WAD)
        out = scan_and_liquidate(protocol)
        assert out["settled"] == [1] and out["debt_auction"] is None
        protocol.audit()

    def test_accrual_stops(self, make_protocol):
        p = make_protocol(fee="0.2", dsr="0.1")
        funded_vault(p, eth=10 * WAD, debt=100 * WAD)
        dsr_deposit(p, "alice", 50 * WAD)
        p.advance(1000)
        trigger_shutdown(p)
        acc, chi = p.ilks["ETH"].fee_accumulator, p.pot.chi
        p.advance(10**8)
        assert p.ilks["ETH"].fee_accumulator == acc and p.pot.chi == chi
        # savings stay withdrawable
        dsr_withdraw(p, "alice", p.pot.balance_of("alice"))
        p.audit()


class TestWithdrawExcess:
    def test_half_returned(self, make_protocol):
        p = make_protocol(price="200")
        vid = funded_vault(p, debt=100 * WAD)
        trigger_shutdown(p)
        assert withdraw_excess_collateral(p, vid, "alice") == WAD // 2
        assert p.collateral["ETH"].balance_of(END) == WAD // 2
        assert p.vaults[vid].state is VaultState.CLOSED
        p.audit()

    def test_zero_debt(self, protocol):
        vid = funded_vault(protocol)
        trigger_shutdown(protocol)
        assert withdraw_excess_collateral(protocol, vid, "alice") == WAD

    def test_underwater_clamped(self, protocol):
        vid = funded_vault(protocol, debt=100 * WAD)
        protocol.feed.set_price("ETH", 50 * WAD)
        trigger_shutdown(protocol)
        assert withdraw_excess_collateral(protocol, vid, "alice") == 0
        assert protocol.collateral["ETH"].balance_of(END) == WAD

    def test_requires_shutdown(self, protocol):
        vid = funded_vault(protocol)
        with pytest.raises(NotShutdown):
            withdraw_excess_collateral(protocol, vid, "alice")

    def test_owner_only(self, protocol):
        vid = funded_vault(protocol)
        trigger_shutdown(protocol)
        with pytest.raises(NotOwner):
            withdraw_excess_collateral(protocol, vid, "bob")


class TestRedeem:
    def _wound_down(self, make_protocol, price="100", eth=3 * WAD, debt=100 * WAD):
        p = make_protocol(price=price)
        vid = funded_vault(p, eth=eth, debt=debt)
        trigger_shutdown(p)
        withdraw_excess_collateral(p, vid, "alice")
        return p

    def test_one_eth_for_hundred(self, make_protocol):
        p = self._wound_down(make_protocol)
        out = redeem_dai(p, "alice", 100 * WAD)
        assert out["collateral"] == {"ETH": "1.000000000000000000"}
        assert p.dai.total_supply == 0 and p.system_debt == 0
        p.audit()

    def test_zero(self, make_protocol):
        p = self._wound_down(make_protocol)
        before = p.snapshot()
        out = redeem_dai(p, "alice", 0)
        assert out["redeemed"] == "0.000000000000000000"
        assert p.snapshot() == before

    def test_requires_shutdown(self, protocol):
        with pytest.raises(NotShutdown):
            redeem_dai(protocol, "alice", 0)

    def test_more_than_held(self, make_protocol):
        p = self._wound_down(make_protocol)
        with pytest.raises(InsufficientBalance):
            redeem_dai(p, "alice", 100 * WAD + 1)

    def test_exhausted_pool_partial_fill(self, make_protocol):
        # underwater at the frozen price: the whole 1 ETH ($50) is all the pool has
        p = make_protocol(price="150")
        vid = funded_vault(p, debt=100 * WAD)
        p.feed.set_price("ETH", 50 * WAD)
        trigger_shutdown(p)
        withdraw_excess_collateral(p, vid, "alice")
        out = redeem_dai(p, "alice", 100 * WAD)
        assert parse_wad(out["redeemed"]) == 50 * WAD
        assert parse_wad(out["remainder"]) == 50 * WAD
        assert p.collateral["ETH"].balance_of(END) == 0
        # nothing left to give
        again = redeem_dai(p, "alice", 50 * WAD)
        assert again["redeemed"] == "0.000000000000000000"
        p.audit()

    def test_redemptions_never_exceed_pool(self, make_protocol):
        p = make_protocol(price="150")
        for i in range(7):
            funded_vault(p, owner=f"u{i}", eth=(i + 1) * WAD, debt=(13 * i + 5) * WAD)
        p.feed.set_price("ETH", 97 * WAD)
        trigger_shutdown(p)
        for i in range(7):
            withdraw_excess_collateral(p, i + 1, f"u{i}")
        pool = p.collateral["ETH"].balance_of(END)
        handed_out = 0
        for i in range(7):
            out = redeem_dai(p, f"u{i}", p.dai.balance_of(f"u{i}"))
            handed_out += parse_wad(out["collateral"].get("ETH", "0"))
            p.audit()
        assert handed_out <= pool
        assert handed_out + p.collateral["ETH"].balance_of(END) == pool
