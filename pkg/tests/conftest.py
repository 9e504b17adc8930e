from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from makersim.config import CollateralParams, Config
from makersim.numerics import WAD, parse_wad
from makersim.protocol import Protocol

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def make_config(
    price: str = "150",
    ratio: str = "1.5",
    fee: str = "0",
    penalty: str = "0.13",
    ceiling: str | None = None,
    dsr: str = "0",
    mkr_price: str = "500",
    discount: str = "0",
    **extra,
) -> Config:
    return Config(
        collateral_types={
            "ETH": CollateralParams(
                liquidation_ratio=parse_wad(ratio),
                stability_fee=parse_wad(fee),
                liquidation_penalty=parse_wad(penalty),
                debt_ceiling=None if ceiling is None else parse_wad(ceiling),
            )
        },
        prices={"ETH": parse_wad(price), "MKR": parse_wad(mkr_price)},
        dsr=parse_wad(dsr),
        auction_discount=parse_wad(discount),
        **extra,
    )


@pytest.fixture
def make_protocol():
    def factory(**kwargs) -> Protocol:
        return Protocol.from_config(make_config(**kwargs))

    return factory


@pytest.fixture
def protocol(make_protocol) -> Protocol:
    return make_protocol()


def funded_vault(p: Protocol, owner: str = "alice", eth: int = WAD, debt: int = 0) -> int:
    """Faucet ``eth`` units to ``owner``, lock them in a fresh vault, draw ``debt``."""
    from makersim.vaults import deposit_collateral, generate_dai, open_vault

    p.faucet(owner, "ETH", eth)
    vid = open_vault(p, owner, "ETH")
    deposit_collateral(p, vid, owner, eth)
    if debt:
        generate_dai(p, vid, owner, debt)
    return vid


# acceptance summary: one line per criterion

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "passed": 0, "failed": 0})
    entry["passed" if report.outcome == "passed" else "failed"] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        status = "PASS" if entry["failed"] == 0 else "FAIL"
        terminalreporter.write_line(
            f"[{status}] criterion {number}: {entry['title']} ({entry['passed']} passed, {entry['failed']} failed)"
        )
