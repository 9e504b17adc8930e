"""TVL of the simulated protocol, valuation ratios, and TVL time-series statistics."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .market import FLIP, VAT
from .numerics import RAY, WAD, format_wad, parse_wad, wad_div

if TYPE_CHECKING:
    from .protocol import Protocol


def protocol_tvl(p: Protocol) -> int:
    """Collateral in vaults and auctions at oracle prices, plus Dai in savings at $1.

    Savings count at their current value (principal plus accrued interest),
    not at expected future yield.
    """
    scaled = 0
    for cid, ledger in p.collateral.items():
        units = ledger.balance_of(VAT) + ledger.balance_of(FLIP)
        if units:
            scaled += units * p.feed.price(cid)
    scaled += p.pot.total_normalized * p.pot.chi // RAY * WAD
    return scaled // WAD


def mcap_tvl_ratio(market_cap: int, tvl: int) -> int:
    if tvl <= 0:
        raise ZeroDivisionError("TVL is zero")
    return wad_div(market_cap, tvl)


@dataclass(frozen=True)
class TvlPoint:
    date: dt.date
    tvl_usd: int


@dataclass(frozen=True)
class SeriesStats:
    peak: TvlPoint
    trough: TvlPoint
    drawdown_peak: TvlPoint  # start of the worst drawdown
    drawdown_trough: TvlPoint  # its low point
    max_drawdown: int  # wad fraction of drawdown_peak
    points: dict[dt.date, int]

    def value_at(self, date: dt.date | str) -> int:
        if isinstance(date, str):
            date = dt.date.fromisoformat(date)
        return self.points[date]

    def to_dict(self) -> dict:
        def pt(x: TvlPoint) -> dict:
            return {"date": x.date.isoformat(), "tvl_usd": format_wad(x.tvl_usd)}

        return {
            "peak": pt(self.peak),
            "trough": pt(self.trough),
            "drawdown_peak": pt(self.drawdown_peak),
            "drawdown_trough": pt(self.drawdown_trough),
            "max_drawdown": format_wad(self.max_drawdown),
            "points": len(self.points),
        }


def check_series(series: list[TvlPoint]) -> None:
    for prev, cur in zip(series, series[1:]):
        if cur.date <= prev.date:
            raise ValueError(f"dates must be strictly increasing: {prev.date} then {cur.date}")


def series_stats(series: Iterable[TvlPoint]) -> SeriesStats:
    """Peak, trough and max drawdown in one pass.

    The drawdown is measured from a running peak to any later point, so the
    returned pair is the worst (peak, subsequent trough) combination.
    """
    series = list(series)
    if not series:
        raise ValueError("empty series")
    check_series(series)
    peak = trough = series[0]
    run_peak = series[0]
    best = (0, series[0], series[0])
    for point in series[1:]:
        if point.tvl_usd > peak.tvl_usd:
            peak = point
        if point.tvl_usd < trough.tvl_usd:
            trough = point
        if point.tvl_usd > run_peak.tvl_usd:
            run_peak = point
        elif run_peak.tvl_usd:
            dd = wad_div(run_peak.tvl_usd - point.tvl_usd, run_peak.tvl_usd)
            if dd > best[0]:
                best = (dd, run_peak, point)
    max_dd, dd_peak, dd_trough = best
    return SeriesStats(
        peak=peak,
        trough=trough,
        drawdown_peak=dd_peak,
        drawdown_trough=dd_trough,
        max_drawdown=max_dd,
        points={p.date: p.tvl_usd for p in series},
    )


def load_tvl_csv(path: str | Path) -> list[TvlPoint]:
    """Read a ``date,tvl_usd`` CSV (ISO dates, decimal USD strings)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "tvl_usd"]:
            raise ValueError(f"{path}: expected header 'date,tvl_usd', got {header!r}")
        series = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            try:
                series.append(TvlPoint(dt.date.fromisoformat(row[0].strip()), parse_wad(row[1].strip())))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    check_series(series)
    return series
