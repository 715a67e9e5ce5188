"""Price ingestion, synthetic price generation and per-window return statistics.

Day indices are row positions in the price matrix; no calendar arithmetic is
done anywhere, so ``delta_t_days`` counts trading rows.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateCell,
    InsufficientHistory,
    MalformedCsv,
    MissingCell,
    NonPositivePrice,
)

CSV_HEADER = ("date", "ticker", "close")


@dataclass(frozen=True)
class PriceSeries:
    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(prices > 0):
            raise NonPositivePrice("all prices must be strictly positive")
        parsed = [_dt.date.fromisoformat(d) for d in self.dates]
        if any(b <= a for a, b in zip(parsed, parsed[1:])):
            raise ValueError("dates must be strictly increasing")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    def select_assets(self, n_a: int) -> "PriceSeries":
        """Keep the first ``n_a`` tickers in lexicographic order."""
        if not 1 <= n_a <= self.n_assets:
            raise ValueError(f"cannot select {n_a} of {self.n_assets} assets")
        order = sorted(range(self.n_assets), key=lambda i: self.tickers[i])[:n_a]
        return PriceSeries(
            tuple(self.tickers[i] for i in order), self.dates, self.prices[:, order]
        )

    def __eq__(self, other):
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.tickers == other.tickers
            and self.dates == other.dates
            and np.array_equal(self.prices, other.prices)
        )

    __hash__ = None


@dataclass(frozen=True)
class RebalanceGrid:
    delta_t_days: int
    n_t: int
    anchor_indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "anchor_indices", tuple(int(i) for i in self.anchor_indices))
        if self.delta_t_days < 1 or self.n_t < 1:
            raise ValueError("delta_t_days and n_t must be positive")
        if len(self.anchor_indices) != self.n_t + 1:
            raise ValueError("anchor_indices must hold n_t + 1 entries")
        steps = np.diff(self.anchor_indices)
        if np.any(steps != self.delta_t_days):
            raise ValueError("consecutive anchors must differ by delta_t_days rows")

    @classmethod
    def regular(cls, n_t: int, delta_t_days: int = 30, start: int | None = None) -> "RebalanceGrid":
        """Anchors every ``delta_t_days`` rows, starting late enough that the
        first covariance window is fully inside the data."""
        if start is None:
            start = delta_t_days
        return cls(delta_t_days, n_t, tuple(start + k * delta_t_days for k in range(n_t + 1)))

    @property
    def rows_needed(self) -> int:
        return self.anchor_indices[-1] + 1


@dataclass(frozen=True)
class MarketModel:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        if mu.ndim != 2 or sigma.shape != (mu.shape[0], mu.shape[1], mu.shape[1]):
            raise ValueError(f"inconsistent shapes mu {mu.shape}, sigma {sigma.shape}")
        if not np.allclose(sigma, np.swapaxes(sigma, 1, 2), rtol=0, atol=1e-12):
            raise ValueError("covariance matrices must be symmetric")
        for s in sigma:
            if s.size and np.linalg.eigvalsh(s).min() < -1e-10:
                raise ValueError("covariance matrices must be positive semidefinite")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_t(self) -> int:
        return self.mu.shape[0]

    @property
    def n_a(self) -> int:
        return self.mu.shape[1]

    @classmethod
    def zeros(cls, n_t: int, n_a: int) -> "MarketModel":
        return cls(np.zeros((n_t, n_a)), np.zeros((n_t, n_a, n_a)))


def load_prices_csv(path) -> PriceSeries:
    """Read a long-format ``date,ticker,close`` CSV into a dense PriceSeries."""
    cells: dict[tuple[str, str], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedCsv(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedCsv(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            date, ticker, close = (x.strip() for x in row)
            try:
                _dt.date.fromisoformat(date)
                value = float(close)
            except ValueError as exc:
                raise MalformedCsv(f"{path}:{lineno}: {exc}") from None
            if not ticker:
                raise MalformedCsv(f"{path}:{lineno}: empty ticker")
            if not value > 0:
                raise NonPositivePrice(f"{path}:{lineno}: close {close!r} for {ticker} on {date}")
            if (date, ticker) in cells:
                raise DuplicateCell(f"{path}:{lineno}: duplicate row for {ticker} on {date}")
            cells[(date, ticker)] = value

    dates = sorted({d for d, _ in cells})
    tickers = sorted({t for _, t in cells})
    prices = np.empty((len(dates), len(tickers)))
    for i, d in enumerate(dates):
        for j, t in enumerate(tickers):
            try:
                prices[i, j] = cells[(d, t)]
            except KeyError:
                raise MissingCell(f"{path}: no close for {t} on {d}") from None
    return PriceSeries(tuple(tickers), tuple(dates), prices)


def write_prices_csv(series: PriceSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, d in enumerate(series.dates):
            for j, t in enumerate(series.tickers):
                writer.writerow((d, t, repr(float(series.prices[i, j]))))


def _weekdays(n: int, start=_dt.date(2023, 1, 2)) -> list[str]:
    out = []
    day = start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += _dt.timedelta(days=1)
    return out


def generate_synthetic_prices(n_assets: int, n_days: int, seed: int) -> PriceSeries:
    """Geometric random walk prices.

    Everything is drawn from ``numpy.random.default_rng(seed)`` in a fixed
    order: start prices U(20, 200), daily log drift U(-5e-4, 1e-3), daily
    log volatility U(5e-3, 3e-2), then an ``(n_days - 1, n_assets)`` block of
    standard normals. Tickers are ``SYN00``, ``SYN01``, ... and dates are
    consecutive weekdays from 2023-01-02.
    """
    if n_assets < 1 or n_days < 2:
        raise ValueError("need n_assets >= 1 and n_days >= 2")
    rng = np.random.default_rng(seed)
    start = rng.uniform(20.0, 200.0, n_assets)
    drift = rng.uniform(-5e-4, 1e-3, n_assets)
    vol = rng.uniform(5e-3, 3e-2, n_assets)
    shocks = rng.standard_normal((n_days - 1, n_assets))
    log_steps = drift + vol * shocks
    log_path = np.vstack([np.zeros(n_assets), np.cumsum(log_steps, axis=0)])
    prices = start * np.exp(log_path)
    tickers = tuple(f"SYN{i:02d}" for i in range(n_assets))
    return PriceSeries(tickers, tuple(_weekdays(n_days)), prices)


def daily_log_returns(series: PriceSeries) -> np.ndarray:
    """Row s holds ln(P[s+1] / P[s])."""
    return np.diff(np.log(series.prices), axis=0)


def build_market_model(series: PriceSeries, grid: RebalanceGrid) -> MarketModel:
    """Window returns between anchors and trailing daily-return covariances.

    ``sigma[t]`` is the unbiased sample covariance of the ``delta_t_days``
    daily log returns ending at anchor ``t`` (prices on rows
    ``anchor - delta_t .. anchor``).
    """
    dt = grid.delta_t_days
    if dt < 2:
        raise InsufficientHistory("covariance windows need at least 2 daily returns")
    anchors = np.asarray(grid.anchor_indices)
    if anchors[0] - dt < 0 or anchors[-1] >= series.n_days:
        raise InsufficientHistory(
            f"grid needs rows {anchors[0] - dt}..{anchors[-1]}, series has {series.n_days}"
        )
    logp = np.log(series.prices)
    mu = logp[anchors[1:]] - logp[anchors[:-1]]
    daily = np.diff(logp, axis=0)
    sigma = np.empty((grid.n_t, series.n_assets, series.n_assets))
    for t in range(grid.n_t):
        window = daily[anchors[t] - dt : anchors[t]]
        centred = window - window.mean(axis=0)
        cov = centred.T @ centred / (dt - 1)
        sigma[t] = 0.5 * (cov + cov.T)
    return MarketModel(mu, sigma)
