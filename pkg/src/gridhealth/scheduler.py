"""Health-aware EV charging schedules.

A session charges at a constant rate, so meeting demand `z` means picking
n = ceil(z / c) slots inside [arrival, departure]; when z is not a multiple
of c the slot selected last carries only the remainder, and the objective
weights it by that partial energy. With the remainder on the last-selected
(most expensive) slot, picking the n cheapest slots is globally optimal,
which `brute_force_schedule` verifies by enumeration.

Costs are in dollars: h carries $/kWh per slot and energies are kWh.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDistribution,
    InfeasibleSession,
    MalformedRow,
    SignalCoverageGap,
    WindowTooLarge,
)
from .health import HealthSignal

BRUTE_FORCE_MAX_WINDOW = 20

STRATEGY_OPTIMAL = "optimal"
STRATEGY_FIRST = "first_hours"
STRATEGY_LATEST = "latest_hours"
STRATEGY_CONTINUOUS = "continuous"
ALL_STRATEGIES = (STRATEGY_OPTIMAL, STRATEGY_FIRST, STRATEGY_LATEST, STRATEGY_CONTINUOUS)

USD_PER_MWH_TO_PER_KWH = 1e-3


@dataclass(frozen=True)
class ChargingSession:
    """One EV: arrival/departure slot indices (inclusive), kWh demand, kW rate."""

    arrival: int
    departure: int
    demand_kwh: float
    rate_kw: float
    session_id: str = ""

    def __post_init__(self):
        if self.departure < self.arrival:
            raise InfeasibleSession(f"{self.session_id or 'session'}: departure before arrival")
        if self.demand_kwh < 0:
            raise InfeasibleSession(f"{self.session_id or 'session'}: negative demand")
        if self.rate_kw <= 0:
            raise InfeasibleSession(f"{self.session_id or 'session'}: rate must be positive")
        if self.demand_kwh > self.rate_kw * self.window_length + 1e-9:
            raise InfeasibleSession(
                f"{self.session_id or 'session'}: demand {self.demand_kwh} kWh exceeds "
                f"{self.rate_kw * self.window_length} kWh deliverable in the window"
            )

    @property
    def window_length(self) -> int:
        return self.departure - self.arrival + 1

    @property
    def slots_needed(self) -> int:
        if self.demand_kwh == 0:
            return 0
        return int(math.ceil(self.demand_kwh / self.rate_kw - 1e-9))


@dataclass
class Schedule:
    """Binary slot selection plus the per-slot energy it delivers."""

    session: ChargingSession
    bits: np.ndarray     # (window,), 0/1
    energy: np.ndarray   # (window,), kWh; rate_kw except on the remainder slot

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        self.energy = np.asarray(self.energy, dtype=np.float64)

    def total_energy(self) -> float:
        return math.fsum(self.energy)

    def cost(self, h: np.ndarray) -> float:
        """Total dollars against per-slot $/kWh prices for the window."""
        h = np.asarray(h, dtype=np.float64)
        if h.shape != self.energy.shape:
            raise ValueError("price vector does not cover the window")
        return float(math.fsum(self.energy * h))


@dataclass
class StrategyResult:
    strategy: str
    total_cost: float
    schedule: Schedule


def _make_schedule(session: ChargingSession, chosen_in_order: list[int]) -> Schedule:
    """Build a schedule from slots listed in selection order.

    The slot selected last carries the remainder energy; earlier ones charge
    at full rate.
    """
    w = session.window_length
    bits = np.zeros(w, dtype=np.int8)
    energy = np.zeros(w)
    n = len(chosen_in_order)
    if n:
        remainder = session.demand_kwh - (n - 1) * session.rate_kw
        for slot in chosen_in_order[:-1]:
            bits[slot] = 1
            energy[slot] = session.rate_kw
        last = chosen_in_order[-1]
        bits[last] = 1
        energy[last] = remainder
    return Schedule(session, bits, energy)


def _check_h(session: ChargingSession, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.shape[0] != session.window_length:
        raise ValueError(
            f"h must cover the window: expected {session.window_length} slots, got {h.shape}"
        )
    return h


def optimal_schedule(session: ChargingSession, h) -> Schedule:
    """Charge in the n cheapest slots; global cost minimum.

    Ties break toward the earlier slot. Selection order is cheapest first,
    so any remainder lands on the most expensive chosen slot.
    """
    h = _check_h(session, h)
    n = session.slots_needed
    order = np.argsort(h, kind="stable")
    return _make_schedule(session, [int(i) for i in order[:n]])


def brute_force_schedule(session: ChargingSession, h) -> Schedule:
    """Enumerate every feasible slot subset; verification oracle only."""
    h = _check_h(session, h)
    w = session.window_length
    if w > BRUTE_FORCE_MAX_WINDOW:
        raise WindowTooLarge(f"window {w} exceeds enumeration bound {BRUTE_FORCE_MAX_WINDOW}")
    n = session.slots_needed
    if n == 0:
        return _make_schedule(session, [])
    remainder = session.demand_kwh - (n - 1) * session.rate_kw
    idx = np.array(list(combinations(range(w), n)))  # (S, n), lexicographic
    hs = h[idx]
    hmax = hs.max(axis=1)
    costs = session.rate_kw * (hs.sum(axis=1) - hmax) + remainder * hmax
    best = int(np.argmin(costs))  # first minimum = earliest subset on ties
    subset = idx[best]
    # remainder on the most expensive slot of the subset (latest on ties)
    k = int(np.where(hs[best] == hmax[best])[0][-1])
    in_order = [int(s) for i, s in enumerate(subset) if i != k] + [int(subset[k])]
    return _make_schedule(session, in_order)


def baseline_schedule(session: ChargingSession, h, strategy: str) -> Schedule:
    """first_hours, latest_hours, or best contiguous block."""
    h = _check_h(session, h)
    n = session.slots_needed
    w = session.window_length
    if strategy == STRATEGY_FIRST:
        return _make_schedule(session, list(range(n)))
    if strategy == STRATEGY_LATEST:
        return _make_schedule(session, list(range(w - n, w)))
    if strategy == STRATEGY_CONTINUOUS:
        if n == 0:
            return _make_schedule(session, [])
        remainder = session.demand_kwh - (n - 1) * session.rate_kw
        best_cost, best_start = math.inf, 0
        for start in range(w - n + 1):
            block = h[start:start + n]
            cost = session.rate_kw * (block[:-1].sum() if n > 1 else 0.0) + remainder * block[-1]
            if cost < best_cost:
                best_cost = cost
                best_start = start
        return _make_schedule(session, list(range(best_start, best_start + n)))
    raise ValueError(f"unknown strategy {strategy!r}")


def schedule_for(session: ChargingSession, h, strategy: str) -> StrategyResult:
    if strategy == STRATEGY_OPTIMAL:
        sched = optimal_schedule(session, h)
    else:
        sched = baseline_schedule(session, h, strategy)
    return StrategyResult(strategy, sched.cost(np.asarray(h, dtype=np.float64)), sched)


def signal_to_slot_prices(signals: list[HealthSignal]) -> tuple[np.ndarray, int]:
    """Dense $/kWh per slot (internal + external) and the first timestamp."""
    if not signals:
        raise SignalCoverageGap("empty health signal series")
    stamps = np.array([s.timestamp for s in signals])
    if np.any(np.diff(stamps) != 1):
        raise SignalCoverageGap("health signal series has gaps")
    prices = np.array([(s.internal_cost + s.external_cost) * USD_PER_MWH_TO_PER_KWH
                       for s in signals])
    return prices, int(stamps[0])


def evaluate_fleet(sessions: list[ChargingSession], signals: list[HealthSignal],
                   strategies: list[str] | tuple[str, ...] = ALL_STRATEGIES) -> dict[str, float]:
    """Total fleet cost per strategy against one health-signal series."""
    prices, t0 = signal_to_slot_prices(signals)
    horizon = len(prices)
    totals = {s: 0.0 for s in strategies}
    for i, session in enumerate(sessions):
        lo = session.arrival - t0
        hi = session.departure - t0
        if lo < 0 or hi >= horizon:
            label = session.session_id or f"#{i}"
            raise SignalCoverageGap(
                f"session {label} window [{session.arrival}, {session.departure}] "
                f"outside signal range [{t0}, {t0 + horizon - 1}]"
            )
        h = prices[lo:hi + 1]
        for strategy in strategies:
            totals[strategy] += schedule_for(session, h, strategy).total_cost
    return totals


def sample_sessions(count: int, arrival_dist, departure_dist, demand_dist,
                    rate: float, seed: int, days: int = 1,
                    start_hour: int = 0, long_fraction: float = 0.0) -> list[ChargingSession]:
    """Draw a fleet from hour-of-day histograms and a demand distribution.

    Arrival is (uniform day, histogram hour); departure is the first slot
    strictly after arrival whose hour-of-day follows the departure
    histogram, which keeps overnight windows intact. A `long_fraction`
    share of vehicles stays parked one extra day (weekend / work-from-home
    pattern). Demands beyond what the window can deliver are clipped to
    the feasible maximum.

    `demand_dist` is either a sequence of empirical kWh values or
    {"kind": "uniform", "low": .., "high": ..}.
    """
    arrival_p = _normalize_hist(arrival_dist, "arrival")
    departure_p = _normalize_hist(departure_dist, "departure")
    if rate <= 0:
        raise DegenerateDistribution("charging rate must be positive")
    if days < 1:
        raise DegenerateDistribution("days must be at least 1")
    if not (0.0 <= long_fraction <= 1.0):
        raise DegenerateDistribution("long_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    sessions = []
    for i in range(count):
        day = int(rng.integers(0, days))
        arr_hour = int(rng.choice(24, p=arrival_p))
        arrival = start_hour + 24 * day + arr_hour
        dep_hour = int(rng.choice(24, p=departure_p))
        # first slot strictly after arrival with this hour-of-day
        offset = (dep_hour - (arrival + 1)) % 24
        departure = arrival + 1 + offset
        if rng.random() < long_fraction:
            departure += 24
        window = departure - arrival + 1
        demand = _draw_demand(demand_dist, rng)
        demand = min(demand, rate * window)
        sessions.append(ChargingSession(arrival, departure, demand, rate,
                                        session_id=f"S{i:05d}"))
    return sessions


def _normalize_hist(dist, name: str) -> np.ndarray:
    if isinstance(dist, dict):
        weights = np.zeros(24)
        for hour, wt in dist.items():
            weights[int(hour) % 24] = float(wt)
    else:
        weights = np.asarray(dist, dtype=np.float64)
        if weights.shape != (24,):
            raise DegenerateDistribution(f"{name} histogram must have 24 bins")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise DegenerateDistribution(f"{name} histogram has no usable mass")
    return weights / weights.sum()


def _draw_demand(demand_dist, rng: np.random.Generator) -> float:
    if isinstance(demand_dist, dict):
        kind = demand_dist.get("kind")
        if kind == "uniform":
            lo, hi = float(demand_dist["low"]), float(demand_dist["high"])
            if hi < lo or hi <= 0:
                raise DegenerateDistribution("bad uniform demand bounds")
            return float(rng.uniform(lo, hi))
        raise DegenerateDistribution(f"unknown demand spec {demand_dist!r}")
    values = np.asarray(demand_dist, dtype=np.float64)
    if values.size == 0 or np.any(values < 0):
        raise DegenerateDistribution("empirical demand list is empty or negative")
    return float(values[int(rng.integers(0, values.size))])


# -- session CSV interface -----------------------------------------------------

def load_sessions(path: str | Path) -> list[ChargingSession]:
    """Read `session_id,arrival,departure,demand_kwh,rate_kw` rows."""
    sessions = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["session_id", "arrival", "departure", "demand_kwh", "rate_kw"]:
            raise MalformedRow(f"{path}: bad sessions header")
        for row in reader:
            if len(row) != 5:
                raise MalformedRow(f"{path}: bad row {row!r}")
            try:
                sessions.append(ChargingSession(int(row[1]), int(row[2]), float(row[3]),
                                                float(row[4]), session_id=row[0]))
            except ValueError as exc:
                raise MalformedRow(f"{path}: bad number in {row!r}") from exc
    return sessions


def write_sessions(path: str | Path, sessions: list[ChargingSession]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["session_id", "arrival", "departure", "demand_kwh", "rate_kw"])
        for s in sessions:
            writer.writerow([s.session_id, s.arrival, s.departure,
                             repr(float(s.demand_kwh)), repr(float(s.rate_kw))])
