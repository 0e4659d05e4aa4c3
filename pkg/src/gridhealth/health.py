"""Concentration changes to monetized health impacts.

The concentration-response step supports the log-linear form
``Y0 * POP * (1 - exp(-alpha . dC))`` and a plain linear variant
``Y0 * POP * (alpha . dC)``; which endpoints use which form is part of the
configuration, not the code. Cases are valued per endpoint in dollars and
aggregated into a per-MWh (internal, external) signal according to each
receptor's membership in the source territory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dispersion import SourceReceptorMatrix, apply_source_receptor
from .emissions import EmissionFactorTable, emissions_from_mix
from .errors import (
    DimensionMismatch,
    MalformedRow,
    MissingValuation,
    UnknownReceptor,
)
from .ingest import FuelMixRecord

LOG_LINEAR = "log_linear"
LINEAR = "linear"


@dataclass
class ReceptorProfile:
    """Population, baseline incidence rates, and territory membership."""

    receptor_id: str
    population: float
    baseline_rates: dict[str, float]  # endpoint_id -> incidence per person-year
    internal: bool

    def __post_init__(self):
        if self.population < 0:
            raise ValueError(f"receptor {self.receptor_id}: negative population")
        for k, v in self.baseline_rates.items():
            if v < 0:
                raise ValueError(f"receptor {self.receptor_id}: negative rate for {k}")


@dataclass
class ConcentrationResponse:
    """Response coefficients for one health endpoint."""

    endpoint_id: str
    alpha: np.ndarray  # (K,), per ug/m3
    form: str = LOG_LINEAR

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.form not in (LOG_LINEAR, LINEAR):
            raise ValueError(f"unknown response form {self.form!r}")
        if np.any(self.alpha < 0):
            raise ValueError(f"endpoint {self.endpoint_id}: negative alpha")


@dataclass
class HealthValuation:
    endpoint_id: str
    dollars_per_case: float

    def __post_init__(self):
        if self.dollars_per_case < 0:
            raise ValueError(f"endpoint {self.endpoint_id}: negative valuation")


@dataclass
class HealthSignal:
    """Monetized health cost of 1 MWh at one hour, split by territory."""

    internal_cost: float
    external_cost: float
    timestamp: int = 0

    def __post_init__(self):
        if self.internal_cost < 0 or self.external_cost < 0:
            raise ValueError("health signal costs must be nonnegative")

    @property
    def total(self) -> float:
        return self.internal_cost + self.external_cost


def delta_health(
    profile: ReceptorProfile, cr: ConcentrationResponse, delta_conc: np.ndarray
) -> float:
    """Change in cases at one receptor for one endpoint."""
    delta_conc = np.asarray(delta_conc, dtype=np.float64)
    if delta_conc.shape != cr.alpha.shape:
        raise DimensionMismatch(
            f"delta_conc has {delta_conc.shape}, alpha has {cr.alpha.shape}"
        )
    if np.any(delta_conc < 0):
        raise ValueError("delta_health requires nonnegative concentration changes")
    if cr.endpoint_id not in profile.baseline_rates:
        raise DimensionMismatch(
            f"receptor {profile.receptor_id} has no baseline rate for {cr.endpoint_id}"
        )
    base = profile.baseline_rates[cr.endpoint_id] * profile.population
    exposure = float(cr.alpha @ delta_conc)
    if cr.form == LINEAR:
        return base * exposure
    return base * -math.expm1(-exposure)


def monetize(cases_by_endpoint: dict[str, float], valuations: list[HealthValuation]) -> float:
    """Dollar value of a bundle of endpoint case counts."""
    values = {v.endpoint_id: v.dollars_per_case for v in valuations}
    total = 0.0
    for endpoint, cases in cases_by_endpoint.items():
        if endpoint not in values:
            raise MissingValuation(f"no valuation for endpoint {endpoint!r}")
        total += cases * values[endpoint]
    return total


def split_internal_external(
    costs: dict[str, float], profiles: list[ReceptorProfile]
) -> tuple[float, float]:
    """Sum receptor costs into (internal, external); preserves the total.

    Each receptor lands in exactly one bucket and each bucket is an
    exactly-rounded sum (math.fsum), so nothing is lost to accumulation
    order.
    """
    flags = {p.receptor_id: p.internal for p in profiles}
    internal_costs, external_costs = [], []
    for receptor_id, cost in costs.items():
        if receptor_id not in flags:
            raise UnknownReceptor(f"no profile for receptor {receptor_id!r}")
        (internal_costs if flags[receptor_id] else external_costs).append(cost)
    return math.fsum(internal_costs), math.fsum(external_costs)


@dataclass
class PipelineConfig:
    """Frozen bundle of everything needed to turn a mix into a HealthSignal."""

    factors: EmissionFactorTable
    sr_matrix: SourceReceptorMatrix
    profiles: list[ReceptorProfile]
    responses: list[ConcentrationResponse]
    valuations: list[HealthValuation]

    def __post_init__(self):
        if self.factors.pollutant_names != self.sr_matrix.pollutant_names:
            raise DimensionMismatch(
                "factor table and source-receptor matrix disagree on pollutants"
            )
        k = len(self.factors.pollutant_names)
        for cr in self.responses:
            if cr.alpha.shape != (k,):
                raise DimensionMismatch(f"endpoint {cr.endpoint_id}: alpha must have length {k}")
        profile_ids = {p.receptor_id for p in self.profiles}
        for rid in self.sr_matrix.receptor_ids:
            if rid not in profile_ids:
                raise UnknownReceptor(f"matrix receptor {rid!r} has no profile")
        valued = {v.endpoint_id for v in self.valuations}
        for cr in self.responses:
            if cr.endpoint_id not in valued:
                raise MissingValuation(f"endpoint {cr.endpoint_id!r} has no valuation")
            for p in self.profiles:
                if cr.endpoint_id not in p.baseline_rates:
                    raise DimensionMismatch(
                        f"receptor {p.receptor_id} lacks a baseline rate for {cr.endpoint_id}"
                    )

    def profile_for(self, receptor_id: str) -> ReceptorProfile:
        for p in self.profiles:
            if p.receptor_id == receptor_id:
                return p
        raise UnknownReceptor(receptor_id)


def receptor_costs(mix: FuelMixRecord, config: PipelineConfig) -> dict[str, float]:
    """Monetized cost per receptor of consuming 1 MWh at this mix."""
    ev = emissions_from_mix(mix, config.factors, 1.0)
    conc = apply_source_receptor(ev, config.sr_matrix)
    costs: dict[str, float] = {}
    for i, rid in enumerate(config.sr_matrix.receptor_ids):
        profile = config.profile_for(rid)
        cases = {
            cr.endpoint_id: delta_health(profile, cr, conc.delta[i])
            for cr in config.responses
        }
        costs[rid] = monetize(cases, config.valuations)
    return costs


def impact_per_mwh(mix: FuelMixRecord, config: PipelineConfig) -> HealthSignal:
    """Full chain: mix -> emissions -> dispersion -> cases -> dollars."""
    costs = receptor_costs(mix, config)
    internal, external = split_internal_external(costs, config.profiles)
    return HealthSignal(internal, external, timestamp=mix.timestamp)


# --- config file loaders ----------------------------------------------------

def load_receptor_profiles(path: str | Path, endpoints: list[str]) -> list[ReceptorProfile]:
    """Read `receptor_id,population,internal,<rate per endpoint...>` rows."""
    profiles = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["receptor_id", "population", "internal", *endpoints]
        if header != expected:
            raise MalformedRow(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            if len(row) != len(expected):
                raise MalformedRow(f"{path}: wrong arity in {row!r}")
            try:
                population = float(row[1])
                rates = {e: float(v) for e, v in zip(endpoints, row[3:])}
            except ValueError as exc:
                raise MalformedRow(f"{path}: bad number in {row!r}") from exc
            internal = row[2].strip().lower() in ("1", "true", "yes")
            profiles.append(ReceptorProfile(row[0], population, rates, internal))
    return profiles


def load_concentration_responses(path: str | Path) -> list[ConcentrationResponse]:
    """Read `endpoint_id,form,<alpha per pollutant...>` rows."""
    responses = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["endpoint_id", "form"]:
            raise MalformedRow(f"{path}: expected header 'endpoint_id,form,<alphas...>'")
        for row in reader:
            if len(row) != len(header):
                raise MalformedRow(f"{path}: wrong arity in {row!r}")
            try:
                alpha = np.array([float(v) for v in row[2:]])
            except ValueError as exc:
                raise MalformedRow(f"{path}: bad alpha in {row!r}") from exc
            responses.append(ConcentrationResponse(row[0], alpha, row[1].strip()))
    return responses


def load_valuations(path: str | Path) -> list[HealthValuation]:
    """Read `endpoint_id,dollars_per_case` rows."""
    valuations = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["endpoint_id", "dollars_per_case"]:
            raise MalformedRow(f"{path}: expected header 'endpoint_id,dollars_per_case'")
        for row in reader:
            if len(row) != 2:
                raise MalformedRow(f"{path}: bad row {row!r}")
            try:
                valuations.append(HealthValuation(row[0], float(row[1])))
            except ValueError as exc:
                raise MalformedRow(f"{path}: bad number in {row!r}") from exc
    return valuations


def write_signals_csv(path: str | Path, signals: list[HealthSignal]) -> None:
    """Write `timestamp,internal_usd_per_mwh,external_usd_per_mwh` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "internal_usd_per_mwh", "external_usd_per_mwh"])
        for s in signals:
            writer.writerow([s.timestamp, repr(float(s.internal_cost)), repr(float(s.external_cost))])


def load_signals_csv(path: str | Path) -> list[HealthSignal]:
    signals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "internal_usd_per_mwh", "external_usd_per_mwh"]:
            raise MalformedRow(f"{path}: bad health-signal header")
        for row in reader:
            if len(row) != 3:
                raise MalformedRow(f"{path}: bad row {row!r}")
            try:
                signals.append(HealthSignal(float(row[1]), float(row[2]), int(row[0])))
            except ValueError as exc:
                raise MalformedRow(f"{path}: bad number in {row!r}") from exc
    return signals
