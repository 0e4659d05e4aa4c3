"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines with the measured numbers.
"""

import csv
import json
import math
import time
from pathlib import Path

import numpy as np

from gridhealth.autodiff import Tensor, grad_check
from gridhealth.cli import main as cli_main
from gridhealth.dispersion import (
    DispersionLayer,
    SourceReceptorMatrix,
    apply_source_receptor,
    fit_dispersion_layer,
)
from gridhealth.emissions import EmissionVector
from gridhealth.forecaster import (
    ATTENTION,
    ForecastModel,
    HealthConverterNet,
    TrainConfig,
    TrainingData,
    beta_sweep,
    composite_loss,
)
from gridhealth.health import (
    ConcentrationResponse,
    ReceptorProfile,
    delta_health,
    impact_per_mwh,
    receptor_costs,
    split_internal_external,
)
from gridhealth.ingest import PlantRecord, allocate_generation
from gridhealth.scheduler import (
    ALL_STRATEGIES,
    ChargingSession,
    brute_force_schedule,
    evaluate_fleet,
    optimal_schedule,
    sample_sessions,
)

from conftest import make_record


def run_cli(*argv):
    assert cli_main([str(a) for a in argv]) == 0


def test_criterion_1_scheduler_exactness():
    """Optimal equals brute force on >= 10,000 random sessions, window <= 16."""
    rng = np.random.default_rng(2024)
    count, agree = 10000, 0
    t0 = time.monotonic()
    for _ in range(count):
        w = int(rng.integers(1, 17))
        rate = float(rng.uniform(3.0, 11.0))
        u = rng.random()
        if u < 0.1:
            demand = 0.0
        elif u < 0.5:
            demand = rate * int(rng.integers(1, w + 1))
        else:
            demand = float(rng.uniform(0.0, rate * w))
        s = ChargingSession(100, 100 + w - 1, demand, rate)
        h = rng.uniform(0.2, 6.0, size=w)
        if optimal_schedule(s, h).cost(h) == brute_force_schedule(s, h).cost(h):
            agree += 1
    elapsed = time.monotonic() - t0
    assert agree == count
    assert elapsed < 30.0
    print(f"\nCRITERION 1 PASS: {agree}/{count} exact cost agreement in {elapsed:.1f}s")


def test_criterion_2_strategy_dominance(synth_bundle):
    """Optimal beats first/latest by >= 10% and continuous by >= 5% in aggregate."""
    _, labels = synth_bundle
    arrival = np.zeros(24)
    arrival[[16, 17, 18, 19, 20, 21]] = [0.08, 0.18, 0.27, 0.23, 0.16, 0.08]
    depart = np.zeros(24)
    depart[[5, 6, 7, 8, 9]] = [0.08, 0.25, 0.34, 0.23, 0.10]
    fleet = sample_sessions(400, arrival, depart,
                            {"kind": "uniform", "low": 10, "high": 36},
                            rate=7.2, seed=11, days=27, long_fraction=0.35)
    totals = evaluate_fleet(fleet, labels, ALL_STRATEGIES)
    opt = totals["optimal"]
    red = {s: 100.0 * (totals[s] - opt) / totals[s]
           for s in ("first_hours", "latest_hours", "continuous")}
    assert opt < totals["first_hours"] and red["first_hours"] >= 10.0
    assert opt < totals["latest_hours"] and red["latest_hours"] >= 10.0
    assert opt < totals["continuous"] and red["continuous"] >= 5.0
    print(f"\nCRITERION 2 PASS: optimal cuts first {red['first_hours']:.1f}%, "
          f"latest {red['latest_hours']:.1f}%, continuous {red['continuous']:.1f}%")


def test_criterion_3_beta_tradeoff_direction(synth_bundle):
    """Health NMAE better at beta=0.5, fuel NMAE better at beta=0.998, >= 4/5 seeds."""
    series, labels = synth_bundle
    data = TrainingData.from_series(series, labels)
    health_ok = fuel_ok = 0
    per_run_limit = 600.0
    details = []
    for seed in range(5):
        cfg = TrainConfig(beta=0.5, window=24, epochs=12, step_size=0.004,
                          batch_size=128, seed=seed)
        t0 = time.monotonic()
        low, high = beta_sweep(data, [0.5, 0.998], cfg)
        elapsed = time.monotonic() - t0
        assert elapsed < 2 * per_run_limit
        health_ok += low.health_nmae <= high.health_nmae
        fuel_ok += high.fuel_nmae <= low.fuel_nmae
        details.append(f"seed{seed}: h {low.health_nmae:.3f}/{high.health_nmae:.3f} "
                       f"f {low.fuel_nmae:.3f}/{high.fuel_nmae:.3f}")
    assert health_ok >= 4, details
    assert fuel_ok >= 4, details
    print(f"\nCRITERION 3 PASS: health direction {health_ok}/5, fuel direction {fuel_ok}/5 "
          f"(T=24, columns are beta 0.5/0.998)")


def test_criterion_4_gradient_checks():
    """composite_loss, forward, converter, and dispersion layer pass grad_check < 1e-4."""
    rng = np.random.default_rng(123)
    errors = {}

    truth = rng.dirichlet(np.ones(6), size=8)
    truth_imp = np.abs(rng.normal(size=(8, 2)))
    pred0 = rng.dirichlet(np.ones(6), size=8)
    pred_imp0 = np.abs(rng.normal(size=(8, 2)))
    errors["loss/pred"] = grad_check(
        lambda t: composite_loss(t, truth, Tensor(pred_imp0), truth_imp, 0.6),
        Tensor(pred0), eps=1e-5)
    errors["loss/impact"] = grad_check(
        lambda t: composite_loss(Tensor(pred0), truth, t, truth_imp, 0.6),
        Tensor(pred_imp0), eps=1e-5)

    model = ForecastModel(ATTENTION, n_fuels=4, window=6, embed_dim=16, heads=4,
                          ff_dim=16, dropout=0.0, seed=3)
    hist = rng.dirichlet(np.ones(4), size=(2, 6))
    proj = Tensor(rng.normal(size=(2, 6, 4)))

    def forward_scalar_wrt_param(t):
        model.params["enc0_self_wq"] = t
        return (model.forward_tensor(Tensor(hist)) * proj).sum()

    errors["forward/param"] = grad_check(forward_scalar_wrt_param,
                                         model.params["enc0_self_wq"], eps=1e-5)
    errors["forward/input"] = grad_check(
        lambda t: (model.forward_tensor(t) * proj).sum(), Tensor(hist), eps=1e-5)

    conv = HealthConverterNet(4, hidden=12, seed=5)
    xin = rng.dirichlet(np.ones(4), size=7)
    cproj = Tensor(rng.normal(size=(7, 2)))

    def conv_scalar_wrt_w1(t):
        conv.params["w1"] = t
        return (conv.forward_tensor(Tensor(xin)) * cproj).sum()

    errors["converter/param"] = grad_check(conv_scalar_wrt_w1, conv.params["w1"], eps=1e-5)
    errors["converter/input"] = grad_check(
        lambda t: (conv.forward_tensor(t) * cproj).sum(), Tensor(xin), eps=1e-5)

    layer = DispersionLayer(3, 4, init_gain=0.8)
    emissions = Tensor(rng.uniform(0.0, 3.0, size=(5, 3)))
    target = Tensor(rng.uniform(0.0, 1.0, size=(5, 4, 3)))

    def layer_loss(t):
        layer.theta = t
        diff = layer._predict(emissions) - target
        return (diff * diff).mean()

    errors["dispersion/theta"] = grad_check(layer_loss, layer.theta, eps=1e-5)

    worst = max(errors.values())
    assert worst < 1e-4, errors
    print(f"\nCRITERION 4 PASS: max grad-check relative error {worst:.2e} "
          f"over {len(errors)} targets")


def test_criterion_5_concentration_response_properties():
    """Zero at zero, exact half-baseline at ln 2, linear agreement at small exposure."""
    profile = ReceptorProfile("R", 100000.0, {"ep": 0.01}, True)
    log_cr = ConcentrationResponse("ep", np.array([1.0]), "log_linear")
    lin_cr = ConcentrationResponse("ep", np.array([1.0]), "linear")

    assert delta_health(profile, log_cr, np.array([0.0])) == 0.0
    half = delta_health(profile, log_cr, np.array([math.log(2.0)]))
    assert abs(half - 500.0) <= 1e-12

    worst_rel = 0.0
    for x in (1e-4, 5e-5, 1e-6):
        log_val = delta_health(profile, log_cr, np.array([x]))
        lin_val = delta_health(profile, lin_cr, np.array([x]))
        worst_rel = max(worst_rel, abs(log_val - lin_val) / lin_val)
    assert worst_rel < 1e-4  # 0.01%
    print(f"\nCRITERION 5 PASS: ln2 residual {abs(half - 500.0):.1e}, "
          f"linear agreement {worst_rel:.2e}")


def test_criterion_6_zero_fixpoint_and_conservation(default_config):
    """Renewable-only mixes cost (0,0); splits and allocations conserve totals."""
    fuels = default_config.factors.fuel_names
    renewable = make_record([0.0, 0.0, 0.0, 0.3, 0.2, 0.3, 0.2, 0.0], fuels)
    signal = impact_per_mwh(renewable, default_config)
    assert signal.internal_cost == 0.0 and signal.external_cost == 0.0

    rng = np.random.default_rng(31)
    internal_ids = {p.receptor_id for p in default_config.profiles if p.internal}
    max_split_residual = 0.0
    for _ in range(50):
        mix = make_record(rng.dirichlet(np.ones(len(fuels))), fuels)
        costs = receptor_costs(mix, default_config)
        internal, external = split_internal_external(costs, default_config.profiles)
        # exactness: each bucket is exactly the sum of its receptor group
        assert internal == math.fsum(v for k, v in costs.items() if k in internal_ids)
        assert external == math.fsum(v for k, v in costs.items() if k not in internal_ids)
        total = math.fsum(costs.values())
        max_split_residual = max(max_split_residual,
                                 abs((internal + external) - total) / max(total, 1e-12))
    assert max_split_residual < 1e-12

    plants = [PlantRecord("c1", "BA", "COL", 3.0, {}),
              PlantRecord("c2", "BA", "COL", 2.0, {}),
              PlantRecord("g1", "BA", "NG", 5.0, {}),
              PlantRecord("w1", "BA", "WND", 4.0, {})]
    worst_alloc = 0.0
    for _ in range(1000):
        shares = rng.dirichlet(np.ones(3))
        demand = float(rng.uniform(0.0, 5000.0))
        mix = make_record(shares, ("COL", "NG", "WND"))
        alloc = allocate_generation(demand, mix, plants)
        worst_alloc = max(worst_alloc, abs(math.fsum(alloc.values()) - demand))
    assert worst_alloc <= 1e-9
    print(f"\nCRITERION 6 PASS: zero fixpoint exact, split residual "
          f"{max_split_residual:.1e}, allocation residual {worst_alloc:.1e}")


def test_criterion_7_dispersion_oracle_recovery():
    """Fit recovers a known K x M <= 64 matrix to 1e-3 within 2000 steps."""
    rng = np.random.default_rng(5)
    k, m = 4, 16  # K*M = 64
    pollutants = tuple(f"P{i}" for i in range(k))
    receptors = tuple(f"R{i}" for i in range(m))
    g = rng.uniform(0.05, 1.5, size=(k, m))
    matrix = SourceReceptorMatrix(g, receptors, pollutants)
    pairs = []
    for _ in range(32):
        e = EmissionVector(rng.uniform(0.0, 5.0, size=k), pollutants)
        pairs.append((e, apply_source_receptor(e, matrix)))
    layer = fit_dispersion_layer(pairs, epochs=2000, step_size=0.1)
    err = float(np.abs(layer.weights - g).max())
    assert err < 1e-3
    print(f"\nCRITERION 7 PASS: K*M=64 matrix recovered, max element error {err:.1e}")


def test_criterion_8_command_determinism(tmp_path):
    """Identical manifest inputs reproduce byte-identical CSV outputs."""
    raw = tmp_path / "raw.csv"
    rows = [["timestamp", "coal", "wind"]]
    rng = np.random.default_rng(1)
    for t in range(72):
        coal = "" if t in (10, 30) else f"{0.5 + 0.2 * np.sin(t / 5):.5f}"
        rows.append([t, coal, f"{0.5 - 0.2 * np.sin(t / 5):.5f}"])
    with open(raw, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    cmap = tmp_path / "map.csv"
    with open(cmap, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(
            [["raw_label", "canonical"], ["coal", "COL"], ["wind", "WND"]])
    fleet_spec = tmp_path / "fleet.json"
    fleet_spec.write_text(json.dumps({
        "count": 25, "rate_kw": 6.0, "days": 6,
        "arrival_hist": {"17": 0.4, "18": 0.6},
        "departure_hist": {"6": 0.5, "7": 0.5},
        "demand": {"kind": "uniform", "low": 5, "high": 30}}))

    def run_all(root: Path):
        run_cli("ingest", "--mix", raw, "--category-map", cmap, "--out", root / "ingest")
        run_cli("synth", "--out", root / "bundle", "--hours", 240, "--seed", 3)
        run_cli("train", "--dataset", root / "bundle" / "fuel_mix.csv",
                "--labels", root / "bundle" / "labels.csv",
                "--out", root / "train", "--epochs", 1, "--seed", 2)
        run_cli("sweep", "--dataset", root / "bundle" / "fuel_mix.csv",
                "--labels", root / "bundle" / "labels.csv",
                "--out", root / "sweep", "--betas", "0.5,0.998", "--epochs", 1,
                "--seed", 2, "--arch", "linear_baseline")
        run_cli("predict", "--dataset", root / "bundle" / "fuel_mix.csv",
                "--checkpoint", root / "train" / "checkpoint.json",
                "--out", root / "predict")
        run_cli("schedule", "--signal", root / "bundle" / "labels.csv",
                "--sample-config", fleet_spec, "--out", root / "schedule",
                "--seed", 12)

    a, b = tmp_path / "a", tmp_path / "b"
    run_all(a)
    run_all(b)
    compared = 0
    for csv_a in sorted(a.rglob("*.csv")):
        csv_b = b / csv_a.relative_to(a)
        assert csv_a.read_bytes() == csv_b.read_bytes(), csv_a.name
        compared += 1
    ck_a = (a / "train" / "checkpoint.json").read_bytes()
    ck_b = (b / "train" / "checkpoint.json").read_bytes()
    assert ck_a == ck_b
    assert compared >= 12
    print(f"\nCRITERION 8 PASS: {compared} CSV outputs byte-identical across reruns "
          f"(checkpoint identical too)")
