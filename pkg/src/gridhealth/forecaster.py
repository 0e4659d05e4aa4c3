"""Fuel-mix forecasting with a health-weighted composite objective.

Two architectures share one interface: a small attention encoder-decoder
(embedding, one encoder and one decoder block, four attention heads) and a
linear baseline operating on log-shares so that persistence is exactly
representable. Both end in a normalized-exponential map, so every emitted
row is a probability vector over fuels.

The composite objective weighs fuel-mix error against the error of the
monetized health impacts predicted from the forecast mix by a 3-layer
perceptron converter; `beta` near 1 is mix-driven, smaller `beta` is
health-driven. Training is plain SGD and fully deterministic given a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff
from .autodiff import SGD, Tensor
from .errors import (
    BetaOutOfRange,
    DivergedLoss,
    InsufficientData,
    ShapeMismatch,
    ShortHistory,
    ZeroNormalizer,
)
from .ingest import FuelMixSeries

BETA_MAX = 0.998

ATTENTION = "attention_encoder_decoder"
LINEAR_BASELINE = "linear_baseline"

_LOG_FLOOR = 1e-12


@dataclass
class TrainConfig:
    """Hyperparameters for one training run."""

    beta: float = 0.5
    window: int = 24
    epochs: int = 100
    step_size: float = 0.004
    batch_size: int = 128
    seed: int = 0
    test_fraction: float = 0.2
    val_fraction: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.beta <= BETA_MAX):
            raise BetaOutOfRange(f"beta must be in (0, {BETA_MAX}], got {self.beta}")
        if self.window < 1:
            raise ValueError("window must be at least 1 hour")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad batch size or epoch count")
        if not (0.0 <= self.test_fraction < 1.0 and 0.0 <= self.val_fraction < 1.0):
            raise ValueError("split fractions must lie in [0, 1)")


@dataclass
class TradeoffPoint:
    beta: float
    fuel_nmae: float
    health_nmae: float


def _sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    idx = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, 2 * (idx // 2) / dim)
    enc = np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))
    return enc


def _gelu(x: Tensor) -> Tensor:
    inner = (x + x * x * x * 0.044715) * math.sqrt(2.0 / math.pi)
    return x * 0.5 * (inner.tanh() + 1.0)


def _dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    if not training or p <= 0.0 or rng is None:
        return x
    mask = (rng.random(x.shape) >= p).astype(np.float64) / (1.0 - p)
    return x * Tensor(mask)


class ForecastModel:
    """Sequence-to-sequence fuel-mix predictor.

    Consumes a history window of `window` hourly mixes and emits the next
    `window` hours, each row on the simplex.
    """

    def __init__(
        self,
        architecture: str,
        n_fuels: int,
        window: int,
        embed_dim: int = 64,
        heads: int = 4,
        encoder_layers: int = 1,
        decoder_layers: int = 1,
        ff_dim: int = 64,
        dropout: float = 0.1,
        seed: int = 0,
    ):
        if architecture not in (ATTENTION, LINEAR_BASELINE):
            raise ValueError(f"unknown architecture {architecture!r}")
        if embed_dim % heads != 0:
            raise ValueError("embed_dim must be divisible by heads")
        self.architecture = architecture
        self.n_fuels = n_fuels
        self.window = window
        self.embed_dim = embed_dim
        self.heads = heads
        self.encoder_layers = encoder_layers
        self.decoder_layers = decoder_layers
        self.ff_dim = ff_dim
        self.dropout = dropout
        self.seed = seed
        self.params: dict[str, Tensor] = {}
        rng = np.random.default_rng(seed)
        if architecture == ATTENTION:
            self._init_attention(rng)
        else:
            self._init_linear(rng)

    # -- parameter construction ----------------------------------------------

    def _add(self, name: str, shape, rng, scale=None):
        self.params[name] = autodiff.parameter(shape, rng=rng, scale=scale)

    def _add_zeros(self, name: str, shape):
        self.params[name] = Tensor(np.zeros(shape), requires_grad=True)

    def _add_ones(self, name: str, shape):
        self.params[name] = Tensor(np.ones(shape), requires_grad=True)

    def _init_attention(self, rng):
        d, f = self.embed_dim, self.n_fuels
        self._add("embed_w", (f, d), rng)
        self._add_zeros("embed_b", (d,))
        self.positions = _sinusoidal_positions(self.window, d)
        for i in range(self.encoder_layers):
            self._init_attn_block(f"enc{i}", rng, cross=False)
        self._add("dec_query", (self.window, d), rng, scale=0.5)
        for i in range(self.decoder_layers):
            self._init_attn_block(f"dec{i}", rng, cross=True)
        self._add("out_w", (d, f), rng)
        self._add_zeros("out_b", (f,))

    def _init_attn_block(self, prefix, rng, cross: bool):
        d, ff = self.embed_dim, self.ff_dim
        stages = ["self", "cross"] if cross else ["self"]
        for stage in stages:
            for mat in ("q", "k", "v", "o"):
                self._add(f"{prefix}_{stage}_w{mat}", (d, d), rng)
                self._add_zeros(f"{prefix}_{stage}_b{mat}", (d,))
            self._add_ones(f"{prefix}_{stage}_ln_g", (d,))
            self._add_zeros(f"{prefix}_{stage}_ln_b", (d,))
        self._add(f"{prefix}_ff_w1", (d, ff), rng)
        self._add_zeros(f"{prefix}_ff_b1", (ff,))
        self._add(f"{prefix}_ff_w2", (ff, d), rng)
        self._add_zeros(f"{prefix}_ff_b2", (d,))
        self._add_ones(f"{prefix}_ff_ln_g", (d,))
        self._add_zeros(f"{prefix}_ff_ln_b", (d,))

    def _init_linear(self, rng):
        f, t = self.n_fuels, self.window
        self._add("lin_w", (t * f, t * f), rng)
        self._add_zeros("lin_b", (t * f,))

    def init_persistence(self):
        """Set the linear baseline to repeat the last observed record."""
        if self.architecture != LINEAR_BASELINE:
            raise ValueError("persistence init applies to the linear baseline only")
        f, t = self.n_fuels, self.window
        w = np.zeros((t * f, t * f))
        for step in range(t):
            for j in range(f):
                w[(t - 1) * f + j, step * f + j] = 1.0
        self.params["lin_w"].data = w
        self.params["lin_b"].data = np.zeros(t * f)

    # -- forward -------------------------------------------------------------

    def _mha(self, prefix, stage, q_in, k_in, v_in, training, rng):
        p = self.params
        d, h = self.embed_dim, self.heads
        dk = d // h

        def heads_of(x, name):
            proj = x @ p[f"{prefix}_{stage}_w{name}"] + p[f"{prefix}_{stage}_b{name}"]
            b, t, _ = proj.shape
            return proj.reshape(b, t, h, dk).transpose(0, 2, 1, 3)

        q = heads_of(q_in, "q")
        k = heads_of(k_in, "k")
        v = heads_of(v_in, "v")
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dk))
        attn = _dropout(scores.softmax(axis=-1), self.dropout, training, rng)
        ctx = attn @ v
        b, _, t, _ = ctx.shape
        ctx = ctx.transpose(0, 2, 1, 3).reshape(b, t, d)
        return ctx @ p[f"{prefix}_{stage}_wo"] + p[f"{prefix}_{stage}_bo"]

    def _sublayer(self, prefix, stage, x, out, training, rng):
        p = self.params
        mixed = x + _dropout(out, self.dropout, training, rng)
        return mixed.layer_norm() * p[f"{prefix}_{stage}_ln_g"] + p[f"{prefix}_{stage}_ln_b"]

    def _ff(self, prefix, x, training, rng):
        p = self.params
        hidden = _gelu(x @ p[f"{prefix}_ff_w1"] + p[f"{prefix}_ff_b1"])
        out = hidden @ p[f"{prefix}_ff_w2"] + p[f"{prefix}_ff_b2"]
        mixed = x + _dropout(out, self.dropout, training, rng)
        return mixed.layer_norm() * p[f"{prefix}_ff_ln_g"] + p[f"{prefix}_ff_ln_b"]

    def forward_tensor(self, x: Tensor, training: bool = False,
                       rng: np.random.Generator | None = None) -> Tensor:
        """(B, window, F) histories to (B, window, F) simplex predictions."""
        if len(x.shape) != 3 or x.shape[1] != self.window or x.shape[2] != self.n_fuels:
            raise ShapeMismatch(f"expected (B, {self.window}, {self.n_fuels}), got {x.shape}")
        if self.architecture == LINEAR_BASELINE:
            return self._forward_linear(x)
        return self._forward_attention(x, training, rng)

    def _forward_linear(self, x: Tensor) -> Tensor:
        b = x.shape[0]
        t, f = self.window, self.n_fuels
        feats = Tensor(np.log(np.maximum(x.data, _LOG_FLOOR)))
        flat = feats.reshape(b, t * f)
        logits = flat @ self.params["lin_w"] + self.params["lin_b"]
        return logits.reshape(b, t, f).softmax(axis=-1)

    def _forward_attention(self, x, training, rng):
        p = self.params
        h = x @ p["embed_w"] + p["embed_b"]
        h = h + Tensor(self.positions)
        h = _dropout(h, self.dropout, training, rng)
        for i in range(self.encoder_layers):
            pre = f"enc{i}"
            h = self._sublayer(pre, "self", h, self._mha(pre, "self", h, h, h, training, rng),
                               training, rng)
            h = self._ff(pre, h, training, rng)
        memory = h

        q = p["dec_query"].reshape(1, self.window, self.embed_dim)
        for i in range(self.decoder_layers):
            pre = f"dec{i}"
            q = self._sublayer(pre, "self", q, self._mha(pre, "self", q, q, q, training, rng),
                               training, rng)
            q = self._sublayer(pre, "cross", q,
                               self._mha(pre, "cross", q, memory, memory, training, rng),
                               training, rng)
            q = self._ff(pre, q, training, rng)

        logits = q @ p["out_w"] + p["out_b"]
        return logits.softmax(axis=-1)


def forward(model: ForecastModel, history, horizon: int | None = None) -> np.ndarray:
    """Predict the next `horizon` mixes from the trailing model window.

    `history` is a FuelMixSeries or an (n, F) array with n >= model.window;
    only the final window rows are consumed. Dropout is off, so the output
    is a deterministic function of parameters and input.
    """
    shares = history.shares if isinstance(history, FuelMixSeries) else np.asarray(history)
    if shares.ndim != 2 or shares.shape[1] != model.n_fuels:
        raise ShapeMismatch(f"history must be (n, {model.n_fuels})")
    if shares.shape[0] < model.window:
        raise ShortHistory(
            f"need at least {model.window} hours of history, have {shares.shape[0]}"
        )
    horizon = model.window if horizon is None else horizon
    if not (1 <= horizon <= model.window):
        raise ValueError(f"horizon must be in [1, {model.window}]")
    x = Tensor(shares[-model.window:][None, :, :])
    with autodiff.no_grad():
        pred = model.forward_tensor(x, training=False)
    return pred.data[0, :horizon]


class HealthConverterNet:
    """3-layer perceptron mapping one mix (plus optional features) to
    (internal, external) $/MWh, forced nonnegative by a softplus output."""

    def __init__(self, n_fuels: int, hidden: int = 64, feature_dim: int = 0, seed: int = 0):
        self.n_fuels = n_fuels
        self.hidden = hidden
        self.feature_dim = feature_dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        d_in = n_fuels + feature_dim
        self.params = {
            "w1": autodiff.parameter((d_in, hidden), rng=rng),
            "b1": Tensor(np.zeros(hidden), requires_grad=True),
            "w2": autodiff.parameter((hidden, hidden), rng=rng),
            "b2": Tensor(np.zeros(hidden), requires_grad=True),
            "w3": autodiff.parameter((hidden, 2), rng=rng),
            "b3": Tensor(np.ones(2), requires_grad=True),
        }

    def forward_tensor(self, x: Tensor, features: Tensor | None = None) -> Tensor:
        """(N, F) mixes to (N, 2) nonnegative impact predictions."""
        if features is not None:
            raise NotImplementedError("auxiliary feature input is reserved")
        p = self.params
        h1 = (x @ p["w1"] + p["b1"]).tanh()
        h2 = (h1 @ p["w2"] + p["b2"]).tanh()
        return (h2 @ p["w3"] + p["b3"]).softplus()

    def predict(self, mixes: np.ndarray) -> np.ndarray:
        with autodiff.no_grad():
            return self.forward_tensor(Tensor(np.atleast_2d(mixes))).data


def composite_loss(pred, truth, pred_impact, truth_impact, beta: float) -> Tensor:
    """beta-weighted sum of squared mix error and squared impact error.

    Per window: beta * ||truth - pred||^2 summed over all T x F entries,
    plus (1-beta)/2 times the squared internal and external impact errors
    summed over T; the batch dimension, if present, is averaged.
    """
    if not (0.0 < beta <= BETA_MAX):
        raise BetaOutOfRange(f"beta must be in (0, {BETA_MAX}], got {beta}")
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    truth = truth if isinstance(truth, Tensor) else Tensor(truth)
    pred_impact = pred_impact if isinstance(pred_impact, Tensor) else Tensor(pred_impact)
    truth_impact = truth_impact if isinstance(truth_impact, Tensor) else Tensor(truth_impact)

    if pred.shape != truth.shape or pred_impact.shape != truth_impact.shape:
        raise ShapeMismatch("prediction and truth shapes disagree")
    if len(pred.shape) == 2:
        pred = pred.reshape(1, *pred.shape)
        truth = truth.reshape(1, *truth.shape)
        pred_impact = pred_impact.reshape(1, *pred_impact.shape)
        truth_impact = truth_impact.reshape(1, *truth_impact.shape)
    if len(pred.shape) != 3 or len(pred_impact.shape) != 3 or pred_impact.shape[2] != 2:
        raise ShapeMismatch("expected (B, T, F) mixes and (B, T, 2) impacts")
    if pred.shape[0] != pred_impact.shape[0] or pred.shape[1] != pred_impact.shape[1]:
        raise ShapeMismatch("mix and impact windows disagree")

    fuel_diff = truth - pred
    impact_diff = truth_impact - pred_impact
    fuel = (fuel_diff * fuel_diff).sum(axis=(1, 2))
    impact = (impact_diff * impact_diff).sum(axis=(1, 2))
    return (fuel * beta + impact * ((1.0 - beta) / 2.0)).mean()


def nmae(pred, truth) -> float:
    """Mean absolute error normalized by the mean absolute truth."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size == 0:
        raise ShapeMismatch("nmae requires matching, nonempty sequences")
    denom = np.abs(truth).mean()
    if denom == 0.0:
        raise ZeroNormalizer("mean absolute truth is zero")
    return float(np.abs(pred - truth).mean() / denom)


# -- dataset windowing ---------------------------------------------------------


@dataclass
class TrainingData:
    """Hour-aligned mixes (N, F) and impact labels (N, 2)."""

    mixes: np.ndarray
    impacts: np.ndarray
    timestamps: np.ndarray
    fuel_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.mixes = np.asarray(self.mixes, dtype=np.float64)
        self.impacts = np.asarray(self.impacts, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        n = self.mixes.shape[0]
        if self.impacts.shape != (n, 2) or self.timestamps.shape != (n,):
            raise ShapeMismatch("mixes, impacts, and timestamps must align")

    def __len__(self):
        return self.mixes.shape[0]

    @classmethod
    def from_series(cls, series: FuelMixSeries, signals) -> "TrainingData":
        by_ts = {s.timestamp: (s.internal_cost, s.external_cost) for s in signals}
        impacts = []
        for t in series.timestamps:
            if int(t) not in by_ts:
                raise InsufficientData(f"no health label for hour {int(t)}")
            impacts.append(by_ts[int(t)])
        return cls(series.shares.copy(), np.asarray(impacts), series.timestamps.copy(),
                   series.fuel_names)


@dataclass
class WindowSplit:
    train: list[int] = field(default_factory=list)
    val: list[int] = field(default_factory=list)
    test: list[int] = field(default_factory=list)


def split_windows(n_hours: int, cfg: TrainConfig) -> WindowSplit:
    """Carve train/val/test window start indices, time ordered.

    Train/val windows (history plus target, 2T hours) live entirely inside
    the leading (1 - test_fraction) span; validation is the final
    val_fraction of those windows. Test targets tile the held-out span with
    stride T, with history allowed to reach back across the boundary.
    """
    t = cfg.window
    n_test_hours = int(n_hours * cfg.test_fraction)
    boundary = n_hours - n_test_hours
    starts = list(range(0, boundary - 2 * t + 1))
    n_val = int(len(starts) * cfg.val_fraction)
    split = WindowSplit()
    split.train = starts[: len(starts) - n_val]
    split.val = starts[len(starts) - n_val:]
    q = boundary
    while q + t <= n_hours:
        if q - t >= 0:
            split.test.append(q - t)
        q += t
    return split


def _gather(data: TrainingData, starts, t: int):
    hist = np.stack([data.mixes[s:s + t] for s in starts])
    target = np.stack([data.mixes[s + t:s + 2 * t] for s in starts])
    impact = np.stack([data.impacts[s + t:s + 2 * t] for s in starts])
    return hist, target, impact


def _batch_loss(model, converter, hist, target, impact, beta,
                training=False, rng=None) -> Tensor:
    x = Tensor(hist)
    pred = model.forward_tensor(x, training=training, rng=rng)
    b, t, f = pred.shape
    pred_impact = converter.forward_tensor(pred.reshape(b * t, f)).reshape(b, t, 2)
    return composite_loss(pred, Tensor(target), pred_impact, Tensor(impact), beta)


def train(model: ForecastModel, converter: HealthConverterNet, data: TrainingData,
          cfg: TrainConfig) -> tuple[ForecastModel, HealthConverterNet, list[dict]]:
    """SGD training of the forecaster and converter, end to end.

    The health term's gradient flows through the converter into the mix
    predictor, so both learn jointly. Returns the models plus a per-epoch
    history of mean train loss and validation loss.
    """
    if len(data) < 2 * cfg.window:
        raise InsufficientData(
            f"dataset has {len(data)} hours; need at least {2 * cfg.window}"
        )
    split = split_windows(len(data), cfg)
    if not split.train:
        raise InsufficientData("no complete training window inside the train split")

    rng = np.random.default_rng(cfg.seed)
    optimizer = SGD({**{f"m.{k}": v for k, v in model.params.items()},
                     **{f"c.{k}": v for k, v in converter.params.items()}},
                    lr=cfg.step_size)
    t = cfg.window
    train_hist, train_target, train_impact = _gather(data, split.train, t)
    if split.val:
        val_hist, val_target, val_impact = _gather(data, split.val, t)

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(split.train))
        losses = []
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss = _batch_loss(model, converter, train_hist[idx], train_target[idx],
                               train_impact[idx], cfg.beta, training=True, rng=rng)
            value = float(loss.data)
            if not math.isfinite(value):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(value)
        if split.val:
            with autodiff.no_grad():
                val_loss = float(_batch_loss(model, converter, val_hist, val_target,
                                             val_impact, cfg.beta).data)
        else:
            val_loss = float(np.mean(losses))
        history.append({"epoch": epoch, "train_loss": float(np.mean(losses)),
                        "val_loss": val_loss})
    return model, converter, history


@dataclass
class Evaluation:
    fuel_nmae: float
    internal_nmae: float
    external_nmae: float
    pred_mixes: np.ndarray        # (n_hours_eval, F)
    pred_impacts: np.ndarray      # (n_hours_eval, 2)
    truth_mixes: np.ndarray
    truth_impacts: np.ndarray
    timestamps: np.ndarray

    @property
    def health_nmae(self) -> float:
        return 0.5 * (self.internal_nmae + self.external_nmae)


def predict_heldout(model: ForecastModel, converter: HealthConverterNet,
                    data: TrainingData, cfg: TrainConfig):
    """Predictions over the held-out span, non-overlapping windows.

    Returns (pred_mixes, pred_impacts, truth_mixes, truth_impacts,
    timestamps), all flattened to per-hour rows in time order.
    """
    split = split_windows(len(data), cfg)
    if not split.test:
        raise InsufficientData("test split holds no complete window")
    t = cfg.window
    hist, target, impact = _gather(data, split.test, t)
    with autodiff.no_grad():
        pred = model.forward_tensor(Tensor(hist), training=False)
        b = pred.shape[0]
        pred_imp = converter.forward_tensor(pred.reshape(b * t, model.n_fuels)).reshape(b, t, 2)
    stamps = np.concatenate([data.timestamps[s + t:s + 2 * t] for s in split.test])
    return (pred.data.reshape(-1, model.n_fuels), pred_imp.data.reshape(-1, 2),
            target.reshape(-1, model.n_fuels), impact.reshape(-1, 2), stamps)


def evaluate(model: ForecastModel, converter: HealthConverterNet, data: TrainingData,
             cfg: TrainConfig) -> Evaluation:
    """Held-out-test NMAE of mixes and impacts, non-overlapping windows."""
    pred_mixes, pred_impacts, truth_mixes, truth_impacts, stamps = predict_heldout(
        model, converter, data, cfg)
    return Evaluation(
        fuel_nmae=nmae(pred_mixes, truth_mixes),
        internal_nmae=nmae(pred_impacts[:, 0], truth_impacts[:, 0]),
        external_nmae=nmae(pred_impacts[:, 1], truth_impacts[:, 1]),
        pred_mixes=pred_mixes,
        pred_impacts=pred_impacts,
        truth_mixes=truth_mixes,
        truth_impacts=truth_impacts,
        timestamps=stamps,
    )


def build_models(n_fuels: int, cfg: TrainConfig,
                 architecture: str = ATTENTION) -> tuple[ForecastModel, HealthConverterNet]:
    """Standard seeded construction used by training runs and sweeps."""
    model = ForecastModel(architecture, n_fuels, cfg.window, seed=cfg.seed)
    converter = HealthConverterNet(n_fuels, seed=cfg.seed + 1)
    return model, converter


def beta_sweep(data: TrainingData, betas: list[float], cfg: TrainConfig,
               architecture: str = ATTENTION) -> list[TradeoffPoint]:
    """Independent training runs across beta on identical splits and seeds."""
    for b in betas:
        if not (0.0 < b <= BETA_MAX):
            raise BetaOutOfRange(f"beta {b} outside (0, {BETA_MAX}]")
    points = []
    for b in sorted(betas):
        run_cfg = TrainConfig(beta=b, window=cfg.window, epochs=cfg.epochs,
                              step_size=cfg.step_size, batch_size=cfg.batch_size,
                              seed=cfg.seed, test_fraction=cfg.test_fraction,
                              val_fraction=cfg.val_fraction)
        model, converter = build_models(data.mixes.shape[1], run_cfg, architecture)
        model, converter, _ = train(model, converter, data, run_cfg)
        ev = evaluate(model, converter, data, run_cfg)
        points.append(TradeoffPoint(beta=b, fuel_nmae=ev.fuel_nmae, health_nmae=ev.health_nmae))
    return points


# -- checkpointing -------------------------------------------------------------

CHECKPOINT_FORMAT = "gridhealth-checkpoint-v1"


def save_checkpoint(path: str | Path, model: ForecastModel,
                    converter: HealthConverterNet) -> None:
    """Write both networks to a self-describing JSON container."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "model": {
            "architecture": model.architecture,
            "n_fuels": model.n_fuels,
            "window": model.window,
            "embed_dim": model.embed_dim,
            "heads": model.heads,
            "encoder_layers": model.encoder_layers,
            "decoder_layers": model.decoder_layers,
            "ff_dim": model.ff_dim,
            "dropout": model.dropout,
            "seed": model.seed,
        },
        "converter": {
            "n_fuels": converter.n_fuels,
            "hidden": converter.hidden,
            "feature_dim": converter.feature_dim,
            "seed": converter.seed,
        },
        "params": {k: v.data.tolist() for k, v in model.params.items()},
        "converter_params": {k: v.data.tolist() for k, v in converter.params.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def load_checkpoint(path: str | Path) -> tuple[ForecastModel, HealthConverterNet]:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a recognized checkpoint")
    m = payload["model"]
    model = ForecastModel(m["architecture"], m["n_fuels"], m["window"],
                          embed_dim=m["embed_dim"], heads=m["heads"],
                          encoder_layers=m["encoder_layers"],
                          decoder_layers=m["decoder_layers"], ff_dim=m["ff_dim"],
                          dropout=m["dropout"], seed=m["seed"])
    for k, v in payload["params"].items():
        model.params[k].data = np.asarray(v, dtype=np.float64)
    c = payload["converter"]
    converter = HealthConverterNet(c["n_fuels"], hidden=c["hidden"],
                                   feature_dim=c["feature_dim"], seed=c["seed"])
    for k, v in payload["converter_params"].items():
        converter.params[k].data = np.asarray(v, dtype=np.float64)
    return model, converter
