"""Statistical validation of synthetic profiles: Wasserstein-1 distance,
ensemble power spectral density, and a forecast-transfer test with a small
LSTM one-step-ahead model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CheckpointError, EmptyInput
from .nn import Adam, Dense, LSTMCell, Tensor, load_checkpoint, mean, mul, no_grad, reshape, save_checkpoint, sub

WINDOW = 48
HIDDEN = 48
N_LAYERS = 3
PCT_FLOOR = 0.05  # denominator floor for percentage errors, in normalized units


# ------------------------------------------------------------ distributions

def wasserstein1_empirical(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W1 between two empirical distributions of scalar samples.

    Computed as the integral of |F_a - F_b| over the merged support, which is
    the quantile-function form of the one-dimensional optimal transport cost.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptyInput("wasserstein1_empirical needs nonempty samples")
    if a.size == b.size:
        return float(np.abs(a - b).mean())
    support = np.sort(np.concatenate([a, b]))
    deltas = np.diff(support)
    cdf_a = np.searchsorted(a, support[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, support[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def per_hour_w1(profiles_a: np.ndarray, profiles_b: np.ndarray) -> np.ndarray:
    """Marginal W1 per hour-of-week between two profile sets."""
    profiles_a, profiles_b = np.atleast_2d(profiles_a), np.atleast_2d(profiles_b)
    if profiles_a.size == 0 or profiles_b.size == 0:
        raise EmptyInput("per_hour_w1 needs nonempty profile sets")
    return np.array([wasserstein1_empirical(profiles_a[:, h], profiles_b[:, h])
                     for h in range(profiles_a.shape[1])])


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int


def histogram(samples: np.ndarray, bins: int = 50,
              lo: float = 0.0, hi: float = 1.0) -> Histogram:
    samples = np.asarray(samples).ravel()
    if samples.size == 0:
        raise EmptyInput("histogram needs samples")
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, int(samples.size))


# ---------------------------------------------------------------------- PSD

@dataclass
class SpectrumResult:
    frequencies: np.ndarray  # cycles/hour, ascending from 0 to 0.5
    power: np.ndarray        # mean one-sided periodogram power per bin


def periodogram(profile: np.ndarray) -> np.ndarray:
    """One-sided mean-removed periodogram; bin powers sum to the variance."""
    x = np.asarray(profile, dtype=np.float64)
    x = x - x.mean()
    n = x.size
    spec = np.abs(np.fft.rfft(x)) ** 2 / n ** 2
    spec[1:(n + 1) // 2] *= 2.0  # fold negative frequencies; Nyquist stays single
    return spec


def ensemble_psd(profiles: np.ndarray) -> SpectrumResult:
    profiles = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
    if profiles.shape[0] == 0:
        raise EmptyInput("ensemble_psd needs at least one profile")
    n = profiles.shape[1]
    x = profiles - profiles.mean(axis=1, keepdims=True)
    spec = np.abs(np.fft.rfft(x, axis=1)) ** 2 / n ** 2
    spec[:, 1:(n + 1) // 2] *= 2.0
    return SpectrumResult(np.fft.rfftfreq(n, d=1.0), spec.mean(axis=0))


@dataclass
class PsdComparison:
    frequencies: np.ndarray
    log_diff: np.ndarray          # log synthetic power minus log real power
    max_abs_diurnal_diff: float   # over bins at multiples of 1/24 cycles/hour
    real: SpectrumResult
    synthetic: SpectrumResult


def compare_psd(real_profiles: np.ndarray, synth_profiles: np.ndarray) -> PsdComparison:
    real = ensemble_psd(real_profiles)
    synth = ensemble_psd(synth_profiles)
    floor = 1e-300
    log_diff = np.log(np.maximum(synth.power, floor)) - np.log(np.maximum(real.power, floor))
    n = real_profiles.shape[1] if real_profiles.ndim == 2 else len(real_profiles)
    step = round(n / 24)
    diurnal = np.arange(step, real.power.size, step)
    return PsdComparison(real.frequencies, log_diff,
                         float(np.abs(log_diff[diurnal]).max()), real, synth)


# ------------------------------------------------------- forecast transfer

@dataclass
class ForecastReport:
    mean_pct_error: float
    std_pct_error: float
    count: int


class ForecastModel:
    """Stacked LSTM (3 layers x 48 units) with a linear one-step head."""

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
        self.cells = [LSTMCell(1 if i == 0 else HIDDEN, HIDDEN, rng)
                      for i in range(N_LAYERS)]
        self.head = Dense(HIDDEN, 1, "none", rng)

    def forward(self, windows: np.ndarray) -> Tensor:
        """windows: (B, 48) past values -> (B,) next-value predictions."""
        windows = np.atleast_2d(np.asarray(windows, dtype=np.float64))
        b = windows.shape[0]
        states = [cell.initial_state(b) for cell in self.cells]
        for t in range(windows.shape[1]):
            x = Tensor(windows[:, t:t + 1])
            for i, cell in enumerate(self.cells):
                h, c = cell(x, *states[i])
                states[i] = (h, c)
                x = h
        return reshape(self.head(x), (-1,))

    def predict(self, windows: np.ndarray, batch: int = 512) -> np.ndarray:
        windows = np.atleast_2d(windows)
        out = np.empty(windows.shape[0])
        with no_grad():
            for lo in range(0, windows.shape[0], batch):
                out[lo:lo + batch] = self.forward(windows[lo:lo + batch]).data
        return out

    def parameters(self) -> list[Tensor]:
        out = []
        for cell in self.cells:
            out.extend(cell.parameters())
        out.extend(self.head.parameters())
        return out

    def spec(self) -> list[dict]:
        return [cell.spec() for cell in self.cells] + [self.head.spec()]


def sliding_windows(profiles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All (48 past, 1 target) pairs from each profile: 120 windows per week."""
    profiles = np.atleast_2d(np.asarray(profiles, dtype=np.float64))
    if profiles.shape[0] == 0:
        raise EmptyInput("no profiles to window")
    if profiles.shape[1] <= WINDOW:
        raise EmptyInput(f"profiles must be longer than {WINDOW} hours")
    spans = sliding_window_view(profiles, WINDOW + 1, axis=1)
    spans = spans.reshape(-1, WINDOW + 1)
    return np.ascontiguousarray(spans[:, :WINDOW]), np.ascontiguousarray(spans[:, WINDOW])


def train_forecaster(profiles: np.ndarray, seed: int = 0, epochs: int = 3,
                     batch_size: int = 256, lr: float = 3e-3,
                     log_every: int = 0) -> ForecastModel:
    """Fit the one-step forecaster on sliding windows with squared error."""
    x, y = sliding_windows(profiles)
    model = ForecastModel(seed)
    opt = Adam(model.parameters(), lr=lr, beta1=0.9, beta2=0.999)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    for epoch in range(epochs):
        order = rng.permutation(x.shape[0])
        losses = []
        for lo in range(0, order.size, batch_size):
            idx = order[lo:lo + batch_size]
            pred = model.forward(x[idx])
            diff = sub(pred, Tensor(y[idx]))
            loss = mean(mul(diff, diff))
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        if log_every and (epoch % log_every == 0 or epoch == epochs - 1):
            print(f"forecaster epoch {epoch}: mse {np.mean(losses):.6f}", flush=True)
    opt.zero_grad()
    return model


def forecast_eval(model: ForecastModel, profiles: np.ndarray) -> ForecastReport:
    """Percentage error of one-step predictions over every window of every profile."""
    x, y = sliding_windows(profiles)
    pred = model.predict(x)
    pct = 100.0 * np.abs(pred - y) / np.maximum(y, PCT_FLOOR)
    return ForecastReport(float(pct.mean()), float(pct.std()), int(pct.size))


def save_forecaster(path, model: ForecastModel) -> None:
    arrays = [(f"f{i:02d}", p.data) for i, p in enumerate(model.parameters())]
    save_checkpoint(path, {"kind": "forecaster", "window": WINDOW,
                           "hidden": HIDDEN, "layers": N_LAYERS,
                           "model": model.spec()}, arrays)


def load_forecaster(path) -> ForecastModel:
    meta, arrays = load_checkpoint(path)
    if meta.get("kind") != "forecaster":
        raise CheckpointError(f"{path}: not a forecaster checkpoint")
    model = ForecastModel()
    for i, p in enumerate(model.parameters()):
        name = f"f{i:02d}"
        if name not in arrays or arrays[name].shape != p.data.shape:
            raise CheckpointError(f"{path}: bad or missing array {name!r}")
        p.data = arrays[name].copy()
    return model
