"""Training-corpus construction: weekly segmentation, normalization, season
and load-type labeling, and a parametric surrogate standing in for real
metered data.

A corpus is an N x 168 matrix of week-long hourly profiles. Each week is
normalized by its own mean, then the whole matrix is min-max scaled to [0, 1].
Every row carries a 6-dim condition label: season one-hot (winter, spring,
summer, fall) followed by load-type one-hot (industrial, residential).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    BadConfig, ClusteringDegenerate, DegenerateRange, DegenerateWeek,
    EmptyInput, IngestError, TooShort,
)
from .kvconfig import kv_float, kv_int, read_kv, write_kv

WEEK_HOURS = 168

SEASONS = ("winter", "spring", "summer", "fall")
TYPES = ("industrial", "residential")
_MONTH_SEASON = {12: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1,
                 6: 2, 7: 2, 8: 2, 9: 3, 10: 3, 11: 3}


# -------------------------------------------------------------------- labels

def season_of(day: date) -> np.ndarray:
    """Meteorological season of the week-start month, as a one-hot of 4."""
    vec = np.zeros(4)
    vec[_MONTH_SEASON[day.month]] = 1.0
    return vec


def encode_label(season: str, load_type: str) -> np.ndarray:
    if season not in SEASONS or load_type not in TYPES:
        raise BadConfig(f"unknown label {season!r}/{load_type!r}")
    vec = np.zeros(6)
    vec[SEASONS.index(season)] = 1.0
    vec[4 + TYPES.index(load_type)] = 1.0
    return vec


def decode_label(vec: np.ndarray) -> tuple[str, str]:
    vec = np.asarray(vec)
    return SEASONS[int(np.argmax(vec[:4]))], TYPES[int(np.argmax(vec[4:6]))]


def validate_label(vec: np.ndarray) -> None:
    vec = np.asarray(vec)
    if vec.shape != (6,):
        raise BadConfig(f"label must have 6 entries, got shape {vec.shape}")
    for lo, hi in ((0, 4), (4, 6)):
        part = vec[lo:hi]
        if not (np.all((part == 0.0) | (part == 1.0)) and part.sum() == 1.0):
            raise BadConfig("label sub-vector is not one-hot")


# --------------------------------------------------------------------- types

@dataclass
class RawSeries:
    """Contiguous hourly active-power samples for one load."""

    values: np.ndarray      # MW, all finite and > 0
    start: datetime         # timestamp of values[0], whole hour
    load_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise IngestError(f"{self.load_id}: series must be 1-D")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0.0):
            raise IngestError(f"{self.load_id}: values must be finite and > 0")
        if (self.start.minute, self.start.second, self.start.microsecond) != (0, 0, 0):
            raise IngestError(f"{self.load_id}: start must fall on a whole hour")


@dataclass
class LoadProfile:
    """One normalized week of 168 hourly values."""

    values: np.ndarray
    weekly_mean: float      # MW divisor used by normalize_weekly; 1.0 for synthetic
    week_start: date | None
    load_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (WEEK_HOURS,):
            raise DegenerateWeek(f"profile must have {WEEK_HOURS} values")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0.0):
            raise DegenerateWeek("profile values must be finite and >= 0")


@dataclass
class ScaleRecord:
    """Global (min, max) used for unit-interval scaling."""

    vmin: float
    vmax: float


@dataclass
class Corpus:
    profiles: np.ndarray            # (N, 168) in [0, 1]
    labels: np.ndarray              # (N, 6) one-hot pairs
    scale: ScaleRecord
    load_ids: list[str]
    week_starts: list[date]
    weekly_means: np.ndarray        # (N,) MW
    load_types: dict[str, str] = field(default_factory=dict)  # load_id -> type name

    def __post_init__(self):
        self.profiles = np.asarray(self.profiles, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.weekly_means = np.asarray(self.weekly_means, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.profiles.shape[0]

    def validate(self) -> None:
        n = self.n
        if self.profiles.shape != (n, WEEK_HOURS):
            raise BadConfig("profiles matrix must be N x 168")
        if self.labels.shape != (n, 6):
            raise BadConfig("labels must be N x 6")
        if not (len(self.load_ids) == len(self.week_starts) == self.weekly_means.size == n):
            raise BadConfig("metadata length mismatch")
        if not np.all(np.isfinite(self.profiles)):
            raise BadConfig("non-finite profile values")
        if abs(self.profiles.min()) > 1e-12 or abs(self.profiles.max() - 1.0) > 1e-12:
            raise BadConfig("scaled corpus must span [0, 1] exactly")
        for row in self.labels:
            validate_label(row)

    def profile(self, i: int) -> LoadProfile:
        return LoadProfile(self.profiles[i].copy(), float(self.weekly_means[i]),
                           self.week_starts[i], self.load_ids[i])

    def label_names(self, i: int) -> tuple[str, str]:
        return decode_label(self.labels[i])


# --------------------------------------------------------- core transforms

def normalize_weekly(raw_week: np.ndarray) -> tuple[np.ndarray, float]:
    """Divide one week of MW values by its own mean. Returns (profile, mean)."""
    raw_week = np.asarray(raw_week, dtype=np.float64)
    if raw_week.shape != (WEEK_HOURS,):
        raise DegenerateWeek(f"expected {WEEK_HOURS} values, got {raw_week.shape}")
    if not np.all(np.isfinite(raw_week)):
        raise DegenerateWeek("non-finite values in week")
    m = float(raw_week.mean())
    if m <= 0.0:
        raise DegenerateWeek(f"weekly mean {m} is not positive")
    return raw_week / m, m


def minmax_fit_transform(matrix: np.ndarray) -> tuple[np.ndarray, ScaleRecord]:
    """Scale all entries to [0, 1] by the global min and max."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.size == 0:
        raise EmptyInput("empty matrix")
    vmin, vmax = float(matrix.min()), float(matrix.max())
    if vmax <= vmin:
        raise DegenerateRange(f"max {vmax} must exceed min {vmin}")
    return (matrix - vmin) / (vmax - vmin), ScaleRecord(vmin, vmax)


def minmax_inverse(scaled: np.ndarray, record: ScaleRecord) -> np.ndarray:
    return np.asarray(scaled, dtype=np.float64) * (record.vmax - record.vmin) + record.vmin


def segment_weeks(series: RawSeries) -> list[tuple[np.ndarray, date]]:
    """Consecutive disjoint 168-hour windows starting at the first Monday 00:00.

    The trailing partial week is dropped; a series that cannot cover one
    aligned week raises TooShort.
    """
    start = series.start
    offset = (WEEK_HOURS - (start.weekday() * 24 + start.hour)) % WEEK_HOURS
    n_weeks = (series.values.size - offset) // WEEK_HOURS
    if n_weeks < 1:
        raise TooShort(
            f"{series.load_id}: {series.values.size} samples leave no aligned week")
    first_monday = (start + timedelta(hours=offset)).date()
    out = []
    for w in range(n_weeks):
        lo = offset + w * WEEK_HOURS
        out.append((series.values[lo:lo + WEEK_HOURS].copy(),
                    first_monday + timedelta(weeks=w)))
    return out


# ------------------------------------------------------------------- kmeans

def kmeans(points: np.ndarray, k: int, seed: int = 0,
           n_restarts: int = 10, max_iter: int = 300):
    """Lloyd's algorithm with k-means++ seeding, best of `n_restarts` runs.

    Returns (assignments, centroids, inertia). Deterministic for a given seed;
    at convergence every centroid equals the mean of its assigned points.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyInput("kmeans needs a nonempty 2-D point matrix")
    m = points.shape[0]
    if not 1 <= k <= m:
        raise EmptyInput(f"need 1 <= k <= {m} points, got k={k}")
    if not np.all(np.isfinite(points)):
        raise EmptyInput("kmeans features must be finite")

    best = None
    for restart in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        centroids = _kmeans_pp_init(points, k, rng)
        assign = _nearest(points, centroids)
        for _ in range(max_iter):
            centroids = _update_centroids(points, assign, centroids, k)
            new_assign = _nearest(points, centroids)
            if np.array_equal(new_assign, assign):
                assign = new_assign
                break
            assign = new_assign
        inertia = float(((points - centroids[assign]) ** 2).sum())
        if best is None or inertia < best[2]:
            best = (assign, centroids, inertia)
    return best


def _kmeans_pp_init(points, k, rng):
    m = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(m)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        tot = d2.sum()
        if tot <= 0.0:  # all remaining points coincide with a centroid
            idx = rng.integers(m)
        else:
            idx = rng.choice(m, p=d2 / tot)
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _nearest(points, centroids):
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _update_centroids(points, assign, old, k):
    centroids = old.copy()
    for j in range(k):
        mask = assign == j
        if mask.any():
            centroids[j] = points[mask].mean(axis=0)
        else:
            # re-seed an empty cluster at the point farthest from its centroid
            far = ((points - old[assign]) ** 2).sum(axis=1).argmax()
            centroids[j] = points[far]
    return centroids


def _diurnal_share(profile: np.ndarray) -> float:
    """Fraction of non-DC periodogram power in bins at multiples of 1/24 h."""
    x = profile - profile.mean()
    power = np.abs(np.fft.rfft(x)) ** 2
    nondc = power[1:].sum()
    if nondc <= 0.0:
        return 0.0
    diurnal_bins = np.arange(7, power.size, 7)  # 1/24 cycles/hour and harmonics
    return float(power[diurnal_bins].sum() / nondc)


def label_load_types(corpus_profiles: np.ndarray, load_ids: list[str],
                     seed: int = 0) -> dict[str, str]:
    """Assign 'residential'/'industrial' to each load by clustering mean profiles.

    Feature per load is its mean weekly profile; a 3-cluster k-means is run,
    the cluster whose centroid has the largest diurnal spectral share is named
    residential, the largest remaining cluster industrial, and any leftover
    cluster members go to the nearer of the two named centroids.
    """
    unique = list(dict.fromkeys(load_ids))
    if len(unique) < 2:
        raise EmptyInput("need at least 2 loads to label types")
    ids = np.asarray(load_ids)
    feats = np.stack([corpus_profiles[ids == lid].mean(axis=0) for lid in unique])
    if float(feats.std(axis=0).max()) == 0.0:
        raise ClusteringDegenerate("all loads have identical mean profiles")

    k = min(3, len(unique))
    assign, centroids, _ = kmeans(feats, k, seed=seed)
    shares = np.array([_diurnal_share(c) for c in centroids])
    sizes = np.array([(assign == j).sum() for j in range(k)])

    res_cluster = int(shares.argmax())
    rest = [j for j in range(k) if j != res_cluster]
    # largest remaining cluster by size, spectral share breaking ties
    ind_cluster = max(rest, key=lambda j: (sizes[j], shares[j]))

    out: dict[str, str] = {}
    for idx, (lid, j) in enumerate(zip(unique, assign)):
        if j == res_cluster:
            out[lid] = "residential"
        elif j == ind_cluster:
            out[lid] = "industrial"
        else:
            d_res = ((feats[idx] - centroids[res_cluster]) ** 2).sum()
            d_ind = ((feats[idx] - centroids[ind_cluster]) ** 2).sum()
            out[lid] = "residential" if d_res <= d_ind else "industrial"
    return out


# -------------------------------------------------------- surrogate corpus

@dataclass
class SurrogateConfig:
    """Shape parameters of the parametric stand-in for real metered loads."""

    loads: int = 12
    weeks: int = 104
    noise_sigma: float = 0.03
    step_rate: float = 0.03

    def validate(self) -> None:
        if self.loads < 2:
            raise BadConfig("loads must be >= 2")
        if self.weeks < 1:
            raise BadConfig("weeks must be >= 1")
        if self.noise_sigma < 0.0:
            raise BadConfig("noise_sigma must be >= 0")
        if not 0.0 <= self.step_rate <= 1.0:
            raise BadConfig("step_rate must be in [0, 1]")

    @classmethod
    def from_kv(cls, kv: dict) -> "SurrogateConfig":
        return cls(loads=kv_int(kv, "loads", 12), weeks=kv_int(kv, "weeks", 104),
                   noise_sigma=kv_float(kv, "noise_sigma", 0.03),
                   step_rate=kv_float(kv, "step_rate", 0.03))


# season -> (amp 24 h, amp 12 h, peak 24 h, peak 12 h, afternoon spike, night valley)
_RES_SHAPE = {
    "winter": (0.13, 0.15, 18.0, 8.0, 0.00, 0.14),
    "spring": (0.22, 0.05, 16.0, 9.0, 0.08, 0.00),
    "summer": (0.30, 0.04, 15.5, 10.0, 0.20, 0.00),
    "fall":   (0.08, 0.09, 18.5, 8.5, 0.00, 0.00),
}
# season -> (amp 24 h, step level sigma, noise multiplier, step level law)
# two-shift winters are bimodal, spring bursts are right-skewed
_IND_SHAPE = {
    "winter": (0.05, 0.34, 1.0, "bimodal"),
    "spring": (0.03, 0.17, 0.6, "skew"),
    "summer": (0.10, 0.26, 1.0, "normal"),
    "fall":   (0.03, 0.04, 0.8, "normal"),
}
_AR1_RHO = 0.85
_WEEKEND_AMP = 0.85
_WEEKEND_LEVEL = -0.04
_FIRST_MONDAY = date(2017, 1, 2)


def _ar1(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    if sigma == 0.0:
        rng.standard_normal(n)  # keep the stream layout fixed
        return np.zeros(n)
    innov = rng.standard_normal(n) * sigma * np.sqrt(1.0 - _AR1_RHO ** 2)
    eps = np.empty(n)
    eps[0] = innov[0] / np.sqrt(1.0 - _AR1_RHO ** 2)
    for i in range(1, n):
        eps[i] = _AR1_RHO * eps[i - 1] + innov[i]
    return eps


_STEP_LAWS = ("normal", "bimodal", "skew")


def _step_levels(rng: np.random.Generator, n: int, rate: float,
                 sigma_per_hour: np.ndarray, law_per_hour: np.ndarray) -> np.ndarray:
    switch = rng.random(n) < rate
    switch[0] = True
    pos = np.flatnonzero(switch)
    gauss = rng.standard_normal(pos.size)
    signs = rng.integers(0, 2, size=pos.size) * 2.0 - 1.0
    expo = rng.standard_exponential(pos.size) - 1.0
    sig = sigma_per_hour[pos]
    law = law_per_hour[pos]
    # bimodal: level alternates between two shifts; skew: right-tailed bursts
    offsets = np.select(
        [law == _STEP_LAWS.index("bimodal"), law == _STEP_LAWS.index("skew")],
        [signs * sig + 0.06 * gauss, expo * sig],
        default=gauss * sig)
    draws = np.clip(1.0 + offsets, 0.3, 2.2)
    return draws[np.cumsum(switch) - 1]


def make_surrogate_corpus(config: SurrogateConfig, seed: int = 0) -> Corpus:
    """Deterministic synthetic corpus with known per-load type labels.

    Residential loads mix 24 h and 12 h sinusoids whose amplitudes depend on
    the season (double daily peak in winter/fall, single tall peak in summer),
    modulated on weekends, over AR(1) noise. Industrial loads carry a weak
    diurnal component on top of a random step-level process.
    """
    config.validate()
    n_res = (config.loads + 1) // 2
    total_hours = config.weeks * WEEK_HOURS
    week_starts = [_FIRST_MONDAY + timedelta(weeks=w) for w in range(config.weeks)]
    week_seasons = [SEASONS[int(np.argmax(season_of(d)))] for d in week_starts]

    tau = np.arange(total_hours) % 24
    day_in_week = (np.arange(total_hours) % WEEK_HOURS) // 24
    weekend = day_in_week >= 5
    week_of_hour = np.repeat(np.arange(config.weeks), WEEK_HOURS)

    rows, labels, load_ids, starts, means = [], [], [], [], []
    load_types: dict[str, str] = {}

    for i in range(config.loads):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        load_id = f"load{i:02d}"
        is_res = i < n_res
        load_types[load_id] = "residential" if is_res else "industrial"

        mu = rng.uniform(80.0, 250.0)
        phase = rng.uniform(-1.5, 1.5)
        week_level = np.exp(rng.standard_normal(config.weeks) * 0.03)

        if is_res:
            a24 = np.array([_RES_SHAPE[week_seasons[w]][0] for w in range(config.weeks)])
            a12 = np.array([_RES_SHAPE[week_seasons[w]][1] for w in range(config.weeks)])
            p24 = np.array([_RES_SHAPE[week_seasons[w]][2] for w in range(config.weeks)])
            p12 = np.array([_RES_SHAPE[week_seasons[w]][3] for w in range(config.weeks)])
            spk = np.array([_RES_SHAPE[week_seasons[w]][4] for w in range(config.weeks)])
            dip = np.array([_RES_SHAPE[week_seasons[w]][5] for w in range(config.weeks)])
            amp_mod = np.where(weekend, _WEEKEND_AMP, 1.0)
            c24 = np.cos(2 * np.pi * (tau - p24[week_of_hour] - phase) / 24.0)
            c12 = np.cos(2 * np.pi * (tau - p12[week_of_hour] - phase / 2.0) / 12.0)
            eps = _ar1(rng, total_hours, config.noise_sigma)
            base = (1.0
                    + amp_mod * (a24[week_of_hour] * c24 + a12[week_of_hour] * c12
                                 + spk[week_of_hour] * np.maximum(c24, 0.0) ** 2
                                 - dip[week_of_hour] * np.maximum(-c24, 0.0) ** 2)
                    + np.where(weekend, _WEEKEND_LEVEL, 0.0)
                    + eps)
        else:
            a24 = np.array([_IND_SHAPE[week_seasons[w]][0] for w in range(config.weeks)])
            sig = np.array([_IND_SHAPE[week_seasons[w]][1] for w in range(config.weeks)])
            nmul = np.array([_IND_SHAPE[week_seasons[w]][2] for w in range(config.weeks)])
            law = np.array([_STEP_LAWS.index(_IND_SHAPE[week_seasons[w]][3])
                            for w in range(config.weeks)])
            p24i = rng.uniform(0.0, 24.0)
            c24 = np.cos(2 * np.pi * (tau - p24i) / 24.0)
            eps = _ar1(rng, total_hours, config.noise_sigma)
            levels = _step_levels(rng, total_hours, config.step_rate,
                                  sig[week_of_hour], law[week_of_hour])
            base = levels + a24[week_of_hour] * c24 + nmul[week_of_hour] * eps

        raw = mu * week_level[week_of_hour] * np.maximum(base, 0.02)
        for w in range(config.weeks):
            week = raw[w * WEEK_HOURS:(w + 1) * WEEK_HOURS]
            profile, wmean = normalize_weekly(week)
            rows.append(profile)
            labels.append(encode_label(week_seasons[w], load_types[load_id]))
            load_ids.append(load_id)
            starts.append(week_starts[w])
            means.append(wmean)

    scaled, record = minmax_fit_transform(np.stack(rows))
    corpus = Corpus(scaled, np.stack(labels), record, load_ids, starts,
                    np.array(means), load_types)
    corpus.validate()
    return corpus


# ------------------------------------------------------------- raw ingestion

def read_raw_series_csv(path) -> list[RawSeries]:
    """Read `timestamp,load_id,mw` rows into contiguous hourly series.

    Rows are grouped per load and sorted by time; a gap in the hourly grid
    splits the load into separate contiguous series (their partial weeks fall
    out later in segmentation). Duplicate timestamps are an error.
    """
    per_load: dict[str, list[tuple[datetime, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["timestamp", "load_id", "mw"]:
            raise IngestError(f"{path}: expected header timestamp,load_id,mw")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 3:
                raise IngestError(f"{path}:{lineno}: expected 3 columns")
            try:
                ts = datetime.fromisoformat(row[0].strip())
                mw = float(row[2])
            except ValueError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
            per_load.setdefault(row[1].strip(), []).append((ts, mw))

    series: list[RawSeries] = []
    for load_id, samples in per_load.items():
        samples.sort(key=lambda p: p[0])
        times = [t for t, _ in samples]
        if len(set(times)) != len(times):
            raise IngestError(f"{load_id}: duplicate timestamps")
        seg_start = 0
        for j in range(1, len(times) + 1):
            if j == len(times) or times[j] - times[j - 1] != timedelta(hours=1):
                if j < len(times) and times[j] - times[j - 1] < timedelta(hours=1):
                    raise IngestError(f"{load_id}: sub-hourly spacing at {times[j]}")
                values = np.array([mw for _, mw in samples[seg_start:j]])
                series.append(RawSeries(values, times[seg_start], load_id))
                seg_start = j
    return series


def build_corpus(series_list: list[RawSeries], seed: int = 0) -> Corpus:
    """Segment, normalize, label and scale raw series into a Corpus.

    Load types come from k-means on the per-load mean profiles, seasons from
    each week's start month.
    """
    if not series_list:
        raise EmptyInput("no raw series")
    rows, load_ids, starts, means = [], [], [], []
    for series in series_list:
        try:
            weeks = segment_weeks(series)
        except TooShort:
            continue
        for raw_week, week_start in weeks:
            profile, wmean = normalize_weekly(raw_week)
            rows.append(profile)
            load_ids.append(series.load_id)
            starts.append(week_start)
            means.append(wmean)
    if not rows:
        raise TooShort("no complete aligned weeks in any series")

    unscaled = np.stack(rows)
    load_types = label_load_types(unscaled, load_ids, seed=seed)
    labels = np.stack([
        encode_label(SEASONS[int(np.argmax(season_of(d)))], load_types[lid])
        for d, lid in zip(starts, load_ids)
    ])
    scaled, record = minmax_fit_transform(unscaled)
    corpus = Corpus(scaled, labels, record, load_ids, starts, np.array(means),
                    load_types)
    corpus.validate()
    return corpus


# ------------------------------------------------------------------ file I/O

PROFILE_HEADER = (["load_id", "week_start", "weekly_mean", "season", "type"]
                  + [f"h{i:03d}" for i in range(WEEK_HOURS)])


def write_profiles_csv(path, profiles: np.ndarray, labels: np.ndarray,
                       load_ids: list[str], week_starts: list[date | None],
                       weekly_means: np.ndarray) -> None:
    """Profile CSV: UTF-8, LF line endings, full-precision floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_HEADER)
    for i in range(profiles.shape[0]):
        season, load_type = decode_label(labels[i])
        ws = week_starts[i].isoformat() if week_starts[i] is not None else ""
        row = [load_ids[i], ws, repr(float(weekly_means[i])), season, load_type]
        row.extend(repr(float(v)) for v in profiles[i])
        writer.writerow(row)
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


@dataclass
class ProfilesFile:
    profiles: np.ndarray
    labels: np.ndarray
    load_ids: list[str]
    week_starts: list[date | None]
    weekly_means: np.ndarray


def read_profiles_csv(path) -> ProfilesFile:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PROFILE_HEADER:
            raise IngestError(f"{path}: unexpected profile CSV header")
        profiles, labels, load_ids, starts, means = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PROFILE_HEADER):
                raise IngestError(f"{path}:{lineno}: expected {len(PROFILE_HEADER)} columns")
            load_ids.append(row[0])
            starts.append(date.fromisoformat(row[1]) if row[1] else None)
            means.append(float(row[2]))
            labels.append(encode_label(row[3], row[4]))
            profiles.append(np.array([float(v) for v in row[5:]]))
    if not profiles:
        return ProfilesFile(np.zeros((0, WEEK_HOURS)), np.zeros((0, 6)), [], [],
                            np.zeros(0))
    return ProfilesFile(np.stack(profiles), np.stack(labels), load_ids, starts,
                        np.array(means))


def save_corpus(corpus: Corpus, csv_path, manifest_path) -> None:
    write_profiles_csv(csv_path, corpus.profiles, corpus.labels, corpus.load_ids,
                       corpus.week_starts, corpus.weekly_means)
    counts: dict[str, int] = {}
    for row in corpus.labels:
        season, load_type = decode_label(row)
        key = f"count_{season}_{load_type}"
        counts[key] = counts.get(key, 0) + 1
    manifest = {
        "n_profiles": corpus.n,
        "n_loads": len(dict.fromkeys(corpus.load_ids)),
        "scale_min": repr(corpus.scale.vmin),
        "scale_max": repr(corpus.scale.vmax),
    }
    for season in SEASONS:
        for load_type in TYPES:
            key = f"count_{season}_{load_type}"
            manifest[key] = counts.get(key, 0)
    for lid in dict.fromkeys(corpus.load_ids):
        manifest[f"type_{lid}"] = corpus.load_types.get(lid, "")
    write_kv(manifest_path, manifest)


def load_corpus(csv_path, manifest_path) -> Corpus:
    pf = read_profiles_csv(csv_path)
    kv = read_kv(manifest_path)
    record = ScaleRecord(kv_float(kv, "scale_min"), kv_float(kv, "scale_max"))
    load_types = {key[len("type_"):]: val for key, val in kv.items()
                  if key.startswith("type_") and val}
    corpus = Corpus(pf.profiles, pf.labels, record, pf.load_ids, pf.week_starts,
                    pf.weekly_means, load_types)
    corpus.validate()
    return corpus
