"""loadgan: conditional-GAN synthesis of week-long hourly load profiles with
distributional, spectral, forecast-transfer and grid-feasibility validation.
"""

from . import cgan, corpus, evaluation, gridmap, nn
from .cgan import (
    Discriminator, Generator, TrainConfig, Trainer, generate, generate_matrix,
    load_generator, load_trainer, save_trainer, train_cgan,
)
from .corpus import (
    Corpus, LoadProfile, RawSeries, ScaleRecord, SurrogateConfig,
    build_corpus, encode_label, decode_label, kmeans, label_load_types,
    load_corpus, make_surrogate_corpus, minmax_fit_transform, minmax_inverse,
    normalize_weekly, read_raw_series_csv, save_corpus, season_of, segment_weeks,
)
from .evaluation import (
    ForecastModel, ForecastReport, SpectrumResult, compare_psd, ensemble_psd,
    forecast_eval, periodogram, per_hour_w1, train_forecaster,
    wasserstein1_empirical,
)
from .gridmap import (
    FeasibilityReport, GridCase, HourlyLoads, PFSolution, build_ybus,
    feasibility_report, load_bundled_case, map_profiles, newton_pf,
    parse_matpower_case, serialize_case,
)

__version__ = "0.1.0"
