"""Trend-based positive-unlabeled learning.

Train a classifier on positive vs. unlabeled data with balanced resampling,
record each unlabeled example's predicted score over training, score the
trend of every trace, split the unlabeled set at a natural break of those
scores and retrain on the resulting pseudo-labels.
"""
from .data import GaussianConfig, PUDataset, gen_two_gaussians, load_csv, make_pu_split, save_csv
from .jenks import BreakResult, PseudoLabel, natural_break_fast, natural_break_oracle, partition_by_trend
from .pipeline import PipelineConfig, RunReport, run_pipeline
from .tpp_stats import (
    Direction,
    Estimator,
    ScoreTrace,
    TrendScoreParams,
    empirical_mean_score,
    mk_test,
    psi,
    score_all,
    simplified_trend_score,
    trend_score,
)

__version__ = "0.1.0"
