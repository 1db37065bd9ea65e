"""Offline simulation of rating elicitation for new users, in single- and
cross-domain recommendation settings."""

from .data import AUXILIARY, TARGET, Dataset, Rating, RatingStats, build_dataset, compute_stats
from .harness import (ExperimentResult, FoldPlan, Scenario, UserSplit, build_training_pool,
                      elicit_step, plan_folds, run_experiment, split_user)
from .ingest import convert_snap, filter_overlap, load_csv, write_csv
from .metrics import improvement, mae, spread
from .mf import FactorModel, Hyperparams, predict, recommend_top_n, train
from .strategies import (ScoredCandidate, StrategyKind, rank_candidates, score_entropy0,
                         score_highest_predicted, score_lowest_predicted, score_popularity)

__version__ = "0.1.0"
