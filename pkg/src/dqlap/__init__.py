"""Fault detection as a classification MDP solved with double deep Q-learning,
with a daily cumulative warm-start update policy and a supervised MLP baseline."""

from ._backend import name as backend
from .agent import AgentConfig, DDQNAgent, ReplayBuffer, Schedules, compute_target, predict, train
from .baseline import BaselineConfig, train_baseline
from .data import (Dataset, SplitSpec, SyntheticSpec, apply_scaler, cumulative_through_day,
                   fit_scaler, generate_synthetic, load_csv, split, write_csv)
from .evaluation import compute_metrics, measure_prediction_time, pca_project
from .network import AdamConfig, QNetwork, build
from .trainer import TrainerConfig, run_all_at_once, run_comparison, run_daily_update

__version__ = "0.1.0"
