"""The three comparison regimes: supervised baseline, DDQN trained once on
everything, and DDQN updated day by day on the cumulative data.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .agent import AgentConfig, evaluate, predict, train
from .baseline import BaselineConfig, train_baseline
from .data import (DataError, SplitSpec, apply_scaler, cumulative_through_day, fit_scaler,
                   only_day, split)
from .evaluation import format_table, measure_prediction_time

log = logging.getLogger(__name__)

MLP_ROW = "MLP Network"
ALL_AT_ONCE_ROW = "DDQN without Update Policy"
DAILY_ROW = "DDQN with Update Policy"
WARM_MIX_ALPHA = ("continue", "reset")


@dataclass(frozen=True)
class TrainerConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    split: SplitSpec = field(default_factory=lambda: SplitSpec(per_day=True))
    # None: agent.iterations // days (at least 1)
    iterations_per_day: int | None = None
    # epsilon on each warm start; None restarts at agent.epsilon
    warm_epsilon: float | None = 0.3
    warm_mix_alpha: str = "continue"
    timing_repetitions: int = 5

    def __post_init__(self):
        if self.iterations_per_day is not None and self.iterations_per_day < 0:
            raise ValueError("iterations_per_day must be >= 0")
        if self.warm_epsilon is not None and not 0 <= self.warm_epsilon <= 1:
            raise ValueError("warm_epsilon must lie in [0, 1]")
        if self.warm_mix_alpha not in WARM_MIX_ALPHA:
            raise ValueError(f"warm_mix_alpha must be one of {WARM_MIX_ALPHA}")
        if self.timing_repetitions < 3:
            raise ValueError("timing_repetitions must be >= 3")


@dataclass
class RegimeResult:
    name: str
    report: object
    network: object
    scaler: object
    history: list
    test: object = None


@dataclass
class DailyRunRecord:
    day: int
    cumulative_sample_count: int
    test: object
    forecast: object | None
    checkpoint: str
    network: object = field(default=None, repr=False)
    best_iteration: int = 0
    scaler: object = field(default=None, repr=False)
    # how this day's training was started; recorded because it is a policy choice
    warm_start: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "day": self.day,
            "warm_start": self.warm_start,
            "cumulative_sample_count": self.cumulative_sample_count,
            "best_iteration": self.best_iteration,
            "test": self.test.to_dict(),
            "forecast": None if self.forecast is None else self.forecast.to_dict(),
            "checkpoint": self.checkpoint,
        }


def _window_split(window, spec, day):
    if not spec.per_day:
        spec = replace(spec, seed=spec.seed + day - 1)
    return split(window, spec)


def prepare(data, spec, day=1):
    """Split, fit the scaler on the training part only, scale both parts."""
    train_raw, test_raw = _window_split(data, spec, day)
    if len(train_raw) == 0 or len(test_raw) == 0:
        raise DataError("split produced an empty train or test part")
    scaler = fit_scaler(train_raw)
    return apply_scaler(train_raw, scaler), apply_scaler(test_raw, scaler), scaler


def _tagged(progress, **tags):
    if progress is None:
        return None
    return lambda rec: progress({**tags, **rec})


def run_all_at_once(config, data, progress=None, backend=None):
    train_set, test_set, scaler = prepare(data, config.split)
    res = train(config.agent, train_set, test_set, _tagged(progress, regime="ddqn"), backend=backend)
    return RegimeResult(ALL_AT_ONCE_ROW, evaluate(res.network, test_set), res.network, scaler,
                        res.history, test_set)


def run_baseline(config, data, progress=None, backend=None):
    train_set, test_set, scaler = prepare(data, config.split)
    res = train_baseline(config.baseline, train_set, test_set, _tagged(progress, regime="baseline"),
                         backend=backend)
    return RegimeResult(MLP_ROW, evaluate(res.network, test_set), res.network, scaler,
                        res.history, test_set)


def _check_days(data):
    present = set(np.unique(data.days).tolist())
    missing = [d for d in range(1, data.day_count + 1) if d not in present]
    if missing:
        raise DataError(f"no samples for day(s) {missing}")


def run_daily_update(config, data, progress=None, backend=None):
    """Train on days 1..d for each d, warm-starting from the previous day's best
    network, and forecast day d+1 with the day-d model.

    Returns (records, final RegimeResult).
    """
    _check_days(data)
    n_days = data.day_count
    budget = config.iterations_per_day
    if budget is None:
        budget = max(1, config.agent.iterations // n_days) if config.agent.iterations else 0
    records, history = [], []
    network, schedules = None, None
    for day in range(1, n_days + 1):
        warm = {"from_previous_day": network is not None, "optimizer": "fresh"}
        if schedules is not None:
            warm.update(epsilon=schedules.epsilon, mix_alpha=schedules.mix_alpha,
                        mix_alpha_policy=config.warm_mix_alpha)
        window = cumulative_through_day(data, day)
        train_set, test_set, scaler = prepare(window, config.split, day)
        agent_cfg = replace(config.agent, iterations=budget, seed=config.agent.seed + day - 1)
        res = train(agent_cfg, train_set, test_set, _tagged(progress, regime="ddqn-daily", day=day),
                    network=network, schedules=schedules, backend=backend)
        history.extend({"day": day, **h} for h in res.history)
        forecast = None
        if day < n_days:
            nxt = apply_scaler(only_day(data, day + 1), scaler)
            forecast = evaluate(res.network, nxt)
        test_report = evaluate(res.network, test_set)
        records.append(DailyRunRecord(day, len(window), test_report, forecast,
                                      f"ddqn-daily-day{day:03d}.ckpt", res.network, res.best_iteration,
                                      scaler, warm))
        log.info("day %d: %d samples, test macro recall %.4f", day, len(window), test_report.macro_recall)
        network = res.network
        base = res.schedules or agent_cfg.schedules()
        schedules = replace(
            base,
            epsilon=config.agent.epsilon if config.warm_epsilon is None else config.warm_epsilon,
            mix_alpha=base.mix_alpha if config.warm_mix_alpha == "continue" else config.agent.mix_alpha,
        )
    last = records[-1]
    final = RegimeResult(DAILY_ROW, last.test, last.network, scaler, history, test_set)
    return records, final


@dataclass
class Comparison:
    rows: dict
    timing: dict
    results: dict
    daily_records: list

    def table(self, with_timing=True):
        return format_table(self.rows, self.timing if with_timing else None)


def run_comparison(config, data, progress=None, backend=None, timing=True):
    """Run all three regimes with matched seeds and architecture."""
    baseline = run_baseline(config, data, progress, backend)
    once = run_all_at_once(config, data, progress, backend)
    records, daily = run_daily_update(config, data, progress, backend)
    results = {r.name: r for r in (baseline, once, daily)}
    rows = {name: r.report for name, r in results.items()}
    times = {}
    if timing:
        probe = once.test
        for name, r in results.items():
            times[name] = measure_prediction_time(r.network, probe, config.timing_repetitions,
                                                  predict=predict)
    return Comparison(rows, times, results, records)
