"""Supervised MLP baseline: the same network trained directly on the labels."""

from dataclasses import dataclass, field

import numpy as np

from .agent import TrainResult, evaluate, predict
from .network import DEFAULT_HIDDEN, AdamConfig, build

LOSSES = ("mse_on_onehot", "cross_entropy")


@dataclass(frozen=True)
class BaselineConfig:
    epochs: int = 1000
    minibatch_size: int = 128
    adam: AdamConfig = field(default_factory=AdamConfig)
    loss: str = "mse_on_onehot"
    hidden: tuple = DEFAULT_HIDDEN
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be positive")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def batch_loss_grad(net, x, y, loss="mse_on_onehot"):
    onehot = np.eye(net.output_dim)[y]
    if loss == "mse_on_onehot":
        return net.backward_mse(x, onehot)
    acts = net.activations(x)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    value = float(-np.mean(log_p[np.arange(len(y)), y]))
    grad_out = (np.exp(log_p) - onehot) / len(y)
    return value, net.backward_from_activations(acts, grad_out)


def train_baseline(config, train_data, test_data, progress=None, backend=None):
    """Minibatch Adam on the labels; returns the best-by-test-macro-recall weights."""
    if len(train_data) == 0 or len(test_data) == 0:
        raise ValueError("train and test data must be non-empty")
    net = build(train_data.feature_count, config.hidden, 2, seed=config.seed, backend=backend)
    rng = np.random.default_rng(config.seed)
    x, y = train_data.features, train_data.labels
    mb = config.minibatch_size
    best_net, best_recall, best_epoch, best_metrics = net.clone(), -1.0, 0, None
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(y))
        losses = []
        for start in range(0, len(y), mb):
            idx = order[start:start + mb]
            value, grad = batch_loss_grad(net, x[idx], y[idx], config.loss)
            net.adam_step(grad, config.adam)
            losses.append(value)
        metrics = evaluate(net, test_data)
        if metrics.macro_recall > best_recall:
            best_net, best_recall, best_epoch, best_metrics = net.clone(), metrics.macro_recall, epoch, metrics
        rec = {
            "iteration": epoch,
            "mean_loss": float(np.mean(losses)),
            "learn_steps": len(losses),
            "accuracy": metrics.accuracy,
            "precision": metrics.macro_precision,
            "recall": metrics.macro_recall,
            "f1": metrics.macro_f1,
        }
        history.append(rec)
        if progress is not None:
            progress(rec)
    return TrainResult(best_net, history, None, best_epoch, best_metrics)


predict_baseline = predict
