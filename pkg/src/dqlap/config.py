"""Run configuration: YAML file + ``section.key=value`` overrides, validated.

Precedence is flag > config file > built-in default. Unknown keys are
rejected. A single top-level ``seed`` feeds the data generator, the split,
the agent and the baseline.
"""

import hashlib
import json
from dataclasses import dataclass

import yaml

from .agent import AgentConfig
from .baseline import BaselineConfig
from .data import SplitSpec, SyntheticSpec
from .network import DEFAULT_HIDDEN, AdamConfig
from .trainer import TrainerConfig


class ConfigError(ValueError):
    pass


_agent = AgentConfig()
_adam = AdamConfig()
_syn = SyntheticSpec()
_trainer = TrainerConfig()

# leaf value: (allowed types, nullable, default)
SCHEMA = {
    "seed": ((int,), False, 0),
    "output": ((str,), False, "runs"),
    "backend": ((str,), True, None),
    "data": {
        "csv": ((str,), True, None),
        "synthetic": {
            "feature_count": ((int,), False, _syn.feature_count),
            "days": ((int,), False, _syn.days),
            "samples_per_day": ((int,), False, _syn.samples_per_day),
            "imbalance_ratio": ((int, float), False, _syn.imbalance_ratio),
            "class_separation": ((int, float), False, round(_syn.class_separation, 6)),
            "drift_rate": ((int, float), False, _syn.drift_rate),
        },
    },
    "split": {
        "train_fraction": ((float,), False, 0.7),
        "stratified": ((bool,), False, True),
        "per_day": ((bool,), False, True),
    },
    "agent": {
        "iterations": ((int,), False, _agent.iterations),
        "minibatch_size": ((int,), False, _agent.minibatch_size),
        "gamma": ((int, float), False, _agent.gamma),
        "learning_rate": ((float,), False, _adam.learning_rate),
        "beta1": ((float,), False, _adam.beta1),
        "beta2": ((float,), False, _adam.beta2),
        "adam_epsilon": ((float,), False, _adam.epsilon),
        "replay_capacity": ((int,), False, _agent.replay_capacity),
        "target_sync_interval": ((int,), True, None),
        "epsilon": ((int, float), False, _agent.epsilon),
        "epsilon_decay": ((float,), False, _agent.epsilon_decay),
        "epsilon_min": ((float,), False, _agent.epsilon_min),
        "mix_alpha": ((int, float), False, _agent.mix_alpha),
        "mix_alpha_decay": ((float,), False, _agent.mix_alpha_decay),
        "mix_alpha_min": ((float,), False, _agent.mix_alpha_min),
        "hidden": ((list,), False, list(DEFAULT_HIDDEN)),
        "target_rule": ((str,), False, _agent.target_rule),
        "stop_recall": ((float,), True, None),
    },
    "baseline": {
        # None: same as agent.iterations
        "epochs": ((int,), True, None),
        "minibatch_size": ((int,), False, 128),
        "loss": ((str,), False, "mse_on_onehot"),
    },
    "trainer": {
        "iterations_per_day": ((int,), True, None),
        "warm_epsilon": ((int, float), True, _trainer.warm_epsilon),
        "warm_mix_alpha": ((str,), False, _trainer.warm_mix_alpha),
        "timing_repetitions": ((int,), False, _trainer.timing_repetitions),
    },
    "project": {
        "normalized": ((bool,), False, True),
    },
}


def defaults(schema=SCHEMA):
    return {k: defaults(v) if isinstance(v, dict) else v[2] for k, v in schema.items()}


def _check_leaf(path, value, spec):
    types, nullable, _ = spec
    if value is None:
        if not nullable:
            raise ConfigError(f"{path}: value required")
        return value
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, got bool")
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types):
        raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")
    if isinstance(value, list) and not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{path}: expected a list of integers")
    return value


def merge(base, layer, schema=SCHEMA, prefix=""):
    out = dict(base)
    if not isinstance(layer, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping")
    for key, value in layer.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"{path}: unknown key")
        if isinstance(schema[key], dict):
            out[key] = merge(base[key], value or {}, schema[key], path + ".")
        else:
            out[key] = _check_leaf(path, value, schema[key])
    return out


def parse_override(text):
    """``a.b.c=value`` -> nested dict; value parsed as YAML scalar."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from exc
    node = value
    for part in reversed(key.strip().split(".")):
        node = {part: node}
    return node


def load_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return loaded or {}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def resolve(cls, path=None, overrides=()):
        """Defaults, then the file at ``path``, then each override layer in order."""
        values = defaults()
        if path is not None:
            values = merge(values, load_file(path))
        for layer in overrides:
            values = merge(values, parse_override(layer) if isinstance(layer, str) else layer)
        cfg = cls(values)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self):
        return self.values["seed"]

    def _build(self, section, factory):
        try:
            return factory()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}: {exc}") from exc

    def synthetic_spec(self):
        s = self.values["data"]["synthetic"]
        return self._build("data.synthetic", lambda: SyntheticSpec(seed=self.seed, **s))

    def split_spec(self):
        s = self.values["split"]
        return self._build("split", lambda: SplitSpec(seed=self.seed, **s))

    def adam_config(self):
        a = self.values["agent"]
        return self._build("agent", lambda: AdamConfig(a["learning_rate"], a["beta1"], a["beta2"],
                                                       a["adam_epsilon"]))

    def agent_config(self):
        a = dict(self.values["agent"])
        for k in ("learning_rate", "beta1", "beta2", "adam_epsilon"):
            a.pop(k)
        a["hidden"] = tuple(a["hidden"])
        adam = self.adam_config()
        return self._build("agent", lambda: AgentConfig(adam=adam, seed=self.seed, **a))

    def baseline_config(self):
        b = self.values["baseline"]
        agent = self.values["agent"]
        epochs = agent["iterations"] if b["epochs"] is None else b["epochs"]
        adam = self.adam_config()
        return self._build("baseline", lambda: BaselineConfig(
            epochs=epochs, minibatch_size=b["minibatch_size"], adam=adam, loss=b["loss"],
            hidden=tuple(agent["hidden"]), seed=self.seed))

    def trainer_config(self):
        t = self.values["trainer"]
        agent, baseline, split = self.agent_config(), self.baseline_config(), self.split_spec()
        return self._build("trainer", lambda: TrainerConfig(agent=agent, baseline=baseline,
                                                            split=split, **t))

    def validate(self):
        if self.seed < 0:
            raise ConfigError("seed: must be non-negative")
        if self.values["backend"] not in (None, "auto", "python", "cython"):
            raise ConfigError("backend: must be auto, python or cython")
        if any(h < 1 for h in self.values["agent"]["hidden"]):
            raise ConfigError("agent.hidden: layer sizes must be >= 1")
        self.synthetic_spec()
        self.trainer_config()

    @property
    def backend(self):
        b = self.values["backend"]
        return None if b in (None, "auto") else b

    def to_yaml(self):
        return yaml.safe_dump(self.values, sort_keys=True, default_flow_style=False)

    def digest(self, *extra):
        blob = json.dumps([self.values, *extra], sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:10]
