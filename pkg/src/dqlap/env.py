"""Classification MDP: each sample is a state, each class an action.

An episode is one shuffled pass over a dataset. Choosing the sample's label
earns +1, anything else -1, and the next state is always the next sample in
the shuffled order. The last sample ends the episode with no next state.
"""

from dataclasses import dataclass

import numpy as np

N_ACTIONS = 2


class EpisodeOver(RuntimeError):
    pass


def reward(action, label):
    return 1.0 if action == label else -1.0


@dataclass(frozen=True)
class StepResult:
    reward: float
    next_state: np.ndarray | None
    terminal: bool


class CmdpEpisode:
    def __init__(self, features, labels, order):
        self._features = features
        self._labels = labels
        self.order = order
        self.cursor = 0

    def __len__(self):
        return len(self.order)

    @property
    def done(self):
        return self.cursor >= len(self.order)

    @property
    def state(self):
        if self.done:
            raise EpisodeOver("episode is finished")
        return self._features[self.order[self.cursor]]

    @property
    def label(self):
        if self.done:
            raise EpisodeOver("episode is finished")
        return int(self._labels[self.order[self.cursor]])

    def step(self, action):
        if self.done:
            raise EpisodeOver("step() called on a finished episode")
        if action not in (0, 1):
            raise ValueError(f"action must be 0 or 1, got {action!r}")
        r = reward(action, self.label)
        self.cursor += 1
        if self.done:
            return StepResult(r, None, True)
        return StepResult(r, self._features[self.order[self.cursor]], False)


def reset(data, seed):
    """Start a new episode over ``data`` in a seeded random order.

    ``seed`` may be an int or a ``numpy.random.Generator`` (which is advanced).
    Returns the episode and its initial state.
    """
    if len(data) == 0:
        raise ValueError("cannot start an episode on an empty dataset")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    episode = CmdpEpisode(data.features, data.labels, rng.permutation(len(data)))
    return episode, episode.state
