"""Double deep Q-learning agent for the classification MDP.

The bootstrap target blends the current estimate with the usual one-step
return::

    y = (1 - mix_alpha) * Q(s, a) + mix_alpha * (r + gamma * Q_next)

where ``Q_next`` depends on ``target_rule``:

``current_eval`` (default)
    next action picked by the target network, valued by the current network.
``target``
    next action picked and valued by the target network (max over target Q).
``van_hasselt``
    next action picked by the current network, valued by the target network.

Terminal transitions drop the ``gamma * Q_next`` term.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import env as cmdp
from .evaluation import compute_metrics, greedy_labels
from .network import DEFAULT_HIDDEN, AdamConfig, build

TARGET_RULES = ("current_eval", "target", "van_hasselt")


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray | None
    terminal: bool

    def __post_init__(self):
        if self.terminal != (self.next_state is None):
            raise ValueError("terminal experiences have no next_state and vice versa")


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self):
        return len(self.actions)

    @classmethod
    def of(cls, experiences):
        dim = len(experiences[0].state)
        zero = np.zeros(dim)
        return cls(
            np.array([e.state for e in experiences], dtype=np.float64),
            np.array([e.action for e in experiences], dtype=np.int64),
            np.array([e.reward for e in experiences], dtype=np.float64),
            np.array([zero if e.terminal else e.next_state for e in experiences], dtype=np.float64),
            np.array([e.terminal for e in experiences], dtype=bool),
        )


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling (with replacement)."""

    def __init__(self, capacity, state_dim):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.next_states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.terminals = np.zeros(capacity, dtype=bool)
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state, terminal):
        i = self.ptr
        self.states[i] = state
        if terminal:
            self.next_states[i] = 0.0
        else:
            self.next_states[i] = next_state
        self.actions[i] = action
        self.rewards[i] = reward
        self.terminals[i] = terminal
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push(self, exp):
        self.add(exp.state, exp.action, exp.reward, exp.next_state, exp.terminal)

    def sample(self, rng, n):
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=n)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.terminals[idx])

    def experiences(self):
        """Stored transitions, oldest first."""
        start = self.ptr if self.size == self.capacity else 0
        out = []
        for j in range(self.size):
            i = (start + j) % self.capacity
            term = bool(self.terminals[i])
            out.append(Experience(self.states[i].copy(), int(self.actions[i]), float(self.rewards[i]),
                                  None if term else self.next_states[i].copy(), term))
        return out


@dataclass(frozen=True)
class Schedules:
    epsilon: float = 0.9
    epsilon_decay: float = 0.99
    epsilon_min: float = 0.0001
    mix_alpha: float = 1.0
    mix_alpha_decay: float = 0.9999
    mix_alpha_min: float = 0.0001

    def decay(self):
        return replace(
            self,
            epsilon=max(self.epsilon * self.epsilon_decay, self.epsilon_min),
            mix_alpha=max(self.mix_alpha * self.mix_alpha_decay, self.mix_alpha_min),
        )


def decay_schedules(s):
    return s.decay()


@dataclass(frozen=True)
class AgentConfig:
    iterations: int = 1000
    minibatch_size: int = 128
    gamma: float = 0.001
    adam: AdamConfig = field(default_factory=AdamConfig)
    replay_capacity: int = 10_000
    # None: one full pass over the training data
    target_sync_interval: int | None = None
    epsilon: float = 0.9
    epsilon_decay: float = 0.99
    epsilon_min: float = 0.0001
    mix_alpha: float = 1.0
    mix_alpha_decay: float = 0.9999
    mix_alpha_min: float = 0.0001
    hidden: tuple = DEFAULT_HIDDEN
    target_rule: str = "current_eval"
    # stop once test macro recall reaches this value (None: run every iteration)
    stop_recall: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        for name in ("minibatch_size", "replay_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.target_sync_interval is not None and self.target_sync_interval < 1:
            raise ValueError("target_sync_interval must be >= 1")
        for name in ("epsilon", "epsilon_decay", "epsilon_min", "mix_alpha", "mix_alpha_decay", "mix_alpha_min"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.epsilon_min > self.epsilon or self.mix_alpha_min > self.mix_alpha:
            raise ValueError("schedule floors must not exceed their initial values")
        if self.target_rule not in TARGET_RULES:
            raise ValueError(f"target_rule must be one of {TARGET_RULES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def schedules(self):
        return Schedules(self.epsilon, self.epsilon_decay, self.epsilon_min,
                         self.mix_alpha, self.mix_alpha_decay, self.mix_alpha_min)


def select_action(net, state, epsilon, rng):
    """Epsilon-greedy: uniform random action with probability ``epsilon``,
    otherwise the argmax of Q (ties go to action 0)."""
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(cmdp.N_ACTIONS))
    return int(np.argmax(net.forward(state)))


def _next_values(current, target, next_states, rule, current_next=None):
    q_target = target.forward(next_states)
    if rule == "target":
        return q_target.max(axis=1)
    rows = np.arange(len(next_states))
    if current_next is None:
        current_next = current.forward(next_states)
    if rule == "current_eval":
        return current_next[rows, np.argmax(q_target, axis=1)]
    return q_target[rows, np.argmax(current_next, axis=1)]


def compute_targets(current, target, batch, gamma, mix_alpha, rule="current_eval",
                    q_current=None, current_next=None):
    """Blended bootstrap targets for a batch of transitions."""
    if current.layers != target.layers:
        raise ValueError("current and target networks must share an architecture")
    rows = np.arange(len(batch))
    if q_current is None:
        q_current = current.forward(batch.states)
    q_sa = q_current[rows, batch.actions]
    future = _next_values(current, target, batch.next_states, rule, current_next)
    future = np.where(batch.terminals, 0.0, future)
    return (1.0 - mix_alpha) * q_sa + mix_alpha * (batch.rewards + gamma * future)


def compute_target(current, target, exp, gamma, mix_alpha, rule="current_eval"):
    return float(compute_targets(current, target, Batch.of([exp]), gamma, mix_alpha, rule)[0])


def masked_loss_grad(current, target, batch, gamma, mix_alpha, rule="current_eval"):
    """Pre-step loss and flat gradient of the masked Q-regression on ``batch``."""
    n = len(batch)
    if n == 0:
        raise ValueError("empty minibatch")
    if rule == "target":
        acts = current.activations(batch.states)
        current_next = None
    else:
        # one stacked pass serves both Q(s, .) and Q(s', .)
        acts = current.activations(np.concatenate([batch.states, batch.next_states]))
        current_next = acts[-1][n:]
        acts = [a[:n] for a in acts]
    q = acts[-1]
    y = compute_targets(current, target, batch, gamma, mix_alpha, rule,
                        q_current=q, current_next=current_next)
    rows = np.arange(n)
    err = q[rows, batch.actions] - y
    grad_out = np.zeros_like(q)
    grad_out[rows, batch.actions] = 2.0 * err / n
    return float(np.mean(err * err)), current.backward_from_activations(acts, grad_out)


class DDQNAgent:
    """Current/target network pair, replay buffer and schedules.

    ``network`` warm-starts the current network (it is copied; the optimizer
    state starts fresh).
    """

    def __init__(self, input_dim, config=AgentConfig(), network=None, schedules=None, backend=None):
        self.config = config
        if network is None:
            self.current = build(input_dim, config.hidden, cmdp.N_ACTIONS, seed=config.seed, backend=backend)
        else:
            self.current = network.clone()
        self.target = self.current.clone()
        self.buffer = ReplayBuffer(config.replay_capacity, input_dim)
        self.schedules = schedules or config.schedules()
        self.rng = np.random.default_rng(config.seed)
        self.steps = 0

    def act(self, state):
        return select_action(self.current, state, self.schedules.epsilon, self.rng)

    def learn_step(self, batch):
        loss, grad = masked_loss_grad(self.current, self.target, batch, self.config.gamma,
                                      self.schedules.mix_alpha, self.config.target_rule)
        self.current.adam_step(grad, self.config.adam)
        return loss

    def sync_target(self, interval):
        return sync_target(self.current, self.target, self.steps, interval)


def sync_target(current, target, step_counter, interval):
    """Copy ``current`` into ``target`` when ``step_counter`` is a multiple of ``interval``."""
    if interval < 1:
        raise ValueError("interval must be >= 1")
    if step_counter % interval == 0:
        current.copy_into(target)
        return True
    return False


def predict(net, samples):
    x = samples.features if hasattr(samples, "features") else samples
    return greedy_labels(net.forward(x))


def evaluate(net, data):
    return compute_metrics(predict(net, data), data.labels)


@dataclass
class TrainResult:
    network: object
    history: list
    schedules: Schedules | None = None
    best_iteration: int = 0
    best_metrics: object = None


def _record(iteration, sched, losses, metrics, steps):
    return {
        "iteration": iteration,
        "epsilon": sched.epsilon,
        "mix_alpha": sched.mix_alpha,
        "mean_loss": float(np.mean(losses)) if losses else None,
        "learn_steps": steps,
        "accuracy": metrics.accuracy,
        "precision": metrics.macro_precision,
        "recall": metrics.macro_recall,
        "f1": metrics.macro_f1,
    }


def train(config, train_data, test_data, progress=None, network=None, schedules=None, backend=None):
    """Run the DDQN training loop and keep the best-by-test-macro-recall weights.

    One iteration is one shuffled episode over ``train_data``. Every
    environment step stores its transition and, once the buffer holds a full
    minibatch, performs one learning step. Schedules decay once per iteration.
    """
    if len(train_data) == 0 or len(test_data) == 0:
        raise ValueError("train and test data must be non-empty")
    agent = DDQNAgent(train_data.feature_count, config, network, schedules, backend)
    sync_every = config.target_sync_interval or len(train_data)
    mb = config.minibatch_size
    best_net = agent.current.clone()
    best_recall = -1.0
    best_iteration = 0
    best_metrics = None
    history = []
    for iteration in range(1, config.iterations + 1):
        sched = agent.schedules
        episode, state = cmdp.reset(train_data, agent.rng)
        losses = []
        while not episode.done:
            action = agent.act(state)
            res = episode.step(action)
            agent.buffer.add(state, action, res.reward, res.next_state, res.terminal)
            if len(agent.buffer) >= mb:
                losses.append(agent.learn_step(agent.buffer.sample(agent.rng, mb)))
            agent.steps += 1
            agent.sync_target(sync_every)
            state = res.next_state
        agent.schedules = sched.decay()
        metrics = evaluate(agent.current, test_data)
        if metrics.macro_recall > best_recall:
            best_recall = metrics.macro_recall
            best_net = agent.current.clone()
            best_iteration = iteration
            best_metrics = metrics
        rec = _record(iteration, sched, losses, metrics, len(losses))
        history.append(rec)
        if progress is not None:
            progress(rec)
        if config.stop_recall is not None and best_recall >= config.stop_recall:
            break
    return TrainResult(best_net, history, agent.schedules, best_iteration, best_metrics)
