import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import separable
from dqlap.agent import (AgentConfig, Batch, DDQNAgent, Experience, ReplayBuffer, Schedules,
                         compute_target, compute_targets, decay_schedules, masked_loss_grad,
                         predict, select_action, sync_target, train)
from dqlap.data import Dataset
from dqlap.network import LayerSpec, QNetwork, build


def linear_net(w0, w1, b=(0.0, 0.0), backend=None):
    """One-input linear Q-network: Q(s) = (w0*s + b0, w1*s + b1)."""
    return QNetwork([LayerSpec(1, 2, "linear")], [w0, w1, *b], backend=backend)


def const_net(q0, q1):
    return linear_net(0.0, 0.0, (q0, q1))


# -- action selection -------------------------------------------------------

def test_greedy_action():
    assert select_action(const_net(0.2, 0.7), [0.0], 0.0, np.random.default_rng(0)) == 1


def test_greedy_tie_goes_to_action_zero():
    assert select_action(const_net(0.5, 0.5), [0.0], 0.0, np.random.default_rng(0)) == 0


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(1)
    net = const_net(0.0, 1.0)
    freq = np.mean([select_action(net, [0.0], 1.0, rng) for _ in range(10_000)])
    assert abs(freq - 0.5) <= 0.02


# -- bootstrap target -------------------------------------------------------

def exp_(s=1.0, a=0, r=1.0, s2=1.0, terminal=False):
    return Experience(np.array([s]), a, r, None if terminal else np.array([s2]), terminal)


@pytest.mark.parametrize("rule", ["current_eval", "target", "van_hasselt"])
def test_alpha_one_with_identical_nets_is_plain_bellman(rule):
    cur = linear_net(0.3, -0.8, (0.1, 0.9))
    q_next = cur.forward([2.0])
    got = compute_target(cur, cur.clone(), exp_(s=1.0, a=1, r=-1.0, s2=2.0), 0.9, 1.0, rule)
    assert got == pytest.approx(-1.0 + 0.9 * q_next.max(), abs=1e-12)


def test_alpha_one_target_rule_uses_target_max():
    cur = const_net(5.0, -5.0)
    tgt = const_net(1.0, 3.0)
    got = compute_target(cur, tgt, exp_(r=0.5), 0.9, 1.0, "target")
    assert got == pytest.approx(0.5 + 0.9 * 3.0, abs=1e-12)


def test_blended_target_hand_value():
    # Q_current(s, a) = 2, best future value 3, alpha 0.5, r 1, gamma 0.9
    cur = const_net(2.0, 3.0)
    tgt = const_net(0.0, 3.0)
    for rule in ("current_eval", "target", "van_hasselt"):
        got = compute_target(cur, tgt, exp_(a=0, r=1.0), 0.9, 0.5, rule)
        assert got == pytest.approx(2.85, abs=1e-12)


def test_double_q_rules_differ_as_documented():
    # target net prefers action 0 at s'; current net prefers action 1
    cur = linear_net(0.0, 0.0, (1.0, 4.0))
    tgt = linear_net(0.0, 0.0, (10.0, 2.0))
    e = exp_(a=0, r=0.0)
    assert compute_target(cur, tgt, e, 1.0, 1.0, "current_eval") == pytest.approx(1.0)
    assert compute_target(cur, tgt, e, 1.0, 1.0, "target") == pytest.approx(10.0)
    assert compute_target(cur, tgt, e, 1.0, 1.0, "van_hasselt") == pytest.approx(2.0)


@pytest.mark.parametrize("rule", ["current_eval", "target", "van_hasselt"])
def test_terminal_never_bootstraps(rule):
    cur, tgt = const_net(7.0, 9.0), const_net(4.0, 8.0)
    assert compute_target(cur, tgt, exp_(r=-1.0, terminal=True), 0.9, 1.0, rule) == -1.0
    assert compute_target(cur, tgt, exp_(a=1, r=1.0, terminal=True), 0.5, 0.25, rule) == pytest.approx(
        0.75 * 9.0 + 0.25 * 1.0, abs=1e-12)


def test_target_architecture_mismatch():
    with pytest.raises(ValueError):
        compute_target(const_net(0, 0), build(1, (3,), 2), exp_(), 0.9, 1.0)


def test_experience_invariant():
    with pytest.raises(ValueError):
        Experience(np.zeros(1), 0, 1.0, None, False)


# -- learning step ----------------------------------------------------------

def test_learn_step_hand_loss(backend):
    cur = linear_net(1.0, 2.0, backend=backend)
    agent = DDQNAgent(1, AgentConfig(gamma=0.5, mix_alpha=0.5, minibatch_size=1), network=cur)
    # Q(1) = (1, 2); at s' = 0.5 target picks action 1, current values it at 1.0
    # y = 0.5 * 2 + 0.5 * (-1 + 0.5 * 1.0) = 0.75 -> loss (0.75 - 2)^2
    loss = agent.learn_step(Batch.of([exp_(s=1.0, a=1, r=-1.0, s2=0.5)]))
    assert loss == pytest.approx(1.5625, abs=1e-12)


def test_learn_step_fixed_point(backend):
    cur = const_net(1.0, -1.0)
    agent = DDQNAgent(1, AgentConfig(gamma=0.9), network=cur, backend=backend)
    before = agent.current.params.copy()
    loss = agent.learn_step(Batch.of([exp_(a=0, r=1.0, terminal=True), exp_(a=1, r=-1.0, terminal=True)]))
    assert loss == 0.0 and np.array_equal(agent.current.params, before)


def test_masked_batch_gradient_matches_finite_differences(backend):
    rng = np.random.default_rng(3)
    cur = build(31, seed=1, backend=backend)
    tgt = build(31, seed=2, backend=backend)
    batch = Batch(rng.random((8, 31)), rng.integers(0, 2, 8), rng.choice([-1.0, 1.0], 8),
                  rng.random((8, 31)), np.array([False] * 7 + [True]))
    _, grad = masked_loss_grad(cur, tgt, batch, 0.9, 0.7)
    y = compute_targets(cur, tgt, batch, 0.9, 0.7)
    rows = np.arange(8)

    def loss(net):
        return np.mean((net.forward(batch.states)[rows, batch.actions] - y) ** 2)

    fd = np.zeros(cur.n_params)
    h = 1e-5
    for i in range(cur.n_params):
        old = cur.params[i]
        cur.params[i] = old + h
        up = loss(cur)
        cur.params[i] = old - h
        down = loss(cur)
        cur.params[i] = old
        fd[i] = (up - down) / (2 * h)
    assert np.max(np.abs(grad - fd)) / np.max(np.abs(fd)) < 1e-4


def test_untaken_action_head_rows_unchanged(backend):
    rng = np.random.default_rng(0)
    agent = DDQNAgent(4, AgentConfig(hidden=(5,)), backend=backend)
    w_before = agent.current.weights[-1][1].copy()
    b_before = agent.current.biases[-1][1]
    batch = Batch(rng.random((6, 4)), np.zeros(6, dtype=int), np.ones(6), rng.random((6, 4)),
                  np.zeros(6, dtype=bool))
    agent.learn_step(batch)
    assert np.array_equal(agent.current.weights[-1][1], w_before)
    assert agent.current.biases[-1][1] == b_before
    assert not np.array_equal(agent.current.weights[-1][0], agent.target.weights[-1][0])


# -- replay buffer ----------------------------------------------------------

def test_buffer_fifo_eviction():
    buf = ReplayBuffer(3, 1)
    for i in range(5):
        buf.push(Experience(np.array([float(i)]), 0, 1.0, np.array([i + 0.5]), False))
    assert len(buf) == 3
    assert [e.state[0] for e in buf.experiences()] == [2.0, 3.0, 4.0]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(0, 30))
def test_buffer_capacity_property(capacity, extra):
    buf = ReplayBuffer(capacity, 1)
    for i in range(capacity + extra):
        buf.add([float(i)], i % 2, 1.0, None, True)
    assert len(buf) == min(capacity, capacity + extra)
    kept = [e.state[0] for e in buf.experiences()]
    assert kept == [float(i) for i in range(extra, capacity + extra)]


def test_buffer_sampling_uniform_and_terminal_safe():
    buf = ReplayBuffer(4, 1)
    for i in range(4):
        buf.add([float(i)], 0, 1.0, None if i == 3 else [9.0], i == 3)
    batch = buf.sample(np.random.default_rng(0), 8000)
    counts = np.bincount(batch.states[:, 0].astype(int), minlength=4)
    assert np.all(np.abs(counts / 8000 - 0.25) < 0.02)
    assert np.all(batch.next_states[batch.terminals] == 0)
    with pytest.raises(ValueError):
        ReplayBuffer(2, 1).sample(np.random.default_rng(0), 1)


# -- schedules and sync -----------------------------------------------------

def test_decay_once():
    s = decay_schedules(Schedules())
    assert s.epsilon == pytest.approx(0.891, abs=1e-15)
    assert s.mix_alpha == pytest.approx(0.9999, abs=1e-15)


def test_decay_at_floor_stays():
    s = Schedules(epsilon=0.0001, mix_alpha=0.0001).decay()
    assert s.epsilon == 0.0001 and s.mix_alpha == 0.0001


@pytest.mark.parametrize("k", [0, 1, 5, 50, 500, 1000])
def test_decay_closed_form(k):
    s = Schedules()
    for _ in range(k):
        s = s.decay()
    assert s.epsilon == pytest.approx(max(0.9 * 0.99 ** k, 1e-4), abs=1e-12)
    assert s.mix_alpha == pytest.approx(max(0.9999 ** k, 1e-4), abs=1e-12)


def test_schedules_monotone_and_floored():
    s = Schedules(epsilon=0.9, epsilon_decay=0.5, mix_alpha=1.0, mix_alpha_decay=0.6)
    prev = s
    for _ in range(40):
        s = s.decay()
        assert prev.epsilon >= s.epsilon >= s.epsilon_min
        assert prev.mix_alpha >= s.mix_alpha >= s.mix_alpha_min
        prev = s
    assert s.epsilon == s.epsilon_min and s.mix_alpha == s.mix_alpha_min


def test_sync_interval():
    cur, tgt = build(3, (4,), 2, seed=1), build(3, (4,), 2, seed=2)
    original = tgt.params.copy()
    for step in range(1, 5):
        assert not sync_target(cur, tgt, step, 5)
        assert np.array_equal(tgt.params, original)
    assert sync_target(cur, tgt, 5, 5)
    probe = np.random.default_rng(0).random((10, 3))
    assert np.array_equal(cur.forward(probe), tgt.forward(probe))
    cur.params += 1
    assert sync_target(cur, tgt, 7, 1) and np.array_equal(cur.params, tgt.params)


def test_agent_config_validation():
    with pytest.raises(ValueError, match="gamma"):
        AgentConfig(gamma=1.5)
    with pytest.raises(ValueError):
        AgentConfig(target_rule="nope")
    with pytest.raises(ValueError):
        AgentConfig(minibatch_size=0)


# -- training loop ----------------------------------------------------------

def test_zero_iterations_returns_initial_network(backend):
    data = separable(50)
    res = train(AgentConfig(iterations=0, hidden=(8,), seed=4), data, data, backend=backend)
    assert np.array_equal(res.network.params, build(2, (8,), 2, seed=4).params)
    assert res.history == []


def test_training_is_deterministic(backend):
    data = separable(300, seed=1)
    cfg = AgentConfig(iterations=3, minibatch_size=32, hidden=(8, 8), seed=2)
    a = train(cfg, data, data, backend=backend)
    b = train(cfg, data, data, backend=backend)
    assert a.history == b.history
    assert np.array_equal(a.network.params, b.network.params)


def test_separable_data_is_learned(backend):
    train_set, test_set = separable(600, seed=2), separable(300, seed=3)
    records = []
    res = train(AgentConfig(iterations=50, minibatch_size=32, seed=0), train_set, test_set,
                progress=records.append, backend=backend)
    assert res.best_metrics.macro_recall >= 0.95
    assert max(r["recall"] for r in records) == res.best_metrics.macro_recall
    assert len(records) == 50
    assert records[0]["epsilon"] == 0.9 and records[1]["epsilon"] == pytest.approx(0.891)


def test_stop_recall_ends_early():
    data = separable(400, seed=5)
    res = train(AgentConfig(iterations=50, minibatch_size=32, stop_recall=0.9, seed=0), data, data)
    assert len(res.history) < 50 and res.best_metrics.macro_recall >= 0.9


def test_warm_start_copies_weights():
    net = build(2, (8,), 2, seed=9)
    agent = DDQNAgent(2, AgentConfig(hidden=(8,)), network=net)
    assert np.array_equal(agent.current.params, net.params)
    assert agent.current is not net and agent.current.adam_t == 0
    assert np.array_equal(agent.target.params, net.params)


def test_predict_argmax_and_scale_invariance():
    net = linear_net(0.0, 0.0, (0.9, 0.1))
    assert predict(net, np.zeros((1, 1))).tolist() == [0]
    rng = np.random.default_rng(0)
    big = build(3, (4,), 2, seed=0)
    x = rng.random((50, 3))
    scaled = big.clone()
    w, b = scaled.weights, scaled.biases
    w[-1] *= 3.7
    b[-1] *= 3.7
    assert np.array_equal(predict(big, x), predict(scaled, x))


def test_predict_survives_checkpoint_round_trip():
    net = build(5, seed=1)
    x = np.random.default_rng(2).random((100, 5))
    assert np.array_equal(predict(net, x), predict(QNetwork.from_bytes(net.to_bytes()), x))
