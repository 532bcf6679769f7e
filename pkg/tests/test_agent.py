import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hdpg.agent import (Agent, AgentConfig, OUState, RewardNormalizer, RewardStats,
                        build_actor, build_critic, compute_priority_weights,
                        critic_backward, critic_forward, normalize_reward, select_action,
                        update_reward_stats)
from hdpg.nn import forward
from hdpg.replay import Batch, NotReady

SMALL = dict(actor_hidden=(8, 8), critic_branch=8, critic_trunk=8, batch=4)


def scalar_weights(mu, var):
    """Independent oracle: the priority formula evaluated with plain floats."""
    x = [m + math.exp(v) for m, v in zip(mu, var)]
    return [len(x) * xi / sum(x) for xi in x]


def make_agent(algo="hdpg", K=3, state_dim=6, act_dim=2, seed=0, **kw):
    cfg = AgentConfig(algo=algo, **{**SMALL, **kw})
    norm = RewardNormalizer(np.full(K, -1.0), np.full(K, 1.0))
    return Agent(cfg, state_dim, act_dim, norm, np.random.default_rng(seed))


def random_batch(rng, B=4, state_dim=6, act_dim=2, K=3, dones=None):
    return Batch(rng.normal(size=(B, state_dim)), rng.uniform(-1, 1, (B, act_dim)),
                 rng.uniform(-1, 1, (B, K)), rng.normal(size=(B, state_dim)),
                 np.zeros(B) if dones is None else np.asarray(dones, dtype=float))


# ---------------------------------------------------------------- normalization

def test_normalizer_endpoints_midpoint_and_clip():
    n = RewardNormalizer(np.array([-2.0, 0.0]), np.array([2.0, 5.0]))
    np.testing.assert_array_equal(normalize_reward([-2.0, 0.0], n), [0.0, 0.0])
    np.testing.assert_array_equal(normalize_reward([2.0, 5.0], n), [1.0, 1.0])
    assert normalize_reward([0.0, 0.0], n)[0] == 0.5
    np.testing.assert_array_equal(normalize_reward([-9.0, 9.0], n), [0.0, 1.0])


def test_normalizer_rejects_empty_range():
    with pytest.raises(ValueError):
        RewardNormalizer(np.array([1.0]), np.array([1.0]))


# ---------------------------------------------------------------- statistics

def test_stats_constant_window_zero_variance():
    s = update_reward_stats([[0.3, 0.7]] * 5)
    np.testing.assert_array_equal(s.var, [0.0, 0.0])


def test_stats_two_point_window():
    s = update_reward_stats([[0.0], [1.0]])
    assert s.mean[0] == 0.5 and s.var[0] == 0.25


def test_stats_at_max():
    s = update_reward_stats([[1.0]] * 10)
    assert s.mean[0] == 1.0 and s.var[0] == 0.0


def test_stats_need_two_samples():
    with pytest.raises(NotReady):
        update_reward_stats([[0.5, 0.5]])


# ---------------------------------------------------------------- priority weights

def test_weights_worked_example():
    m = compute_priority_weights(RewardStats(np.array([0.5, 0.2]), np.array([0.01, 0.09])))
    expected = scalar_weights([0.5, 0.2], [0.01, 0.09])
    np.testing.assert_allclose(m, expected, atol=1e-12)
    np.testing.assert_allclose(m, [1.07699, 0.92301], atol=1e-5)


def test_weights_single_component():
    m = compute_priority_weights(RewardStats(np.array([0.3]), np.array([0.2])))
    assert m.tolist() == [1.0]


unit = st.floats(0.0, 1.0, allow_nan=False)
quarter = st.floats(0.0, 0.25, allow_nan=False)


@st.composite
def reward_stats(draw, max_k=6):
    k = draw(st.integers(1, max_k))
    mu = draw(arrays(np.float64, k, elements=unit))
    var = draw(arrays(np.float64, k, elements=quarter))
    return RewardStats(mu, var)


@settings(max_examples=300, deadline=None)
@given(reward_stats())
def test_weights_sum_to_k_and_positive(stats):
    m = compute_priority_weights(stats)
    assert abs(m.sum() - len(m)) <= 1e-12
    assert np.all(m > 0)
    np.testing.assert_allclose(m, scalar_weights(stats.mean, stats.var), rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(mu=unit, var=quarter, k=st.integers(1, 6))
def test_weights_symmetric_stats_give_ones(mu, var, k):
    m = compute_priority_weights(RewardStats(np.full(k, mu), np.full(k, var)))
    np.testing.assert_allclose(m, np.ones(k), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(stats=reward_stats(), data=st.data())
def test_weights_permutation_equivariant(stats, data):
    perm = np.array(data.draw(st.permutations(range(len(stats.mean)))))
    m = compute_priority_weights(stats)
    mp = compute_priority_weights(RewardStats(stats.mean[perm], stats.var[perm]))
    np.testing.assert_allclose(mp, m[perm], rtol=1e-13)


@settings(max_examples=100, deadline=None)
@given(stats=reward_stats(), bump=st.floats(1e-3, 0.5))
def test_weights_monotone_in_mean_and_variance(stats, bump):
    assume(len(stats.mean) >= 2)
    m = compute_priority_weights(stats)
    for field in ("mean", "var"):
        mu, var = stats.mean.copy(), stats.var.copy()
        (mu if field == "mean" else var)[0] += bump
        m2 = compute_priority_weights(RewardStats(mu, var))
        assert m2[0] > m[0]
        assert np.all(m2[1:] < m[1:])


# ---------------------------------------------------------------- exploration

def test_ou_decay_without_noise():
    ou = OUState(np.array([1.0]), theta=0.15, sigma=0.0, dt=1.0)
    rng = np.random.default_rng(0)
    xs = [ou.advance(rng)[0] for _ in range(5)]
    np.testing.assert_allclose(xs, [0.85 ** (i + 1) for i in range(5)], rtol=1e-14)


def test_select_action_no_noise_is_actor_output():
    actor = build_actor(6, 2, np.random.default_rng(0), (8,))
    s = np.random.default_rng(1).normal(size=6)
    np.testing.assert_array_equal(select_action(actor, s, None, False), forward(actor, s)[0])


def test_select_action_clipped():
    actor = build_actor(6, 2, np.random.default_rng(0), (8,))
    ou = OUState(np.zeros(2), sigma=50.0)
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = select_action(actor, np.ones(6), ou, True, rng)
        assert np.all(np.abs(a) <= 1.0)


# ---------------------------------------------------------------- critic

def test_critic_shapes_reference_topology():
    c = build_critic(69, 10, 6, np.random.default_rng(0))
    assert c.head.weights[-1].shape == (6, 256)
    assert c.head.weights[0].shape == (256, 256)


def test_critic_shapes_line_walker():
    c = build_critic(9, 1, 3, np.random.default_rng(0))
    assert c.state_branch.weights[0].shape == (128, 9)
    assert c.action_branch.weights[0].shape == (128, 1)


def test_single_head_critic_matches_ddpg_topology():
    a = make_agent("ddpg")
    b = make_agent("hdpg", merge_heads=True)
    assert a.critic.dims == b.critic.dims and a.n_heads == b.n_heads == 1


def test_weighted_action_gradient_finite_differences():
    rng = np.random.default_rng(5)
    c = build_critic(5, 3, 4, rng, branch=6, trunk=7)
    s, a, m = rng.normal(size=5), rng.uniform(-1, 1, 3), rng.uniform(0.5, 1.5, 4)
    _, cache = critic_forward(c, s, a)
    _, _, da = critic_backward(c, cache, m)
    eps = 1e-5
    fd = np.zeros(3)
    for i in range(3):
        ap, am = a.copy(), a.copy()
        ap[i] += eps
        am[i] -= eps
        fd[i] = (m @ critic_forward(c, s, ap)[0] - m @ critic_forward(c, s, am)[0]) / (2 * eps)
    assert np.max(np.abs(da - fd) / np.maximum(1e-8, np.abs(da) + np.abs(fd))) < 1e-4


def test_critic_param_grads_finite_differences():
    rng = np.random.default_rng(6)
    c = build_critic(3, 2, 2, rng, branch=4, trunk=5)
    s, a, g = rng.normal(size=(3, 3)), rng.uniform(-1, 1, (3, 2)), rng.normal(size=(3, 2))
    grads, _, _ = critic_backward(c, critic_forward(c, s, a)[1], g)
    fd = np.zeros_like(c.flat)
    for i in range(c.flat.size):
        keep = c.flat[i]
        c.flat[i] = keep + 1e-5
        hi = np.sum(g * critic_forward(c, s, a)[0])
        c.flat[i] = keep - 1e-5
        lo = np.sum(g * critic_forward(c, s, a)[0])
        c.flat[i] = keep
        fd[i] = (hi - lo) / 2e-5
    err = np.abs(grads.flat - fd) / np.maximum(1e-8, np.abs(grads.flat) + np.abs(fd))
    assert err.max() < 1e-4


# ---------------------------------------------------------------- targets and updates

def test_gamma_zero_target_is_normalized_reward():
    agent = make_agent(gamma=0.0)
    batch = random_batch(np.random.default_rng(0))
    np.testing.assert_array_equal(agent.td_targets(batch),
                                  normalize_reward(batch.rewards, agent.normalizer))


def test_terminal_transition_has_no_bootstrap():
    agent = make_agent(gamma=0.99)
    batch = random_batch(np.random.default_rng(0), dones=[1, 0, 1, 0])
    y = agent.td_targets(batch)
    r = normalize_reward(batch.rewards, agent.normalizer)
    np.testing.assert_array_equal(y[[0, 2]], r[[0, 2]])
    assert not np.array_equal(y[[1, 3]], r[[1, 3]])


def test_single_head_target_uses_summed_normalized_reward():
    agent = make_agent("ddpg", gamma=0.0)
    batch = random_batch(np.random.default_rng(1))
    np.testing.assert_allclose(agent.td_targets(batch)[:, 0],
                               normalize_reward(batch.rewards, agent.normalizer).sum(axis=1),
                               rtol=0, atol=0)


def test_critic_loss_is_mean_squared_bellman_error():
    agent = make_agent()
    batch = random_batch(np.random.default_rng(2))
    y = agent.td_targets(batch)
    q = critic_forward(agent.critic, batch.states, batch.actions)[0]
    expected = float(np.mean(np.sum((y - q) ** 2, axis=1)))
    assert agent.critic_update(batch) == pytest.approx(expected, rel=1e-14)


def test_policy_gradient_linear_in_weights():
    agent = make_agent()
    s = np.random.default_rng(3).normal(size=(4, 6))
    m = np.array([0.7, 1.1, 1.2])
    g1 = agent.policy_gradient(s, m).flat.copy()
    g2 = agent.policy_gradient(s, 2 * m).flat
    np.testing.assert_array_equal(g2, 2 * g1)


def test_policy_gradient_is_sum_of_per_head_gradients():
    agent = make_agent()
    s = np.random.default_rng(4).normal(size=(4, 6))
    m = np.array([0.5, 1.0, 1.5])
    total = agent.policy_gradient(s, m).flat.copy()
    parts = sum(m[k] * agent.policy_gradient(s, np.eye(3)[k]).flat for k in range(3))
    np.testing.assert_allclose(total, parts, rtol=1e-10, atol=1e-15)


def test_mhddpg_default_weights_equal_explicit_ones():
    agent = make_agent("mhddpg")
    s = np.random.default_rng(5).normal(size=(4, 6))
    np.testing.assert_array_equal(agent.policy_gradient(s).flat,
                                  agent.policy_gradient(s, np.ones(3)).flat)


def test_merged_hdpg_bit_identical_to_ddpg():
    a, b = make_agent("ddpg"), make_agent("hdpg", merge_heads=True)
    rng = np.random.default_rng(7)
    for ep in range(3):
        for _ in range(20):
            batch = random_batch(rng)
            a.update(batch)
            b.update(batch)
            a.record_reward(batch.rewards[0])
            b.record_reward(batch.rewards[0])
        a.end_episode(ep)
        b.end_episode(ep)
    assert a.parameter_vector().tobytes() == b.parameter_vector().tobytes()


def test_mhddpg_weights_never_change():
    agent = make_agent("mhddpg", weight_period=1, stats_window=2)
    rng = np.random.default_rng(8)
    for ep in range(5):
        for _ in range(3):
            agent.record_reward(rng.uniform(-1, 1, 3))
        assert not agent.end_episode(ep)
    np.testing.assert_array_equal(agent.weights, np.ones(3))


def test_hdpg_refresh_schedule():
    agent = make_agent("hdpg", weight_period=4, stats_window=5)
    rng = np.random.default_rng(9)
    refreshed = []
    for ep in range(12):
        for _ in range(2):
            agent.record_reward(rng.uniform(-1, 1, 3))
        if agent.end_episode(ep):
            refreshed.append(ep)
    # the window first holds 5 samples after episode 2
    assert refreshed == [3, 7, 11]
    assert abs(agent.weights.sum() - 3) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        AgentConfig(algo="sac")
    with pytest.raises(ValueError):
        AgentConfig(tau=0.0)
    with pytest.raises(ValueError):
        AgentConfig(gamma=1.5)
