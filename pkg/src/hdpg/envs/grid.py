"""Finite MDPs with vector rewards and exact tabular policy evaluation."""
from __future__ import annotations

import numpy as np

from .base import EnvSpec, StepResult

MAX_STATES, MAX_ACTIONS, MAX_K = 50, 5, 4


class GridMDP:
    """Tabular MDP: ``P[s, a, s']`` transition probabilities, ``R[s, a, k]`` rewards.

    As an environment the action is a scalar in [-1, 1], binned uniformly onto
    the discrete actions; observations are one-hot states. Episodes end on
    reaching a state listed in ``terminal`` or after ``max_steps``.
    """

    name = "grid"

    def __init__(self, P, R, start: int = 0, terminal=(), max_steps: int = 50,
                 reward_names=None):
        P = np.asarray(P, dtype=np.float64)
        R = np.asarray(R, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transition table must be (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if R.ndim != 3 or R.shape[:2] != (S, A):
            raise ValueError(f"reward table must be (S, A, K) with S={S}, A={A}, got {R.shape}")
        K = R.shape[2]
        if S > MAX_STATES or A > MAX_ACTIONS or not 1 <= K <= MAX_K:
            raise ValueError(f"GridMDP limited to {MAX_STATES} states, {MAX_ACTIONS} actions, "
                             f"1..{MAX_K} reward components; got S={S}, A={A}, K={K}")
        if (P < 0).any():
            raise ValueError("transition probabilities must be non-negative")
        row_err = np.abs(P.sum(axis=2) - 1.0)
        if (row_err > 1e-9).any():
            s, a = np.unravel_index(int(np.argmax(row_err)), row_err.shape)
            raise ValueError(f"transition row (s={s}, a={a}) sums to {P[s, a].sum()!r}, not 1")
        self.P, self.R = P, R
        self.n_states, self.n_actions, self.K = S, A, K
        self.start = int(start)
        self.terminal = frozenset(int(t) for t in terminal)
        names = tuple(reward_names) if reward_names else tuple(f"r{k}" for k in range(K))
        low, high = R.min(axis=(0, 1)), R.max(axis=(0, 1))
        flat = high <= low
        low = np.where(flat, low - 0.5, low)
        high = np.where(flat, high + 0.5, high)
        self.spec = EnvSpec(
            name=self.name, obs_dim=S, act_dim=1, reward_names=names,
            reward_low=tuple(low), reward_high=tuple(high), dt_ctrl=1.0,
            max_steps=max_steps, action_low=(-1.0,), action_high=(1.0,),
        )
        self._rng = np.random.default_rng(0)
        self.state = self.start
        self.t = 0

    @classmethod
    def chain(cls, n: int = 5, slip: float = 0.1, max_steps: int = 50) -> "GridMDP":
        """Corridor of ``n`` cells, actions (left, stay, right), goal at the right end.

        Components: goal (+1 on entering the goal), effort (-0.1 per move),
        wall (-0.5 for pushing into the left wall). Moves slip (stay put) with
        probability ``slip``; the goal is absorbing with zero reward.
        """
        P = np.zeros((n, 3, n))
        R = np.zeros((n, 3, 3))
        goal = n - 1
        for s in range(n):
            for a, step in enumerate((-1, 0, 1)):
                if s == goal:
                    P[s, a, s] = 1.0
                    continue
                nxt = min(max(s + step, 0), goal)
                P[s, a, nxt] += 1.0 - slip if step else 1.0
                if step:
                    P[s, a, s] += slip
                    R[s, a, 1] = -0.1
                R[s, a, 0] = P[s, a, goal]
                if s == 0 and step == -1:
                    R[s, a, 2] = -0.5
        return cls(P, R, start=0, terminal=(goal,), max_steps=max_steps,
                   reward_names=("goal", "effort", "wall"))

    # -- environment interface
    def reset(self, rng=None) -> np.ndarray:
        if rng is not None:
            self._rng = rng
        self.state = self.start
        self.t = 0
        return self._obs()

    def _obs(self):
        o = np.zeros(self.n_states)
        o[self.state] = 1.0
        return o

    def discrete_action(self, action) -> int:
        a = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
        if not np.isfinite(a):
            raise ValueError(f"non-finite action {action!r}")
        idx = int(np.floor((min(max(a, -1.0), 1.0) + 1.0) / 2.0 * self.n_actions))
        return min(idx, self.n_actions - 1)

    def step(self, action) -> StepResult:
        a = self.discrete_action(action)
        s = self.state
        reward = self.R[s, a].copy()
        self.state = int(self._rng.choice(self.n_states, p=self.P[s, a]))
        self.t += 1
        at_goal = self.state in self.terminal
        done = at_goal or self.t >= self.spec.max_steps
        return StepResult(self._obs(), reward, done, {"state": self.state, "action": a})

    # -- exact evaluation
    def policy_matrix(self, policy) -> np.ndarray:
        """Normalize a deterministic (S,) or stochastic (S, A) policy to (S, A)."""
        pi = np.asarray(policy)
        if pi.ndim == 1:
            out = np.zeros((self.n_states, self.n_actions))
            out[np.arange(self.n_states), pi.astype(int)] = 1.0
            return out
        if pi.shape != (self.n_states, self.n_actions):
            raise ValueError(f"policy must be (S,) or (S, A), got {pi.shape}")
        return pi.astype(np.float64)

    def evaluate_linear(self, policy, gamma: float, rewards=None) -> np.ndarray:
        """Q^pi by direct solve of (I - gamma P_pi) V = r_pi. Returns (S, A, K)."""
        pi = self.policy_matrix(policy)
        R = self.R if rewards is None else np.asarray(rewards, dtype=np.float64)
        R3 = R if R.ndim == 3 else R[..., None]
        P_pi = np.einsum("sa,sat->st", pi, self.P)
        r_pi = np.einsum("sa,sak->sk", pi, R3)
        V = np.linalg.solve(np.eye(self.n_states) - gamma * P_pi, r_pi)
        return R3 + gamma * np.einsum("sat,tk->sak", self.P, V)

    def evaluate_iterative(self, policy, gamma: float, tol: float = 1e-13,
                           max_iter: int = 1_000_000) -> np.ndarray:
        """Per-component Q^pi by repeated Bellman expectation backups."""
        if not gamma < 1.0:
            raise ValueError("iterative evaluation needs gamma < 1")
        pi = self.policy_matrix(policy)
        Q = np.zeros_like(self.R)
        for _ in range(max_iter):
            V = np.einsum("sa,sak->sk", pi, Q)
            Q_new = self.R + gamma * np.einsum("sat,tk->sak", self.P, V)
            delta = np.abs(Q_new - Q).max()
            Q = Q_new
            if delta < tol:
                break
        return Q

    def monte_carlo_q(self, policy, gamma, s, a, episodes, horizon, rng) -> np.ndarray:
        """Mean discounted K-vector return from (s, a), then following ``policy``."""
        pi = self.policy_matrix(policy)
        total = np.zeros(self.K)
        for _ in range(episodes):
            state, act, disc = s, a, 1.0
            for _ in range(horizon):
                total += disc * self.R[state, act]
                state = int(rng.choice(self.n_states, p=self.P[state, act]))
                act = int(rng.choice(self.n_actions, p=pi[state]))
                disc *= gamma
        return total / episodes


def grid_mdp(P, R, **kw) -> GridMDP:
    return GridMDP(P, R, **kw)
