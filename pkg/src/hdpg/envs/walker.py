"""Planar biped with PD joint-position control and a six-component reward.

Reward vector order: gait, step, torque, height, orientation, fall.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _walker_dynamics as dyn
from .base import EnvSpec, StepResult

REWARD_NAMES = ("gait", "step", "torque", "height", "orientation", "fall")
HIP_LIMIT = 1.0
KNEE_RANGE = (0.0, 2.0)


@dataclass
class WalkerConfig:
    m_torso: float = 3.0
    m_thigh: float = 0.5
    m_shank: float = 0.3
    l_torso: float = 0.4
    l_thigh: float = 0.25
    l_shank: float = 0.25
    gravity: float = 9.81
    kp: float = 40.0
    kd: float = 1.0
    tau_max: float = 10.0
    contact_stiffness: float = 1e4
    contact_damping: float = 100.0
    friction: float = 1.0
    friction_damping: float = 2000.0   # viscous slope below the Coulomb cap, N s/m
    dt_phys: float = 0.002
    substeps: int = 10
    max_steps: int = 1000
    # standing posture used for reset and as the nominal pelvis height
    stand_height: float = 0.46
    stance_half_width: float = 0.08
    init_noise: float = 0.01
    # rewards
    w_gait: float = 1.0
    w_step: float = 1.0
    w_torque: float = 0.001
    w_height: float = 1.0
    w_orientation: float = 1.0
    fall_penalty: float = -50.0
    fall_height_frac: float = 0.5
    fall_pitch: float = 1.0
    min_swing: float = 0.01            # gait debounce, m
    max_speed: float = 5.0             # bounds the per-step displacement, m/s
    height_clearance: float = 0.1
    contact_margin: float = 0.002

    def param_vector(self) -> np.ndarray:
        p = np.zeros(dyn.N_PARAMS)
        p[dyn.P_M_TORSO], p[dyn.P_M_THIGH], p[dyn.P_M_SHANK] = self.m_torso, self.m_thigh, self.m_shank
        p[dyn.P_L_TORSO], p[dyn.P_L_THIGH], p[dyn.P_L_SHANK] = self.l_torso, self.l_thigh, self.l_shank
        p[dyn.P_G], p[dyn.P_KP], p[dyn.P_KD] = self.gravity, self.kp, self.kd
        p[dyn.P_TAU_MAX] = self.tau_max
        p[dyn.P_K_CONTACT], p[dyn.P_C_CONTACT] = self.contact_stiffness, self.contact_damping
        p[dyn.P_MU], p[dyn.P_C_FRICTION] = self.friction, self.friction_damping
        p[dyn.P_DT] = self.dt_phys
        return p

    @property
    def leg_length(self) -> float:
        return self.l_thigh + self.l_shank

    @property
    def dt_ctrl(self) -> float:
        return self.dt_phys * self.substeps


@dataclass
class WalkerState:
    q: np.ndarray
    qd: np.ndarray
    contact_left: bool
    contact_right: bool

    @property
    def x(self):
        return self.q[0]

    @property
    def height(self):
        return self.q[1]

    @property
    def pitch(self):
        return wrap_angle(self.q[2])


def wrap_angle(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def leg_ik(foot_dx, foot_depth, l1, l2):
    """Hip and knee angles placing the foot at (foot_dx, -foot_depth) from the hip."""
    r2 = foot_dx ** 2 + foot_depth ** 2
    cos_k = (r2 - l1 ** 2 - l2 ** 2) / (2.0 * l1 * l2)
    if not -1.0 <= cos_k <= 1.0:
        raise ValueError("foot target out of reach")
    knee = np.arccos(cos_k)
    hip = np.arctan2(foot_dx, foot_depth) + np.arctan2(l2 * np.sin(knee), l1 + l2 * np.cos(knee))
    return hip, knee


def standing_pose(cfg: WalkerConfig) -> np.ndarray:
    """Generalized coordinates of the nominal stance: upright torso, left foot
    ahead and right foot behind the hip, both feet on the ground."""
    hl, kl = leg_ik(cfg.stance_half_width, cfg.stand_height, cfg.l_thigh, cfg.l_shank)
    hr, kr = leg_ik(-cfg.stance_half_width, cfg.stand_height, cfg.l_thigh, cfg.l_shank)
    return np.array([0.0, cfg.stand_height, 0.0, hl, kl, hr, kr])


def walker_rewards(cfg: WalkerConfig, gait_length, step_dx, torque_abs_sum,
                   height, h0, pitch, fell) -> np.ndarray:
    """Raw reward vector [gait, step, torque, height, orientation, fall].

    In the plane the heading change between two instants is 0 or pi, so the
    cosine factor of the gait and step terms reduces to the sign of the
    forward displacement, i.e. the signed displacement itself is used.
    """
    return np.array([
        cfg.w_gait * gait_length if gait_length is not None else 0.0,
        cfg.w_step * step_dx,
        -cfg.w_torque * torque_abs_sum,
        -cfg.w_height * abs(height - h0),
        -cfg.w_orientation * abs(pitch),
        cfg.fall_penalty if fell else 0.0,
    ])


class GaitDetector:
    """Detects single -> double -> opposite-single support sequences.

    The gait length is the horizontal distance from the old stance foot to the
    new one, measured when double support begins; the swing foot must have
    travelled at least ``min_swing`` between lift-off and touchdown.
    """

    def __init__(self, min_swing: float = 0.01):
        self.min_swing = min_swing
        self.reset()

    def reset(self, phase: str = "D"):
        self.phase = phase
        self.single = None          # foot that carried the last single support
        self.liftoff_x = None       # swing-foot x at lift-off
        self.candidate = None       # (stance foot, gait length, swing travel)

    @staticmethod
    def classify(left: bool, right: bool) -> str:
        if left and right:
            return "D"
        if left:
            return "L"
        if right:
            return "R"
        return "F"

    def update(self, left: bool, right: bool, x_left: float, x_right: float):
        """Feed the current contact state; returns the gait length on an event."""
        phase = self.classify(left, right)
        prev, self.phase = self.phase, phase
        if phase == prev:
            return None
        event = None
        if phase in ("L", "R"):
            if (prev == "D" and self.candidate is not None
                    and self.candidate[0] != phase and abs(self.candidate[2]) >= self.min_swing):
                event = self.candidate[1]
            self.candidate = None
            self.single = phase
            self.liftoff_x = x_right if phase == "L" else x_left
        elif phase == "D":
            if prev in ("L", "R") and self.single == prev and self.liftoff_x is not None:
                stance_x, swing_x = (x_left, x_right) if prev == "L" else (x_right, x_left)
                self.candidate = (prev, swing_x - stance_x, swing_x - self.liftoff_x)
            else:
                self.candidate = None
        else:
            self.candidate = None
            self.single = None
            self.liftoff_x = None
        return event


class PlanarWalker:
    """Planar biped environment. Actions are target joint angles
    [hip_L, knee_L, hip_R, knee_R], tracked by PD control."""

    name = "walker"
    reward_names = REWARD_NAMES

    def __init__(self, config: WalkerConfig | None = None, **overrides):
        self.config = config or WalkerConfig(**overrides)
        c = self.config
        self.params = c.param_vector()
        self.stand = standing_pose(c)
        self.h0 = c.stand_height
        self.spec = EnvSpec(
            name=self.name, obs_dim=15, act_dim=4, reward_names=REWARD_NAMES,
            reward_low=tuple(self.bounds()[0]), reward_high=tuple(self.bounds()[1]),
            dt_ctrl=c.dt_ctrl, max_steps=c.max_steps,
            action_low=(-HIP_LIMIT, KNEE_RANGE[0], -HIP_LIMIT, KNEE_RANGE[0]),
            action_high=(HIP_LIMIT, KNEE_RANGE[1], HIP_LIMIT, KNEE_RANGE[1]),
        )
        self.push_events = []
        self.gait = GaitDetector(c.min_swing)
        self.q = self.stand.copy()
        self.qd = np.zeros(dyn.N_Q)
        self.t = 0
        self.substep_count = 0

    # -- bounds
    def max_gait_length(self) -> float:
        # both feet are within one leg length of the hip at double support
        return 2.0 * self.config.leg_length

    def bounds(self):
        c = self.config
        d_gait = self.max_gait_length()
        d_step = c.max_speed * c.dt_ctrl
        h_top = c.leg_length + c.height_clearance
        h_err = max(self.h0 + c.height_clearance, h_top - self.h0)
        low = [-c.w_gait * d_gait, -c.w_step * d_step, -c.w_torque * 4 * c.tau_max,
               -c.w_height * h_err, -c.w_orientation * np.pi, c.fall_penalty]
        high = [c.w_gait * d_gait, c.w_step * d_step, 0.0, 0.0, 0.0, 0.0]
        return np.array(low), np.array(high)

    # -- state
    @property
    def state(self) -> WalkerState:
        pts = dyn.contact_points(self.q, self.params)
        margin = self.config.contact_margin
        return WalkerState(self.q.copy(), self.qd.copy(),
                           bool(pts[dyn.FOOT_L, 1] < margin), bool(pts[dyn.FOOT_R, 1] < margin))

    def energy(self) -> float:
        return float(dyn.mechanical_energy(self.q, self.qd, self.params))

    def reset(self, rng=None) -> np.ndarray:
        c = self.config
        q = self.stand.copy()
        if rng is not None and c.init_noise > 0:
            q[3:] += rng.uniform(-c.init_noise, c.init_noise, size=4)
        # rest the lowest foot on the ground
        pts = dyn.contact_points(q, self.params)
        q[1] -= min(pts[dyn.FOOT_L, 1], pts[dyn.FOOT_R, 1])
        self.q = q
        self.qd = np.zeros(dyn.N_Q)
        self.t = 0
        self.substep_count = 0
        self.target = q[3:].copy()
        st = self.state
        self.gait.reset(GaitDetector.classify(st.contact_left, st.contact_right))
        return self._obs(st)

    def _obs(self, st: WalkerState) -> np.ndarray:
        q, qd = st.q, st.qd
        return np.array([q[1], wrap_angle(q[2]), qd[0], qd[1], qd[2], *q[3:], *qd[3:],
                         float(st.contact_left), float(st.contact_right)])

    def push_schedule(self) -> np.ndarray:
        """Horizontal pelvis force for each substep of the coming control step."""
        c = self.config
        fx = np.zeros(c.substeps)
        for ev in self.push_events:
            start, count = ev.substep_window(c.dt_phys)
            lo = max(start - self.substep_count, 0)
            hi = min(start + count - self.substep_count, c.substeps)
            if hi > lo:
                fx[lo:hi] += ev.signed_magnitude
        return fx

    def step(self, action) -> StepResult:
        c = self.config
        target = np.asarray(action, dtype=np.float64).reshape(-1)
        if target.shape != (4,) or not np.isfinite(target).all():
            raise ValueError(f"walker action must be 4 finite joint targets, got {action!r}")
        target = np.clip(target, self.spec.action_low, self.spec.action_high)
        self.target = target
        x_old = self.q[0]
        fx = self.push_schedule()
        torque_abs, _ = dyn.simulate(self.q, self.qd, target, fx, self.params)
        self.substep_count += c.substeps
        self.t += 1
        if not (np.isfinite(self.q).all() and np.isfinite(self.qd).all()):
            raise FloatingPointError(
                f"walker state became non-finite at step {self.t}: q={self.q!r} qd={self.qd!r}")
        st = self.state
        pts = dyn.contact_points(self.q, self.params)
        gait_len = self.gait.update(st.contact_left, st.contact_right,
                                    pts[dyn.FOOT_L, 0], pts[dyn.FOOT_R, 0])
        fell = bool(st.height < c.fall_height_frac * self.h0 or abs(st.pitch) > c.fall_pitch)
        reward = walker_rewards(c, gait_len, self.q[0] - x_old, torque_abs,
                                st.height, self.h0, st.pitch, fell)
        truncated = self.t >= c.max_steps
        info = {"fell": fell, "gait_event": gait_len is not None, "distance": float(self.q[0]),
                "truncated": truncated and not fell}
        return StepResult(self._obs(st), reward, fell or truncated, info)

    def config_dict(self) -> dict:
        return asdict(self.config)


def planar_walker_step(env: PlanarWalker, action) -> StepResult:
    return env.step(action)
