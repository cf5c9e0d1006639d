"""Pole-cart simulator: dynamics, image renderer, safety predicate, controllers.

The simulator is the data source for the whole pipeline. It exposes a
4-dimensional ground-truth state, a deterministic 32x32 grayscale renderer,
and scripted controllers of three quality tiers. Predictors never see the
state; controllers may read it (they stand in for trained image policies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Dynamics constants follow the common pole-cart benchmark.
GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
POLE_HALF_LENGTH = 0.5
FORCE_MAG = 10.0
DT = 0.02

# Safety: |angle| <= 6 deg (closed interval). Activity region: |angle| <= 48 deg
# and |cart_pos| <= 2.4 m; episodes terminate on exit.
SAFE_ANGLE = math.radians(6.0)
ACTIVITY_ANGLE = math.radians(48.0)
CART_LIMIT = 2.4

# Renderer geometry (32x32, background 1.0, shapes 0.0, no anti-aliasing).
IMG_H = 32
IMG_W = 32
PX_PER_M = IMG_W / (2 * CART_LIMIT)
CART_TOP_ROW = 24           # cart occupies rows 24..26
CART_BOTTOM_ROW = 26
CART_HALF_WIDTH_PX = 3.0
POLE_PIVOT_ROW = 23.5       # boundary between pole region and cart top
POLE_LEN_PX = 23.0


class IntegrationBlowupError(Exception):
    """Euler step produced a non-finite state (dt too large)."""


class InitOutOfBoundsError(Exception):
    """Episode initial state outside the activity region."""


@dataclass(frozen=True)
class SimConfig:
    gravity: float = GRAVITY
    cart_mass: float = CART_MASS
    pole_mass: float = POLE_MASS
    half_length: float = POLE_HALF_LENGTH
    force_mag: float = FORCE_MAG
    dt: float = DT

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        """Read a plain-text key=value config; unknown keys are rejected."""
        fields = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in fields:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                kwargs[key] = float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class SystemState:
    cart_pos: float
    cart_vel: float
    pole_angle: float
    pole_angvel: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.cart_pos, self.cart_vel, self.pole_angle, self.pole_angvel]
        )


@dataclass(frozen=True)
class Action:
    """Discrete push. Controllers only emit force_dir in {-1, +1}."""

    force_dir: int


PUSH_LEFT = Action(-1)
PUSH_RIGHT = Action(+1)


@dataclass(frozen=True)
class ControllerSpec:
    kind: str                      # bang_bang | linear_feedback | noisy_feedback
    gains: tuple[float, ...]
    noise_prob: float = 0.0
    id: int = 0

    def __post_init__(self):
        if self.kind not in ("bang_bang", "linear_feedback", "noisy_feedback"):
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if not 0.0 <= self.noise_prob <= 1.0:
            raise ValueError("noise_prob must be in [0, 1]")


@dataclass(frozen=True)
class TrajectoryStep:
    state: SystemState
    observation: np.ndarray
    action: Action
    safety_label: int


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[TrajectoryStep, ...]
    controller_id: int

    def __len__(self) -> int:
        return len(self.steps)


def step_dynamics(state: SystemState, action: Action, cfg: SimConfig) -> SystemState:
    """One explicit-Euler step of the classic pole-cart equations."""
    force = action.force_dir * cfg.force_mag
    total_mass = cfg.cart_mass + cfg.pole_mass
    polemass_length = cfg.pole_mass * cfg.half_length

    try:
        sin_t = math.sin(state.pole_angle)
        cos_t = math.cos(state.pole_angle)
        temp = (force + polemass_length * state.pole_angvel**2 * sin_t) / total_mass
        ang_acc = (cfg.gravity * sin_t - cos_t * temp) / (
            cfg.half_length * (4.0 / 3.0 - cfg.pole_mass * cos_t**2 / total_mass)
        )
        lin_acc = temp - polemass_length * ang_acc * cos_t / total_mass

        nxt = SystemState(
            cart_pos=state.cart_pos + cfg.dt * state.cart_vel,
            cart_vel=state.cart_vel + cfg.dt * lin_acc,
            pole_angle=state.pole_angle + cfg.dt * state.pole_angvel,
            pole_angvel=state.pole_angvel + cfg.dt * ang_acc,
        )
    except OverflowError as exc:
        raise IntegrationBlowupError(f"overflow during step from {state}") from exc
    if not all(map(math.isfinite, nxt.as_array())):
        raise IntegrationBlowupError(f"non-finite state after step: {nxt}")
    return nxt


def safety_of_state(state: SystemState) -> int:
    """1 iff the pole is within the safe band (closed at the 6-degree boundary)."""
    return 1 if abs(state.pole_angle) <= SAFE_ANGLE else 0


def in_activity_region(state: SystemState) -> bool:
    return abs(state.pole_angle) <= ACTIVITY_ANGLE and abs(state.cart_pos) <= CART_LIMIT


def _cart_columns(cart_pos: float) -> tuple[np.ndarray, float]:
    """Inked cart columns and their mean (the pole pivot column)."""
    center = (IMG_W - 1) / 2.0 + cart_pos * PX_PER_M
    lo = math.ceil(center - CART_HALF_WIDTH_PX - 0.5)
    hi = math.floor(center + CART_HALF_WIDTH_PX + 0.5)
    cols = np.arange(max(lo, 0), min(hi, IMG_W - 1) + 1)
    if cols.size == 0:
        return cols, center
    return cols, float(cols.mean())


def render_observation(state: SystemState) -> np.ndarray:
    """Rasterize the state into a 32x32 grayscale image.

    Background is 1.0; the cart rectangle and the pole segment are 0.0. The
    pole is inked per row: every pixel whose column span touches the
    centerline's horizontal extent within that row is set. This keeps the
    drawing binary while leaving the per-row column centroids on the true
    centerline up to fixed 0.5 px quantization, which is what the
    robust-feature evaluator relies on.
    """
    img = np.ones((IMG_H, IMG_W))

    cart_cols, pivot_col = _cart_columns(state.cart_pos)
    if cart_cols.size:
        img[CART_TOP_ROW : CART_BOTTOM_ROW + 1, cart_cols] = 0.0

    theta = state.pole_angle
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    for row in range(IMG_H):
        if row > POLE_PIVOT_ROW:
            break
        # Arc range of the centerline inside this row's vertical span.
        s_hi = (POLE_PIVOT_ROW - (row - 0.5)) / cos_t
        s_lo = (POLE_PIVOT_ROW - (row + 0.5)) / cos_t
        s_lo, s_hi = max(s_lo, 0.0), min(s_hi, POLE_LEN_PX)
        if s_lo > s_hi:
            continue
        xa = pivot_col + s_lo * sin_t
        xb = pivot_col + s_hi * sin_t
        if xa > xb:
            xa, xb = xb, xa
        c_lo = max(math.ceil(xa - 0.5), 0)
        c_hi = min(math.floor(xb + 0.5), IMG_W - 1)
        if c_lo <= c_hi:
            img[row, c_lo : c_hi + 1] = 0.0
    return img


def controller_action(spec: ControllerSpec, state: SystemState, rng: np.random.Generator) -> Action:
    """Evaluate a scripted controller on the true state."""
    if spec.noise_prob > 0.0 and rng.random() < spec.noise_prob:
        return PUSH_RIGHT if rng.random() < 0.5 else PUSH_LEFT
    if spec.kind == "bang_bang":
        score = spec.gains[0] * state.pole_angle + spec.gains[1] * state.pole_angvel
    else:
        score = float(np.dot(spec.gains, state.as_array()))
    return PUSH_RIGHT if score >= 0.0 else PUSH_LEFT


def sample_initial_state(rng: np.random.Generator) -> SystemState:
    """Small uniform perturbation around the upright equilibrium."""
    vals = rng.uniform(-0.05, 0.05, size=4)
    return SystemState(*vals)


def run_episode(
    controller: ControllerSpec,
    init: SystemState,
    max_len: int,
    seed: int,
    cfg: SimConfig | None = None,
) -> Trajectory:
    """Roll the closed loop from `init` for up to `max_len` steps.

    Every recorded step lies inside the activity region; the loop stops
    before recording the first state that exits it. Reproducible given seed.
    """
    if cfg is None:
        cfg = SimConfig()
    if not in_activity_region(init):
        raise InitOutOfBoundsError(f"initial state outside activity region: {init}")

    rng = np.random.default_rng(seed)
    steps = []
    state = init
    while len(steps) < max_len:
        action = controller_action(controller, state, rng)
        steps.append(
            TrajectoryStep(
                state=state,
                observation=render_observation(state),
                action=action,
                safety_label=safety_of_state(state),
            )
        )
        state = step_dynamics(state, action, cfg)
        if not in_activity_region(state):
            break
    return Trajectory(steps=tuple(steps), controller_id=controller.id)


def default_controllers() -> list[ControllerSpec]:
    """Three quality tiers: tight stabilizer, noisy stabilizer, noisy bang-bang."""
    return [
        ControllerSpec(
            kind="linear_feedback", gains=(0.6, 1.2, 8.0, 2.4), noise_prob=0.0, id=0
        ),
        ControllerSpec(
            kind="noisy_feedback", gains=(0.6, 1.2, 8.0, 2.4), noise_prob=0.5, id=1
        ),
        ControllerSpec(kind="bang_bang", gains=(1.0, 0.3), noise_prob=0.6, id=2),
    ]
