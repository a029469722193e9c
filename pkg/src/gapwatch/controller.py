"""Two-level car-following controller.

Upper level: constant time headway (CTH) spacing policy. Lower level: linear
state feedback on the error state ``[dd, dv, a]`` plus feedforward of the
delayed leader acceleration, acting through first-order vehicle dynamics
(commanded-to-realized acceleration lag ``T`` with gain ``K``).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import CollisionDetected, InvariantViolation


@dataclass(frozen=True)
class ControllerParams:
    tau_star: float = 1.6
    s0: float = 5.0
    T: float = 0.45
    K: float = 1.0
    k: tuple = (0.45, 1.5, -0.3)
    kf: float = 0.6
    theta: float = 0.2
    u_min: float = -5.0
    u_max: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(g) for g in self.k))
        if len(self.k) != 3:
            raise InvariantViolation(f"controller.k must have 3 gains, got {len(self.k)}")
        checks = [
            (self.T > 0, "controller.T > 0"),
            (self.tau_star > 0, "controller.tau_star > 0"),
            (self.s0 >= 0, "controller.s0 >= 0"),
            (self.theta >= 0, "controller.theta >= 0"),
            (self.u_min < self.u_max, "controller.u_min < controller.u_max"),
        ]
        for ok, what in checks:
            if not ok:
                raise InvariantViolation(f"violated: {what}")
        values = (self.tau_star, self.s0, self.T, self.K, self.kf, self.theta, *self.k)
        if not all(math.isfinite(x) for x in values):
            raise InvariantViolation("controller parameters must be finite")

    def with_tau(self, tau_star: float) -> "ControllerParams":
        return replace(self, tau_star=tau_star)


@dataclass(frozen=True)
class VehicleState:
    x: float
    v: float
    a: float = 0.0
    u: float = 0.0


class ErrorState(NamedTuple):
    dd: float
    dv: float
    a: float


def desired_spacing(v: float, params: ControllerParams) -> float:
    return v * params.tau_star + params.s0


def derive_error_state(leader: VehicleState, follower: VehicleState,
                       params: ControllerParams) -> ErrorState:
    """Spacing deviation, speed difference and follower acceleration."""
    gap = leader.x - follower.x
    if not gap > 0:
        raise CollisionDetected(
            f"leader at x={leader.x:.6g} is not ahead of follower at x={follower.x:.6g}")
    return ErrorState(gap - desired_spacing(follower.v, params),
                      leader.v - follower.v,
                      follower.a)


def command_accel(err: ErrorState, lead_accel_delayed: float,
                  params: ControllerParams) -> float:
    k1, k2, k3 = params.k
    u = k1 * err.dd + k2 * err.dv + k3 * err.a + params.kf * lead_accel_delayed
    return min(max(u, params.u_min), params.u_max)


def step_glvd(state: VehicleState, u: float, dt: float,
              params: ControllerParams) -> VehicleState:
    """One explicit Euler step of the lagged vehicle dynamics.

    All right-hand sides use the state at the start of the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a_next = state.a + dt * (params.K * u - state.a) / params.T
    v_next = max(0.0, state.v + dt * state.a)
    x_next = state.x + dt * state.v
    return VehicleState(x_next, v_next, a_next, u)


def build_state_matrices(params: ControllerParams):
    """Continuous-time error dynamics ``x' = A x + B u + D a_leader``.

    The (0, 2) entry is ``-tau_star``: differentiating
    ``dd = gap - tau_star*v - s0`` gives ``dd' = dv - tau_star*a``.
    """
    T, K = params.T, params.K
    A = np.array([[0.0, 1.0, -params.tau_star],
                  [0.0, 0.0, -1.0],
                  [0.0, 0.0, -1.0 / T]])
    B = np.array([[0.0], [0.0], [K / T]])
    D = np.array([[0.0], [1.0], [0.0]])
    return A, B, D


def check_stability(params: ControllerParams) -> np.ndarray:
    """Eigenvalues of the closed-loop matrix ``A + B k^T``."""
    A, B, _ = build_state_matrices(params)
    closed = A + B @ np.asarray(params.k, dtype=float).reshape(1, 3)
    return np.linalg.eigvals(closed)


def is_stable(params: ControllerParams) -> bool:
    return bool(np.all(check_stability(params).real < 0))


@dataclass
class DelayLine:
    """Fixed-length FIFO returning the value pushed ``steps`` pushes ago.

    Zero-filled at start. ``steps == 0`` passes values straight through.
    """

    steps: int
    _buf: deque = field(init=False, repr=False)

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("delay must be non-negative")
        self._buf = deque([0.0] * self.steps, maxlen=self.steps + 1)

    @classmethod
    def for_delay(cls, theta: float, dt: float) -> "DelayLine":
        # tolerance keeps e.g. 0.3/0.1 = 2.9999999999999996 at 3 steps
        return cls(max(0, math.ceil(theta / dt - 1e-9)))

    def push(self, value: float) -> float:
        self._buf.append(value)
        return self._buf[0]
