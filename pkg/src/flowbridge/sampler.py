"""Deterministic ODE sampling for the learned velocity field.

Encoding integrates the unconditional field forward in flow time (data to
Gaussian); decoding integrates backward (Gaussian to data) under a guided
field. Both directions share the same discrete schedule, so an
encode/decode round trip visits the same times in opposite order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergenceError, ShapeError, ValidationError
from .flow import cfg_combine
from .nn.model import VectorFieldModel

__all__ = [
    "TimeSchedule",
    "schedule_uniform",
    "schedule_raised_cosine",
    "Trajectory",
    "integrate",
    "BridgeRequest",
    "BridgeResult",
    "gfb_transfer",
]


@dataclass(frozen=True)
class TimeSchedule:
    """Strictly increasing flow times from exactly 0.0 to exactly 1.0."""

    taus: np.ndarray

    def __post_init__(self):
        t = self.taus
        if t.ndim != 1 or t.shape[0] < 2:
            raise ValidationError("schedule needs at least two times")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValidationError(f"schedule must span [0, 1] exactly, got [{t[0]}, {t[-1]}]")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("schedule times must be strictly increasing")

    @property
    def n_steps(self) -> int:
        return self.taus.shape[0] - 1


def schedule_uniform(n_steps: int) -> TimeSchedule:
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    return TimeSchedule(np.arange(n_steps + 1, dtype=np.float64) / n_steps)


def schedule_raised_cosine(n_steps: int = 25) -> TimeSchedule:
    """tau_i = 0.5 + 0.5 * cos(pi * i / T + pi): dense near both endpoints.

    cos(pi) and cos(2*pi) are exact in float64, so the endpoints are exact.
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    i = np.arange(n_steps + 1, dtype=np.float64)
    return TimeSchedule(0.5 + 0.5 * np.cos(np.pi * i / n_steps + np.pi))


@dataclass(frozen=True)
class Trajectory:
    """Recorded integration path.

    states[k] is the state at visited time taus[k]; velocities[k] is the
    field actually applied on the step from taus[k] to taus[k+1] (for the
    midpoint method that is the midpoint evaluation, not the initial one).
    """

    states: np.ndarray
    velocities: np.ndarray
    taus: np.ndarray
    direction: str

    def __post_init__(self):
        t_plus_1, b, n = self.states.shape
        if self.velocities.shape != (t_plus_1 - 1, b, n):
            raise ShapeError(
                f"velocities {self.velocities.shape} inconsistent with states {self.states.shape}"
            )
        if self.taus.shape != (t_plus_1,):
            raise ShapeError(f"taus {self.taus.shape} inconsistent with {t_plus_1} states")
        if self.direction not in ("forward", "backward"):
            raise ValidationError(f"unknown direction {self.direction!r}")

    @property
    def n_steps(self) -> int:
        return self.velocities.shape[0]

    @property
    def batch_size(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(
    model: VectorFieldModel,
    start: np.ndarray,
    schedule: TimeSchedule,
    direction: str = "forward",
    method: str = "euler",
    condition: np.ndarray | None = None,
    present: np.ndarray | None = None,
    gamma: float = 1.0,
) -> Trajectory:
    """Fixed-step integration of dx/dtau = v(x, tau, c) over the schedule.

    direction "forward" walks the schedule from 0 to 1, "backward" from 1 to
    0 (negative steps). With a condition, the field is the guided combination
    gamma * v_cond + (1 - gamma) * v_null; gamma = 1 and gamma = 0 skip the
    second network evaluation. Without a condition only the null branch is
    evaluated. Raises DivergenceError the first time a state goes non-finite.
    """
    if start.ndim != 2:
        raise ShapeError(f"start state must be (B, N), got {start.shape}")
    if method not in ("euler", "midpoint"):
        raise ValidationError(f"unknown method {method!r}")
    if direction not in ("forward", "backward"):
        raise ValidationError(f"unknown direction {direction!r}")

    taus = schedule.taus if direction == "forward" else schedule.taus[::-1]
    n_steps = schedule.n_steps
    dtype = model.config.np_dtype

    def guided_field(x, tau):
        if condition is None:
            return model.velocity(x, tau, None)
        if gamma == 1.0:
            return model.velocity(x, tau, condition, present)
        v_null = model.velocity(x, tau, None)
        if gamma == 0.0:
            return v_null
        v_cond = model.velocity(x, tau, condition, present)
        return cfg_combine(v_cond, v_null, gamma)

    x = np.asarray(start, dtype=dtype)
    states = np.empty((n_steps + 1,) + x.shape, dtype=dtype)
    velocities = np.empty((n_steps,) + x.shape, dtype=dtype)
    states[0] = x
    for i in range(n_steps):
        tau_cur, tau_next = float(taus[i]), float(taus[i + 1])
        dt = tau_next - tau_cur
        if method == "euler":
            v = guided_field(x, tau_cur)
        else:
            k1 = guided_field(x, tau_cur)
            mid_tau = min(max(tau_cur + 0.5 * dt, 0.0), 1.0)
            v = guided_field(x + (0.5 * dt) * k1, mid_tau)
        x = x + dt * v
        if not np.all(np.isfinite(x)):
            raise DivergenceError(step=i, tau=tau_next)
        states[i + 1] = x
        velocities[i] = v
    return Trajectory(states, velocities, np.asarray(taus, dtype=np.float64), direction)


@dataclass(frozen=True)
class BridgeRequest:
    """How to run a domain transfer: guidance weight, schedule, integrator."""

    gamma: float = 1.0
    n_steps: int = 25
    method: str = "euler"
    schedule: str = "raised_cosine"

    def build_schedule(self) -> TimeSchedule:
        if self.schedule == "raised_cosine":
            return schedule_raised_cosine(self.n_steps)
        if self.schedule == "uniform":
            return schedule_uniform(self.n_steps)
        raise ValidationError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class BridgeResult:
    output: np.ndarray
    latent: np.ndarray
    encode: Trajectory
    decode: Trajectory


def gfb_transfer(
    model: VectorFieldModel,
    x: np.ndarray,
    schedule: TimeSchedule,
    condition: np.ndarray | None,
    gamma: float = 1.0,
    present: np.ndarray | None = None,
    method: str = "euler",
) -> BridgeResult:
    """Two-stage bridge: unconditional encode to the latent, guided decode back.

    The encode leg never sees the condition — the latent depends only on the
    input — so the same latent can be decoded under different conditions or
    guidance weights.
    """
    encode = integrate(model, x, schedule, direction="forward", method=method, condition=None)
    latent = encode.final
    decode = integrate(
        model,
        latent,
        schedule,
        direction="backward",
        method=method,
        condition=condition,
        present=present,
        gamma=gamma,
    )
    return BridgeResult(decode.final, latent, encode, decode)
