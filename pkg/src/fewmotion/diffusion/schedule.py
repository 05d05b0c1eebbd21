"""Noise schedules: linear beta ramp, cumulative alpha products, DDIM steps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class NoiseSchedule:
    """Per-step noise tables, 1-indexed by timestep t in {1..T}.

    beta[t-1] is the step-t variance increment, alpha_bar[t-1] the running
    product of (1 - beta). ddim_steps is the strictly increasing sampling
    sub-sequence ending at T.
    """
    T: int
    beta: np.ndarray
    alpha_bar: np.ndarray
    ddim_steps: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def abar(self, t) -> np.ndarray:
        """alpha_bar at timestep t (t = 0 means clean data, abar = 1)."""
        t = np.asarray(t)
        out = np.where(t > 0, self.alpha_bar[np.maximum(t, 1) - 1], 1.0)
        return out

    def validate(self) -> None:
        if not (np.all(self.beta > 0) and np.all(self.beta < 1)):
            raise ValidationError("schedule: beta outside (0, 1)")
        if np.any(np.diff(self.beta) <= 0) and self.T > 1:
            raise ValidationError("schedule: beta not strictly increasing")
        if np.any(np.diff(self.alpha_bar) >= 0):
            raise ValidationError("schedule: alpha_bar not strictly decreasing")
        if len(self.ddim_steps):
            if np.any(np.diff(self.ddim_steps) <= 0):
                raise ValidationError("schedule: ddim_steps not strictly increasing")
            if self.ddim_steps[-1] != self.T:
                raise ValidationError("schedule: ddim_steps must end at T")

    def summary(self) -> dict:
        return {
            "T": self.T,
            "beta_start": float(self.beta[0]),
            "beta_end": float(self.beta[-1]),
            "ddim_count": int(len(self.ddim_steps)),
        }


def make_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02,
                  ddim_count: int = 50) -> NoiseSchedule:
    """Linear beta ramp with evenly spaced DDIM steps ending at T.

    Defaults follow the usual pixel-space convention: T=1000, beta from
    1e-4 to 0.02, 50 sampling steps.
    """
    if T < 2:
        raise ValidationError(f"make_schedule: T must be >= 2, got {T}")
    if not (0 < beta_start < 1) or not (0 < beta_end < 1):
        raise ValidationError(
            f"make_schedule: beta bounds must lie in (0, 1), got {beta_start}, {beta_end}")
    if beta_start >= beta_end:
        # equality would flatten the ramp and break strict monotonicity
        raise ValidationError(
            f"make_schedule: beta_start {beta_start} must be < beta_end {beta_end}")
    if not (1 <= ddim_count <= T):
        raise ValidationError(f"make_schedule: ddim_count {ddim_count} outside [1, {T}]")
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha_bar = np.cumprod(1.0 - beta)
    steps = np.round(np.arange(1, ddim_count + 1) * (T / ddim_count)).astype(int)
    sched = NoiseSchedule(T=T, beta=beta, alpha_bar=alpha_bar, ddim_steps=steps)
    sched.validate()
    return sched
