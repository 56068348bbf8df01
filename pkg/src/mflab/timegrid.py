"""Shared time-grid rules for the particle and density integrators."""

from __future__ import annotations

import math

import numpy as np


def step_count(t_final: float, dt: float) -> int:
    """Number of steps of size dt covering [0, t_final].

    The horizon must be an integer multiple of dt (up to rounding slack);
    anything else is almost certainly a configuration mistake.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be >= 0, got {t_final}")
    n = round(t_final / dt)
    if not math.isclose(n * dt, t_final, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"t_final={t_final} is not an integer multiple of dt={dt}")
    return n


def record_steps(n_steps: int, record_every: int) -> np.ndarray:
    """Recorded step indices: every record_every-th step plus the final one."""
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    steps = list(range(0, n_steps + 1, record_every))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return np.asarray(steps, dtype=np.int64)
