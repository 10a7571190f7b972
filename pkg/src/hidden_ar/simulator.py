"""Trajectory generation for the partially observed pair

    X_t = f * Y_{t-1} + sigma * w_t,   Y_t = a * Y_{t-1} + b * v_t,

t = 0..T, with independent standard Gaussian w, v and stationary
initialization: a pre-sample Y_{-1} ~ N(0, b^2/(1-a^2)) seeds both
recursions, so X_0 = f * Y_{-1} + sigma * w_0 already has the stationary
observation law and the difference statistics are stationary from t = 1.

Randomness is counter based: each (seed, stream) pair keys an independent
Philox stream, so parallel replications reproduce bit-exactly regardless of
scheduling or thread count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ZeroHorizon
from .model_core import ModelParams


@dataclass(frozen=True)
class Trajectory:
    """A simulated path: observations x = (X_0..X_T), optional hidden states
    y = (Y_0..Y_T), and the (seed, stream) pair that regenerates it."""

    x: np.ndarray
    y: np.ndarray | None
    seed: int
    stream: int
    params: ModelParams

    @property
    def horizon(self) -> int:
        return len(self.x) - 1


def _generator(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate(
    params: ModelParams,
    horizon: int,
    seed: int,
    keep_hidden: bool = True,
    stream: int = 0,
) -> Trajectory:
    """Generate X_0..X_T (and Y_0..Y_T) for T = horizon >= 1.

    The draw order is fixed: one block of 2T+3 standard normals, consumed as
    (stationary scale for Y_{-1}, w_0..w_T, v_0..v_T). keep_hidden only
    controls whether y is retained, never what is drawn, so x is identical
    either way.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ZeroHorizon(f"need horizon >= 1, got {horizon}")
    a, b, f, sigma = params.a, params.b, params.f, math.sqrt(params.sigma2)

    rng = _generator(seed, stream)
    z = rng.standard_normal(2 * horizon + 3)
    y_pre = z[0] * (b / math.sqrt(1.0 - a * a))  # Y_{-1}, stationary
    w = z[1 : horizon + 2]                      # w_0..w_T
    v = z[horizon + 2 :]                        # v_0..v_T

    # Y_t = a*Y_{t-1} + b*v_t as an IIR filter seeded by Y_{-1}.
    y, _ = lfilter([1.0], [1.0, -a], b * v, zi=np.array([a * y_pre]))

    # X_t = f*Y_{t-1} + sigma*w_t; the lagged hidden track starts at Y_{-1}.
    y_lag = np.concatenate(([y_pre], y[:-1]))
    x = f * y_lag + sigma * w

    return Trajectory(
        x=x,
        y=y if keep_hidden else None,
        seed=int(seed),
        stream=int(stream),
        params=params,
    )


def trajectory_to_csv(traj: Trajectory, path: str) -> None:
    """Write columns t, x, y (y blank when not kept) with a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"])
        for t, xt in enumerate(traj.x):
            yt = "" if traj.y is None else repr(float(traj.y[t]))
            writer.writerow([t, repr(float(xt)), yt])
