"""One-step maximum-likelihood estimator process.

Pipeline: a preliminary method-of-moments estimate, then a single Fisher
scoring correction applied as a process in the upper time index,

    theta*_{t,T} = prelim + [I(prelim) (t - tau)]^{-1}
                   * sum_{s=tau+1..t} g_s(prelim),       t in [tau+2, T],

with tau = floor(T^delta), delta in (1/2, 1), and g_s the score increment
of the Gaussian innovation likelihood,

    g_s = (x_s - f m_{s-1}) Mdot_{s-1} / P
          + ((x_s - f m_{s-1})^2 - P) Pdot / (2 P^2),

where Mdot = d(f m)/d psi, all tracks run once at the frozen preliminary
point with m = dm = 0 at s = tau. The preliminary is computed from the
whole series: a preliminary restricted to the short prefix [0, tau] is too
noisy for the scoring step to be effectively linear at practical horizons
(its error enters the corrected estimate quadratically), while the full
series moment estimate leaves the correction residual negligible and the
process attains the information bound. The learning index tau only sets
where the correction sum starts. Every emitted point is clipped into the
closed bounds box.

Both an O(T) batch evaluation (cumulative sums) and the algebraically
identical recurrent update

    u_t = u_{t-1} + ((t - tau))^{-1} (I^{-1} g_t - u_{t-1})

are provided; they agree to machine rounding and serve as mutual oracles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import FisherSingular, HorizonTooShort
from .kalman import filter_derivative
from .model_core import FisherInfo, ModelParams, ParamProblem, fisher_info, stationary, stationary_gradient
from .moments import MmeEstimate, mme


@dataclass(frozen=True)
class EstimatorTrace:
    """A one-step estimator path.

    tau     : learning interval end (start of the correction sum)
    prelim  : preliminary estimate (canonical coordinate order)
    path    : array of shape (T - tau - 1, dim), row j is theta*_{t,T} at
              t = tau + 2 + j
    delta   : learning exponent used
    t_grid  : the time indices tau+2 .. T matching the path rows
    clipped : per-row flag, True when any coordinate was clipped
    problem : the estimation problem (for coordinate names and bounds)
    prelim_estimate : the MME result with clip and degeneracy flags, or
              None when an explicit preliminary was supplied
    """

    tau: int
    prelim: np.ndarray
    path: np.ndarray
    delta: float
    t_grid: np.ndarray
    clipped: np.ndarray
    problem: ParamProblem
    prelim_estimate: MmeEstimate | None

    @property
    def horizon(self) -> int:
        return int(self.t_grid[-1])

    def theta_at(self, t: int) -> np.ndarray:
        """The estimate in force at time t: the preliminary for
        t <= tau + 1, the path value afterwards."""
        if t < self.tau:
            raise ValueError(f"no estimate before the learning interval end {self.tau}, got t={t}")
        if t > self.horizon:
            raise ValueError(f"t={t} beyond the horizon {self.horizon}")
        if t <= self.tau + 1:
            return self.prelim
        return self.path[t - self.tau - 2]


def learning_interval(horizon: int, delta: float) -> int:
    """tau = floor(T^delta), guarded against floating-point dips just below
    an exact integer power; requires tau <= T - 2."""
    if not 0.5 < delta < 1.0:
        raise ValueError(f"need delta in (0.5, 1), got {delta}")
    horizon = int(horizon)
    if horizon < 16:
        raise HorizonTooShort(f"need T >= 16, got {horizon}")
    power = float(horizon) ** delta
    tau = math.floor(power)
    if (tau + 1) - power < 1e-8 * max(power, 1.0):
        tau += 1
    if tau > horizon - 2:
        raise HorizonTooShort(f"tau={tau} leaves no estimation window in T={horizon}")
    return tau


def _score_increments(
    params: ModelParams, x: np.ndarray, tau: int, coords: tuple[str, ...]
) -> np.ndarray:
    """Score increments g_s for s = tau+1 .. T, shape (T - tau, len(coords)).

    The filter and its derivative tracks are started at m = dm = 0 at s = tau
    and run on the tail observations only.
    """
    tail = x[tau:]
    sq = stationary(params)
    p = sq.p
    out = np.empty((len(tail) - 1, len(coords)))
    resid = None
    for j, coord in enumerate(coords):
        trace = filter_derivative(params, tail, coord, m0=0.0, dm0=0.0)
        m_prev = trace.m[:-1]
        dm_prev = trace.dm[coord][:-1]
        if resid is None:
            resid = tail[1:] - params.f * m_prev
        mdot = params.f * dm_prev
        if coord == "f":
            mdot = mdot + m_prev
        dp = stationary_gradient(params, coord).d_p
        out[:, j] = resid * mdot / p + (resid * resid - p) * (dp / (2.0 * p * p))
    return out


def _check_information(fisher: FisherInfo) -> np.ndarray:
    """Return I^{-1} as a (dim, dim) array, rejecting near-singular values."""
    if fisher.dim == 1:
        if fisher.value < 1e-12:
            raise FisherSingular(f"information {fisher.value} below 1e-12")
        return np.array([[1.0 / fisher.value]])
    matrix = fisher.matrix
    trace = float(np.trace(matrix))
    det = float(np.linalg.det(matrix))
    if det < 1e-12 * trace * trace:
        raise FisherSingular(f"information matrix near-singular: det={det}, trace={trace}")
    return np.linalg.inv(matrix)


def _one_step(x, problem: ParamProblem, delta: float, method: str, prelim) -> EstimatorTrace:
    if method not in ("batch", "recurrent"):
        raise ValueError(f"method must be 'batch' or 'recurrent', got {method!r}")
    x = np.asarray(x, dtype=float)
    horizon = len(x) - 1
    tau = learning_interval(horizon, delta)
    if prelim is None:
        prelim_est = mme(x, problem)
        prelim_values = prelim_est.values
    else:
        prelim_est = None
        prelim_values, _ = problem.clip(np.atleast_1d(np.asarray(prelim, dtype=float)))
    params_tau = problem.point(prelim_values)
    inv = _check_information(fisher_info(params_tau, problem))

    g = _score_increments(params_tau, x, tau, problem.unknown)
    steps = np.arange(1, len(g) + 1, dtype=float)  # t - tau for t = tau+1..T
    if method == "batch":
        u = np.cumsum(g, axis=0) @ inv / steps[:, None]
    else:
        u = np.empty_like(g)
        corr = g @ inv
        prev = np.zeros(g.shape[1])
        for j in range(len(g)):
            prev = prev + (corr[j] - prev) / steps[j]
            u[j] = prev

    candidates = prelim_values[None, :] + u[1:]  # t = tau+2 .. T
    path = np.empty_like(candidates)
    clipped = np.zeros(len(candidates), dtype=bool)
    for i in range(len(candidates)):
        path[i], flags = problem.clip(candidates[i])
        clipped[i] = bool(flags)
    return EstimatorTrace(
        tau=tau,
        prelim=prelim_values,
        path=path,
        delta=delta,
        t_grid=np.arange(tau + 2, horizon + 1),
        clipped=clipped,
        problem=problem,
        prelim_estimate=prelim_est,
    )


def one_step_scalar(
    x, problem: ParamProblem, delta: float = 0.6, method: str = "batch", prelim=None
) -> EstimatorTrace:
    """One-step MLE process for a scalar unknown in {b}, {f}, {a}.

    prelim, when given, replaces the moment preliminary with an explicit
    value (clipped into bounds); useful for crafted scenarios and for
    studying the correction in isolation.
    """
    if problem.dim != 1:
        raise ValueError(f"one_step_scalar needs a scalar unknown, got {problem.unknown}")
    return _one_step(x, problem, delta, method, prelim)


def one_step_pair(
    x, problem: ParamProblem, delta: float = 0.6, method: str = "batch", prelim=None
) -> EstimatorTrace:
    """One-step MLE process for the pair (f, a) with the 2x2 information.

    prelim, when given, replaces the moment preliminary with an explicit
    pair of values (clipped into bounds).
    """
    if problem.unknown != ("f", "a"):
        raise ValueError(f"one_step_pair needs unknown=(f, a), got {problem.unknown}")
    return _one_step(x, problem, delta, method, prelim)


def estimator_to_csv(trace: EstimatorTrace, path: str) -> None:
    """Write the path as t, theta_1 [, theta_2], clipped with a header."""
    names = [f"theta_{j + 1}" for j in range(trace.path.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + names + ["clipped"])
        for i, t in enumerate(trace.t_grid):
            row = [int(t)] + [repr(float(v)) for v in trace.path[i]]
            row.append(int(trace.clipped[i]))
            writer.writerow(row)
