"""Adaptive Kalman filter: the stationary filter recursion with the unknown
coordinates replaced at every step by the One-step MLE process value.

The pipeline on observations X_0..X_T is: moment preliminary -> one-step
estimator path theta*_{t,T} -> plug-in filter

    m*_t = A(theta_hat_{t-1}) m*_{t-1} + e(theta_hat_{t-1}) x_t,
    t = tau+1 .. T,   m*_tau = 0,

where theta_hat_{t-1} is theta*_{t-1,T} once the path exists (t-1 >= tau+2)
and the preliminary estimate before that. The scoring corrections feeding
step t use observations up to x_{t-1} only; the moment preliminary is fit
on the whole series (batch setting, see the onestep module).

The normalized excess risk t * E(m*_t - m_t(theta_0))^2 converges to

    S*^2 = Bdot*^2 / (I_psi (1 - A^2)),   Bdot* = sqrt(P) * d e / d psi,

which for psi = b is a f sigma2 gammadot* / P^(3/2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedLengths, UnsupportedSet
from .kalman import FilterTrace, filter_stationary
from .model_core import (
    COORDINATES,
    ModelParams,
    ParamProblem,
    scalar_fisher,
    stationary,
    stationary_gradient,
)
from .onestep import EstimatorTrace, learning_interval, one_step_pair, one_step_scalar


@dataclass(frozen=True)
class AdaptiveTrace:
    """Adaptive filter output.

    tau         : learning interval end; m_star covers t = tau+1 .. T
    m_star      : the adaptive conditional-mean track
    theta_track : the estimator process that was plugged in (None when the
                  filter was run with a frozen parameter point)
    oracle_m    : stationary-filter track at the true point, full length
                  T+1, when the truth was supplied
    theta_plug  : per-step parameter values used at t = tau+1 .. T
                  (canonical coordinate order of the problem)
    problem     : the estimation problem
    """

    tau: int
    m_star: np.ndarray
    theta_track: EstimatorTrace | None
    oracle_m: np.ndarray | None
    theta_plug: np.ndarray
    problem: ParamProblem

    @property
    def horizon(self) -> int:
        return self.tau + len(self.m_star)

    def m_star_at(self, t: int) -> float:
        """m*_t for t in [tau+1, T]."""
        if not self.tau + 1 <= t <= self.horizon:
            raise ValueError(f"adaptive track covers [{self.tau + 1}, {self.horizon}], got t={t}")
        return float(self.m_star[t - self.tau - 1])


def _plug_in_coefficients(
    problem: ParamProblem, theta_plug: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Filter coefficients (A, e) for each plug-in parameter row.

    The arithmetic mirrors the scalar stationary computation expression by
    expression, so a constant row reproduces the stationary filter's
    coefficients bit for bit.
    """
    n = len(theta_plug)
    cols: dict[str, np.ndarray] = {}
    for name in COORDINATES:
        if name in problem.known:
            cols[name] = np.full(n, problem.known[name])
        else:
            cols[name] = theta_plug[:, problem.unknown.index(name)]
    a, b, f, s2 = cols["a"], cols["b"], cols["f"], cols["sigma2"]
    c = s2 * (1.0 - a * a) / (f * f) - b * b
    d = b * b * s2 / (f * f)
    root = np.sqrt(c * c + 4.0 * d)
    gamma = 0.5 * (root - c)
    p = s2 + (f * f) * gamma
    a_coef = a * s2 / p
    e_coef = a * f * gamma / p
    return a_coef, e_coef


def _fit_track(x: np.ndarray, problem: ParamProblem, delta: float) -> EstimatorTrace:
    if problem.dim == 1:
        return one_step_scalar(x, problem, delta)
    if problem.unknown == ("f", "a"):
        return one_step_pair(x, problem, delta)
    raise UnsupportedSet(f"adaptive filtering supports {{b}}, {{f}}, {{a}}, {{f,a}}, got {problem.unknown}")


def adaptive_filter(
    x,
    problem: ParamProblem,
    delta: float = 0.6,
    track: EstimatorTrace | None = None,
    truth: ModelParams | None = None,
    frozen_at: ModelParams | None = None,
    m_star_init: float = 0.0,
) -> AdaptiveTrace:
    """Run the adaptive filter on X_0..X_T.

    ``track`` reuses an already-fitted estimator process (it must come from
    the same observations). ``frozen_at`` bypasses estimation entirely and
    plugs a fixed parameter point into every step, which reduces the
    recursion to the stationary filter; ``truth`` additionally records the
    oracle track m_t(truth) for error reporting.
    """
    problem.require_complete()
    x = np.asarray(x, dtype=float)
    horizon = len(x) - 1

    if frozen_at is not None:
        tau = track.tau if track is not None else learning_interval(horizon, delta)
        theta_plug = np.tile(problem.values_of(frozen_at), (horizon - tau, 1))
        track = None
    else:
        if track is None:
            track = _fit_track(x, problem, delta)
        if track.horizon != horizon:
            raise MismatchedLengths(
                f"estimator track covers T={track.horizon}, observations give T={horizon}"
            )
        tau = track.tau
        # Step t consumes theta_hat_{t-1}: the preliminary for t-1 <= tau+1,
        # the path value afterwards.
        theta_plug = np.vstack(
            [track.prelim, track.prelim] + [track.path[: horizon - tau - 2]]
        )

    a_coef, e_coef = _plug_in_coefficients(problem, theta_plug)

    a_list = a_coef.tolist()
    e_list = e_coef.tolist()
    x_list = x[tau + 1 :].tolist()
    m_star = np.empty(horizon - tau)
    prev = float(m_star_init)
    for i in range(len(x_list)):
        prev = a_list[i] * prev + e_list[i] * x_list[i]
        m_star[i] = prev

    oracle_m = None
    if truth is not None:
        oracle_m = filter_stationary(truth, x, m0=0.0).m
    return AdaptiveTrace(
        tau=tau,
        m_star=m_star,
        theta_track=track,
        oracle_m=oracle_m,
        theta_plug=theta_plug,
        problem=problem,
    )


def s_star_limit(params: ModelParams, unknown="b") -> float:
    """The limit of t * E(m*_t - m_t)^2 for a scalar unknown coordinate.

    Exact for unknown b; the same formula pattern is applied for f and a
    (experimental: the plugged-in coordinate changes, the structure of the
    error recursion does not).
    """
    if isinstance(unknown, str):
        coord = unknown
    else:
        names = tuple(unknown)
        if len(names) != 1:
            raise UnsupportedSet(f"s_star_limit needs a scalar unknown, got {names}")
        coord = names[0]
    if coord not in ("b", "f", "a"):
        raise UnsupportedSet(f"s_star_limit supports b, f, a; got {coord!r}")
    sq = stationary(params)
    grad = stationary_gradient(params, coord)
    info = scalar_fisher(params, coord)
    return grad.d_b_coef * grad.d_b_coef / (info * (1.0 - sq.a_coef * sq.a_coef))


def error_report(
    trace: AdaptiveTrace, oracle: FilterTrace, checkpoints
) -> list[dict[str, float]]:
    """Normalized errors at t = floor(v*T) for each checkpoint v.

    filter_error    : t * (m*_t - m_t(theta_0))^2
    estimator_error : t * |theta_hat_t - theta_0|^2 (None for frozen runs)

    The oracle must be the stationary filter at the true point on the same
    observations (full track, length T+1).
    """
    horizon = trace.horizon
    if len(oracle.m) != horizon + 1:
        raise MismatchedLengths(
            f"oracle track has {len(oracle.m)} points, expected {horizon + 1}"
        )
    truth_values = trace.problem.values_of(oracle.params)
    rows: list[dict[str, float]] = []
    for v in checkpoints:
        if not 0.0 < v <= 1.0:
            raise ValueError(f"checkpoints must lie in (0, 1], got {v}")
        t = math.floor(v * horizon)
        if t < trace.tau + 1:
            raise ValueError(
                f"checkpoint v={v} gives t={t} inside the learning interval (tau={trace.tau})"
            )
        diff = trace.m_star_at(t) - float(oracle.m[t])
        row = {"v": float(v), "t": float(t), "filter_error": t * diff * diff}
        if trace.theta_track is not None:
            dev = trace.theta_track.theta_at(t) - truth_values
            row["estimator_error"] = t * float(dev @ dev)
        else:
            row["estimator_error"] = None
        rows.append(row)
    return rows


def adaptive_to_csv(trace: AdaptiveTrace, x, path: str) -> None:
    """Write t, x, m_star, theta_star..., oracle_m, sq_error with a header."""
    x = np.asarray(x, dtype=float)
    dim = trace.theta_plug.shape[1]
    theta_names = [f"theta_star_{j + 1}" for j in range(dim)]
    header = ["t", "x", "m_star"] + theta_names + ["oracle_m", "sq_error"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(trace.m_star)):
            t = trace.tau + 1 + i
            row = [t, repr(float(x[t])), repr(float(trace.m_star[i]))]
            row += [repr(float(trace.theta_plug[i, j])) for j in range(dim)]
            if trace.oracle_m is None:
                row += ["", ""]
            else:
                diff = float(trace.m_star[i]) - float(trace.oracle_m[t])
                row += [repr(float(trace.oracle_m[t])), repr(diff * diff)]
            writer.writerow(row)
