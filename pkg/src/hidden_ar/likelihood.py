"""Gaussian innovation likelihood, full MLE, and the Bayes estimator.

The exact log-likelihood under the stationary filter is

    L(theta) = -(T/2) ln(2 pi P(theta))
               - sum_{t=1..T} (x_t - f m_{t-1}(theta))^2 / (2 P(theta)),

with the m-track run from m0 = 0. The MLE maximizes L over the closed
bounds box by a coarse grid scan (256 nodes per dimension) followed by
golden-section refinement (coordinate-wise in two dimensions) to bracket
width 1e-8. The Bayes estimator is the posterior mean under a positive
prior on the box, computed by trapezoid quadrature with log-sum-exp
stabilized weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePosterior, FlatLikelihood, SeriesTooShort
from .kalman import filter_stationary
from .model_core import ModelParams, ParamProblem, stationary

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_GRID = 256
_BRACKET_TOL = 1e-8
_FLAT_TOL = 1e-9


@dataclass(frozen=True)
class PosteriorSpec:
    """Quadrature settings for the Bayes estimator.

    prior     : None for the uniform density on the box, or a sequence of
                (value, density) pairs interpolated onto the quadrature grid
                (scalar problems only); densities must be positive
    grid_size : nodes per dimension, at least 64
    """

    prior: tuple[tuple[float, float], ...] | None = None
    grid_size: int = 512


def log_likelihood(x, candidate: ModelParams) -> float:
    """Exact Gaussian log-likelihood of x at the candidate point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise SeriesTooShort(f"likelihood needs at least 2 observations, got {x.shape}")
    horizon = len(x) - 1
    p = stationary(candidate).p
    trace = filter_stationary(candidate, x, m0=0.0)
    resid = x[1:] - candidate.f * trace.m[:-1]
    return -0.5 * horizon * math.log(2.0 * math.pi * p) - float(resid @ resid) / (2.0 * p)


def _objective(x: np.ndarray, problem: ParamProblem):
    def value(point: np.ndarray) -> float:
        return log_likelihood(x, problem.point(point))

    return value


def _golden(fun, lo: float, hi: float) -> float:
    """Golden-section maximization on [lo, hi]; ties keep the left
    subinterval so equal-likelihood plateaus resolve toward smaller values."""
    a, b = lo, hi
    h = b - a
    c = b - _INVPHI * h
    d = a + _INVPHI * h
    yc = fun(c)
    yd = fun(d)
    while h > _BRACKET_TOL:
        if yc >= yd:
            b, d, yd = d, c, yc
            h = b - a
            c = b - _INVPHI * h
            yc = fun(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INVPHI * h
            yd = fun(d)
    return 0.5 * (a + b)


def _grid_axes(problem: ParamProblem, size: int) -> list[np.ndarray]:
    return [np.linspace(*problem.bounds[name], size) for name in problem.unknown]


def mle(x, problem: ParamProblem) -> np.ndarray:
    """Maximum-likelihood estimate of the unknown coordinates (canonical
    order). Emits a FlatLikelihood warning and returns the grid argmax when
    the likelihood surface is flat to within 1e-9 across the scan."""
    problem.require_complete()
    if problem.dim not in (1, 2):
        raise ValueError(f"mle supports 1 or 2 unknowns, got {problem.unknown}")
    x = np.asarray(x, dtype=float)
    fun = _objective(x, problem)
    axes = _grid_axes(problem, _GRID)

    if problem.dim == 1:
        grid = axes[0]
        values = np.array([fun(np.array([g])) for g in grid])
        best = int(np.argmax(values))
        if float(values.max() - values.min()) < _FLAT_TOL:
            warnings.warn("likelihood flat across the scan grid", FlatLikelihood)
            return np.array([grid[best]])
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        return np.array([_golden(lambda g: fun(np.array([g])), lo, hi)])

    g1, g2 = axes
    values = np.empty((len(g1), len(g2)))
    for i, v1 in enumerate(g1):
        for j, v2 in enumerate(g2):
            values[i, j] = fun(np.array([v1, v2]))
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    if float(values.max() - values.min()) < _FLAT_TOL:
        warnings.warn("likelihood flat across the scan grid", FlatLikelihood)
        return np.array([g1[i], g2[j]])
    point = np.array([g1[i], g2[j]])
    spacing = np.array([g1[1] - g1[0], g2[1] - g2[0]])
    bounds = [problem.bounds[name] for name in problem.unknown]
    for _ in range(50):
        before = point.copy()
        for k in range(2):
            lo = max(bounds[k][0], point[k] - spacing[k])
            hi = min(bounds[k][1], point[k] + spacing[k])

            def along(g, k=k):
                trial = point.copy()
                trial[k] = g
                return fun(trial)

            point[k] = _golden(along, lo, hi)
        if float(np.max(np.abs(point - before))) < _BRACKET_TOL:
            break
    return point


def _prior_on_grid(spec: PosteriorSpec, grid: np.ndarray) -> np.ndarray:
    if spec.prior is None:
        return np.ones_like(grid)
    pairs = np.asarray(spec.prior, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("prior must be a sequence of (value, density) pairs")
    order = np.argsort(pairs[:, 0])
    dens = np.interp(grid, pairs[order, 0], pairs[order, 1])
    if not np.all(dens > 0.0):
        raise ValueError("prior density must be positive on the whole box")
    return dens


def bayes(x, problem: ParamProblem, spec: PosteriorSpec | None = None) -> np.ndarray:
    """Posterior-mean estimate of the unknown coordinates under the prior."""
    problem.require_complete()
    if spec is None:
        spec = PosteriorSpec()
    if spec.grid_size < 64:
        raise ValueError(f"need grid_size >= 64, got {spec.grid_size}")
    if problem.dim not in (1, 2):
        raise ValueError(f"bayes supports 1 or 2 unknowns, got {problem.unknown}")
    if problem.dim == 2 and spec.prior is not None:
        raise ValueError("tabulated priors are supported for scalar problems only")
    x = np.asarray(x, dtype=float)
    fun = _objective(x, problem)
    axes = _grid_axes(problem, spec.grid_size)

    def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
        w = np.full(len(grid), grid[1] - grid[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    if problem.dim == 1:
        grid = axes[0]
        ll = np.array([fun(np.array([g])) for g in grid])
        weights = trapezoid_weights(grid) * _prior_on_grid(spec, grid)
        ll = ll - ll.max()
        mass = np.exp(ll) * weights
        total = float(mass.sum())
        if not (math.isfinite(total) and total > 0.0):
            raise DegeneratePosterior("posterior weights vanished after stabilization")
        return np.array([float((grid * mass).sum() / total)])

    g1, g2 = axes
    ll = np.empty((len(g1), len(g2)))
    for i, v1 in enumerate(g1):
        for j, v2 in enumerate(g2):
            ll[i, j] = fun(np.array([v1, v2]))
    weights = np.outer(trapezoid_weights(g1), trapezoid_weights(g2))
    ll = ll - ll.max()
    mass = np.exp(ll) * weights
    total = float(mass.sum())
    if not (math.isfinite(total) and total > 0.0):
        raise DegeneratePosterior("posterior weights vanished after stabilization")
    mean1 = float((g1[:, None] * mass).sum() / total)
    mean2 = float((g2[None, :] * mass).sum() / total)
    return np.array([mean1, mean2])
