"""Filter recursions against hand-rolled oracles and finite differences."""

import csv
import math

import numpy as np
import pytest

from hidden_ar import (
    SeriesTooShort,
    UnsupportedCoordinate,
    filter_derivative,
    filter_stationary,
    filter_transient,
    simulate,
    stationary,
)
from hidden_ar.kalman import filter_to_csv

from conftest import REF, random_params


def reference_transient(params, x, m0=0.0, gamma0=0.0):
    """Direct port of the textbook recursion, written independently of the
    library loop (explicit prediction variance each step)."""
    a, f, s2 = params.a, params.f, params.sigma2
    b2 = params.b * params.b
    m = [m0]
    gamma = [gamma0]
    zeta = []
    for t in range(1, len(x)):
        g_prev = gamma[-1]
        p = s2 + f * f * g_prev
        zeta.append((x[t] - f * m[-1]) / math.sqrt(p))
        m.append(a * (s2 * m[-1] + f * g_prev * x[t]) / p)
        gamma.append(a * a * s2 * g_prev / p + b2)
    return np.array(m), np.array(gamma), np.array(zeta)


def reference_stationary(params, x, m0=0.0):
    sq = stationary(params)
    e = params.a * params.f * sq.gamma_star / sq.p
    m = [m0]
    for t in range(1, len(x)):
        m.append(sq.a_coef * m[-1] + e * x[t])
    return np.array(m)


class TestTransient:
    def test_against_reference(self):
        rng = np.random.default_rng(201)
        for _ in range(20):
            params = random_params(rng)
            x = simulate(params, 300, seed=int(rng.integers(1 << 30))).x
            trace = filter_transient(params, x, m0=0.3, gamma0=2.0)
            m, gamma, zeta = reference_transient(params, x, m0=0.3, gamma0=2.0)
            np.testing.assert_allclose(trace.m, m, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(trace.gamma, gamma, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(trace.innovations, zeta, rtol=1e-12, atol=1e-12)

    def test_gamma_converges_to_stationary(self):
        x = simulate(REF, 500, seed=4).x
        trace = filter_transient(REF, x)
        assert abs(trace.gamma[-1] - stationary(REF).gamma_star) < 1e-10

    def test_rejects_negative_gamma0(self):
        x = simulate(REF, 10, seed=4).x
        with pytest.raises(ValueError):
            filter_transient(REF, x, gamma0=-0.5)

    def test_rejects_short_series(self):
        with pytest.raises(SeriesTooShort):
            filter_transient(REF, np.array([1.0]))
        with pytest.raises(SeriesTooShort):
            filter_stationary(REF, np.zeros((3, 2)))


class TestStationaryFilter:
    def test_against_reference(self):
        rng = np.random.default_rng(202)
        for _ in range(20):
            params = random_params(rng)
            x = simulate(params, 300, seed=int(rng.integers(1 << 30))).x
            trace = filter_stationary(params, x, m0=0.1)
            m = reference_stationary(params, x, m0=0.1)
            np.testing.assert_allclose(trace.m, m, rtol=1e-12, atol=1e-12)
            sq = stationary(params)
            zeta = (x[1:] - params.f * m[:-1]) / math.sqrt(sq.p)
            np.testing.assert_allclose(trace.innovations, zeta, rtol=1e-12, atol=1e-12)
            assert trace.gamma == sq.gamma_star

    def test_innovations_white_at_truth(self):
        trace = filter_stationary(REF, simulate(REF, 100000, seed=21).x)
        z = trace.innovations
        assert abs(z.mean()) < 0.02
        assert abs(z.var() - 1.0) < 0.02
        for lag in range(1, 6):
            ac = float(np.mean(z[lag:] * z[:-lag]))
            assert abs(ac) < 0.02, (lag, ac)

    def test_transient_merges_into_stationary(self):
        # From gamma0 = gamma_star the transient filter is the stationary one.
        x = simulate(REF, 200, seed=22).x
        g = stationary(REF).gamma_star
        trans = filter_transient(REF, x, gamma0=g)
        stat = filter_stationary(REF, x)
        np.testing.assert_allclose(trans.m, stat.m, rtol=1e-10, atol=1e-12)


class TestDerivativeFilter:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(203)
        for _ in range(15):
            params = random_params(rng)
            x = simulate(params, 400, seed=int(rng.integers(1 << 30))).x
            for wrt in ("f", "b", "a"):
                trace = filter_derivative(params, x, wrt)
                v = getattr(params, wrt)
                h = 1e-5 * max(1.0, abs(v))
                up = filter_stationary(params.replace(**{wrt: v + h}), x).m
                dn = filter_stationary(params.replace(**{wrt: v - h}), x).m
                fd = (up - dn) / (2.0 * h)
                dm = trace.dm[wrt]
                scale = max(1.0, float(np.abs(dm).max()))
                assert float(np.abs(dm - fd).max()) <= 1e-4 * scale

    def test_m_track_is_stationary_track(self):
        x = simulate(REF, 100, seed=23).x
        der = filter_derivative(REF, x, "b")
        stat = filter_stationary(REF, x)
        np.testing.assert_array_equal(der.m, stat.m)
        np.testing.assert_array_equal(der.innovations, stat.innovations)

    def test_sigma2_rejected(self):
        x = simulate(REF, 50, seed=24).x
        with pytest.raises(UnsupportedCoordinate):
            filter_derivative(REF, x, "sigma2")


class TestFilterCsv:
    def test_roundtrip(self, tmp_path):
        x = simulate(REF, 30, seed=25).x
        trace = filter_derivative(REF, x, "b")
        path = tmp_path / "filter.csv"
        filter_to_csv(trace, x, str(path))
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 31
        got_m = np.array([float(r["m"]) for r in rows])
        np.testing.assert_allclose(got_m, trace.m, rtol=0, atol=1e-12)
        got_dm = np.array([float(r["dm_b"]) for r in rows])
        np.testing.assert_allclose(got_dm, trace.dm["b"], rtol=0, atol=1e-12)
