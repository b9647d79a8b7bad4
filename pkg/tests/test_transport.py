"""Gaussian-to-cube transport map: calculus, inverse, and pushforward law."""

import math

import numpy as np
import pytest
from scipy import stats

from opwidth import seeds, transport
from opwidth.errors import ValidationError


class TestForward:
    def test_matches_normal_cdf(self):
        t = transport.TransportMap(1)
        x = np.linspace(-5, 5, 101)
        assert np.allclose(t.forward(x), stats.norm.cdf(x), atol=1e-14)

    def test_midpoint(self):
        t = transport.TransportMap(1)
        assert t.forward(np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-15)

    def test_coordinatewise_in_higher_dim(self):
        t = transport.TransportMap(3)
        x = np.array([[0.0, 1.0, -1.0]])
        out = t.forward(x)
        assert out.shape == (1, 3)
        assert np.allclose(out[0], stats.norm.cdf([0.0, 1.0, -1.0]))

    def test_monotone(self):
        t = transport.TransportMap(1)
        x = np.sort(np.random.default_rng(0).standard_normal(100))
        u = t.forward(x)
        assert np.all(np.diff(u) > 0)


class TestDerivatives:
    def test_first_derivative_is_density(self):
        t = transport.TransportMap(1)
        x = np.linspace(-3, 3, 41)
        assert np.allclose(t.forward_deriv(x, 1), transport.gauss_pdf(x), atol=1e-15)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_against_finite_differences(self, order):
        t = transport.TransportMap(1)
        x = np.linspace(-2.0, 2.0, 17)
        h = 1e-5
        lower = t.forward_deriv(x - h, order - 1) if order > 1 else t.forward(x - h)
        upper = t.forward_deriv(x + h, order - 1) if order > 1 else t.forward(x + h)
        fd = (upper - lower) / (2 * h)
        assert np.allclose(t.forward_deriv(x, order), fd, atol=1e-8)

    def test_unsupported_order_rejected(self):
        t = transport.TransportMap(1)
        with pytest.raises(ValidationError):
            t.forward_deriv(np.zeros(3), 5)


class TestInverse:
    def test_roundtrip_both_ways(self):
        t = transport.TransportMap(1)
        x = np.linspace(-4.0, 4.0, 33)
        assert np.allclose(t.inverse(t.forward(x)), x, atol=1e-10)
        u = np.linspace(0.01, 0.99, 33)
        assert np.allclose(t.forward(t.inverse(u)), u, atol=1e-12)

    def test_matches_scipy_ppf(self):
        t = transport.TransportMap(1)
        u = np.array([0.001, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999])
        assert np.allclose(t.inverse(u), stats.norm.ppf(u), atol=1e-9)

    def test_rejects_out_of_range(self):
        t = transport.TransportMap(1)
        with pytest.raises(ValidationError):
            t.inverse(np.array([1.5]))
        with pytest.raises(ValidationError):
            t.inverse(np.array([0.0]))


class TestPushforward:
    def test_transported_draws_look_uniform(self):
        t = transport.TransportMap(1)
        ks = transport.pushforward_ks(t, seeds.stream(0, "ks"), 10_000)
        assert ks <= 0.02

    def test_ks_statistic_of_perfect_grid(self):
        # equally spaced quantiles have the minimal possible KS discrepancy
        n = 1000
        u = (np.arange(n) + 0.5) / n
        assert transport.ks_statistic(u) <= 0.5 / n + 1e-12

    def test_ks_statistic_detects_non_uniform(self):
        rng = np.random.default_rng(1)
        assert transport.ks_statistic(rng.beta(4.0, 1.0, 5000)) > 0.2

    def test_ks_agrees_with_scipy(self):
        rng = np.random.default_rng(2)
        u = rng.uniform(size=500)
        ours = transport.ks_statistic(u)
        ref = stats.kstest(u, "uniform").statistic
        assert ours == pytest.approx(ref, abs=1e-12)

    def test_norm_identity_via_change_of_variables(self):
        # int |f(xi(x))|^2 rho(x) dx == int_0^1 |f(u)|^2 du for a smooth f,
        # quadratures computed on the two different domains independently
        t = transport.TransportMap(1)
        f = lambda u: np.sin(2 * np.pi * u) + 0.5

        x = np.linspace(-8.0, 8.0, 200_001)
        lhs = np.trapezoid(f(t.forward(x)) ** 2 * transport.gauss_pdf(x), x)

        u = np.linspace(0.0, 1.0, 200_001)
        rhs = np.trapezoid(f(u) ** 2, u)
        assert lhs == pytest.approx(rhs, abs=1e-10)
