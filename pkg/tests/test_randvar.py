"""Distributions, Gaussian tails, bivariate orthants, stable sampling, streams."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import ks_2samp, kstest

from dynawalk import (
    IncrementDistribution,
    NumericDomainError,
    RngStream,
    ValidationError,
    bivariate_upper,
    parse_distribution,
    phi_bar,
    sample_increment,
    sample_symmetric_stable,
)

from helpers import ks_two_sample, ks_two_sample_critical


class TestPhiBar:
    def test_symmetry_at_zero(self):
        assert phi_bar(0.0) == 0.5

    def test_quadrature_oracle(self):
        # independent oracle: adaptive quadrature of the density
        oracle, _ = integrate.quad(
            lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi), 1.0, np.inf,
            epsabs=1e-15, epsrel=1e-13,
        )
        assert abs(phi_bar(1.0) - oracle) <= 1e-14
        assert phi_bar(1.0) == pytest.approx(0.15865525393145707, abs=1e-16)

    def test_symmetry_identity(self):
        for z in np.arange(0.1, 5.0, 0.1):
            assert phi_bar(-z) + phi_bar(z) == pytest.approx(1.0, abs=1e-14)

    def test_mills_bounds(self):
        for z in np.arange(0.05, 8.0, 0.25):
            p = phi_bar(z)
            assert p <= math.exp(-z * z / 2)
            assert p >= (z / (1 + z * z)) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)

    def test_strictly_decreasing(self):
        zs = np.linspace(-6, 6, 101)
        ps = phi_bar(zs)
        assert np.all(np.diff(ps) < 0)

    def test_nan_rejected(self):
        with pytest.raises(NumericDomainError):
            phi_bar(float("nan"))


class TestBivariateUpper:
    def test_orthant_formula(self):
        # P{Z1>=0, Z2>=0} = 1/4 + arcsin(rho)/(2 pi)
        assert bivariate_upper(0, 0, 0.5) == pytest.approx(1 / 3, abs=1e-12)
        assert bivariate_upper(0, 0, -0.5) == pytest.approx(1 / 4 - 1 / 12, abs=1e-12)

    def test_perfect_correlation(self):
        for z in (0.0, 0.5, 1.7):
            assert bivariate_upper(z, z, 1.0) == pytest.approx(phi_bar(z), abs=1e-14)

    def test_independence(self):
        assert bivariate_upper(1.0, 2.0, 0.0) == pytest.approx(
            phi_bar(1.0) * phi_bar(2.0), abs=1e-12
        )

    def test_antithetic(self):
        # rho = -1: event z1 <= Z <= -z2
        assert bivariate_upper(-1.0, -1.0, -1.0) == pytest.approx(
            1.0 - 2 * phi_bar(1.0), abs=1e-12
        )
        assert bivariate_upper(1.0, 1.0, -1.0) == 0.0

    def test_monotone_in_rho(self):
        for z in (0.0, 0.5, 1.0, 2.0):
            vals = [bivariate_upper(z, z, r) for r in np.linspace(-0.99, 0.99, 21)]
            assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_monte_carlo_agreement(self):
        gen = RngStream(2024).generator()
        rho = math.exp(-0.7)
        n = 2_000_000
        z1 = gen.standard_normal(n)
        z2 = rho * z1 + math.sqrt(1 - rho * rho) * gen.standard_normal(n)
        mc = np.mean((z1 >= 1.0) & (z2 >= 1.0))
        se = math.sqrt(mc * (1 - mc) / n)
        assert abs(bivariate_upper(1.0, 1.0, rho) - mc) <= 3 * se

    def test_validation(self):
        with pytest.raises(ValidationError):
            bivariate_upper(0, 0, 1.5)


class TestIncrementDistribution:
    def test_rademacher_support(self):
        draws = sample_increment(IncrementDistribution.rademacher(), RngStream(5), 10000)
        assert set(np.unique(draws)) == {-1.0, 1.0}

    def test_lattice_mean_clt(self):
        lazy = IncrementDistribution.lattice({-1: 0.25, 0: 0.5, 1: 0.25})
        draws = sample_increment(lazy, RngStream(6), 1_000_000)
        assert abs(draws.mean()) <= 4e-3  # 3 sigma / sqrt(N) with sigma = 1/sqrt(2)

    def test_normal_tail_frequency(self):
        dist = IncrementDistribution.standard_normal()
        n = 1_000_000
        draws = sample_increment(dist, RngStream(7), n)
        p = phi_bar(1.0)
        assert abs(np.mean(draws >= 1.0) - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_lattice_validation(self):
        with pytest.raises(ValidationError):
            IncrementDistribution.lattice({-1: 0.6, 1: 0.6})
        with pytest.raises(ValidationError):
            IncrementDistribution.lattice({-1: -0.5, 1: 1.5})
        with pytest.raises(ValidationError):
            IncrementDistribution.lattice({})

    def test_normalized_tags(self):
        assert IncrementDistribution.rademacher().is_normalized
        lazy = IncrementDistribution.lattice({-1: 0.25, 0: 0.5, 1: 0.25})
        assert not lazy.is_normalized  # variance 1/2
        assert lazy.is_lattice

    def test_group_gcd(self):
        d = IncrementDistribution.lattice({-2: 0.5, 2: 0.5})
        assert d.group_gcd() == 2
        assert IncrementDistribution.rademacher().group_gcd() == 1

    def test_grammar(self):
        assert parse_distribution("normal").kind == "standard_normal"
        assert parse_distribution("rademacher").kind == "rademacher"
        d = parse_distribution("pmf:-1:0.25;0:0.5;1:0.25")
        assert d.support == (-1, 0, 1)
        with pytest.raises(ValidationError):
            parse_distribution("pmf:a:b")
        with pytest.raises(ValidationError):
            parse_distribution("cauchy")


class TestSymmetricStable:
    def test_median_symmetric(self):
        x = sample_symmetric_stable(0.5, RngStream(8), 100_000)
        # binomial CI for the sign frequency
        assert abs(np.mean(x > 0) - 0.5) <= 3 * 0.5 / math.sqrt(100_000)

    def test_self_similarity(self):
        # (X_1 + ... + X_16)/16^(1/alpha) has the law of X_1
        alpha = 0.5
        gen = RngStream(9).generator()
        x = sample_symmetric_stable(alpha, gen, 100_000)
        y = sample_symmetric_stable(alpha, gen, (100_000, 16)).sum(axis=1) / 16.0 ** (1 / alpha)
        stat = ks_two_sample(x, y)
        assert stat < ks_two_sample_critical(0.01, x.size, y.size)

    def test_tail_index(self):
        x = np.abs(sample_symmetric_stable(0.5, RngStream(10), 1_000_000))
        grid = np.array([10.0, 30.0, 100.0, 300.0, 1000.0])
        tail = np.array([(x > g).mean() for g in grid])
        slope = np.polyfit(np.log(grid), np.log(tail), 1)[0]
        assert abs(slope + 0.5) <= 0.1

    def test_alpha_validation(self):
        for bad in (0.0, 1.0, 1.5, -0.2):
            with pytest.raises(ValidationError):
                sample_symmetric_stable(bad, RngStream(1), 10)


class TestStreams:
    def test_bit_exact_replay(self):
        a = RngStream(123, 5).generator().random(1000)
        b = RngStream(123, 5).generator().random(1000)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 0).generator().random(100)
        b = RngStream(123, 1).generator().random(100)
        assert not np.array_equal(a, b)

    def test_stream_marginals_uniform(self):
        # consecutive stream indices stay statistically independent
        draws = np.concatenate([RngStream(77, i).generator().random(100) for i in range(100)])
        assert kstest(draws, "uniform").pvalue > 1e-4

    def test_seed_range(self):
        with pytest.raises(ValueError):
            RngStream(-1)
