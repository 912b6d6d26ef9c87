import math

import numpy as np
import pytest
from scipy import integrate, stats

from bayesfuse.blocks import DiagonalBlocks, OffDiagonalBlocks, assemble, split
from bayesfuse.errors import InvalidDof, OutOfSupport
from bayesfuse.linalg import is_positive_definite
from bayesfuse.rng import RandomStream
from bayesfuse.sampling import (
    InvTParams,
    WishartParams,
    conditional_logpdf,
    in_inverted_t_support,
    inverted_t_logpdf,
    sample_gaussian_matrix,
    sample_inverted_t,
    sample_joint_chain,
    sample_offdiag_chain,
    sample_offdiag_two,
    sample_wishart,
    wishart_logpdf,
)
from conftest import random_spd


def wishart_ratio(full, pd, n, sigma2=1.0):
    k, m = pd.k, pd.m
    total = wishart_logpdf(full, WishartParams(n, sigma2 * np.eye(k * m)))
    return total - sum(wishart_logpdf(pd[j], WishartParams(n, sigma2 * np.eye(m))) for j in range(k))


class TestRandomStream:
    def test_deterministic(self):
        a = RandomStream(7, (1, 2)).normal(5)
        b = RandomStream(7, (1, 2)).normal(5)
        np.testing.assert_array_equal(a, b)

    def test_children_differ(self):
        root = RandomStream(7)
        assert not np.array_equal(root.child(0).normal(3), root.child(1).normal(3))
        np.testing.assert_array_equal(root.child(3).normal(3), RandomStream(7, 3).normal(3))

    def test_seed_range(self):
        with pytest.raises(ValueError):
            RandomStream(-1)
        RandomStream(2**64 - 1)


class TestGaussianMatrix:
    def test_single(self):
        assert sample_gaussian_matrix(1, 1, RandomStream(0)).shape == (1, 1)

    def test_moments(self):
        draws = sample_gaussian_matrix(3, 2, RandomStream(1), size=100_000)
        assert np.all(np.abs(draws.mean(axis=0)) < 4 / math.sqrt(1e5))
        draws = sample_gaussian_matrix(2, 2, RandomStream(2), size=100_000)
        assert np.all(np.abs(draws.var(axis=0) - 1) < 0.05)


class TestWishart:
    def test_chi_square_mean(self):
        a = sample_wishart(WishartParams(5, np.eye(1)), RandomStream(3), size=100_000)
        assert abs(a.mean() / 5 - 1) < 0.02

    def test_matrix_mean(self):
        a = sample_wishart(WishartParams(6, np.eye(2)), RandomStream(4), size=50_000)
        mean = a.mean(axis=0)
        # off-diagonal target is 0; use the diagonal scale for the 2% budget
        assert np.all(np.abs(mean - 6 * np.eye(2)) < 0.02 * 6)

    def test_non_identity_scale_mean(self, nprng):
        sigma = random_spd(nprng, 3)
        a = sample_wishart(WishartParams(7, sigma), RandomStream(5), size=50_000)
        assert np.max(np.abs(a.mean(axis=0) - 7 * sigma)) < 0.03 * 7 * np.max(np.abs(sigma))

    def test_draws_pd(self):
        for a in sample_wishart(WishartParams(2, np.eye(2)), RandomStream(6), size=200):
            assert is_positive_definite(a)

    def test_invalid_dof(self):
        with pytest.raises(InvalidDof):
            sample_wishart(WishartParams(2.5, np.eye(2)), RandomStream(0))
        with pytest.raises(InvalidDof):
            sample_wishart(WishartParams(1.5, np.eye(2)), RandomStream(0))
        with pytest.raises(InvalidDof):
            WishartParams(0.5, np.eye(2))

    def test_scalar_density_matches_chi_square(self):
        # A / 2 ~ chi2_3, so p_A(a) = chi2.pdf(a / 2, 3) / 2
        got = wishart_logpdf(np.array([[2.0]]), WishartParams(3, np.array([[2.0]])))
        assert got == pytest.approx(stats.chi2.logpdf(1.0, 3) - math.log(2), abs=1e-12)

    def test_scalar_density_normalizes(self):
        p = WishartParams(5, np.array([[1.3]]))
        total, _ = integrate.quad(lambda a: math.exp(wishart_logpdf(np.array([[a]]), p)), 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_matrix_density_against_scipy(self, nprng):
        sigma = random_spd(nprng, 2)
        a = random_spd(nprng, 2)
        got = wishart_logpdf(a, WishartParams(5, sigma))
        assert got == pytest.approx(stats.wishart(df=5, scale=sigma).logpdf(a), abs=1e-10)

    @pytest.mark.parametrize("c", [0.3, 2.0, 11.0])
    def test_scaling_jacobian(self, nprng, c):
        sigma, a = random_spd(nprng, 3), random_spd(nprng, 3)
        lhs = wishart_logpdf(c * a, WishartParams(6, c * sigma))
        rhs = wishart_logpdf(a, WishartParams(6, sigma)) - 3 * 4 / 2 * math.log(c)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def scalar_invt_density(t, n):
    return math.gamma((n + 1) / 2) / (math.sqrt(math.pi) * math.gamma(n / 2)) * (1 - t * t) ** ((n - 2) / 2)


class TestInvertedT:
    def params(self, n=4, l=2, m=3, nprng=None):
        nprng = nprng or np.random.default_rng(0)
        return InvTParams(n, nprng.standard_normal((l, m)), random_spd(nprng, l), random_spd(nprng, m))

    def test_support(self):
        p = self.params()
        draws = sample_inverted_t(p, RandomStream(8), size=2000)
        assert all(in_inverted_t_support(t, p) for t in draws)

    def test_location_equivariance(self):
        p = self.params()
        p0 = InvTParams(p.n, np.zeros_like(p.loc), p.row_scale, p.col_scale)
        shifted = sample_inverted_t(p, RandomStream(9), size=10)
        centred = sample_inverted_t(p0, RandomStream(9), size=10)
        np.testing.assert_allclose(shifted, centred + p.loc, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("n", [3, 4, 7])
    def test_scalar_density_normalizes(self, n):
        p = InvTParams(n, 0, np.eye(1), np.eye(1))
        total, _ = integrate.quad(lambda t: math.exp(inverted_t_logpdf(np.array([[t]]), p)), -1, 1)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_scalar_logpdf_closed_form(self):
        p = InvTParams(5, 0, np.eye(1), np.eye(1))
        assert inverted_t_logpdf(np.array([[0.3]]), p) == pytest.approx(
            math.log(scalar_invt_density(0.3, 5)), abs=1e-12
        )

    @pytest.mark.parametrize("n", [2, 3, 6])
    def test_scalar_ks(self, n):
        p = InvTParams(n, 0, np.eye(1), np.eye(1))
        draws = sample_inverted_t(p, RandomStream(10 + n), size=10_000)[:, 0, 0]

        def cdf(x):
            x = np.atleast_1d(x)
            return np.array([integrate.quad(scalar_invt_density, -1, v, args=(n,))[0] for v in np.clip(x, -1, 1)])

        assert stats.kstest(draws, cdf).pvalue > 0.01

    def test_zero_deviation(self):
        p = self.params()
        from bayesfuse.linalg import ln_multigamma, logdet

        n, l, m = p.n, p.l, p.m
        expected = (
            ln_multigamma(l, (n + m + l - 1) / 2) - ln_multigamma(l, (n + l - 1) / 2)
            - m * l / 2 * math.log(math.pi) - m / 2 * logdet(p.row_scale) - l / 2 * logdet(p.col_scale)
        )
        assert inverted_t_logpdf(p.loc, p) == pytest.approx(expected, abs=1e-12)

    def test_symmetry(self):
        p = self.params()
        d = sample_inverted_t(InvTParams(p.n, 0, p.row_scale, p.col_scale), RandomStream(11))
        assert inverted_t_logpdf(p.loc + d, p) == pytest.approx(inverted_t_logpdf(p.loc - d, p), abs=1e-12)

    def test_out_of_support(self):
        p = InvTParams(4, 0, np.eye(1), np.eye(1))
        with pytest.raises(OutOfSupport):
            inverted_t_logpdf(np.array([[1.5]]), p)


class TestTwoNode:
    def test_scalar_support(self):
        draws = sample_offdiag_two([[1.0]], [[1.0]], 4, RandomStream(12), size=5000)
        assert np.all(np.abs(draws) < 1)

    def test_assembled_pd(self, nprng):
        a11, a22 = random_spd(nprng, 2), random_spd(nprng, 2)
        for a12 in sample_offdiag_two(a11, a22, 6, RandomStream(13), size=10_000):
            assert is_positive_definite(np.block([[a11, a12], [a12.T, a22]]))

    def test_density_ratio_oracle(self, nprng):
        for trial in range(20):
            l1, l2 = int(nprng.integers(1, 4)), int(nprng.integers(1, 4))
            n = l1 + l2 + int(nprng.integers(0, 4))
            a11, a22 = random_spd(nprng, l1), random_spd(nprng, l2)
            a12 = sample_offdiag_two(a11, a22, n, RandomStream(100, trial))
            full = np.block([[a11, a12], [a12.T, a22]])
            lhs = inverted_t_logpdf(a12.T, InvTParams(n - l1 - l2 + 1, 0, a22, a11))
            rhs = (
                wishart_logpdf(full, WishartParams(n, np.eye(l1 + l2)))
                - wishart_logpdf(a11, WishartParams(n, np.eye(l1)))
                - wishart_logpdf(a22, WishartParams(n, np.eye(l2)))
            )
            assert abs(lhs - rhs) <= 1e-8

    def test_invalid_dof(self):
        with pytest.raises(InvalidDof):
            sample_offdiag_two(np.eye(2), np.eye(2), 3, RandomStream(0))


class TestChain:
    def test_k2_matches_two_node(self, nprng):
        a11, a22 = random_spd(nprng, 2), random_spd(nprng, 2)
        po = sample_offdiag_chain(DiagonalBlocks(np.stack([a11, a22])), 6, RandomStream(14))
        two = sample_offdiag_two(a11, a22, 6, RandomStream(14))
        np.testing.assert_array_equal(po[(0, 1)], two)

    def test_all_pd(self, nprng):
        pd = DiagonalBlocks(np.stack([random_spd(nprng, 2) for _ in range(3)]))
        full, rejected = sample_joint_chain(pd, 9, RandomStream(15), size=10_000)
        assert rejected == 0
        w = np.linalg.eigvalsh(full)
        assert np.all(w[:, 0] > 0)
        for j in range(3):
            np.testing.assert_array_equal(full[:, 2 * j:2 * j + 2, 2 * j:2 * j + 2], np.broadcast_to(pd[j], (10_000, 2, 2)))

    def test_batched_equals_sequential_shape(self, nprng):
        pd = DiagonalBlocks(np.stack([random_spd(nprng, 1) for _ in range(4)]))
        full, _ = sample_joint_chain(pd, 5, RandomStream(16), size=3)
        assert full.shape == (3, 4, 4)

    def test_requires_enough_dof(self):
        pd = DiagonalBlocks(np.stack([np.eye(2)] * 3))
        with pytest.raises(InvalidDof):
            sample_joint_chain(pd, 5, RandomStream(0))
        with pytest.raises(InvalidDof):
            sample_joint_chain(pd, 6.5, RandomStream(0))

    @pytest.mark.parametrize("k", [2, 3, 4])
    @pytest.mark.parametrize("m", [1, 2])
    def test_factorization_oracle(self, k, m):
        n = 3 * k
        stream = RandomStream(17, (k, m))
        for i in range(100):
            a = sample_wishart(WishartParams(n, np.eye(k * m)), stream)
            pd, _ = split(a, m)
            po = sample_offdiag_chain(pd, n, stream)
            lhs = conditional_logpdf(po, pd, n)
            for sigma2 in (0.5, 1.0, 4.0):
                assert abs(lhs - wishart_ratio(assemble(pd, po), pd, n, sigma2)) <= 1e-8

    def test_zero_offdiag(self):
        k, m, n = 3, 2, 9
        pd = DiagonalBlocks(np.stack([np.eye(m)] * k))
        po = OffDiagonalBlocks.zeros(k, m)
        lhs = conditional_logpdf(po, pd, n)
        from bayesfuse.sampling import chain_factors

        expected = sum(inverted_t_logpdf(p.loc, p) for _, p in chain_factors(pd, po, n))
        assert lhs == pytest.approx(expected, abs=1e-12)
        assert lhs == pytest.approx(wishart_ratio(np.eye(k * m), pd, n), abs=1e-10)

    def test_conditional_out_of_support(self):
        pd = DiagonalBlocks(np.stack([np.eye(1)] * 2))
        po = OffDiagonalBlocks(2, 1, {(0, 1): np.array([[1.2]])})
        with pytest.raises(OutOfSupport):
            conditional_logpdf(po, pd, 4)

    def test_resampling_preserves_wishart(self):
        # Redrawing cross blocks of a Wishart draw from their conditional law must
        # leave the Wishart law intact; compare second moments with the exact ones.
        k, m, n, N = 3, 2, 9, 20_000
        stream = RandomStream(18)
        a = sample_wishart(WishartParams(n, np.eye(k * m)), stream, size=N)
        out = np.stack([sample_joint_chain(split(x, m)[0], n, stream)[0] for x in a])
        var = out.var(axis=0)
        exact = n * (np.ones((k * m, k * m)) + np.eye(k * m))  # Var A_ij = n(1 + delta_ij)
        assert np.max(np.abs(var / exact - 1)) < 0.06
        assert np.max(np.abs(out.mean(axis=0) - n * np.eye(k * m))) < 0.1

    def test_deterministic(self, nprng):
        pd = DiagonalBlocks(np.stack([random_spd(nprng, 2) for _ in range(3)]))
        a, _ = sample_joint_chain(pd, 9, RandomStream(19), size=5)
        b, _ = sample_joint_chain(pd, 9, RandomStream(19), size=5)
        np.testing.assert_array_equal(a, b)
