import numpy as np
import pytest
from scipy.stats import kstest

from kscale import (InvalidInputError, danco, make_rng, ml_dimension,
                    neighbor_angles, normalized_closest_distance,
                    sample_unit_ball, vm_fit)
from kscale.intrinsic import (_kl_distance, _kl_von_mises, distance_cdf,
                              distance_pdf, distance_ppf)


class TestNormalizedClosestDistance:
    def test_three_collinear_points(self):
        rho = normalized_closest_distance(np.array([[0.0], [1.0], [3.0]]), ell=1)
        # for x=0 the 2-neighborhood is {1, 3}: min dist 1, farthest 3
        assert rho[0] == pytest.approx(1.0 / 3.0)
        assert rho[1] == pytest.approx(1.0 / 2.0)
        assert rho[2] == pytest.approx(2.0 / 3.0)

    def test_bounds(self):
        X = make_rng(0).standard_normal((50, 3))
        rho = normalized_closest_distance(X, ell=5)
        assert np.all(rho > 0) and np.all(rho < 1)

    def test_line_segment_distribution(self):
        # rho of uniform points on a line follows the ell-neighborhood density
        # with d = 1; check by a KS test at alpha = 0.01
        rng = make_rng(1)
        X = rng.uniform(0, 1, (1500, 1))
        ell = 4
        rho = normalized_closest_distance(X, ell=ell)
        stat = kstest(rho, lambda r: distance_cdf(r, ell, 1.0))
        assert stat.pvalue > 0.01


class TestMlDimension:
    def test_matches_grid_scan(self):
        # identical small rho values drive the optimum to the lower boundary,
        # which must be returned with the boundary flag
        rho = np.full(20, 0.1)
        ell = 6
        with pytest.warns(UserWarning, match="boundary"):
            est = ml_dimension(rho, ell, d_max=50.0)
        grid = np.arange(1.0, 50.0, 1e-4)
        ll = (rho.size * np.log(ell * grid)
              + (grid - 1.0) * np.log(rho).sum()
              + (ell - 1.0) * np.array([np.log1p(-(rho**d)).sum() for d in grid]))
        assert est == pytest.approx(grid[np.argmax(ll)], abs=1e-4)

    def test_recovers_sampled_dimension(self):
        rng = make_rng(2)
        ell, d_true = 10, 3.0
        rho = distance_ppf(rng.random(2000), ell, d_true)
        assert ml_dimension(rho, ell) == pytest.approx(d_true, abs=0.3)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            ml_dimension([], 5)

    def test_out_of_range_rho_rejected(self):
        with pytest.raises(InvalidInputError):
            ml_dimension([0.5, 1.0], 5)


class TestNeighborAngles:
    def test_orthogonal_pair(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        angles = neighbor_angles(X, 0, ell=2)
        assert angles == pytest.approx([np.pi / 2])

    def test_parallel_pair(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        angles = neighbor_angles(X, 0, ell=2)
        assert angles == pytest.approx([0.0])

    def test_matches_arccos_oracle(self):
        rng = make_rng(3)
        X = rng.standard_normal((10, 3))
        ell = 4
        angles = neighbor_angles(X, 2, ell=ell)
        d = np.linalg.norm(X - X[2], axis=1)
        order = np.argsort(d, kind="stable")
        nbrs = [int(i) for i in order if i != 2][:ell]
        expect = []
        for a in range(ell):
            for b in range(a + 1, ell):
                u, v = X[nbrs[a]] - X[2], X[nbrs[b]] - X[2]
                expect.append(np.arccos(np.clip(
                    (u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)), -1, 1)))
        np.testing.assert_allclose(angles, expect, atol=1e-12)


class TestVmFit:
    def test_point_mass_caps_concentration(self):
        with pytest.warns(UserWarning):
            nu, tau = vm_fit(np.full(10, 0.7))
        assert nu == pytest.approx(0.7)
        assert tau == 1e6

    def test_uniform_angles_zero_concentration(self):
        rng = make_rng(4)
        theta = rng.uniform(-np.pi, np.pi, 40000)
        _, tau = vm_fit(theta)
        assert tau <= 0.1

    def test_recovers_von_mises_parameters(self):
        rng = make_rng(5)
        theta = rng.vonmises(1.0, 5.0, 5000)
        nu, tau = vm_fit(theta)
        assert nu == pytest.approx(1.0, abs=0.05)
        assert tau == pytest.approx(5.0, abs=0.5)


class TestSampleUnitBall:
    def test_containment(self):
        pts = sample_unit_ball(4, 500, make_rng(6))
        assert np.all(np.linalg.norm(pts, axis=1) <= 1.0)

    def test_symmetry_1d(self):
        pts = sample_unit_ball(1, 4000, make_rng(7))
        assert abs(pts.mean()) <= 3.0 / np.sqrt(4000)

    def test_area_ratio_2d(self):
        pts = sample_unit_ball(2, 100_000, make_rng(8))
        frac = (np.linalg.norm(pts, axis=1) <= 0.5).mean()
        assert frac == pytest.approx(0.25, abs=0.01)


class TestDanco:
    def test_ball_in_high_dim(self):
        rng = make_rng(9)
        B = sample_unit_ball(3, 1000, rng)
        Z = np.zeros((1000, 10))
        Z[:, :3] = B
        Q, _ = np.linalg.qr(rng.standard_normal((10, 10)))
        est = danco(Z @ Q.T, ell=10, seed=0)
        assert abs(est.d_hat - 3) <= 1

    def test_line_segment(self):
        rng = make_rng(10)
        Z = np.zeros((400, 5))
        Z[:, 0] = rng.uniform(0, 1, 400)
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        assert danco(Z @ Q.T, ell=10, seed=0).d_hat == 1

    def test_swiss_roll_surface(self):
        from kscale import gen_swiss_roll
        Y, _, _ = gen_swiss_roll(2000, make_rng(11))
        assert abs(danco(Y, ell=10, seed=0).d_hat - 2) <= 1

    def test_rotation_invariance_same_seed(self):
        rng = make_rng(12)
        X = sample_unit_ball(2, 300, rng)
        Z = np.zeros((300, 6))
        Z[:, :2] = X
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        assert danco(Z, ell=8, seed=3).d_hat == danco(Z @ Q.T, ell=8, seed=3).d_hat

    def test_translation_and_scale_invariance(self):
        rng = make_rng(13)
        X = rng.standard_normal((120, 4))
        rho = normalized_closest_distance(X, ell=6)
        rho_shifted = normalized_closest_distance(3.0 * X + 7.5, ell=6)
        np.testing.assert_allclose(rho, rho_shifted, atol=1e-9)
        assert (danco(X, ell=6, seed=1).d_hat
                == danco(3.0 * X + 7.5, ell=6, seed=1).d_hat)

    def test_kl_terms_nonnegative(self):
        est = danco(make_rng(14).standard_normal((150, 4)), ell=6, seed=2)
        assert all(kl >= -1e-9 for _, kl in est.kl_curve)

    def test_high_ambient_dim_needs_cap(self):
        X = make_rng(15).standard_normal((80, 60))
        with pytest.raises(InvalidInputError):
            danco(X, ell=5, seed=0)
        est = danco(X, ell=5, seed=0, d_max=5)
        assert 1 <= est.d_hat <= 5


class TestKlHelpers:
    def test_distance_kl_zero_on_equal(self):
        assert _kl_distance(8, 3.0, 3.0) == pytest.approx(0.0, abs=1e-10)

    def test_distance_kl_positive(self):
        assert _kl_distance(8, 2.0, 5.0) > 0.01

    def test_distance_pdf_normalized(self):
        from scipy.integrate import quad
        total, _ = quad(lambda r: distance_pdf(r, 6, 2.5), 0, 1)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_vm_kl_zero_on_equal(self):
        assert _kl_von_mises(0.3, 2.0, 0.3, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_vm_kl_positive(self):
        assert _kl_von_mises(0.3, 2.0, 1.1, 4.0) > 0.0
