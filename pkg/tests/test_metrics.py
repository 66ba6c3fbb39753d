import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from gnpr import metrics
from gnpr.metrics import (DistanceMatrix, GaussianParams, dep_distance_sq,
                          dist_distance_sq, distance_matrix, gnpr_distance,
                          gnpr_embedding, gpr_distance_matrix, gpr_gaussian_distance,
                          l2_distance_empirical, l2_distance_matrix,
                          l2_gaussian_closed_form, pearson_distance,
                          pearson_distance_matrix, pearson_to_spearman_gaussian,
                          read_distance_csv, write_distance_csv)
from gnpr.panel import Panel
from gnpr.representation import Grid, build_representation, histogram_density
from gnpr.synth import generate, preset


def panel_of(rows):
    return Panel(np.asarray(rows, dtype=np.float64))


def random_panel(n, t, seed):
    return Panel(np.random.default_rng(seed).standard_normal((n, t)))


def gaussian_pair(mu_x, sigma_x, mu_y, sigma_y, rho, t, seed):
    """Correlated bivariate Gaussian sample as a 2-row panel."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, t))
    x = mu_x + sigma_x * z[0]
    y = mu_y + sigma_y * (rho * z[0] + math.sqrt(1.0 - rho * rho) * z[1])
    return Panel(np.vstack([x, y]))


class TestDepDistance:
    def test_identical_is_zero(self):
        assert dep_distance_sq([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_hand_summation(self):
        # sum of squared rank differences is 2, denominator 3*8
        assert dep_distance_sq([1.0, 2.0, 3.0], [2.0, 1.0, 3.0]) == 0.25

    @pytest.mark.parametrize("t", range(2, 51))
    def test_reversed_ranks_give_one(self, t):
        r = np.arange(1.0, t + 1)
        # brute-force check of the closed-form sum T(T^2-1)/3
        assert sum((2 * k - (t + 1)) ** 2 for k in range(1, t + 1)) == t * (t * t - 1) // 3
        assert dep_distance_sq(r, r[::-1]) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError, match="length"):
            dep_distance_sq([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="at least 2"):
            dep_distance_sq([1.0], [1.0])

    @given(st.integers(0, 10_000), st.integers(3, 200))
    def test_spearman_identity_exact_on_tie_free_data(self, seed, t):
        rng = np.random.default_rng(seed)
        rx = rng.permutation(t) + 1
        ry = rng.permutation(t) + 1
        got = dep_distance_sq(rx.astype(float), ry.astype(float))
        # independent oracle: textbook Spearman from integer rank
        # differences, in exact rational arithmetic
        d2 = int(sum((int(a) - int(b)) ** 2 for a, b in zip(rx, ry)))
        rho_s = 1 - Fraction(6 * d2, t * (t * t - 1))
        assert got == float((1 - rho_s) / 2)


class TestDistDistance:
    def test_identical_is_zero(self):
        g = Grid(0.0, 1.0, 2)
        d = histogram_density(np.array([0.5, 1.5]), g)
        assert dist_distance_sq(d, d) == 0.0

    def test_disjoint_supports_give_one(self):
        g = Grid(0.0, 1.0, 2)
        p = histogram_density(np.array([0.5, 0.5]), g)
        q = histogram_density(np.array([1.5, 1.5]), g)
        assert dist_distance_sq(p, q) == 1.0

    def test_hand_value(self):
        g = Grid(0.0, 1.0, 2)
        p = histogram_density(np.array([0.5, 0.5]), g)
        q = histogram_density(np.array([0.5, 1.5]), g)
        assert dist_distance_sq(p, q) == pytest.approx(1.0 - math.sqrt(0.5), abs=1e-15)

    def test_grid_mismatch(self):
        p = histogram_density(np.array([0.5]), Grid(0.0, 1.0, 2))
        q = histogram_density(np.array([0.5]), Grid(0.0, 0.5, 4))
        with pytest.raises(ValueError, match="grid"):
            dist_distance_sq(p, q)


class TestGnprDistance:
    def test_endpoints_match_components(self):
        rep = build_representation(random_panel(4, 60, 0), 20)
        for i, j in [(0, 1), (2, 3), (0, 3)]:
            d1 = dep_distance_sq(rep.ranks.raw[i], rep.ranks.raw[j])
            d0 = dist_distance_sq(rep.densities[i], rep.densities[j])
            assert gnpr_distance(rep, i, j, 1.0) == math.sqrt(d1)
            assert gnpr_distance(rep, i, j, 0.0) == math.sqrt(d0)

    def test_composed_hand_value(self):
        # theta=0.5 with d1^2=0.25 and d0^2=1-sqrt(0.5)
        v = math.sqrt(0.5 * 0.25 + 0.5 * (1.0 - math.sqrt(0.5)))
        assert v == pytest.approx(0.521, abs=5e-4)

    def test_self_distance_zero_and_range_errors(self):
        rep = build_representation(random_panel(3, 30, 1), 10)
        assert gnpr_distance(rep, 1, 1, 0.5) == 0.0
        with pytest.raises(IndexError):
            gnpr_distance(rep, 0, 3, 0.5)
        with pytest.raises(ValueError):
            gnpr_distance(rep, 0, 1, 1.5)

    def test_separation_failure_dep_scaling(self):
        # V and 2V have equal ranks: the dependence part cannot see them
        v = np.random.default_rng(5).standard_normal(80)
        rep = build_representation(Panel(np.vstack([v, 2 * v])), 16)
        assert gnpr_distance(rep, 0, 1, 1.0) == 0.0
        assert gnpr_distance(rep, 0, 1, 0.0) > 0.0

    def test_separation_failure_dist_reflection(self):
        # multiset-symmetric sample: u and 1-u have identical histograms
        # but reversed ranks; dyadic values below 1/2 keep everything
        # exact and tie-free after reflection
        rng = np.random.default_rng(6)
        m = rng.choice(31, 15, replace=False)
        a = (2 * m + 1) / 128.0
        u = np.concatenate([a, 1.0 - a])
        rep = build_representation(Panel(np.vstack([u, 1.0 - u])), 32)
        assert gnpr_distance(rep, 0, 1, 0.0) == 0.0
        assert gnpr_distance(rep, 0, 1, 1.0) == 1.0


class TestDistanceMatrix:
    def test_single_series(self):
        rep = build_representation(panel_of([[1.0, 2.0, 3.0]]), 4)
        dm = distance_matrix(rep, 0.5)
        assert dm.values.shape == (1, 1) and dm.values[0, 0] == 0.0

    def test_identical_series(self):
        rep = build_representation(panel_of([[1.0, 5.0, 2.0], [1.0, 5.0, 2.0]]), 4)
        assert (distance_matrix(rep, 0.5).values == 0.0).all()

    def test_matches_scalar_path(self):
        rep = build_representation(random_panel(6, 50, 2), 12)
        dm = distance_matrix(rep, 0.3)
        for i in range(6):
            for j in range(6):
                assert dm.values[i, j] == pytest.approx(
                    gnpr_distance(rep, i, j, 0.3), abs=1e-12)

    def test_thread_count_does_not_change_bits(self):
        rep = build_representation(random_panel(17, 80, 3), 24)
        base = distance_matrix(rep, 0.5, threads=1).values
        for threads in (2, 3, 8):
            assert (distance_matrix(rep, 0.5, threads=threads).values == base).all()

    def test_invariants_enforced(self):
        with pytest.raises(ValueError, match="diagonal"):
            DistanceMatrix(np.array([[0.1, 0.0], [0.0, 0.0]]), "gnpr", ("a", "b"))
        with pytest.raises(ValueError, match="symmetric"):
            DistanceMatrix(np.array([[0.0, 0.3], [0.2, 0.0]]), "gnpr", ("a", "b"))
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            DistanceMatrix(np.array([[0.0, 1.3], [1.3, 0.0]]), "gnpr", ("a", "b"))

    def test_csv_round_trip_exact(self, tmp_path):
        rep = build_representation(random_panel(5, 40, 4), 10)
        dm = distance_matrix(rep, 0.5)
        path = tmp_path / "d.csv"
        write_distance_csv(dm, path)
        back = read_distance_csv(path)
        assert back.series_ids == dm.series_ids
        assert (back.values == dm.values).all()  # 17 sig digits round-trip

    def test_csv_read_errors(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,a,b\na,0,1\nb,1,0\n")  # corner cell must be empty
        with pytest.raises(ValueError, match="corner"):
            read_distance_csv(path)
        path.write_text(",a,b\nb,0,1\na,1,0\n")
        with pytest.raises(ValueError, match="row ids"):
            read_distance_csv(path)

    def test_csv_read_can_revalidate_kind(self, tmp_path):
        path = tmp_path / "d.csv"
        write_distance_csv(DistanceMatrix(np.array([[0.0, 2.5], [2.5, 0.0]]),
                                          "l2", ("a", "b")), path)
        assert read_distance_csv(path, kind="l2").kind == "l2"
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            read_distance_csv(path, kind="gnpr")


class TestMetricProperties:
    @settings(max_examples=10)
    @given(st.integers(0, 1000))
    def test_metric_axioms_on_random_panels(self, seed):
        rep = build_representation(random_panel(8, 60, seed), 16)
        v = distance_matrix(rep, 0.5).values
        assert (v == v.T).all()
        assert (np.diag(v) == 0.0).all()
        assert v.min() >= 0.0 and v.max() <= 1.0
        lhs = v[:, None, :]  # d(i,k) broadcast over j
        rhs = v[:, :, None] + v[None, :, :]
        assert (lhs <= rhs + 1e-12).all()

    def test_preset_c_block_structure_and_runtime_budget(self):
        import time
        lp = generate(preset("C"), 0)
        start = time.perf_counter()
        rep = build_representation(lp.panel, 100)
        v = distance_matrix(rep, 0.5, threads=4).values
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0  # 200 series x 5000 points, 4 workers
        same = lp.labels[:, None] == lp.labels[None, :]
        off = ~np.eye(len(lp.labels), dtype=bool)
        within = v[same & off].mean()
        across = v[~same].mean()
        assert within < across  # truth clusters show up as diagonal blocks


class TestMonotoneTransformInvariance:
    def test_dep_part_bit_invariant_under_cubic_and_negation(self):
        panel = random_panel(5, 300, 7)
        base = distance_matrix(build_representation(panel, 40), 1.0).values
        for transform in (lambda x: x ** 3, lambda x: -x):
            other = Panel(transform(panel.values))
            v = distance_matrix(build_representation(other, 40), 1.0).values
            assert (v == base).all()

    def test_dist_part_invariance_error_shrinks_with_finer_bins(self):
        # the Hellinger part is only invariant in the continuous limit;
        # the discretization mismatch must shrink as bins grow
        t = 100_000
        rng = np.random.default_rng(42)
        panel = Panel(np.vstack([rng.standard_normal(t),
                                 0.5 + 1.2 * rng.standard_normal(t)]))
        cubed = Panel(panel.values ** 3)
        errors = []
        for bins in (50, 100, 200):
            d_raw = distance_matrix(build_representation(panel, bins), 0.0).values[0, 1]
            d_cub = distance_matrix(build_representation(cubed, bins), 0.0).values[0, 1]
            errors.append(abs(d_raw - d_cub))
        assert errors[0] > errors[1] > errors[2]


class TestGprClosedForm:
    def test_identical_params_full_correlation(self):
        g = GaussianParams(1.0, 2.0)
        assert gpr_gaussian_distance(g, g, 1.0, 0.7) == 0.0

    def test_hellinger_against_quadrature(self):
        x = GaussianParams(0.0, 1.0)
        y = GaussianParams(1.0, 1.0)
        got = gpr_gaussian_distance(x, y, 0.0, 0.0)
        assert got == pytest.approx(math.sqrt(1.0 - math.exp(-0.125)), abs=1e-12)
        assert got == pytest.approx(0.34278, abs=1e-5)
        # independent oracle: numerical integration of the Hellinger
        # integral between the two densities
        integrand = (lambda s: 0.5 * (math.sqrt(norm.pdf(s, x.mu, x.sigma))
                                      - math.sqrt(norm.pdf(s, y.mu, y.sigma))) ** 2)
        oracle, _ = quad(integrand, -12, 12)
        assert got == pytest.approx(math.sqrt(oracle), abs=1e-9)

    def test_wide_sigma_limit(self):
        x = GaussianParams(0.0, 1000.0)
        y = GaussianParams(5.0, 1000.0)
        assert gpr_gaussian_distance(x, y, 0.0, 0.0) < 1e-2

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            GaussianParams(0.0, 0.0)
        g = GaussianParams(0.0, 1.0)
        with pytest.raises(ValueError):
            gpr_gaussian_distance(g, g, 1.5, 0.5)


class TestPearsonToSpearman:
    def test_endpoints(self):
        assert pearson_to_spearman_gaussian(0.0) == 0.0
        assert pearson_to_spearman_gaussian(1.0) == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(ValueError):
            pearson_to_spearman_gaussian(1.01)

    def test_against_simulation(self):
        from scipy.stats import spearmanr
        got = pearson_to_spearman_gaussian(0.5)
        assert got == pytest.approx(6.0 / math.pi * math.asin(0.25), abs=1e-15)
        assert got == pytest.approx(0.48255, abs=5e-5)
        panel = gaussian_pair(0.0, 1.0, 0.0, 1.0, 0.5, 1_000_000, 0)
        oracle = spearmanr(panel.values[0], panel.values[1]).statistic
        assert abs(got - oracle) < 2e-3


class TestL2:
    def test_hand_values(self):
        assert l2_distance_empirical([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert l2_distance_empirical([0.0, 0.0], [1.0, 3.0]) == 5.0
        with pytest.raises(ValueError):
            l2_distance_empirical([0.0], [1.0, 2.0])

    def test_independent_standard_normals(self):
        panel = gaussian_pair(0.0, 1.0, 0.0, 1.0, 0.0, 10_000, 1)
        got = l2_distance_empirical(panel.values[0], panel.values[1])
        assert abs(got - 2.0) < 0.1  # (mu_x-mu_y)^2 + sig_x^2 + sig_y^2

    def test_closed_form_hand_values(self):
        assert l2_gaussian_closed_form(GaussianParams(0.0, 1.0),
                                       GaussianParams(0.0, 1.0), 1.0) == 0.0
        assert l2_gaussian_closed_form(GaussianParams(0.0, 1.0),
                                       GaussianParams(1.0, 2.0), 0.5) == 4.0
        sigma = 3.0
        assert l2_gaussian_closed_form(GaussianParams(2.0, sigma),
                                       GaussianParams(2.0, sigma), 0.0) == 2 * sigma ** 2

    def test_closed_form_against_monte_carlo(self):
        params = (0.0, 1.0, 1.0, 2.0, 0.5)
        panel = gaussian_pair(*params, 1_000_000, 2)
        mc = l2_distance_empirical(panel.values[0], panel.values[1])
        closed = l2_gaussian_closed_form(GaussianParams(0.0, 1.0),
                                         GaussianParams(1.0, 2.0), 0.5)
        assert abs(mc - closed) / closed < 0.02


class TestPearsonDistance:
    def test_hand_values(self):
        x = np.array([1.0, 2.0, 3.0])
        assert pearson_distance(x, 2 * x + 3) == 0.0
        assert pearson_distance(x, -x) == 1.0
        assert pearson_distance(x, np.array([1.0, 3.0, 2.0])) == pytest.approx(0.25, abs=1e-15)

    def test_zero_variance_errors(self):
        with pytest.raises(ValueError, match="zero-variance"):
            pearson_distance([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="zero-variance"):
            pearson_distance_matrix(panel_of([[1.0, 1.0], [0.0, 1.0]]))


class TestEmbedding:
    def test_theta_endpoint_blocks(self):
        rep = build_representation(random_panel(3, 20, 8), 10)
        t = rep.length
        e0 = gnpr_embedding(rep, 0.0)
        assert (e0.vectors[:, :t] == 0.0).all()
        e1 = gnpr_embedding(rep, 1.0)
        assert (e1.vectors[:, t:] == 0.0).all()

    def test_squared_distances_match_brute_force(self):
        rep = build_representation(random_panel(10, 500, 9), 100)
        e = gnpr_embedding(rep, 0.5).vectors
        worst = 0.0
        for i in range(10):
            for j in range(10):
                diff = e[i] - e[j]
                worst = max(worst, abs(float(diff @ diff)
                                       - gnpr_distance(rep, i, j, 0.5) ** 2))
        assert worst < 1e-10


class TestBaselineMatrices:
    def test_l2_matrix_matches_scalar(self):
        panel = random_panel(5, 64, 10)
        m = l2_distance_matrix(panel).values
        assert m[1, 3] == pytest.approx(
            l2_distance_empirical(panel.values[1], panel.values[3]), rel=1e-12)

    def test_pearson_matrix_matches_scalar(self):
        panel = random_panel(5, 64, 11)
        m = pearson_distance_matrix(panel).values
        assert m[0, 4] == pytest.approx(
            pearson_distance(panel.values[0], panel.values[4]), abs=1e-12)

    def test_gpr_matrix_matches_pairwise_closed_form(self):
        panel = random_panel(4, 256, 12)
        m = gpr_distance_matrix(panel, 0.4).values
        v = panel.values
        mu = v.mean(axis=1)
        sd = v.std(axis=1, ddof=1)
        for i, j in [(0, 1), (1, 2), (0, 3)]:
            rho = np.corrcoef(v[i], v[j])[0, 1]
            want = gpr_gaussian_distance(GaussianParams(mu[i], sd[i]),
                                         GaussianParams(mu[j], sd[j]),
                                         pearson_to_spearman_gaussian(rho), 0.4)
            assert m[i, j] == pytest.approx(want, abs=1e-12)


class TestClosedFormConsistency:
    @pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
    def test_empirical_matches_gpr_on_gaussians(self, theta):
        t = 100_000
        panel = gaussian_pair(0.3, 1.0, -0.2, 1.7, 0.6, t, 13)
        rep = build_representation(panel, 100)
        empirical = gnpr_distance(rep, 0, 1, theta)
        closed = gpr_gaussian_distance(
            GaussianParams(0.3, 1.0), GaussianParams(-0.2, 1.7),
            pearson_to_spearman_gaussian(0.6), theta)
        assert abs(empirical - closed) < 0.02

    def test_comonotonic_and_antimonotonic_normalization(self):
        v = np.random.default_rng(14).standard_normal(500)
        rep = build_representation(Panel(np.vstack([v, 3 * v, -v])), 50)
        assert gnpr_distance(rep, 0, 1, 1.0) == 0.0
        assert gnpr_distance(rep, 0, 2, 1.0) == 1.0
