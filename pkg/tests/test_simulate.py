"""
Tests for path synthesis and the Monte-Carlo checks.
"""
import json

import numpy as np
import pytest

from app.exceptions import DomainError
from app.schemas.hurst import HurstSpec
from app.services.analysis import kernel_norm_sq
from app.services.kernel import k_matrix_direct
from app.services.legendre import basis_eval_all
from app.services.oracle import gauss_legendre_rule
from app.services.simulate import (
    GENERATOR,
    estimate_covariance,
    fbm_covariance,
    gaussian_stream,
    mean_energy_check,
    path_eval,
    path_metadata,
    paths_to_csv,
    paths_to_json,
    reference_covariance,
    sample_coeffs,
    simulate_paths,
    splitmix64,
    to_float_matrix,
    uniform_grid,
)
from app.utils import matrix as mx


@pytest.fixture
def kernel_07(ctx128):
    return k_matrix_direct(HurstSpec(hurst="0.7", horizon="1", order=8), ctx128)


class TestRandomStream:
    def test_splitmix64(self):
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert 0 <= splitmix64(2 ** 64 - 1) < 2 ** 64

    def test_reproducible(self):
        a = gaussian_stream(42, 3).normals(9)
        b = gaussian_stream(42, 3).normals(9)
        assert np.array_equal(a, b)

    def test_paths_are_distinct_substreams(self):
        a = gaussian_stream(42, 0).normals(4)
        b = gaussian_stream(42, 1).normals(4)
        c = gaussian_stream(43, 0).normals(4)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_split_draws_continue_the_stream(self):
        whole = gaussian_stream(5, 2).normals(7)
        stream = gaussian_stream(5, 2)
        parts = np.concatenate([stream.normals(3), stream.normals(1), stream.normals(3)])
        assert np.array_equal(whole, parts)
        assert stream.drawn == 7

    def test_moments(self):
        z = gaussian_stream(11).normals(200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1.0) < 0.01
        assert np.all(np.isfinite(z))

    def test_generator_label(self):
        assert gaussian_stream(0).generator == GENERATOR


class TestPaths:
    def test_grid(self):
        grid = uniform_grid(5, "2")
        assert grid.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
        with pytest.raises(DomainError):
            uniform_grid(1, "1")

    def test_single_term_path_is_half_a_normal(self, ctx128):
        K = k_matrix_direct(HurstSpec(hurst="0.5", horizon="1", order=1), ctx128)
        path = simulate_paths(K, 1, uniform_grid(3, 1), seed=9)[0]
        v = gaussian_stream(9, 0).normals(1)[0]
        assert np.allclose(path.values, v / 2, rtol=0, atol=1e-15)

    def test_coefficients_are_K_times_normals(self, kernel_07):
        b = sample_coeffs(kernel_07, gaussian_stream(3))
        assert np.allclose(b.values, to_float_matrix(kernel_07) @ b.normals, rtol=1e-15, atol=1e-15)
        assert b.seed == 3 and b.path == 0

    def test_thread_count_does_not_change_paths(self, kernel_07):
        grid = uniform_grid(21, 1)
        one = simulate_paths(kernel_07, 6, grid, seed=4)
        many = simulate_paths(kernel_07, 6, grid, seed=4, threads=3)
        assert [p.path for p in many] == list(range(6))
        assert all(np.array_equal(a.values, b.values) for a, b in zip(one, many))

    def test_needs_a_path(self, kernel_07):
        with pytest.raises(DomainError):
            simulate_paths(kernel_07, 0, uniform_grid(3, 1), seed=0)

    def test_outside_horizon(self, kernel_07):
        with pytest.raises(DomainError):
            simulate_paths(kernel_07, 1, [0.0, 1.5], seed=0)

    def test_csv_output(self, kernel_07):
        paths = simulate_paths(kernel_07, 2, uniform_grid(3, 1), seed=8)
        meta = path_metadata(kernel_07, 8)
        text = paths_to_csv(paths, meta)
        lines = text.splitlines()
        assert json.loads(lines[0][2:]) == meta
        assert lines[1] == "# path 0" and lines[2] == "t,value"
        assert lines[3].startswith("0.0,")
        assert lines[6] == "# path 1"
        assert text == paths_to_csv(simulate_paths(kernel_07, 2, uniform_grid(3, 1), seed=8), meta)

    def test_json_output(self, kernel_07):
        paths = simulate_paths(kernel_07, 1, uniform_grid(4, 1), seed=8)
        payload = json.loads(paths_to_json(paths, path_metadata(kernel_07, 8)))
        assert payload["metadata"]["generator"] == GENERATOR
        assert payload["metadata"]["L"] == 8
        assert payload["paths"][0]["t"] == uniform_grid(4, 1).tolist()
        assert payload["paths"][0]["value"] == paths[0].values.tolist()


class TestCovariance:
    def test_brownian_covariance(self):
        assert fbm_covariance("0.5", 0.3, 0.8) == pytest.approx(0.3)
        assert fbm_covariance(0.7, 1.0, 1.0) == pytest.approx(1.0)

    def test_single_term_reference(self, ctx128):
        K = k_matrix_direct(HurstSpec(hurst="0.5", horizon="1", order=1), ctx128)
        assert reference_covariance(K, "0.2", 1) == ctx128.real("0.25")

    def test_reference_approaches_fbm(self, ctx128):
        K = k_matrix_direct(HurstSpec(hurst="0.7", horizon="1", order=48), ctx128)
        exact = fbm_covariance("0.7", 0.3, 0.6)
        assert abs(float(reference_covariance(K, "0.3", "0.6")) - exact) < 0.01

    def test_monte_carlo_within_error(self, ctx128, kernel_07):
        est = estimate_covariance(kernel_07.spec, "direct", 4000, 0.5, 1.0, seed=2, ctx=ctx128, kernel=kernel_07)
        assert abs(est.estimate - est.reference) <= 4 * est.std_error
        assert abs(est.mean_s) <= 4 * est.mean_std_error_s
        assert abs(est.mean_t) <= 4 * est.mean_std_error_t
        assert est.n_paths == 4000
        assert est.target == pytest.approx(fbm_covariance("0.7", 0.5, 1.0))

    def test_energy_within_error(self, ctx128, kernel_07):
        est = mean_energy_check(kernel_07.spec, "direct", 4000, seed=5, ctx=ctx128, kernel=kernel_07)
        assert abs(est.estimate - est.exact) <= 4 * est.std_error

    def test_needs_enough_paths(self, ctx128, kernel_07):
        with pytest.raises(DomainError):
            estimate_covariance(kernel_07.spec, "direct", 999, 0.5, 1.0, seed=0, ctx=ctx128, kernel=kernel_07)
        with pytest.raises(DomainError):
            mean_energy_check(kernel_07.spec, "direct", 10, seed=0, ctx=ctx128, kernel=kernel_07)

    def test_points_inside_horizon(self, ctx128, kernel_07):
        with pytest.raises(DomainError):
            estimate_covariance(kernel_07.spec, "direct", 1000, 0.5, 2.0, seed=0, ctx=ctx128, kernel=kernel_07)

    @pytest.mark.slow
    def test_large_sample(self, ctx128):
        spec = HurstSpec(hurst="0.3", horizon="2", order=16)
        est = estimate_covariance(spec, "product_B", 100_000, 1.0, 2.0, seed=0, ctx=ctx128, threads=4)
        assert abs(est.estimate - est.reference) <= 4 * est.std_error
        assert est.std_error < 0.01

    @pytest.mark.slow
    def test_hundred_thousand_paths(self, ctx128):
        spec = HurstSpec(hurst="0.7", horizon="1", order=16)
        K = k_matrix_direct(spec, ctx128)
        cov = estimate_covariance(spec, "direct", 100_000, 0.5, 1.0, seed=2024, ctx=ctx128, threads=4, kernel=K)
        assert abs(cov.estimate - cov.reference) <= 4 * cov.std_error
        energy = mean_energy_check(spec, "direct", 100_000, seed=2024, ctx=ctx128, threads=4, kernel=K)
        assert abs(energy.estimate - energy.exact) <= 4 * energy.std_error
        # the energy falls short of ||k||^2 by the truncation error epsilon
        norm = float(kernel_norm_sq("0.7", "1", ctx128))
        assert energy.exact == pytest.approx(norm - 0.001924, abs=1e-6)


class TestEnergyIdentity:
    def test_extended_precision_quadrature(self, ctx320):
        # Parseval at the truncated order: ∫ B(t)^2 dt = sum_i b_i^2
        mp = ctx320.mp
        K = k_matrix_direct(HurstSpec(hurst="0.7", horizon="2", order=16), ctx320)
        T = K.spec.t_real(ctx320)
        v = [mp.mpf(float(x)) for x in gaussian_stream(3).normals(16)]
        b = mx.matvec(mp, K.entries, v)
        rule = gauss_legendre_rule(64, ctx320)
        path = lambda t: mp.fdot(b, basis_eval_all(16, t, T))  # noqa: E731
        energy = rule.integrate(lambda t: path(t) ** 2, ctx320.zero(), T)
        expected = mp.fdot(b, b)
        assert abs(energy - expected) <= mp.mpf(10) ** -25 * expected

    def test_double_precision_paths(self, kernel_07):
        nodes, weights = np.polynomial.legendre.leggauss(64)
        grid = (nodes + 1) / 2
        coeffs = sample_coeffs(kernel_07, gaussian_stream(9))
        sample = path_eval(coeffs, grid, kernel_07.spec)
        energy = 0.5 * np.dot(weights, sample.values ** 2)
        assert energy == pytest.approx(np.dot(coeffs.values, coeffs.values), rel=1e-12)


class TestSelfSimilarity:
    @pytest.mark.parametrize("T, s, t", [("2", "0.6", "1.2"), ("1/3", "1/10", "1/5")])
    def test_reference_covariance(self, ctx320, T, s, t):
        unit = k_matrix_direct(HurstSpec(hurst="0.3", horizon="1", order=12), ctx320)
        wide = k_matrix_direct(HurstSpec(hurst="0.3", horizon=T, order=12), ctx320)
        mp = ctx320.mp
        factor = mp.power(ctx320.real(T), ctx320.real("0.6"))
        expected = factor * reference_covariance(unit, "0.3", "0.6")
        assert abs(reference_covariance(wide, s, t) - expected) <= mp.mpf(2) ** -300 * abs(expected)

    @pytest.mark.parametrize("H", ["0.2", "0.5", "0.8"])
    @pytest.mark.parametrize("T", [2.0, 0.25, 3.5])
    def test_fbm_covariance(self, H, T):
        expected = T ** (2 * float(H)) * fbm_covariance(H, 0.3, 0.6)
        assert fbm_covariance(H, 0.3 * T, 0.6 * T) == pytest.approx(expected, rel=1e-12)
