import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sais import (
    Minorizer,
    TargetDensity,
    UnboundedDivergenceWarning,
    ZeroWeights,
    cauchy_loglik,
    cauchy_minorizer,
    cauchy_scale_family,
    effective_sample_size,
    fd_check,
    kl_divergence,
    minorization_check,
    normal_mean_family,
    normal_mixture_family,
    normal_mixture_target,
    standard_normal_target,
)
from sais.densities import LOG_PI

from conftest import make_batch


class TestEffectiveSampleSize:
    def test_reference_value(self):
        assert effective_sample_size([1.0, 3.0]) == 1.6

    def test_accepts_weighted_batches(self):
        assert effective_sample_size(make_batch([(0.0, 1.0), (5.0, 3.0)])) == 1.6

    def test_equal_weights_reach_batch_size(self):
        assert effective_sample_size([2.0] * 7) == pytest.approx(7.0, rel=1e-14)

    def test_single_dominant_weight_approaches_one(self):
        assert effective_sample_size([1.0, 1e-12, 1e-12]) == pytest.approx(1.0, abs=1e-9)

    @given(st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=1, max_size=30))
    def test_bounds(self, ws):
        e = effective_sample_size(ws)
        assert 1.0 <= e <= len(ws) * (1.0 + 1e-12)

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            effective_sample_size([])
        with pytest.raises(ZeroWeights):
            effective_sample_size([0.0, 0.0])


class TestKLDivergence:
    def test_self_divergence_is_zero(self):
        est = kl_divergence(standard_normal_target(), normal_mean_family(), [0.0],
                            resolution=5000)
        assert est.value == 0.0
        assert est.method == "quadrature"

    def test_gaussian_shift_closed_form(self):
        # between unit normals the divergence is half the squared mean gap
        est = kl_divergence(standard_normal_target(), normal_mean_family(), [1.3],
                            resolution=20000)
        assert est.value == pytest.approx(0.845, abs=1e-8)
        assert est.standard_error < 1e-8

    def test_cauchy_proposal_reference_values(self):
        # reference integrals computed with adaptive quadrature
        for u, ref in ((4.0, 0.6126904577), (1.21, 0.2917277892), (1.0, 0.2592445325)):
            est = kl_divergence(standard_normal_target(), cauchy_scale_family(), [u],
                                resolution=20000)
            assert est.value == pytest.approx(ref, abs=1e-7)

    def test_mixture_grid_minimum(self):
        tgt = normal_mixture_target((1.0 / 3.0, 2.0 / 3.0), (-1.0, 2.0))
        fam = normal_mixture_family((-1.0, 2.0))
        grid = [round(0.05 * k, 2) for k in range(1, 20)]
        kls = {a: kl_divergence(tgt, fam, [a], resolution=4000).value for a in grid}
        assert min(kls, key=kls.get) == 0.35
        assert kls[0.35] == pytest.approx(4.891476938e-4, abs=1e-7)
        exact = kl_divergence(tgt, fam, [1.0 / 3.0], resolution=4000).value
        assert abs(exact) < 1e-10

    def test_monte_carlo_agrees_with_quadrature(self, rng):
        tgt = standard_normal_target()
        fam = cauchy_scale_family()
        quad = kl_divergence(tgt, fam, [4.0], resolution=20000)
        mc = kl_divergence(tgt, fam, [4.0], method="monte-carlo",
                           resolution=200_000, rng=rng)
        assert abs(mc.value - quad.value) < 4.0 * mc.standard_error
        assert mc.standard_error > 0.0

    def test_monte_carlo_requirements(self):
        tgt = standard_normal_target()
        with pytest.raises(ValueError):
            kl_divergence(tgt, normal_mean_family(), [0.0], method="monte-carlo")
        no_oracle = TargetDensity(tgt.log_density)
        with pytest.raises(ValueError):
            kl_divergence(no_oracle, normal_mean_family(), [0.0],
                          method="monte-carlo", rng=np.random.default_rng(0))

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            kl_divergence(standard_normal_target(), normal_mean_family(), [0.0],
                          method="simpson")

    def test_light_tailed_proposal_warns(self):
        heavy = TargetDensity(
            lambda x: -LOG_PI - np.log1p(np.asarray(x, dtype=float) ** 2),
            check_normalization=False,
        )
        with pytest.warns(UnboundedDivergenceWarning):
            kl_divergence(heavy, normal_mean_family(), [0.0], resolution=2000)

    def test_heavy_tailed_proposal_does_not_warn(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error", UnboundedDivergenceWarning)
            kl_divergence(standard_normal_target(), cauchy_scale_family(), [4.0],
                          resolution=2000)


class TestFDCheck:
    def test_quadratic(self):
        res = fd_check(lambda u: u * u, lambda u: 2.0 * u, 3.0)
        assert res.analytic == 6.0
        assert res.rel_error < 1e-8

    def test_constant_function(self):
        res = fd_check(lambda u: 5.0, lambda u: 0.0, 1.0)
        assert res.numeric == 0.0 and res.rel_error == 0.0

    def test_detects_wrong_derivative(self):
        res = fd_check(lambda u: u * u, lambda u: 3.0 * u, 2.0)
        assert res.rel_error > 0.3

    def test_step_validation(self):
        for h in (0.0, -1e-6, 0.5):
            with pytest.raises(ValueError):
                fd_check(lambda u: u, lambda u: 1.0, 1.0, step=h)


class TestMinorizationCheck:
    def test_real_surrogate_passes(self, rng):
        pairs = [(float(x), float(w)) for x, w in
                 zip(rng.standard_cauchy(15), rng.uniform(0.1, 2.0, 15))]
        b = make_batch(pairs)
        q = cauchy_minorizer(2.0, b)
        report = minorization_check(q, lambda u: cauchy_loglik(u, b),
                                    np.linspace(0.01, 50.0, 200))
        assert report.passed
        assert report.tangency_gap <= 1e-10
        assert report.worst_violation <= 1e-10

    def test_broken_tangency_detected(self):
        q = Minorizer(anchor=1.0, value=lambda u: 0.1, maximizer=lambda: 1.0)
        report = minorization_check(q, lambda u: 0.0, np.linspace(0.0, 2.0, 5))
        assert not report.passed
        assert report.tangency_gap == pytest.approx(0.1)

    def test_broken_domination_detected(self):
        q = Minorizer(anchor=1.0, value=lambda u: (u - 1.0) ** 2, maximizer=lambda: 1.0)
        report = minorization_check(q, lambda u: 0.0, np.array([0.0, 1.0, 3.0]))
        assert not report.passed
        assert report.worst_violation == 4.0
        assert report.worst_point == 3.0
