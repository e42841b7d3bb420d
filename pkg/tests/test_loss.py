"""Algebra and gradient tests for the mean-plus-std composite loss."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pinnvar.autodiff as ad
from pinnvar import loss as losses

error_vectors = st.lists(
    st.floats(min_value=-100.0, max_value=100.0,
              allow_nan=False, allow_infinity=False),
    min_size=1, max_size=40,
).map(lambda v: np.asarray(v, dtype=np.float64))


def plain_mean_std(e, alpha, eps=losses.DEFAULT_VARIANCE_EPS):
    e = np.asarray(e, dtype=np.float64)
    if alpha == 1.0:
        return e.mean()
    var = ((e - e.mean()) ** 2).mean()
    return alpha * e.mean() + (1 - alpha) * math.sqrt(eps + var)


class TestErrorKind:
    def test_variants(self):
        losses.ErrorKind("squared")
        losses.ErrorKind("absolute")
        losses.ErrorKind("huber", 0.5)
        with pytest.raises(ValueError):
            losses.ErrorKind("cauchy")
        with pytest.raises(ValueError):
            losses.ErrorKind("huber", 0.0)

    def test_squared(self):
        e = losses.pointwise_error(np.array([3.0, -1.0]), np.array([1.0, 1.0]),
                                   losses.ErrorKind("squared"))
        assert np.array_equal(ad.value_of(e), [4.0, 4.0])

    def test_absolute(self):
        e = losses.pointwise_error(np.array([3.0, -1.0]), np.array([1.0, 1.0]),
                                   losses.ErrorKind("absolute"))
        assert np.array_equal(ad.value_of(e), [2.0, 2.0])

    def test_huber_piecewise(self):
        kind = losses.ErrorKind("huber", 1.0)
        # |e| = 0.5 (inside): 0.5 e^2; |e| = 3 (outside): delta(|e| - delta/2)
        e = losses.pointwise_error(np.array([0.5, 3.0]), np.zeros(2), kind)
        assert np.allclose(ad.value_of(e), [0.125, 2.5], atol=1e-15)
        assert ad.value_of(losses.pointwise_error(2.0, 0.0, kind)) == 1.5

    def test_absolute_identity_case(self):
        e = losses.pointwise_error(1.0, 1.0, losses.ErrorKind("absolute"))
        assert ad.value_of(e) == 0.0

    def test_huber_continuity_at_delta(self):
        kind = losses.ErrorKind("huber", 1.3)
        lo = losses.pointwise_error(1.3 - 1e-9, 0.0, kind)
        hi = losses.pointwise_error(1.3 + 1e-9, 0.0, kind)
        assert abs(ad.value_of(lo) - ad.value_of(hi)) < 1e-8


class TestMeanStdLoss:
    def test_worked_example(self):
        # e = [1, 3], alpha = 0.5: mean 2, std 1 -> 0.5*2 + 0.5*1 = 1.5
        got = losses.mean_std_loss(np.array([1.0, 3.0]), 0.5, eps=0.0)
        assert abs(got - 1.5) < 1e-12

    def test_constant_vector_has_zero_std(self):
        got = losses.mean_std_loss(np.full(7, 4.0), 0.3, eps=0.0)
        assert abs(got - 0.3 * 4.0) < 1e-12

    def test_alpha_one_is_exactly_the_mean(self):
        e = np.array([0.1, 0.7, 0.2, 0.9])
        assert losses.mean_std_loss(e, 1.0) == e.mean()

    def test_alpha_zero_is_the_std(self):
        e = np.array([2.0, 4.0, 6.0])
        want = math.sqrt(1e-12 + np.var(e))
        assert abs(losses.mean_std_loss(e, 0.0) - want) < 1e-14

    def test_rejects_empty_and_matrix_input(self):
        with pytest.raises(ValueError):
            losses.mean_std_loss(np.zeros((2, 2)), 0.5)
        with pytest.raises(ValueError):
            losses.mean_std_loss(np.zeros(0), 0.5)

    @settings(max_examples=200, deadline=None)
    @given(error_vectors, st.floats(min_value=0.0, max_value=1.0))
    def test_matches_plain_numpy(self, e, alpha):
        got = losses.mean_std_loss(e, alpha)
        assert abs(got - plain_mean_std(e, alpha)) < 1e-10 * max(
            1.0, np.abs(e).max())

    @settings(max_examples=100, deadline=None)
    @given(error_vectors,
           st.floats(min_value=0.0, max_value=1.0),
           st.floats(min_value=0.1, max_value=10.0))
    def test_positive_homogeneity(self, e, alpha, c):
        # with eps = 0 the loss is positively homogeneous of degree 1
        lhs = losses.mean_std_loss(c * e, alpha, eps=0.0)
        rhs = c * losses.mean_std_loss(e, alpha, eps=0.0)
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))

    @settings(max_examples=100, deadline=None)
    @given(error_vectors.filter(lambda e: np.all(e >= 0.0)),
           st.floats(min_value=0.0, max_value=1.0))
    def test_nonnegative_for_nonnegative_errors(self, e, alpha):
        assert losses.mean_std_loss(e, alpha) >= 0.0

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(3)
        e0 = rng.normal(size=12)
        for alpha in (0.0, 0.5, 0.8):
            with ad.Tape() as tape:
                ev = tape.variable(e0)
                out = losses.mean_std_loss(ev, alpha)
            (g,) = tape.gradient(out, [ev])
            h = 1e-6
            for j in range(e0.size):
                hi, lo = e0.copy(), e0.copy()
                hi[j] += h
                lo[j] -= h
                fd = (plain_mean_std(hi, alpha) - plain_mean_std(lo, alpha)) / (2 * h)
                assert abs(g[j] - fd) < 1e-7


class TestCompositeLoss:
    def test_two_terms_weighted(self):
        cfg = losses.LossConfig(alpha=0.5, variance_eps=0.0)
        terms = [
            ("residual", np.array([1.0, 3.0]), 2.0),
            ("dirichlet", np.array([4.0, 4.0]), 1.0),
        ]
        out = losses.composite_loss(terms, cfg)
        assert abs(out.total_value - (2.0 * 1.5 + 1.0 * 2.0)) < 1e-12
        by_name = {t.name: t for t in out.per_term}
        assert by_name["residual"].mean == 2.0
        assert by_name["residual"].std == 1.0
        assert by_name["dirichlet"].std == 0.0

    def test_per_term_not_pooled(self):
        # splitting a vector into two terms must differ from pooling it
        cfg = losses.LossConfig(alpha=0.5, variance_eps=0.0)
        pooled = losses.composite_loss(
            [("all", np.array([0.0, 0.0, 10.0, 10.0]), 1.0)], cfg).total_value
        split = losses.composite_loss(
            [("a", np.array([0.0, 0.0]), 0.5),
             ("b", np.array([10.0, 10.0]), 0.5)], cfg).total_value
        assert abs(pooled - split) > 1.0

    def test_two_constant_terms_alpha_one(self):
        cfg = losses.LossConfig(alpha=1.0)
        out = losses.composite_loss(
            [("a", np.array([0.0, 0.0]), 1.0),
             ("b", np.array([2.0, 2.0]), 1.0)], cfg)
        assert out.total_value == 2.0

    def test_alpha_zero_single_term_is_pure_std(self):
        cfg = losses.LossConfig(alpha=0.0, variance_eps=0.0)
        out = losses.composite_loss([("r", np.array([1.0, 3.0]), 1.0)], cfg)
        assert abs(out.total_value - 1.0) < 1e-12

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            losses.LossConfig(alpha=1.5)
        with pytest.raises(ValueError):
            losses.LossConfig(alpha=-0.1)

    def test_csv_rows(self):
        cfg = losses.LossConfig(alpha=1.0)
        out = losses.composite_loss([("pde", np.array([2.0]), 1.0)], cfg)
        rows = out.csv_rows("run0", 7)
        assert rows == [("run0", 7, "pde", 2.0, 0.0, 2.0, 1.0)]


class TestGpinnTerm:
    def test_quadratic_residual(self):
        # r(x) = x^2 -> (dr/dx)^2 = 4 x^2; mean over {1, 2} is 10
        def r(x):
            return ad.mul(x, x)

        got = losses.gpinn_term(r, [1.0, 2.0])
        assert abs(ad.value_of(got) - 10.0) < 1e-12

    def test_two_coordinates(self):
        # r = x * y at (1, 2): y^2 + x^2 = 5
        def r(x, y):
            return ad.mul(x, y)

        got = losses.gpinn_term(r, [(1.0, 2.0)])
        assert abs(ad.value_of(got) - 5.0) < 1e-12

    def test_constant_residual_is_zero(self):
        got = losses.gpinn_term(lambda x: ad.mul(0.0, x), [0.3, 0.7, -1.0])
        assert ad.value_of(got) == 0.0

    def test_linear_residuals(self):
        # r = 2x -> 4 everywhere; r = x + 3t -> 1 + 9 = 10
        got = losses.gpinn_term(lambda x: ad.mul(2.0, x), [0.1, 5.0])
        assert abs(ad.value_of(got) - 4.0) < 1e-12
        got = losses.gpinn_term(
            lambda x, t: ad.add(x, ad.mul(3.0, t)), [(0.5, 0.5), (2.0, 1.0)])
        assert abs(ad.value_of(got) - 10.0) < 1e-12
