import math
import unittest
import warnings

import numpy as np
import scipy.linalg
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from commuting_means import (
    agm_weighted_mean,
    geometric_values,
    integrate_curve,
    integrate_nodes,
    integrate_scalar,
    log_mean,
    log_mean_array,
    make_pair,
    mean_chain,
    pair_from_matrices,
    quadrature_error,
    quadrature_oracle_check,
    weighted_arithmetic,
    weighted_geometric,
    weighted_geometric_integral_closed_form,
)
from errors import (
    BadWeight,
    DimensionMismatch,
    IllConditionedWarning,
    NotCommuting,
    NotPositive,
    NotPositiveDefinite,
    NotUnitary,
    QuadratureFailure,
)
from models import QuadratureSpec, VerdictStatus
from random_instances import gen_commuting_pair, gen_pd, trial_rng

SPECTRA = (0.1, 10.0)


def diagonal_pair(a, b):
    return make_pair(np.eye(len(a)), a, b)


def seeded_pair(n, k, check="commuting_means_tests"):
    return gen_commuting_pair(trial_rng(42, check, k), n, SPECTRA)


positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


class CommutingPairTests(unittest.TestCase):
    def test_pair_commutes(self):
        p = seeded_pair(8, 0)

        self.assertLessEqual(p.commutator_norm(), 1e-11 * max(1.0, p.matrix_a().frobenius()) ** 2)

    def test_eigenvalues_must_be_positive(self):
        with self.assertRaises(NotPositive):
            make_pair(np.eye(2), [1.0, 0.0], [1.0, 1.0])

    def test_basis_must_be_unitary(self):
        with self.assertRaises(NotUnitary):
            make_pair(2.0 * np.eye(2), [1.0, 1.0], [1.0, 1.0])

    def test_lengths_must_match(self):
        with self.assertRaises(DimensionMismatch):
            make_pair(np.eye(2), [1.0, 2.0, 3.0], [1.0, 1.0])

    def test_pair_json_round_trip_is_exact(self):
        p = seeded_pair(4, 1)
        back = type(p).from_json(p.to_json())

        np.testing.assert_array_equal(back.u, p.u)
        np.testing.assert_array_equal(back.a, p.a)

    def test_pair_recovered_from_matrices(self):
        p = seeded_pair(4, 2)
        q = pair_from_matrices(p.matrix_a(), p.matrix_b())

        np.testing.assert_allclose(q.matrix_a().array, p.matrix_a().array, atol=1e-10)
        np.testing.assert_allclose(q.matrix_b().array, p.matrix_b().array, atol=1e-10)

    def test_non_commuting_matrices_are_refused(self):
        with self.assertRaises(NotCommuting):
            pair_from_matrices(np.diag([1.0, 2.0]), np.array([[2.0, 1.0], [1.0, 2.0]]))


class WeightedGeometricTests(unittest.TestCase):
    def test_endpoints(self):
        p = seeded_pair(3, 3)

        np.testing.assert_allclose(geometric_values(p, 1.0), p.a)
        np.testing.assert_allclose(geometric_values(p, 0.0), p.b)

    def test_half_weight_is_square_root_of_product(self):
        p = diagonal_pair([1.0, 4.0], [4.0, 1.0])

        np.testing.assert_allclose(weighted_geometric(p, 0.5).array, 2.0 * np.eye(2), atol=1e-15)

    def test_weight_outside_unit_interval(self):
        with self.assertRaises(BadWeight):
            weighted_geometric(seeded_pair(2, 4), 1.5)

    def test_swap_is_exact_at_dyadic_weights(self):
        p = seeded_pair(4, 5)

        for lam in (0.0, 0.125, 0.25, 0.5, 0.75, 1.0):
            np.testing.assert_array_equal(
                weighted_geometric(p.swapped(), 1.0 - lam).array, weighted_geometric(p, lam).array
            )

    def test_swap_agrees_to_rounding_at_any_weight(self):
        p = seeded_pair(4, 6)
        ulp = np.finfo(float).eps

        for lam in (0.1, 0.3, 1.0 / 3.0, 0.9):
            np.testing.assert_allclose(geometric_values(p.swapped(), 1.0 - lam), geometric_values(p, lam),
                                       rtol=4 * ulp, atol=0)
            swapped = weighted_geometric(p.swapped(), 1.0 - lam).array
            direct = weighted_geometric(p, lam).array
            self.assertLessEqual(np.abs(swapped - direct).max(), 32 * ulp * np.abs(direct).max())


class LogMeanTests(unittest.TestCase):
    """L(a, b) = (b − a)/(ln b − ln a)."""

    def test_closed_forms(self):
        self.assertAlmostEqual(log_mean(1.0, math.e), math.e - 1.0, places=14)
        self.assertAlmostEqual(log_mean(1.0, 4.0), 3.0 / math.log(4.0), places=14)
        self.assertEqual(log_mean(2.5, 2.5), 2.5)

    def test_nearly_equal_arguments(self):
        a = 1.0
        b = 1.0 + 1e-15

        self.assertAlmostEqual(log_mean(a, b), 1.0, places=14)

    def test_symmetric(self):
        self.assertEqual(log_mean(3.0, 7.0), log_mean(7.0, 3.0))

    def test_non_positive_arguments(self):
        with self.assertRaises(NotPositive):
            log_mean(0.0, 1.0)

    def test_array_matches_scalar(self):
        a = np.array([0.5, 2.0, 3.0, 1.0])
        b = np.array([4.0, 2.0, 1.0, 1.0 + 1e-9])

        np.testing.assert_allclose(log_mean_array(a, b), [log_mean(x, y) for x, y in zip(a, b)], rtol=1e-15)

    @seed(7)
    @settings(max_examples=200, deadline=None)
    @given(a=positive, b=positive)
    def test_between_geometric_and_arithmetic(self, a, b):
        value = log_mean(a, b)

        self.assertLessEqual(math.sqrt(a * b), value * (1 + 1e-14))
        self.assertLessEqual(value, 0.5 * (a + b) * (1 + 1e-14))

    def test_mean_chain_holds(self):
        chain = mean_chain(1.0, 4.0)

        self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS)
        self.assertEqual(chain.link_values[0], 1.0)
        self.assertAlmostEqual(chain.link("geometric"), 2.0, places=15)
        self.assertEqual(chain.link_values[-1], 4.0)


class QuadratureTests(unittest.TestCase):
    def test_scalar_polynomial_is_exact(self):
        self.assertAlmostEqual(float(integrate_scalar(lambda t: t ** 2)), 1.0 / 3.0, places=15)

    def test_scalar_on_interval(self):
        value = float(integrate_scalar(np.exp, QuadratureSpec(), (0.25, 0.75)))

        self.assertAlmostEqual(value, math.exp(0.75) - math.exp(0.25), places=14)

    def test_non_finite_integrand(self):
        with self.assertRaises(QuadratureFailure):
            integrate_scalar(lambda t: np.full_like(t, np.inf))

    def test_diagonal_anchor(self):
        p = diagonal_pair([1.0, 4.0], [4.0, 1.0])
        integral = integrate_curve(lambda t: weighted_geometric(p, t))

        np.testing.assert_allclose(np.diag(integral.array).real, [2.164043, 2.164043], atol=1e-6)
        np.testing.assert_allclose(integral.array, weighted_geometric_integral_closed_form(p).array, atol=1e-13)

    def test_seeded_pairs_match_closed_form(self):
        for k in range(150):
            n = (2, 4, 8)[k % 3]
            verdict = quadrature_oracle_check(seeded_pair(n, k, "quadrature_oracle_tests"))

            self.assertEqual(verdict.status, VerdictStatus.HOLDS, verdict.details)

    def test_panel_doubling_error_is_tiny(self):
        p = seeded_pair(4, 5)

        self.assertLess(quadrature_error(lambda t: weighted_geometric(p, t)), 1e-12)

    def test_swapping_the_pair_keeps_the_integral(self):
        p = seeded_pair(4, 6)

        np.testing.assert_allclose(
            integrate_curve(lambda t: weighted_geometric(p, t)).array,
            integrate_curve(lambda t: weighted_geometric(p.swapped(), t)).array,
            atol=1e-12,
        )

    def test_all_nodes_at_once_matches_node_by_node(self):
        p = seeded_pair(4, 7)
        batched = integrate_nodes(lambda ts: [weighted_geometric(p, t) for t in ts], QuadratureSpec(), (0.25, 0.75))
        single = integrate_curve(lambda t: weighted_geometric(p, t), QuadratureSpec(), (0.25, 0.75))

        np.testing.assert_allclose(batched.array, single.array, atol=1e-13 * single.frobenius())

    def test_node_count_mismatch(self):
        with self.assertRaises(QuadratureFailure):
            integrate_nodes(lambda ts: [np.eye(2)] * (len(ts) - 1))

    def test_non_finite_node_value(self):
        with self.assertRaises(QuadratureFailure):
            integrate_nodes(lambda ts: [np.full((2, 2), np.inf) for _ in ts])


class WeightedAgmMeanTests(unittest.TestCase):
    def test_commuting_half_weight(self):
        mean = agm_weighted_mean(np.diag([1.0, 4.0]), np.diag([4.0, 1.0]), 0.5)

        np.testing.assert_allclose(mean.array, 2.0 * np.eye(2), atol=1e-14)

    def test_matches_fractional_power_formula(self):
        rng = trial_rng(3, "agm", 0)
        a, b = gen_pd(rng, 4, SPECTRA).array, gen_pd(rng, 4, SPECTRA).array
        root = scipy.linalg.sqrtm(a)
        inv_root = np.linalg.inv(root)
        expected = root @ scipy.linalg.fractional_matrix_power(inv_root @ b @ inv_root, 0.3) @ root

        np.testing.assert_allclose(agm_weighted_mean(a, b, 0.3).array, expected,
                                   atol=1e-9 * np.linalg.norm(expected))

    def test_endpoint_weights(self):
        a, b = np.diag([1.0, 2.0]), np.diag([3.0, 5.0])

        np.testing.assert_array_equal(agm_weighted_mean(a, b, 0.0).array, a)
        np.testing.assert_array_equal(agm_weighted_mean(a, b, 1.0).array, b)
        np.testing.assert_allclose(weighted_arithmetic(a, b, 0.25).array, np.diag([1.5, 2.75]))

    def test_requires_positive_definite(self):
        with self.assertRaises(NotPositiveDefinite):
            agm_weighted_mean(np.diag([1.0, 0.0]), np.eye(2), 0.5)

    def test_ill_conditioned_operand_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            agm_weighted_mean(np.diag([1.0, 1e-9]), np.eye(2), 0.5)

        self.assertTrue(any(issubclass(w.category, IllConditionedWarning) for w in caught))


if __name__ == "__main__":
    unittest.main()
