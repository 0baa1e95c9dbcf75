import math
import unittest
from unittest import mock

import numpy as np

from commuting_means import log_mean, make_pair, weighted_geometric_integral_closed_form
from linalg_core import HermitianMatrix, SpectralDecomposition, eig_hermitian_many
from models import LoewnerTolerance, QuadratureSpec, VerdictStatus
from operator_hh import (
    OperatorChainReport,
    agm_inequality_check,
    check_operator_geo_convex,
    closure_check,
    exp_operator_geo_convex_check,
    exp_special_chain,
    hh_operator_log_chain,
    hh_operator_unlogged_chain,
    log_monotone_compatibility,
    operator_convex_hh_chain,
)
from random_instances import gen_commuting_pair, gen_hermitian, gen_pd, trial_rng
from scalar_functions import (
    built_in_functions,
    exp_function,
    inverse_function,
    log_function,
    polynomial,
    sqrt_function,
    square_function,
)
from tests.test_scalar_hh import RECIPROCAL_SHIFTED

SPECTRA = (0.1, 10.0)
AGM_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def seeded_pair(n, k, spectra=SPECTRA):
    return gen_commuting_pair(trial_rng(42, "operator_hh_tests", k), n, spectra)


def diagonal_pair():
    return make_pair(np.eye(2), [1.0, 4.0], [4.0, 1.0])


def rotated_pair(angle=0.3):
    c, s = math.cos(angle), math.sin(angle)
    return make_pair(np.array([[c, -s], [s, c]]), [1.0, 4.0], [4.0, 1.0])


def skewed_batches(size, factor=1.0 + 1e-6):
    """eig_hermitian_many with the eigenvalues of every batch of `size` matrices scaled by `factor`."""
    def decompose(hs):
        out = eig_hermitian_many(hs)
        if len(hs) != size:
            return out
        return [SpectralDecomposition(d.u, d.lam * factor) for d in out]
    return decompose


def middle_gap(coarse, fine):
    m, n = coarse.link_matrices[1].array, fine.link_matrices[1].array
    return float(np.linalg.norm(m - n)) / max(1.0, float(np.linalg.norm(n)))


class OperatorGeometricConvexityTests(unittest.TestCase):
    def test_built_in_functions_hold_on_seeded_pairs(self):
        for k, f in enumerate(built_in_functions()):
            for n in (2, 4):
                verdict = check_operator_geo_convex(f, seeded_pair(n, k, (0.2, 5.0)))

                self.assertEqual(verdict.status, VerdictStatus.HOLDS, (f.name, verdict.details))
                self.assertLessEqual(verdict.details["two_route_error"], 1e-10)

    def test_every_weight_is_decomposed_in_one_batch(self):
        lambdas = [0.0, 0.2, 0.5, 0.8, 1.0]
        with mock.patch("operator_hh.eig_hermitian_many", wraps=eig_hermitian_many) as spy:
            verdict = check_operator_geo_convex(exp_function(), seeded_pair(4, 3, (0.2, 5.0)), lambdas)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS)
        self.assertEqual(spy.call_count, 1)
        self.assertEqual(len(spy.call_args.args[0]), len(lambdas))

    def test_geometrically_concave_function_is_violated(self):
        p = make_pair(np.eye(2), [1.0, 1.0], [4.0, 4.0])
        verdict = check_operator_geo_convex(RECIPROCAL_SHIFTED, p)

        self.assertEqual(verdict.status, VerdictStatus.VIOLATED)
        self.assertIn("pair", verdict.witness)
        self.assertEqual(verdict.witness["function"], "1/(1+x)")


class CommutingChainTests(unittest.TestCase):
    def test_exp_special_chain_on_diagonal_pair(self):
        report = exp_special_chain(diagonal_pair())
        diagonals = report.scalar_links(np.eye(2))

        self.assertEqual(report.overall.status, VerdictStatus.HOLDS)
        np.testing.assert_allclose(diagonals[:, 0], [2.0, 2.164043, 2.5], atol=1e-6)
        np.testing.assert_allclose(diagonals[:, 1], [2.0, log_mean(4.0, 1.0), 2.5], atol=1e-13)
        self.assertLess(report.overall.details["closed_form_error"], 1e-13)

    def test_exp_special_chain_on_seeded_pairs(self):
        for k in range(12):
            report = exp_special_chain(seeded_pair((2, 4, 8)[k % 3], k))

            self.assertEqual(report.overall.status, VerdictStatus.HOLDS, report.overall.details)
            self.assertLessEqual(report.overall.details["two_route_error"], 1e-10)

    def test_log_chain_two_routes_agree(self):
        for k in range(6):
            p = seeded_pair(4, 100 + k)
            for f in (exp_function(), polynomial([2.0, 1.0])):
                report = hh_operator_log_chain(f, p)

                self.assertEqual(report.overall.status, VerdictStatus.HOLDS, (f.name, report.overall.details))
                self.assertLessEqual(report.overall.details["two_route_error"], 1e-10)

    def test_unlogged_chain_two_routes_agree(self):
        for k in range(6):
            p = seeded_pair(4, 200 + k)
            for f in (exp_function(), square_function()):
                report = hh_operator_unlogged_chain(f, p)

                self.assertEqual(report.overall.status, VerdictStatus.HOLDS, (f.name, report.overall.details))
                self.assertEqual(len(report.pairwise_verdicts), 2)

    def test_log_chain_rejects_non_positive_values(self):
        p = make_pair(np.eye(2), [0.5, 2.0], [2.0, 0.5])

        with self.assertRaises(ValueError):
            hh_operator_log_chain(log_function(), p)

    def test_exp_operator_geo_convexity(self):
        p = seeded_pair(4, 7, (0.1, 2.0))

        for nu in (0.0, 0.3, 1.0):
            report = exp_operator_geo_convex_check(p, nu)
            self.assertEqual(report.overall.status, VerdictStatus.HOLDS, (nu, report.overall.details))

    def test_report_serializes_every_link(self):
        payload = exp_special_chain(diagonal_pair()).to_dict()

        self.assertEqual([x["name"] for x in payload["links"]], ["sqrt(AB)", "geometric_integral", "arithmetic_mean"])
        self.assertEqual(payload["verdict"]["status"], "Holds")


class MatrixRouteTests(unittest.TestCase):
    def test_log_chain_decomposes_every_quadrature_node(self):
        q = QuadratureSpec()
        with mock.patch("operator_hh.eig_hermitian_many", wraps=eig_hermitian_many) as spy:
            hh_operator_log_chain(exp_function(), seeded_pair(3, 500), q)

        self.assertIn(q.total_nodes, [len(c.args[0]) for c in spy.call_args_list])

    def test_unlogged_chain_decomposes_both_curves_at_every_node(self):
        q = QuadratureSpec()
        with mock.patch("operator_hh.eig_hermitian_many", wraps=eig_hermitian_many) as spy:
            hh_operator_unlogged_chain(exp_function(), seeded_pair(3, 501), q)

        self.assertIn(2 * q.total_nodes, [len(c.args[0]) for c in spy.call_args_list])

    def test_log_chain_notices_a_wrong_matrix_calculus(self):
        q = QuadratureSpec()
        with mock.patch("operator_hh.eig_hermitian_many", new=skewed_batches(q.total_nodes)):
            report = hh_operator_log_chain(exp_function(), rotated_pair(), q)

        self.assertEqual(report.overall.status, VerdictStatus.INCONCLUSIVE)
        self.assertGreater(report.overall.details["two_route_error"], 1e-8)

    def test_unlogged_chain_notices_a_wrong_matrix_calculus(self):
        q = QuadratureSpec()
        with mock.patch("operator_hh.eig_hermitian_many", new=skewed_batches(2 * q.total_nodes)):
            report = hh_operator_unlogged_chain(exp_function(), rotated_pair(), q)

        self.assertEqual(report.overall.status, VerdictStatus.INCONCLUSIVE)
        self.assertGreater(report.overall.details["two_route_error"], 1e-8)

    def test_rotated_pair_holds_without_interference(self):
        for chain in (hh_operator_log_chain, hh_operator_unlogged_chain):
            report = chain(exp_function(), rotated_pair())

            self.assertEqual(report.overall.status, VerdictStatus.HOLDS, report.overall.details)


class ClosedFormTests(unittest.TestCase):
    def test_log_mean_mismatch_downgrades_exp_special_chain(self):
        p = diagonal_pair()
        skewed = HermitianMatrix.from_array(weighted_geometric_integral_closed_form(p).array + 1e-9 * np.eye(2))
        with mock.patch("operator_hh.weighted_geometric_integral_closed_form", return_value=skewed):
            report = exp_special_chain(p)

        self.assertEqual(report.overall.status, VerdictStatus.INCONCLUSIVE)
        self.assertGreater(report.overall.details["closed_form_error"], 1e-12)

    def test_square_integral_mismatch_downgrades_the_chain(self):
        rng = trial_rng(5, "operator_convex", 0)
        a, b = gen_hermitian(rng, 4), gen_hermitian(rng, 4)
        with mock.patch("operator_hh.SQUARE_INTEGRAL_RTOL", -1.0):
            report = operator_convex_hh_chain(square_function(), a, b)

        self.assertEqual(report.overall.status, VerdictStatus.INCONCLUSIVE)
        self.assertIn("closed_form_error", report.overall.details)


class QuadratureRefinementTests(unittest.TestCase):
    def test_doubling_the_rule_keeps_commuting_verdicts(self):
        q = QuadratureSpec()
        for k in range(3):
            p = seeded_pair(4, 600 + k, (0.2, 5.0))
            for f in (exp_function(), square_function()):
                for chain in (hh_operator_log_chain, hh_operator_unlogged_chain):
                    coarse, fine = chain(f, p, q), chain(f, p, q.doubled())

                    self.assertEqual(coarse.overall.status, fine.overall.status, (f.name, chain.__name__))
                    self.assertLessEqual(middle_gap(coarse, fine), 1e-11, (f.name, chain.__name__))

    def test_doubling_the_rule_keeps_exp_special_chain(self):
        q = QuadratureSpec()
        for k in range(3):
            p = seeded_pair(4, 610 + k)
            coarse, fine = exp_special_chain(p, q), exp_special_chain(p, q.doubled())

            self.assertEqual(coarse.overall.status, fine.overall.status)
            self.assertLessEqual(middle_gap(coarse, fine), 1e-11)


class OperatorConvexChainTests(unittest.TestCase):
    def test_square_matches_closed_form(self):
        rng = trial_rng(5, "operator_convex", 0)
        a, b = gen_hermitian(rng, 4), gen_hermitian(rng, 4)
        report = operator_convex_hh_chain(square_function(), a, b)

        self.assertEqual(report.overall.status, VerdictStatus.HOLDS, report.overall.details)
        self.assertLess(report.overall.details["closed_form_error"], 1e-12)
        self.assertEqual(len(report.link_names), 6)

    def test_inverse_on_positive_definite_pairs(self):
        for k in range(4):
            rng = trial_rng(5, "operator_convex", 10 + k)
            a, b = gen_pd(rng, 3, (0.5, 2.0)), gen_pd(rng, 3, (0.5, 2.0))
            report = operator_convex_hh_chain(inverse_function(), a, b)

            self.assertEqual(report.overall.status, VerdictStatus.HOLDS, report.overall.details)

    def test_equal_operands_collapse_the_chain(self):
        a = np.diag([1.0, 2.0])
        report = operator_convex_hh_chain(square_function(), a, a)

        for m in report.link_matrices:
            np.testing.assert_allclose(m.array, np.diag([1.0, 4.0]), atol=1e-13)

    def test_requires_operator_convex_function(self):
        with self.assertRaises(ValueError):
            operator_convex_hh_chain(sqrt_function(), np.eye(2), np.eye(2))


class AgmInequalityTests(unittest.TestCase):
    def test_holds_for_every_weight(self):
        for k in range(5):
            rng = trial_rng(9, "agm_inequality", k)
            a, b = gen_pd(rng, 4, SPECTRA), gen_pd(rng, 4, SPECTRA)
            for nu in AGM_WEIGHTS:
                verdict = agm_inequality_check(a, b, nu)

                self.assertEqual(verdict.status, VerdictStatus.HOLDS, (k, nu))
                self.assertEqual(verdict.details["nu"], nu)

    def test_equal_operands_give_zero_margin(self):
        verdict = agm_inequality_check(np.diag([2.0, 3.0]), np.diag([2.0, 3.0]), 0.5)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS)
        self.assertAlmostEqual(verdict.margin, 0.0, places=13)


class ClosureTests(unittest.TestCase):
    def test_closures_hold_for_exp(self):
        p = seeded_pair(3, 300, (0.2, 3.0))
        g = polynomial([2.0, 1.0])

        for kind in ("product", "t_times_f", "scalar_multiple", "norm_mcintosh"):
            verdict = closure_check(kind, exp_function(), p, g=g)
            self.assertEqual(verdict.status, VerdictStatus.HOLDS, (kind, verdict.details))

    def test_sum_records_both_readings(self):
        p = seeded_pair(3, 301, (0.2, 3.0))
        verdict = closure_check("sum", exp_function(), p, g=polynomial([2.0, 1.0]))

        self.assertEqual(verdict.status, VerdictStatus.HOLDS)
        self.assertEqual(verdict.details["multiplicative_reading"]["status"], "Holds")
        self.assertIn("status", verdict.details["literal_reading"])
        self.assertEqual(verdict.details["sum_geo_convex"], VerdictStatus.HOLDS)

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            closure_check("quotient", exp_function(), diagonal_pair())

    def test_operands_must_be_geometrically_convex(self):
        with self.assertRaises(ValueError):
            closure_check("product", exp_function(), diagonal_pair(), g=RECIPROCAL_SHIFTED)


class LogMonotoneCompatibilityTests(unittest.TestCase):
    def test_holding_chains_are_compatible(self):
        p = seeded_pair(4, 400)
        f = exp_function()
        verdict = log_monotone_compatibility(hh_operator_unlogged_chain(f, p), hh_operator_log_chain(f, p), p)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS, verdict.details)
        self.assertLess(verdict.details["endpoint_gap"], 1e-10)

    def test_failing_unlogged_chain_is_skipped(self):
        p = diagonal_pair()
        reversed_chain = OperatorChainReport.from_links(
            ["upper", "lower"], [2.0 * np.eye(2), np.eye(2)], LoewnerTolerance(), inputs={"case": "reversed"}
        )
        verdict = log_monotone_compatibility(reversed_chain, hh_operator_log_chain(exp_function(), p), p)

        self.assertEqual(reversed_chain.overall.status, VerdictStatus.VIOLATED)
        self.assertEqual(verdict.status, VerdictStatus.SKIPPED)
        self.assertTrue(math.isfinite(verdict.margin))


if __name__ == "__main__":
    unittest.main()
