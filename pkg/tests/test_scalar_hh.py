import math
import unittest

import numpy as np
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from errors import DomainViolation
from models import VerdictStatus
from scalar_functions import (
    POSITIVE_AXIS,
    REAL_LINE,
    ScalarFunctionSpec,
    built_in_functions,
    exp_function,
    log_function,
    power,
    square_function,
)
from scalar_hh import (
    check_geo_convex,
    check_midpoint_convex,
    exp_log_transform,
    hh_chain_basic,
    hh_classical_chain,
    hh_quarter_chain,
    hh_refinement,
    log_exp_transform,
)

BUILT_INS = built_in_functions()

# 1/(1+x): log∘f∘exp is concave, so the geometric inequality fails.
RECIPROCAL_SHIFTED = ScalarFunctionSpec("1/(1+x)", lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float)), POSITIVE_AXIS)

endpoints = st.tuples(
    st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
).filter(lambda ab: ab[1] - ab[0] > 1e-3)


class GeometricConvexityTests(unittest.TestCase):
    def test_exp_is_geometrically_convex(self):
        verdict = check_geo_convex(exp_function(), 1.0, 4.0)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS)
        self.assertEqual(verdict.details["grid"], 33)

    def test_powers_are_geometrically_affine(self):
        verdict = check_geo_convex(power(-2.0), 0.5, 3.0)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS)
        self.assertLess(abs(verdict.margin), 1e-12)

    def test_concave_log_composition_is_violated(self):
        verdict = check_geo_convex(RECIPROCAL_SHIFTED, 1.0, 4.0)

        self.assertEqual(verdict.status, VerdictStatus.VIOLATED)
        self.assertEqual(verdict.witness["function"], "1/(1+x)")

    def test_non_positive_endpoint(self):
        with self.assertRaises(DomainViolation):
            check_geo_convex(exp_function(), 0.0, 1.0)

    @seed(11)
    @settings(max_examples=80, deadline=None)
    @given(index=st.integers(0, len(BUILT_INS) - 1), ab=endpoints)
    def test_built_in_functions_hold(self, index, ab):
        verdict = check_geo_convex(BUILT_INS[index], *ab)

        self.assertEqual(verdict.status, VerdictStatus.HOLDS, verdict.to_dict())

    def test_finer_grid_never_overturns_holds(self):
        for f in BUILT_INS + [RECIPROCAL_SHIFTED]:
            for a, b in ((0.1, 10.0), (0.5, 2.0), (1.0, 4.0), (3.0, 3.5)):
                coarse = check_geo_convex(f, a, b)
                fine = check_geo_convex(f, a, b, grid=65)

                self.assertEqual(fine.details["grid"], 65)
                if coarse.status == VerdictStatus.HOLDS:
                    self.assertNotEqual(fine.status, VerdictStatus.VIOLATED, (f.name, a, b))


class HermiteHadamardChainTests(unittest.TestCase):
    def test_basic_chain_for_exp(self):
        chain = hh_chain_basic(exp_function(), 1.0, 2.0)

        self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS)
        self.assertAlmostEqual(chain.link_values[0], math.exp(math.sqrt(2.0)), places=12)
        self.assertAlmostEqual(chain.link("log_mean_f"), math.e ** 2 - math.e, places=12)
        self.assertAlmostEqual(chain.link_values[-1], 0.5 * (math.e + math.e ** 2), places=12)

    def test_quarter_chain_for_exp(self):
        chain = hh_quarter_chain(exp_function(), 1.0, 4.0)

        self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS)
        np.testing.assert_allclose(chain.link_values, [7.389, 8.342, 8.706, 9.488, 12.182], atol=1e-3)
        self.assertAlmostEqual(chain.link("mixed_mean"), math.exp(2.25), places=10)

    def test_refinement_holds_pointwise_and_integrated(self):
        chain = hh_refinement(exp_function(), 1.0, 4.0, 0.25)

        self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS)
        self.assertAlmostEqual(chain.link("pointwise_middle"), math.exp(1.5 * math.sqrt(2.0)), places=10)
        self.assertEqual(chain.verdict.details["integrated_verdict"], VerdictStatus.HOLDS)

    def test_refinement_weight_outside_unit_interval(self):
        with self.assertRaises(ValueError):
            hh_refinement(exp_function(), 1.0, 4.0, 1.5)

    def test_interval_must_be_ordered(self):
        with self.assertRaises(ValueError):
            hh_chain_basic(exp_function(), 2.0, 1.0)

    def test_non_positive_values_are_rejected(self):
        # log(0.5) < 0
        with self.assertRaises(DomainViolation):
            hh_chain_basic(log_function(), 0.5, 2.0)

    @seed(12)
    @settings(max_examples=60, deadline=None)
    @given(index=st.integers(0, len(BUILT_INS) - 1), ab=endpoints)
    def test_chains_hold_for_built_in_functions(self, index, ab):
        f = BUILT_INS[index]
        a, b = sorted(ab)

        for chain in (hh_chain_basic(f, a, b), hh_quarter_chain(f, a, b), hh_refinement(f, a, b, 0.3)):
            self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS, chain.to_dict())


class ClassicalChainTests(unittest.TestCase):
    def test_square_on_unit_interval(self):
        chain = hh_classical_chain(square_function(), 0.0, 1.0)

        np.testing.assert_allclose(chain.link_values, [0.25, 1.0 / 3.0, 0.5], atol=1e-14)
        self.assertEqual(chain.verdict.status, VerdictStatus.HOLDS)

    def test_exp_on_unit_interval(self):
        chain = hh_classical_chain(exp_function(), 0.0, 1.0)

        self.assertAlmostEqual(chain.link("average"), math.e - 1.0, places=13)

    def test_requires_convex_function(self):
        with self.assertRaises(ValueError):
            hh_classical_chain(log_function(), 1.0, 2.0)


class TransformTests(unittest.TestCase):
    def test_log_exp_transform_of_exp(self):
        big_f = log_exp_transform(exp_function())

        self.assertTrue(big_f.convex)
        np.testing.assert_allclose(big_f.eval(np.array([0.0, 1.0, -2.0])), np.exp([0.0, 1.0, -2.0]), rtol=1e-14)
        self.assertEqual(big_f.domain, REAL_LINE)

    def test_transforms_invert_each_other(self):
        f = BUILT_INS[4]
        back = exp_log_transform(log_exp_transform(f))
        x = np.linspace(0.2, 5.0, 11)

        self.assertTrue(back.geometrically_convex)
        np.testing.assert_allclose(back.eval(x), f.eval(x), rtol=1e-12)

    def test_convex_transform_passes_midpoint_check(self):
        for f in BUILT_INS:
            verdict = check_midpoint_convex(log_exp_transform(f), math.log(0.1), math.log(10.0))

            self.assertEqual(verdict.status, VerdictStatus.HOLDS, f.name)

    def test_concave_function_fails_midpoint_check(self):
        concave = ScalarFunctionSpec("-x^2", lambda x: -np.square(x), REAL_LINE)
        verdict = check_midpoint_convex(concave, -1.0, 1.0)

        self.assertEqual(verdict.status, VerdictStatus.VIOLATED)
        self.assertEqual(verdict.witness["function"], "-x^2")

    def test_transform_of_non_geometrically_convex_is_not_convex(self):
        self.assertFalse(log_exp_transform(RECIPROCAL_SHIFTED).convex)
        verdict = check_midpoint_convex(log_exp_transform(RECIPROCAL_SHIFTED), 0.0, 2.0)

        self.assertEqual(verdict.status, VerdictStatus.VIOLATED)


if __name__ == "__main__":
    unittest.main()
