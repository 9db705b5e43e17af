import math
import unittest

from ucadoa.array_model import DoA
from ucadoa.estimator.robustness import (
    EstimatorState,
    RipfParams,
    delta_bar,
    frequency_increment,
    robustness_radii,
    robustness_region,
    sample_focusing_angles,
)
from ucadoa.exceptions import InvalidArgumentError


def state_with(d_delta, focus_size):
    return EstimatorState(
        iteration=1,
        estimates=(DoA(60.0, 150.0),),
        source_count=1,
        delta_bar=d_delta,
        d_delta=d_delta,
        focus_set=frozenset(range(focus_size)),
    )


class TestRipfParams(unittest.TestCase):

    def test_defaults(self):
        params = RipfParams()
        self.assertEqual(params.max_iterations, 15)
        self.assertEqual(params.bias, 3.0)
        self.assertAlmostEqual(params.mu_f(32), 32 / 15 + 3.0)

    def test_validation(self):
        for kwargs in (
            {"max_iterations": 0},
            {"bias": 1.0},
            {"step_theta": 0.0},
            {"avg_err_phi": -1.0},
        ):
            with self.assertRaises(InvalidArgumentError):
                RipfParams(**kwargs)


class TestDeltaBar(unittest.TestCase):

    def test_identical_lists(self):
        doas = [DoA(60.0, 150.0), DoA(20.0, 45.0)]
        self.assertEqual(delta_bar(doas, list(doas)), 0.0)

    def test_equal_counts(self):
        prev = [DoA(60.0, 150.0), DoA(20.0, 45.0)]
        curr = [DoA(19.0, 46.0), DoA(61.0, 149.0)]
        self.assertAlmostEqual(delta_bar(prev, curr), 1.0)

    def test_different_counts(self):
        prev = [DoA(60.0, 150.0)]
        curr = [DoA(61.0, 149.0), DoA(30.0, 30.0)]
        # each current estimate takes its closest previous one: 2 and 30 + 120
        self.assertAlmostEqual(delta_bar(prev, curr), (2.0 + 150.0) / 4.0)

    def test_wraps_azimuth(self):
        self.assertAlmostEqual(delta_bar([DoA(30.0, 359.0)], [DoA(30.0, 1.0)]), 1.0)

    def test_rejects_empty(self):
        with self.assertRaises(InvalidArgumentError):
            delta_bar([], [DoA(1.0, 1.0)])


class TestFrequencyIncrement(unittest.TestCase):

    def setUp(self):
        self.params = RipfParams()

    def test_default_setup(self):
        self.assertEqual(frequency_increment(state_with(1.0, 1), 32, self.params), 6)

    def test_half_change(self):
        self.assertEqual(frequency_increment(state_with(0.5, 1), 32, self.params), 3)

    def test_capped_by_remaining_bins(self):
        self.assertEqual(frequency_increment(state_with(1.0, 32), 32, self.params), 0)
        self.assertEqual(frequency_increment(state_with(1.0, 30), 32, self.params), 2)

    def test_no_change_adds_nothing(self):
        self.assertEqual(frequency_increment(state_with(0.0, 4), 32, self.params), 0)


class TestRobustnessRadii(unittest.TestCase):

    def setUp(self):
        self.params = RipfParams()

    def test_first_iteration(self):
        r_theta, r_phi = robustness_radii(DoA(60.0, 150.0), 1, 1.0, self.params)
        self.assertAlmostEqual(r_theta, 7.5)
        self.assertAlmostEqual(r_phi, 3.0 * (3.0 - math.sqrt(3.0) / 2.0))
        self.assertAlmostEqual(r_phi, 6.4019, places=4)

    def test_third_iteration(self):
        first = robustness_radii(DoA(60.0, 150.0), 1, 1.0, self.params)
        third = robustness_radii(DoA(60.0, 150.0), 3, 1.0, self.params)
        self.assertAlmostEqual(third[0], first[0] / 3.0)
        self.assertAlmostEqual(third[1], first[1] / 3.0)

    def test_no_change_collapses_radii(self):
        self.assertEqual(robustness_radii(DoA(60.0, 150.0), 2, 0.0, self.params), (0.0, 0.0))

    def test_rejects_iteration_zero(self):
        with self.assertRaises(InvalidArgumentError):
            robustness_radii(DoA(60.0, 150.0), 0, 1.0, self.params)


class TestRobustnessRegion(unittest.TestCase):

    def test_elevation_clipped(self):
        region = robustness_region(DoA(5.0, 100.0), (10.0, 1.0))
        self.assertEqual((region.theta_lo, region.theta_hi), (0.0, 15.0))

    def test_azimuth_wraps(self):
        region = robustness_region(DoA(30.0, 350.0), (1.0, 20.0))
        self.assertEqual(region.azimuth_segments(), [(330.0, 360.0), (0.0, 10.0)])

    def test_zero_radii(self):
        region = robustness_region(DoA(30.0, 40.0), (0.0, 0.0))
        self.assertEqual((region.theta_lo, region.theta_hi, region.phi_lo, region.phi_hi), (30.0, 30.0, 40.0, 40.0))

    def test_wide_azimuth_is_full_circle(self):
        region = robustness_region(DoA(30.0, 40.0), (1.0, 200.0))
        self.assertTrue(region.full_circle)
        self.assertEqual(region.azimuth_segments(), [(0.0, 360.0)])

    def test_contains_center(self):
        for center in (DoA(0.0, 0.0), DoA(90.0, 359.5), DoA(45.0, 180.0)):
            region = robustness_region(center, (7.5, 6.4))
            self.assertTrue(region.spectrum_region().contains(center))
            self.assertGreaterEqual(region.theta_lo, 0.0)
            self.assertLessEqual(region.theta_hi, 90.0)

    def test_rejects_negative_radius(self):
        with self.assertRaises(InvalidArgumentError):
            robustness_region(DoA(30.0, 40.0), (-1.0, 0.0))


class TestSampleFocusingAngles(unittest.TestCase):

    def test_point_region(self):
        angles = sample_focusing_angles([robustness_region(DoA(30.0, 40.0), (0.0, 0.0))], 0.2, 0.2)
        self.assertEqual(angles.angles, [DoA(30.0, 40.0)])

    def test_grid_count(self):
        region = robustness_region(DoA(60.0, 150.0), (2.0, 2.0))
        self.assertEqual(len(sample_focusing_angles([region], 1.0, 1.0)), 25)

    def test_duplicate_regions_collapse(self):
        region = robustness_region(DoA(60.0, 150.0), (2.0, 2.0))
        once = sample_focusing_angles([region], 1.0, 1.0)
        twice = sample_focusing_angles([region, region], 1.0, 1.0)
        self.assertEqual(once.angles, twice.angles)

    def test_seam_region_is_wrapped(self):
        region = robustness_region(DoA(30.0, 359.0), (0.0, 2.0))
        angles = sample_focusing_angles([region], 1.0, 1.0)
        self.assertEqual(sorted(a.azimuth for a in angles.angles), [0.0, 1.0, 357.0, 358.0, 359.0])

    def test_rejects_no_region(self):
        with self.assertRaises(InvalidArgumentError):
            sample_focusing_angles([], 1.0, 1.0)


if __name__ == "__main__":
    unittest.main()
