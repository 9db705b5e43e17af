import unittest
from operator import attrgetter

import numpy as np

from ucadoa.api import benchmark_csm, ripf_csm
from ucadoa.array_model import ArrayGeometry, DoA, azimuth_distance
from ucadoa.constant.main import REFERENCE_DOA_GROUPS
from ucadoa.estimator import ExtraAngleCsmEstimator, Iterative2DCsmEstimator, RobustCsmEstimator
from ucadoa.estimator.rcsm_estimator import shrinking_azimuth_radius, shrinking_elevation_interval
from ucadoa.estimator.robustness import RipfParams, sample_focusing_angles
from ucadoa.estimator.secsm_estimator import extra_focusing_angles
from ucadoa.exceptions import InvalidArgumentError
from ucadoa.signal_sim import ScenarioConfig, make_pre_estimates, simulate_trial
from ucadoa.subspace import elevation_axis

TRUTH = [DoA(60.0, 150.0)]
BY_ANGLE = attrgetter("elevation", "azimuth")


def simulate(snr, seed=0, doas=TRUTH, **scenario):
    cfg = ScenarioConfig(duration=0.1e-6, fft_size=32, path_doas=doas, snr=snr, **scenario)
    geom = ArrayGeometry.for_band(5, cfg.max_frequency, 3e8)
    return geom, simulate_trial(geom, cfg, np.random.default_rng(seed)).stack


def coarse_params(**overrides):
    values = dict(step_theta=1.0, step_phi=1.0)
    values.update(overrides)
    return RipfParams(**values)


class TestRipfCsm(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.geom, cls.clean = simulate(None)
        _, cls.noisy = simulate(10.0, seed=1)
        cls.pre = make_pre_estimates(TRUTH, 3.0, 3.0, np.random.default_rng(2))

    def test_noiseless_exact_pre_estimates_converge_at_truth(self):
        params = coarse_params(avg_err_theta=0.0, avg_err_phi=0.0)
        estimates, trace = ripf_csm(self.clean, TRUTH, self.geom, params, np.random.default_rng(0))
        self.assertEqual(estimates, TRUTH)
        self.assertLessEqual(len(trace), 2)
        self.assertEqual(trace[0].bins_focused, 1)
        self.assertEqual(trace[-1].delta_bar, 0.0)

    def test_every_iteration_is_logged(self):
        with self.assertLogs("ucadoa.estimator.csm_estimator", level="INFO") as logs:
            _, trace = ripf_csm(self.noisy, self.pre, self.geom, coarse_params(), np.random.default_rng(4))
        lines = [line for line in logs.output if line.startswith("INFO:") and " iteration " in line]
        self.assertEqual(len(lines), len(trace))
        self.assertIn("ripf iteration 1:", lines[0])

    def test_single_iteration_cap(self):
        estimates, trace = ripf_csm(
            self.noisy, self.pre, self.geom, coarse_params(max_iterations=1), np.random.default_rng(0)
        )
        self.assertEqual(len(trace), 1)
        self.assertEqual(len(trace[0].focus_set), 1)
        self.assertEqual(len(estimates), trace[0].source_count)

    def test_same_stream_gives_same_trace(self):
        first = ripf_csm(self.noisy, self.pre, self.geom, coarse_params(), np.random.default_rng(7))
        second = ripf_csm(self.noisy, self.pre, self.geom, coarse_params(), np.random.default_rng(7))
        self.assertEqual(first[0], second[0])
        self.assertEqual([s.focus_set for s in first[1]], [s.focus_set for s in second[1]])

    def test_focus_set_only_grows(self):
        _, trace = ripf_csm(self.noisy, self.pre, self.geom, coarse_params(), np.random.default_rng(3))
        self.assertLessEqual(len(trace), 15)
        for before, after in zip(trace, trace[1:]):
            self.assertTrue(before.focus_set <= after.focus_set)
            self.assertEqual(after.previous_source_count, before.source_count)
        self.assertTrue(all(0 <= z < 32 for z in trace[-1].focus_set))

    def test_rejects_bad_input(self):
        with self.assertRaises(InvalidArgumentError):
            ripf_csm(self.clean, [], self.geom, coarse_params())
        other = ArrayGeometry(4, self.geom.radius)
        with self.assertRaises(InvalidArgumentError):
            ripf_csm(self.clean, TRUTH, other, coarse_params())


class TestNoiselessRecovery(unittest.TestCase):

    def test_reference_groups_with_several_sources(self):
        params = coarse_params(avg_err_theta=0.0, avg_err_phi=0.0)
        for n_sources in (2, 3):
            for group in REFERENCE_DOA_GROUPS[n_sources]:
                truth = [DoA(*doa) for doa in group]
                with self.subTest(truth=truth):
                    # paths 10 ns apart occupy different snapshots, so one bin already has rank N
                    geom, clean = simulate(None, doas=truth, path_delay=10e-9)
                    estimates, trace = ripf_csm(clean, truth, geom, params, np.random.default_rng(0))
                    self.assertEqual(trace[0].source_count, n_sources)
                    self.assertEqual(len(estimates), n_sources)
                    pairs = zip(sorted(estimates, key=BY_ANGLE), sorted(truth, key=BY_ANGLE))
                    for estimate, expected in pairs:
                        self.assertAlmostEqual(estimate.elevation, expected.elevation, delta=0.5)
                        self.assertLess(float(azimuth_distance(estimate.azimuth, expected.azimuth)), 0.5)


class TestConventionalCsm(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.geom, cls.clean = simulate(None)

    def test_noiseless_exact_pre_estimates(self):
        estimates, trace = benchmark_csm(self.clean, TRUTH, self.geom, "c-csm", coarse_params())
        self.assertEqual(estimates, TRUTH)
        self.assertEqual(len(trace), 1)
        self.assertEqual(trace[0].bins_focused, 32)

    def test_single_pass_variant(self):
        pre = [DoA(58.0, 153.0)]
        _, trace = benchmark_csm(self.clean, pre, self.geom, "C-CSM-1", coarse_params())
        self.assertEqual(len(trace), 1)

    def test_unknown_variant(self):
        with self.assertRaises(InvalidArgumentError):
            benchmark_csm(self.clean, TRUTH, self.geom, "ripf")
        with self.assertRaises(InvalidArgumentError):
            benchmark_csm(self.clean, TRUTH, self.geom, "music")


class TestExtraAngleCsm(unittest.TestCase):

    def test_extra_angles_are_the_corners(self):
        angles = extra_focusing_angles([DoA(30.0, 100.0)], 2.0, 4.0)
        expected = {(30.0, 100.0), (28.0, 96.0), (28.0, 104.0), (32.0, 96.0), (32.0, 104.0)}
        self.assertEqual({a.as_tuple() for a in angles.angles}, expected)

    def test_corners_clip_and_wrap(self):
        angles = extra_focusing_angles([DoA(0.0, 0.0)], 2.0, 4.0)
        self.assertEqual(
            sorted(a.as_tuple() for a in angles.angles),
            [(0.0, 0.0), (0.0, 4.0), (0.0, 356.0), (2.0, 4.0), (2.0, 356.0)],
        )

    def test_zero_offsets_collapse(self):
        self.assertEqual(len(extra_focusing_angles([DoA(10.0, 10.0)], 0.0, 0.0)), 1)

    def test_run_stays_near_truth(self):
        geom, noisy = simulate(10.0, seed=4)
        estimator = ExtraAngleCsmEstimator()
        estimates, trace = estimator.estimate(noisy, TRUTH, geom, coarse_params(), np.random.default_rng(0))
        self.assertEqual(len(estimates), 1)
        self.assertLessEqual(abs(estimates[0].elevation - 60.0), 3.0)
        self.assertLessEqual(abs(estimates[0].azimuth - 150.0), 3.0)
        self.assertEqual(trace[0].focusing_angle_count, 5)
        self.assertEqual(len(estimator.beamwidths), 2)


class TestRobustCsm(unittest.TestCase):

    def test_first_iteration_spans_the_hemisphere(self):
        lo, hi = shrinking_elevation_interval(30.0, 1.0)
        self.assertAlmostEqual(lo, 0.0)
        self.assertAlmostEqual(hi, 90.0)
        self.assertEqual(shrinking_azimuth_radius(1.0), 180.0)

    def test_second_iteration(self):
        lo, hi = shrinking_elevation_interval(30.0, 2.0)
        self.assertAlmostEqual(lo, 22.02, places=2)
        self.assertAlmostEqual(hi, 38.68, places=2)
        self.assertEqual(shrinking_azimuth_radius(2.0), 45.0)

    def test_region_contains_estimate(self):
        for doa in (DoA(0.0, 10.0), DoA(90.0, 10.0), DoA(45.0, 359.0)):
            regions = RobustCsmEstimator().focusing_regions(3, [doa], 1.0, coarse_params())
            self.assertTrue(regions[0].spectrum_region().contains(doa))

    def test_shrink_indices(self):
        params = coarse_params()
        self.assertEqual(RobustCsmEstimator().shrink_indices(3, params), (3.0, 3.0))
        self.assertEqual(Iterative2DCsmEstimator().shrink_indices(1, params), (1.0, 1.0))
        self.assertEqual(Iterative2DCsmEstimator().shrink_indices(3, params), (2.0, 2.0))

    def test_first_iteration_focuses_on_the_whole_hemisphere(self):
        geom, clean = simulate(None)
        pre = [DoA(30.0, 150.0)]
        params = coarse_params(max_iterations=1)
        region = RobustCsmEstimator().focusing_regions(1, pre, 1.0, params)[0]
        self.assertTrue(region.full_circle)
        expected = sample_focusing_angles([region], 1.0, 1.0)
        self.assertEqual(len(expected), len(elevation_axis(region.spectrum_region(), 1.0)) * 360)
        _, trace = benchmark_csm(clean, pre, geom, "r-csm", params, np.random.default_rng(0))
        self.assertEqual(len(trace), 1)
        self.assertEqual(trace[0].focusing_angle_count, len(expected))


if __name__ == "__main__":
    unittest.main()
