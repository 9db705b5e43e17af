import math
import os
import re
import shutil
import tempfile
import unittest

import numpy as np

from ucadoa.array_model import DoA, max_radius
from ucadoa.exceptions import ConfigError, InvalidArgumentError
from ucadoa.experiment import (
    BatchRunner,
    ExperimentConfig,
    ResultTable,
    crb_report,
    default_doa_groups,
    run_batch,
    trial_streams,
)
from ucadoa.output import RESULTS_FILE, emit_outputs, read_results_csv, write_crb_csv, write_results_csv


def tiny_document(output_dir, **overrides):
    document = {
        "scenario": {"duration": 0.1e-6, "fft_size": 32, "snr": 10.0},
        "methods": ["ripf", "c-csm"],
        "ripf": {"step_theta": 1.0, "step_phi": 1.0},
        "doa_groups": [[[60.0, 150.0]]],
        "trials": 2,
        "master_seed": 7,
        "record_wall_time": False,
        "output_dir": output_dir,
    }
    document.update(overrides)
    return document


class TestExperimentConfig(unittest.TestCase):

    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        self.assertEqual(cfg.methods, ("ripf",))
        self.assertEqual(cfg.trials, 50)
        self.assertEqual(len(cfg.doa_groups), 9)
        self.assertIsNone(cfg.sweep)
        self.assertFalse(cfg.record_wall_time)

    def test_reference_groups(self):
        groups = default_doa_groups()
        self.assertEqual(sorted(len(g) for g in groups), [1, 1, 1, 2, 2, 2, 3, 3, 3])
        self.assertEqual(groups[0], [DoA(60.0, 150.0)])

    def test_unknown_keys_are_rejected(self):
        for document in (
            {"trails": 3},
            {"scenario": {"snr_db": 3.0}},
            {"ripf": {"iterations": 3}},
            {"sweep": {"axis": "snr", "values": [1.0], "step": 1}},
        ):
            with self.assertRaises(ConfigError):
                ExperimentConfig.from_dict(document)

    def test_invalid_values(self):
        for document in (
            {"trials": 0},
            {"methods": ["music"]},
            {"methods": []},
            {"ripf": {"bias": 0.5}},
            {"doa_groups": [[[95.0, 0.0]]]},
            {"doa_groups": [[[10.0 * i, 0.0] for i in range(5)]]},
            {"sweep": {"axis": "elevation", "values": [1.0]}},
            {"sweep": {"axis": "snr", "values": []}},
            {"scenario": {"fft_size": 100000}},
        ):
            with self.assertRaises(ConfigError):
                ExperimentConfig.from_dict(document)

    def test_methods_are_case_insensitive(self):
        cfg = ExperimentConfig.from_dict({"methods": ["RIPF", "C-CSM"]})
        self.assertEqual(cfg.methods, ("ripf", "c-csm"))

    def test_sweep_resolution(self):
        cfg = ExperimentConfig.from_dict({"sweep": {"axis": "pre-error", "values": [1, 2]}})
        self.assertEqual(cfg.sweep.axis, "pre_error")
        self.assertEqual(cfg.sweep.values, (1.0, 2.0))
        _, params = cfg.resolved(2.0)
        self.assertEqual((params.avg_err_theta, params.avg_err_phi), (2.0, 2.0))

        snr = ExperimentConfig.from_dict({"sweep": {"axis": "snr", "values": [0]}})
        self.assertEqual(snr.resolved(0.0)[0].snr, 0.0)
        self.assertEqual(snr.resolved(None)[0].snr, 10.0)

        fft = ExperimentConfig.from_dict({"sweep": {"axis": "fft_size", "values": [16]}})
        self.assertEqual(fft.resolved(16.0)[0].fft_size, 16)
        self.assertIsInstance(fft.resolved(16.0)[0].fft_size, int)

        steps = ExperimentConfig.from_dict({"sweep": {"axis": "steps", "values": [0.5]}})
        _, params = steps.resolved(0.5)
        self.assertEqual((params.step_theta, params.step_phi), (0.5, 0.5))

    def test_full_scale(self):
        cfg = ExperimentConfig.from_dict({}).at_full_scale()
        self.assertEqual(cfg.scenario.duration, 10e-6)
        self.assertEqual(cfg.trials, 200)

    def test_geometry_defaults_to_grating_lobe_limit(self):
        geom = ExperimentConfig.from_dict({}).geometry()
        self.assertEqual(geom.element_count, 5)
        self.assertAlmostEqual(geom.radius, max_radius(5, 34.5e9, 3e8))


class TestTrialStreams(unittest.TestCase):

    def test_streams_are_reproducible_and_distinct(self):
        first = [np.random.default_rng(s).integers(0, 2 ** 62) for s in trial_streams(7, 0, 1, 2)]
        again = [np.random.default_rng(s).integers(0, 2 ** 62) for s in trial_streams(7, 0, 1, 2)]
        other = [np.random.default_rng(s).integers(0, 2 ** 62) for s in trial_streams(7, 0, 1, 3)]
        self.assertEqual(first, again)
        self.assertEqual(len(set(first)), 3)
        self.assertNotEqual(first, other)


class TestRunBatch(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.mkdtemp()
        cls.cfg = ExperimentConfig.from_dict(tiny_document(cls.directory))
        cls.table = run_batch(cls.cfg, threads=1)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.directory, ignore_errors=True)

    def test_one_row_per_method_and_source_count(self):
        self.assertEqual(len(self.table), 2)
        self.assertEqual(self.table.methods(), ["ripf", "c-csm"])
        for row in self.table.rows:
            self.assertEqual(row.n_sources, 1)
            self.assertEqual(row.sweep_axis, "none")
            self.assertIsNone(row.sweep_value)
            self.assertEqual(row.mean_wall_time_s, 0.0)
            self.assertTrue(0.0 <= row.sdp <= 1.0)
            self.assertGreaterEqual(row.rmse_deg, 0.0)
            self.assertGreater(row.mean_flops, 0.0)
            self.assertGreaterEqual(row.mean_iterations, 1.0)

    def test_methods_see_identical_inputs(self):
        checksums = {row.input_checksum for row in self.table.rows}
        self.assertEqual(len(checksums), 1)
        self.assertEqual(len(checksums.pop()), 16)

    def test_bound_is_finite_and_shared(self):
        bounds = [row.rmse_crb_deg for row in self.table.rows]
        self.assertTrue(all(math.isfinite(b) and b > 0 for b in bounds))
        self.assertEqual(bounds[0], bounds[1])
        report = crb_report(self.cfg)
        self.assertEqual(len(report), 1)
        self.assertEqual(report[0][:2], (1, None))
        self.assertAlmostEqual(report[0][2], bounds[0])

    def test_cheaper_fraction(self):
        self.assertEqual(list(self.table.cheaper_fraction), [(1, None)])
        self.assertTrue(0.0 <= self.table.cheaper_fraction[(1, None)] <= 1.0)

    def test_thread_count_does_not_change_results(self):
        threaded = run_batch(self.cfg, threads=3)
        with tempfile.TemporaryDirectory() as directory:
            single_path = write_results_csv(self.table, os.path.join(directory, "single.csv"))
            threaded_path = write_results_csv(threaded, os.path.join(directory, "threaded.csv"))
            with open(single_path, "rb") as single, open(threaded_path, "rb") as other:
                self.assertEqual(single.read(), other.read())

    def test_emit_outputs(self):
        with tempfile.TemporaryDirectory() as directory:
            written = emit_outputs(self.table, directory)
            self.assertEqual(sorted(written), ["results", "rmse", "runtime", "sdp"])
            for path in written.values():
                self.assertTrue(os.path.isfile(path))
            with open(written["rmse"], "r", encoding="utf-8") as fp:
                rmse_ids = set(re.findall(r'id="(series-[^"]+)"', fp.read()))
            self.assertEqual(rmse_ids, {"series-ripf-n1", "series-c-csm-n1", "series-crb-n1"})
            with open(written["sdp"], "r", encoding="utf-8") as fp:
                sdp_ids = set(re.findall(r'id="(series-[^"]+)"', fp.read()))
            self.assertEqual(sdp_ids, {"series-ripf-n1", "series-c-csm-n1"})
            self.assertEqual(read_results_csv(os.path.join(directory, RESULTS_FILE)).rows, self.table.rows)

    def test_unwritable_output_directory(self):
        with tempfile.TemporaryDirectory() as directory:
            blocker = os.path.join(directory, "blocker")
            with open(blocker, "w", encoding="utf-8") as fp:
                fp.write("not a directory")
            cfg = ExperimentConfig.from_dict(tiny_document(os.path.join(blocker, "out")))
            with self.assertRaises(OSError):
                run_batch(cfg)


class TestReproducibility(unittest.TestCase):

    def test_default_config_writes_identical_bytes(self):
        with tempfile.TemporaryDirectory() as directory:
            document = tiny_document(directory, methods=["ripf"], trials=1)
            del document["record_wall_time"]
            cfg = ExperimentConfig.from_dict(document)
            contents = []
            for name in ("first.csv", "second.csv"):
                path = write_results_csv(run_batch(cfg), os.path.join(directory, name))
                with open(path, "rb") as fp:
                    contents.append(fp.read())
            walls = [row.mean_wall_time_s for row in read_results_csv(path).rows]
        self.assertEqual(contents[0], contents[1])
        self.assertEqual(walls, [0.0])


class TestMethodRanking(unittest.TestCase):
    """High-SNR batch with an off-grid source, so no method can hit the truth exactly."""

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.mkdtemp()
        document = tiny_document(
            cls.directory,
            methods=["ripf", "r-csm", "i-2d-csm"],
            scenario={"duration": 0.1e-6, "fft_size": 32, "snr": 20.0},
            doa_groups=[[[60.3, 150.4]]],
            trials=3,
            master_seed=11,
            record_wall_time=True,
        )
        cfg = ExperimentConfig.from_dict(document)
        cls.rows = {row.method: row for row in BatchRunner(cfg, threads=1).run().rows}

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.directory, ignore_errors=True)

    def test_partial_focusing_is_as_accurate_as_full_band_methods(self):
        ripf = self.rows["ripf"].rmse_deg
        for method in ("r-csm", "i-2d-csm"):
            # within one grid step
            self.assertLessEqual(ripf, self.rows[method].rmse_deg + 1.0, method)

    def test_no_method_beats_the_bound(self):
        for method, row in self.rows.items():
            self.assertTrue(math.isfinite(row.rmse_crb_deg))
            self.assertGreaterEqual(row.rmse_deg, row.rmse_crb_deg, method)

    def test_partial_focusing_is_cheapest(self):
        ripf = self.rows["ripf"]
        for method in ("r-csm", "i-2d-csm"):
            self.assertLess(ripf.mean_flops, self.rows[method].mean_flops, method)
            self.assertLess(ripf.mean_wall_time_s, self.rows[method].mean_wall_time_s, method)
            self.assertGreater(ripf.mean_wall_time_s, 0.0)


class TestOutputFiles(unittest.TestCase):

    def test_empty_table(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(InvalidArgumentError):
                emit_outputs(ResultTable(), directory)

    def test_foreign_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "other.csv")
            with open(path, "w", encoding="utf-8") as fp:
                fp.write("a,b\n1,2\n")
            with self.assertRaises(InvalidArgumentError):
                read_results_csv(path)

    def test_crb_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_crb_csv([(1, 0.0, 0.5), (2, 0.0, float("nan"))], os.path.join(directory, "crb.csv"), "snr")
            with open(path, "r", encoding="utf-8") as fp:
                lines = fp.read().splitlines()
        self.assertEqual(
            lines,
            ["n_sources,sweep_axis,sweep_value,rmse_crb_deg", "1,snr,0.0,0.5", "2,snr,0.0,nan"],
        )


if __name__ == "__main__":
    unittest.main()
