import unittest

import numpy as np
from numpy.testing import assert_allclose

from ucadoa.array_model import ArrayGeometry, DoA, manifold_matrix, steering_matrix
from ucadoa.exceptions import DegenerateFocusingError, InvalidArgumentError
from ucadoa.focusing import (
    FocusingAngleSet,
    FocusingMatrix,
    focused_covariance,
    focusing_matrices,
    rss_focusing_matrix,
)
from ucadoa.signal_sim import NarrowbandStack, bin_frequencies
from ucadoa.subspace import sample_covariance

F0 = 30e9


def default_geometry():
    return ArrayGeometry.for_band(5, 34.5e9, 3e8)


def random_unitary(rng, size):
    q, r = np.linalg.qr(rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_stack(rng, fft_size=4, elements=5, snapshots=6):
    matrices = rng.standard_normal((fft_size, elements, snapshots)) + 1j * rng.standard_normal(
        (fft_size, elements, snapshots)
    )
    return NarrowbandStack(matrices, bin_frequencies(F0, 11.25e9, fft_size), F0)


def grid_angles():
    theta, phi = np.meshgrid(np.arange(20.0, 70.0, 10.0), np.arange(0.0, 360.0, 72.0), indexing="ij")
    return theta.ravel(), phi.ravel()


class TestRssFocusingMatrix(unittest.TestCase):

    def setUp(self):
        self.geom = default_geometry()

    def test_reference_frequency_gives_identity(self):
        theta, phi = grid_angles()
        a0 = steering_matrix(self.geom, F0, theta, phi)
        b = rss_focusing_matrix(a0, a0, F0).matrix
        assert_allclose(b, np.eye(5), atol=1e-10)

    def test_unitary(self):
        theta, phi = grid_angles()
        a0 = steering_matrix(self.geom, F0, theta, phi)
        az = steering_matrix(self.geom, 27e9, theta, phi)
        b = rss_focusing_matrix(az, a0, 27e9).matrix
        self.assertLess(np.linalg.norm(b.conj().T @ b - np.eye(5)), 1e-9)

    def test_single_angle_beats_identity(self):
        doa = [DoA(40.0, 100.0)]
        a0 = manifold_matrix(self.geom, F0, doa)
        az = manifold_matrix(self.geom, 34e9, doa)
        b = rss_focusing_matrix(az, a0, 34e9).matrix
        self.assertLessEqual(np.linalg.norm(a0 - b @ az), np.linalg.norm(a0 - az) + 1e-12)
        assert_allclose(b @ az, a0, atol=1e-9)

    def test_beats_random_unitaries(self):
        rng = np.random.default_rng(0)
        az = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        a0 = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        best = np.linalg.norm(a0 - rss_focusing_matrix(az, a0, 1.0).matrix @ az)
        for _ in range(1000):
            candidate = random_unitary(rng, 5)
            self.assertLessEqual(best, np.linalg.norm(a0 - candidate @ az) + 1e-12)

    def test_degenerate_product(self):
        with self.assertRaises(DegenerateFocusingError):
            rss_focusing_matrix(np.zeros((5, 2)), np.zeros((5, 2)), 1.0)

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            rss_focusing_matrix(np.ones((5, 2)), np.ones((5, 3)), 1.0)


class TestFocusingAngleSet(unittest.TestCase):

    def test_from_doas(self):
        angles = FocusingAngleSet.from_doas([DoA(10.0, 20.0), DoA(30.0, 40.0)])
        self.assertEqual(len(angles), 2)
        self.assertEqual(angles.angles, [DoA(10.0, 20.0), DoA(30.0, 40.0)])

    def test_validation(self):
        with self.assertRaises(InvalidArgumentError):
            FocusingAngleSet(np.array([]), np.array([]))
        with self.assertRaises(InvalidArgumentError):
            FocusingAngleSet(np.array([95.0]), np.array([0.0]))
        with self.assertRaises(InvalidArgumentError):
            FocusingAngleSet(np.array([10.0, 20.0]), np.array([0.0]))


class TestFocusingMatrices(unittest.TestCase):

    def test_every_bin_is_focused_and_aligned(self):
        geom = default_geometry()
        stack = random_stack(np.random.default_rng(1), fft_size=8)
        doas = [DoA(60.0, 150.0)]
        matrices, degenerate = focusing_matrices(geom, stack, range(8), FocusingAngleSet.from_doas(doas))
        self.assertEqual(sorted(matrices), list(range(8)))
        self.assertEqual(degenerate, [])
        a0 = manifold_matrix(geom, F0, doas)
        for z, focusing in matrices.items():
            self.assertEqual(focusing.frequency, stack.frequencies[z])
            assert_allclose(focusing.matrix @ manifold_matrix(geom, stack.frequencies[z], doas), a0, atol=1e-9)


class TestFocusedCovariance(unittest.TestCase):

    def test_single_bin_identity(self):
        stack = random_stack(np.random.default_rng(2))
        focusing = {2: FocusingMatrix(np.eye(5), stack.frequencies[2])}
        r = focused_covariance(stack, [2], focusing).matrix
        expected = sample_covariance(stack.matrices[2], 1.0 / (6 * 4 ** 2)).matrix
        assert_allclose(r, expected, atol=1e-14)

    def test_identity_focusing_matches_naive_sum(self):
        stack = random_stack(np.random.default_rng(3))
        focusing = {z: FocusingMatrix(np.eye(5), f) for z, f in enumerate(stack.frequencies)}
        r = focused_covariance(stack, range(4), focusing).matrix
        expected = sum(x @ x.conj().T for x in stack.matrices) / (6 * 4 ** 2)
        assert_allclose(r, expected, atol=1e-12)
        assert_allclose(r, r.conj().T, atol=1e-14)
        self.assertGreaterEqual(np.linalg.eigvalsh(r).min(), -1e-12)

    def test_unitary_focusing_keeps_trace(self):
        rng = np.random.default_rng(4)
        stack = random_stack(rng)
        identity = {z: FocusingMatrix(np.eye(5), f) for z, f in enumerate(stack.frequencies)}
        rotated = {z: FocusingMatrix(random_unitary(rng, 5), f) for z, f in enumerate(stack.frequencies)}
        for z in range(4):
            self.assertAlmostEqual(
                np.trace(focused_covariance(stack, [z], identity).matrix).real,
                np.trace(focused_covariance(stack, [z], rotated).matrix).real,
                places=10,
            )

    def test_missing_focusing_matrix(self):
        stack = random_stack(np.random.default_rng(5))
        with self.assertRaises(InvalidArgumentError):
            focused_covariance(stack, [0, 1], {0: FocusingMatrix(np.eye(5), stack.frequencies[0])})
        with self.assertRaises(InvalidArgumentError):
            focused_covariance(stack, [], {})


if __name__ == "__main__":
    unittest.main()
