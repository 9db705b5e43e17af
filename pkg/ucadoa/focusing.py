"""
Rotational signal-subspace (RSS) focusing.

Bin indices in this module are 0-based positions into NarrowbandStack.matrices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from ucadoa.array_model import ArrayGeometry, DoA, doa_arrays, phase_kernel
from ucadoa.constant.main import SINGULAR_VALUE_FLOOR
from ucadoa.exceptions import DegenerateFocusingError, InvalidArgumentError
from ucadoa.signal_sim import NarrowbandStack
from ucadoa.subspace import CovarianceMatrix

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


@dataclass(frozen=True)
class FocusingMatrix:
    """Unitary M x M matrix mapping bin f_z onto the reference frequency."""

    matrix: np.ndarray
    frequency: float


@dataclass(frozen=True)
class FocusingAngleSet:
    """
    Angles whose manifold the focusing matrices align across frequency.

    Stored as parallel elevation / azimuth arrays in degrees; full-range benchmark
    sets reach hundreds of thousands of angles.
    """

    elevations: np.ndarray
    azimuths: np.ndarray

    def __post_init__(self):
        elevations = np.asarray(self.elevations, dtype=float).ravel()
        azimuths = np.asarray(self.azimuths, dtype=float).ravel()
        if elevations.size == 0 or elevations.shape != azimuths.shape:
            logger.error("Focusing angle set is empty or ragged")
            raise InvalidArgumentError("Focusing angle set is empty or ragged")
        if np.any(elevations < 0.0) or np.any(elevations > 90.0):
            logger.error("Focusing elevations must lie in [0, 90]")
            raise InvalidArgumentError("Focusing elevations must lie in [0, 90]")
        object.__setattr__(self, "elevations", elevations)
        object.__setattr__(self, "azimuths", azimuths)

    @classmethod
    def from_doas(cls, doas: Sequence[DoA]):
        theta, phi = doa_arrays(doas)
        return cls(theta, phi)

    @property
    def angles(self) -> List[DoA]:
        return [DoA(t, p) for t, p in zip(self.elevations, self.azimuths)]

    def __len__(self):
        return self.elevations.size


def rss_focusing_matrix(a_z: np.ndarray, a_0: np.ndarray, frequency: float) -> FocusingMatrix:
    """
    Unitary B minimizing ||A_0 - B A_z||_F.

    With A_z A_0^H = U_L S U_R^H, the minimizer is B = U_R U_L^H.

    Raises:
        DegenerateFocusingError: If every singular value of A_z A_0^H is below 1e-12.
    """
    if a_z.shape != a_0.shape:
        logger.error(f"Manifold shapes differ: {a_z.shape} vs {a_0.shape}")
        raise InvalidArgumentError(f"Manifold shapes differ: {a_z.shape} vs {a_0.shape}")
    try:
        u_left, singular_values, u_right_h = linalg.svd(a_z @ a_0.conj().T)
    except linalg.LinAlgError as e:
        logger.error(f"SVD failed at {frequency} Hz: {e}")
        raise DegenerateFocusingError(f"SVD failed at {frequency} Hz: {e}") from e
    if np.all(singular_values < SINGULAR_VALUE_FLOOR):
        logger.error(f"Focusing product is numerically zero at {frequency} Hz")
        raise DegenerateFocusingError(f"Focusing product is numerically zero at {frequency} Hz")
    return FocusingMatrix(u_right_h.conj().T @ u_left.conj().T, frequency)


def focusing_matrices(
    geom: ArrayGeometry,
    stack: NarrowbandStack,
    bins: Iterable[int],
    angles: FocusingAngleSet,
) -> Tuple[Dict[int, FocusingMatrix], List[int]]:
    """
    RSS focusing matrices for several bins over one angle set.

    Returns:
        tuple: ({bin: FocusingMatrix} for every bin that could be focused,
        sorted list of bins whose focusing product was degenerate).
    """
    kernel = phase_kernel(geom, angles.elevations, angles.azimuths)
    reference = np.exp(1j * geom.wavenumber_radius(stack.center_frequency) * kernel)

    matrices = {}
    degenerate = []
    for z in sorted(bins):
        frequency = float(stack.frequencies[z])
        manifold = np.exp(1j * geom.wavenumber_radius(frequency) * kernel)
        try:
            matrices[z] = rss_focusing_matrix(manifold, reference, frequency)
        except DegenerateFocusingError:
            logger.warning(f"Dropping bin {z} ({frequency} Hz): focusing is degenerate")
            degenerate.append(z)
    return matrices, degenerate


def focused_covariance(
    stack: NarrowbandStack, selected: Sequence[int], focusing: Dict[int, FocusingMatrix]
) -> CovarianceMatrix:
    """
    (1 / (K_f Z^2)) * sum over selected bins of (B X)(B X)^H.

    Args:
        stack (NarrowbandStack): Per-bin snapshots.
        selected (list): 0-based bin indices to accumulate.
        focusing (dict): Focusing matrix of every selected bin.
    """
    selected = sorted(set(selected))
    if not selected:
        logger.error("Focused covariance needs at least one bin")
        raise InvalidArgumentError("Focused covariance needs at least one bin")
    missing = [z for z in selected if z not in focusing]
    if missing:
        logger.error(f"No focusing matrix for bins {missing}")
        raise InvalidArgumentError(f"No focusing matrix for bins {missing}")

    m = stack.element_count
    total = np.zeros((m, m), dtype=complex)
    for z in selected:
        focused = focusing[z].matrix @ stack.matrices[z]
        total += focused @ focused.conj().T
    scale = 1.0 / (stack.snapshots_per_bin * stack.fft_size ** 2)
    return CovarianceMatrix(scale * total)
