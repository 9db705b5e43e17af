"""
Uniform circular array geometry, steering vectors and manifold matrices.

Angles are degrees at every public boundary; radians only appear inside the
trigonometric evaluation. Element m sits at polar angle 2*pi*m/M on a circle of
radius r, with the zero-phase reference at the array center.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ucadoa.constant.main import (
    BEAMWIDTH_SCAN_STEP,
    SPEED_OF_LIGHT,
)
from ucadoa.exceptions import DegeneratePatternError, InvalidArgumentError

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def normalize_azimuth(phi):
    """Reduce azimuth(s) in degrees into [0, 360)."""
    wrapped = np.mod(phi, 360.0)
    # np.mod can round a tiny negative input up to exactly 360.0
    return np.where(wrapped >= 360.0, wrapped - 360.0, wrapped)


def azimuth_distance(phi_a, phi_b):
    """Angular distance in degrees between azimuths, honoring the 0/360 seam."""
    diff = np.abs(np.mod(np.asarray(phi_a, dtype=float) - np.asarray(phi_b, dtype=float), 360.0))
    return np.minimum(diff, 360.0 - diff)


@dataclass(frozen=True)
class DoA:
    """
    Direction of arrival.

    Attributes:
        elevation (float): Elevation in degrees, within [0, 90].
        azimuth (float): Azimuth in degrees, normalized into [0, 360).
    """

    elevation: float
    azimuth: float

    def __post_init__(self):
        elevation = float(self.elevation)
        if not 0.0 <= elevation <= 90.0:
            logger.error(f"Elevation out of range [0, 90]: {elevation}")
            raise InvalidArgumentError(f"Elevation out of range [0, 90]: {elevation}")
        object.__setattr__(self, "elevation", elevation)
        object.__setattr__(self, "azimuth", float(normalize_azimuth(float(self.azimuth))))

    def as_tuple(self) -> Tuple[float, float]:
        return self.elevation, self.azimuth


def doa_arrays(doas: Sequence[DoA]) -> Tuple[np.ndarray, np.ndarray]:
    """Split a DoA list into (elevations, azimuths) arrays in degrees."""
    theta = np.array([d.elevation for d in doas], dtype=float)
    phi = np.array([d.azimuth for d in doas], dtype=float)
    return theta, phi


def angular_costs(first: Sequence[DoA], second: Sequence[DoA]) -> np.ndarray:
    """len(first) x len(second) matrix of |d theta| + |d phi| with wrapped azimuth distance."""
    theta_a, phi_a = doa_arrays(first)
    theta_b, phi_b = doa_arrays(second)
    return np.abs(theta_a[:, None] - theta_b[None, :]) + azimuth_distance(
        phi_a[:, None], phi_b[None, :]
    )


def greedy_match(first: Sequence[DoA], second: Sequence[DoA]) -> List[Tuple[int, int]]:
    """
    Pair DoAs by repeatedly taking the closest unpaired couple.

    Returns (index into first, index into second) pairs in the order they were taken;
    min(len(first), len(second)) pairs are produced. Ties resolve to the lowest
    row-major index.
    """
    if len(first) == 0 or len(second) == 0:
        return []
    costs = angular_costs(first, second)
    pairs = []
    for _ in range(min(costs.shape)):
        i, j = np.unravel_index(int(np.argmin(costs)), costs.shape)
        pairs.append((int(i), int(j)))
        costs[i, :] = np.inf
        costs[:, j] = np.inf
    return pairs


def max_radius(element_count: int, max_frequency: float, light_speed: float = SPEED_OF_LIGHT) -> float:
    """
    Largest UCA radius without grating lobes.

    Args:
        element_count (int): Number of elements M, at least 2.
        max_frequency (float): Highest signal frequency in hertz.
        light_speed (float): Propagation speed in m/s.

    Returns:
        float: (c / f_max) / (4 sin(pi / M)) in meters.
    """
    if element_count < 2:
        raise InvalidArgumentError(f"Element count must be >= 2, got {element_count}")
    if max_frequency <= 0:
        raise InvalidArgumentError(f"Maximum frequency must be positive, got {max_frequency}")
    wavelength = light_speed / max_frequency
    return wavelength / (4.0 * math.sin(math.pi / element_count))


@dataclass(frozen=True)
class ArrayGeometry:
    """
    Uniform circular array of omni-directional elements.

    Attributes:
        element_count (int): Number of elements M.
        radius (float): Circle radius r in meters.
        light_speed (float): Propagation speed c in m/s.
        max_frequency (float, optional): Highest frequency the array must serve.
            When given, the radius is checked against the grating-lobe limit.
    """

    element_count: int
    radius: float
    light_speed: float = SPEED_OF_LIGHT
    max_frequency: Optional[float] = None

    def __post_init__(self):
        if self.element_count < 2:
            logger.error(f"Element count must be >= 2, got {self.element_count}")
            raise InvalidArgumentError(f"Element count must be >= 2, got {self.element_count}")
        if self.radius <= 0:
            logger.error(f"Radius must be positive, got {self.radius}")
            raise InvalidArgumentError(f"Radius must be positive, got {self.radius}")
        if self.max_frequency is not None:
            limit = max_radius(self.element_count, self.max_frequency, self.light_speed)
            if self.radius > limit * (1.0 + 1e-12):
                logger.error(f"Radius {self.radius} m exceeds the grating-lobe limit {limit} m")
                raise InvalidArgumentError(
                    f"Radius {self.radius} m exceeds the grating-lobe limit {limit} m"
                )

    @classmethod
    def for_band(cls, element_count: int, max_frequency: float, light_speed: float = SPEED_OF_LIGHT):
        """Build the array with the largest radius allowed up to max_frequency."""
        radius = max_radius(element_count, max_frequency, light_speed)
        return cls(element_count, radius, light_speed, max_frequency)

    @property
    def element_angles(self) -> np.ndarray:
        """Polar angle of every element in radians."""
        return 2.0 * np.pi * np.arange(self.element_count) / self.element_count

    def wavenumber_radius(self, frequency: float) -> float:
        """2*pi*r*f/c, the phase scale of the steering vector."""
        return 2.0 * np.pi * self.radius * frequency / self.light_speed


def _check_frequency(frequency: float):
    if frequency <= 0:
        logger.error(f"Frequency must be positive, got {frequency}")
        raise InvalidArgumentError(f"Frequency must be positive, got {frequency}")


def phase_kernel(geom: ArrayGeometry, theta_deg, phi_deg) -> np.ndarray:
    """
    Frequency-independent part of the steering phase.

    Returns the M x P matrix sin(theta_p) * cos(2*pi*m/M - phi_p); the steering
    matrix at frequency f is exp(1j * wavenumber_radius(f) * kernel).
    """
    theta = np.deg2rad(np.atleast_1d(np.asarray(theta_deg, dtype=float)))
    phi = np.deg2rad(np.atleast_1d(np.asarray(phi_deg, dtype=float)))
    gamma = geom.element_angles[:, None]
    return np.sin(theta)[None, :] * np.cos(gamma - phi[None, :])


def steering_matrix(geom: ArrayGeometry, frequency: float, theta_deg, phi_deg) -> np.ndarray:
    """Steering vectors for arrays of angles, stacked as the columns of an M x P matrix."""
    _check_frequency(frequency)
    return np.exp(1j * geom.wavenumber_radius(frequency) * phase_kernel(geom, theta_deg, phi_deg))


def steering_vector(geom: ArrayGeometry, frequency: float, doa: DoA) -> np.ndarray:
    """
    Steering vector of a plane wave.

    Args:
        geom (ArrayGeometry): The array.
        frequency (float): Frequency in hertz, positive.
        doa (DoA): Direction of arrival.

    Returns:
        np.ndarray: Length-M complex vector, entry m equal to
        exp(j * (2*pi*r*f/c) * sin(theta) * cos(2*pi*m/M - phi)).
    """
    return steering_matrix(geom, frequency, doa.elevation, doa.azimuth)[:, 0]


def manifold_matrix(geom: ArrayGeometry, frequency: float, doas: Sequence[DoA]) -> np.ndarray:
    """M x N manifold matrix, column n the steering vector of doas[n]."""
    if len(doas) == 0:
        logger.error("Manifold matrix needs at least one DoA")
        raise InvalidArgumentError("Manifold matrix needs at least one DoA")
    if len(doas) >= geom.element_count:
        logger.error(
            f"Subspace methods need fewer sources than elements: N={len(doas)}, M={geom.element_count}"
        )
        raise InvalidArgumentError(
            f"Subspace methods need fewer sources than elements: N={len(doas)}, M={geom.element_count}"
        )
    theta, phi = doa_arrays(doas)
    return steering_matrix(geom, frequency, theta, phi)


def steering_derivatives(geom: ArrayGeometry, frequency: float, doa: DoA) -> Tuple[np.ndarray, np.ndarray]:
    """
    Partial derivatives of the steering vector with respect to elevation and azimuth.

    Derivatives are per radian:
        d a / d theta = j k cos(theta) diag[cos(2 pi m / M - phi)] a
        d a / d phi   = j k sin(theta) diag[sin(2 pi m / M - phi)] a
    with k = 2 pi r f / c.
    """
    _check_frequency(frequency)
    a = steering_vector(geom, frequency, doa)
    theta = np.deg2rad(doa.elevation)
    phi = np.deg2rad(doa.azimuth)
    gamma = geom.element_angles
    k = geom.wavenumber_radius(frequency)
    d_theta = 1j * k * np.cos(theta) * np.cos(gamma - phi) * a
    d_phi = 1j * k * np.sin(theta) * np.sin(gamma - phi) * a
    return d_theta, d_phi


def array_power_pattern(geom: ArrayGeometry, frequency: float, weights: np.ndarray, theta_deg, phi_deg) -> np.ndarray:
    """|w^H a(theta, phi)|^2 for every (theta, phi) pair."""
    a = steering_matrix(geom, frequency, theta_deg, phi_deg)
    return np.abs(weights.conj() @ a) ** 2


def _half_power_width(power: np.ndarray, angles: np.ndarray) -> float:
    threshold = power[0] * 10.0 ** (-3.0 / 10.0)
    below = np.flatnonzero(power <= threshold)
    if below.size == 0:
        return math.nan
    return 2.0 * float(angles[below[0]])


def quiescent_beamwidths(geom: ArrayGeometry, center_frequency: float) -> Tuple[float, float]:
    """
    3 dB beamwidths of the uniform-weight pattern steered to (0 deg, 0 deg).

    The pattern is scanned at 0.01 deg resolution along two orthogonal cuts through
    the beam: the elevation cut in the phi = 0 plane and the horizontal cut in the
    phi = 90 deg plane. At broadside a constant-elevation azimuth cut is flat, so the
    horizontal width is measured across the beam instead.

    Returns:
        tuple: (BW_theta, BW_phi) full widths in degrees.

    Raises:
        DegeneratePatternError: If a cut never drops 3 dB within [0, 90] degrees.
    """
    weights = steering_vector(geom, center_frequency, DoA(0.0, 0.0))
    angles = np.arange(0.0, 90.0 + BEAMWIDTH_SCAN_STEP / 2, BEAMWIDTH_SCAN_STEP)

    widths = []
    for cut_azimuth in (0.0, 90.0):
        power = array_power_pattern(
            geom, center_frequency, weights, angles, np.full_like(angles, cut_azimuth)
        )
        width = _half_power_width(power, angles)
        if math.isnan(width):
            logger.error(f"Array pattern never drops 3 dB along the phi={cut_azimuth} cut")
            raise DegeneratePatternError(
                f"Array pattern never drops 3 dB along the phi={cut_azimuth} cut"
            )
        widths.append(width)

    logger.debug(f"Quiescent beamwidths at {center_frequency} Hz: {widths}")
    return widths[0], widths[1]
