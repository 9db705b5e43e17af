"""
Covariance estimation, eigendecomposition, source counting, MUSIC spectrum and peak search.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import linalg, ndimage

from ucadoa.array_model import ArrayGeometry, DoA, normalize_azimuth, phase_kernel
from ucadoa.constant.main import (
    EIGENVALUE_RATIO_FLOOR,
    GRID_DECIMALS,
    HERMITIAN_TOLERANCE,
    SPECTRUM_CEILING,
    SPECTRUM_DENOMINATOR_FLOOR,
)
from ucadoa.exceptions import DegenerateCovarianceError, InvalidArgumentError

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# Grid points evaluated per block in music_spectrum
_SPECTRUM_CHUNK = 4096
# Relative slack when deciding whether a grid point still lies inside its region
_GRID_SLACK = 1e-9


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian M x M covariance matrix."""

    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectrumRegion:
    """
    Rectangular search region.

    The azimuth interval is kept unwrapped (phi_lo may be negative, phi_hi may exceed
    360) so that sampling across the 0/360 seam stays contiguous; sampled azimuths are
    wrapped afterwards.
    """

    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float

    @property
    def full_circle(self) -> bool:
        return self.phi_hi - self.phi_lo >= 360.0 - _GRID_SLACK

    def contains(self, doa: DoA) -> bool:
        if not self.theta_lo - _GRID_SLACK <= doa.elevation <= self.theta_hi + _GRID_SLACK:
            return False
        if self.full_circle:
            return True
        offset = float(normalize_azimuth(doa.azimuth - self.phi_lo))
        return offset <= self.phi_hi - self.phi_lo + _GRID_SLACK


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    """lo, lo + step, ... up to hi (inclusive within slack), rounded to the grid precision."""
    if step <= 0:
        logger.error(f"Grid step must be positive, got {step}")
        raise InvalidArgumentError(f"Grid step must be positive, got {step}")
    count = int(math.floor((hi - lo) / step + _GRID_SLACK)) + 1
    return np.round(lo + step * np.arange(max(count, 1)), GRID_DECIMALS)


def elevation_axis(region: SpectrumRegion, step: float) -> np.ndarray:
    return np.clip(_axis(region.theta_lo, region.theta_hi, step), 0.0, 90.0)


def azimuth_axis(region: SpectrumRegion, step: float) -> np.ndarray:
    """Wrapped azimuth samples of a region; a full circle never repeats its first point."""
    if region.full_circle:
        count = int(math.ceil(360.0 / step - _GRID_SLACK))
        unwrapped = np.round(region.phi_lo + step * np.arange(count), GRID_DECIMALS)
    else:
        unwrapped = _axis(region.phi_lo, region.phi_hi, step)
    return np.round(normalize_azimuth(unwrapped), GRID_DECIMALS)


def full_range_regions() -> List[SpectrumRegion]:
    """The whole visible hemisphere: elevation [0, 90], azimuth [0, 360)."""
    return [SpectrumRegion(0.0, 90.0, 0.0, 360.0)]


def full_range_dimensions(step_theta: float, step_phi: float) -> Tuple[int, int]:
    """(L_theta, L_phi) of the full-range grid."""
    region = full_range_regions()[0]
    return len(elevation_axis(region, step_theta)), len(azimuth_axis(region, step_phi))


@dataclass
class SpectrumGrid:
    """
    MUSIC spectrum sampled over one or more regions.

    Attributes:
        regions (list): The sampled SpectrumRegion objects.
        step_theta (float): Elevation step in degrees.
        step_phi (float): Azimuth step in degrees.
        values (list): One L_theta x L_phi array per region.
        elevations (list): Elevation axis of every region.
        azimuths (list): Wrapped azimuth axis of every region.
    """

    regions: List[SpectrumRegion]
    step_theta: float
    step_phi: float
    values: List[np.ndarray] = field(default_factory=list)
    elevations: List[np.ndarray] = field(default_factory=list)
    azimuths: List[np.ndarray] = field(default_factory=list)

    @property
    def point_count(self) -> int:
        return sum(v.size for v in self.values)


def sample_covariance(y: np.ndarray, scale: float = 1.0) -> CovarianceMatrix:
    """scale * Y Y^H for an M x K snapshot matrix."""
    y = np.asarray(y)
    if y.ndim != 2 or y.shape[1] < 1:
        logger.error(f"Snapshot matrix must be M x K with K >= 1, got shape {y.shape}")
        raise InvalidArgumentError(f"Snapshot matrix must be M x K with K >= 1, got shape {y.shape}")
    return CovarianceMatrix(scale * (y @ y.conj().T))


def hermitian_eig(cov: CovarianceMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian covariance.

    Returns:
        tuple: (eigenvalues sorted descending, unitary eigenvector matrix with matching columns).

    Raises:
        InvalidArgumentError: If the matrix is not Hermitian within 1e-10 (Frobenius-relative).
    """
    r = np.asarray(cov.matrix)
    norm = np.linalg.norm(r)
    if np.linalg.norm(r - r.conj().T) > HERMITIAN_TOLERANCE * max(norm, np.finfo(float).tiny):
        logger.error("Covariance matrix is not Hermitian")
        raise InvalidArgumentError("Covariance matrix is not Hermitian")
    eigenvalues, eigenvectors = linalg.eigh(0.5 * (r + r.conj().T))
    return eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy()


def estimate_source_count(eigenvalues: Sequence[float]) -> int:
    """
    Number of sources from the largest ratio between adjacent eigenvalues.

    Eigenvalues must be sorted descending. Ties go to the smaller count.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size < 2:
        logger.error("Source counting needs at least two eigenvalues")
        raise InvalidArgumentError("Source counting needs at least two eigenvalues")
    if lam[0] <= 0.0:
        logger.error("Covariance has no positive eigenvalue")
        raise DegenerateCovarianceError("Covariance has no positive eigenvalue")
    floor = EIGENVALUE_RATIO_FLOOR * lam[0]
    ratios = np.maximum(lam[:-1], 0.0) / np.maximum(lam[1:], floor)
    return int(np.argmax(ratios)) + 1


def _noise_projection_power(noise_subspace: np.ndarray, steering: np.ndarray) -> np.ndarray:
    # elementwise products summed over elements keep every column independent of the block size
    proj = np.sum(noise_subspace.conj()[:, :, None] * steering[:, None, :], axis=0)
    return np.sum(proj.real ** 2 + proj.imag ** 2, axis=0)


def music_spectrum(
    noise_subspace: np.ndarray,
    geom: ArrayGeometry,
    center_frequency: float,
    regions: Sequence[SpectrumRegion],
    step_theta: float,
    step_phi: float,
) -> SpectrumGrid:
    """
    MUSIC spectrum 1 / ||En^H a(theta, phi)||^2 at the reference frequency.

    Args:
        noise_subspace (np.ndarray): M x (M - N) matrix En with orthonormal columns.
        geom (ArrayGeometry): The array.
        center_frequency (float): Reference frequency f0 in hertz.
        regions (list): Regions to sample; each starts at its lower bounds.
        step_theta (float): Elevation step in degrees.
        step_phi (float): Azimuth step in degrees.

    Returns:
        SpectrumGrid: Positive spectrum values, one array per region. Denominators
        below 1e-30 are reported as 1e30.
    """
    grid = SpectrumGrid(list(regions), step_theta, step_phi)
    kr = geom.wavenumber_radius(center_frequency)
    for region in grid.regions:
        theta = elevation_axis(region, step_theta)
        phi = azimuth_axis(region, step_phi)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        tt, pp = tt.ravel(), pp.ravel()
        power = np.empty(tt.size)
        for start in range(0, tt.size, _SPECTRUM_CHUNK):
            stop = start + _SPECTRUM_CHUNK
            steering = np.exp(1j * kr * phase_kernel(geom, tt[start:stop], pp[start:stop]))
            power[start:stop] = _noise_projection_power(noise_subspace, steering)
        values = np.where(
            power < SPECTRUM_DENOMINATOR_FLOOR,
            SPECTRUM_CEILING,
            1.0 / np.maximum(power, SPECTRUM_DENOMINATOR_FLOOR),
        )
        grid.values.append(values.reshape(theta.size, phi.size))
        grid.elevations.append(theta)
        grid.azimuths.append(phi)
    return grid


def _merge_seam_labels(labels: np.ndarray) -> np.ndarray:
    """Join plateau labels that touch across the azimuth seam of a full-circle region."""
    parent = {}

    def root(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    rows = labels.shape[0]
    for r in range(rows):
        left = labels[r, 0]
        if not left:
            continue
        for dr in (-1, 0, 1):
            if 0 <= r + dr < rows and labels[r + dr, -1]:
                a, b = root(left), root(labels[r + dr, -1])
                if a != b:
                    parent[max(a, b)] = min(a, b)
    if not parent:
        return labels
    merged = labels.copy()
    for label in np.unique(labels[labels > 0]):
        merged[labels == label] = root(label)
    return merged


def _region_peaks(values: np.ndarray, wrap: bool) -> List[Tuple[int, int]]:
    """Row-major first index of every local-maximum plateau of one region."""
    mode = ("constant", "wrap") if wrap else "constant"
    neighborhood_max = ndimage.maximum_filter(values, size=3, mode=mode, cval=-np.inf)
    candidates = values >= neighborhood_max
    labels, count = ndimage.label(candidates, structure=np.ones((3, 3), dtype=int))
    if wrap and count:
        labels = _merge_seam_labels(labels)

    rows, cols = np.nonzero(labels)
    _, first = np.unique(labels[rows, cols], return_index=True)
    first.sort()
    return [(int(rows[i]), int(cols[i])) for i in first]


def find_peaks(spec: SpectrumGrid, count: int) -> List[DoA]:
    """
    The `count` highest local maxima of a spectrum, as DoAs sorted by descending value.

    Local maxima compare against the existing 8-neighbors of their own region (azimuth
    neighbors wrap on full-circle regions). A plateau of equal values yields one peak,
    the first point in row-major order. When there are fewer maxima than `count`, the
    highest remaining grid points pad the result. Points shared by overlapping regions
    are reported once.
    """
    if count < 1:
        logger.error(f"Peak count must be >= 1, got {count}")
        raise InvalidArgumentError(f"Peak count must be >= 1, got {count}")
    if spec.point_count == 0:
        logger.error("Cannot search peaks on an empty spectrum grid")
        raise InvalidArgumentError("Cannot search peaks on an empty spectrum grid")

    peak_entries = []
    for index, region in enumerate(spec.regions):
        values = spec.values[index]
        for r, c in _region_peaks(values, region.full_circle):
            point = (float(spec.elevations[index][r]), float(spec.azimuths[index][c]))
            peak_entries.append((float(values[r, c]), point))

    chosen: List[Tuple[float, float]] = []
    taken = set()
    # sorted() is stable, so equal values keep region / row-major order
    for _, point in sorted(peak_entries, key=lambda e: -e[0]):
        if len(chosen) == count:
            break
        if point not in taken:
            taken.add(point)
            chosen.append(point)

    if len(chosen) < count:
        logger.warning(f"Found {len(chosen)} spectrum peaks, padding to {count} with the highest grid values")
        flat_values = np.concatenate([v.ravel() for v in spec.values])
        flat_theta = np.concatenate(
            [np.repeat(t, p.size) for t, p in zip(spec.elevations, spec.azimuths)]
        )
        flat_phi = np.concatenate(
            [np.tile(p, t.size) for t, p in zip(spec.elevations, spec.azimuths)]
        )
        for i in np.argsort(-flat_values, kind="stable"):
            if len(chosen) == count:
                break
            point = (float(flat_theta[i]), float(flat_phi[i]))
            if point not in taken:
                taken.add(point)
                chosen.append(point)

    if len(chosen) < count:
        logger.warning(f"Spectrum grid holds {len(chosen)} distinct points, {count} peaks requested")
    return [DoA(theta, phi) for theta, phi in chosen]
