"""
Cramér-Rao bound for wideband 2D DoA estimation with a UCA.

Observation model per snapshot k and bin f_z:
    x(k, f_z) = A(f_z) s(k, f_z) + w(k, f_z),  w ~ CN(0, Z sigma^2 I)
where Z sigma^2 is the DFT-domain noise power of time-domain noise with variance sigma^2.

The unknowns are sigma^2, the real and imaginary parts of every s(k, f_z), and the DoAs.
Derivatives are taken per radian; bounds are reported in degrees^2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import linalg

from ucadoa.array_model import ArrayGeometry, DoA, manifold_matrix, steering_derivatives
from ucadoa.exceptions import InvalidArgumentError, UnidentifiableScenarioError
from ucadoa.signal_sim import NarrowbandStack

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

RAD2_TO_DEG2 = (180.0 / math.pi) ** 2

# Largest condition number accepted for the DoA information matrix
_MAX_CONDITION = 1e14


@dataclass(frozen=True)
class CrbScenario:
    """
    Everything the bound depends on.

    Attributes:
        geometry (ArrayGeometry): The array.
        doas (list): True DoAs of the N sources.
        source_spectra (np.ndarray): Complex N x K_f x Z source DFT coefficients.
        noise_variance (float): Time-domain noise variance sigma^2.
        frequencies (np.ndarray): The Z bin frequencies in hertz.
    """

    geometry: ArrayGeometry
    doas: Sequence[DoA]
    source_spectra: np.ndarray
    noise_variance: float
    frequencies: np.ndarray

    def __post_init__(self):
        spectra = np.asarray(self.source_spectra, dtype=complex)
        frequencies = np.asarray(self.frequencies, dtype=float)
        problems = []
        if not 1 <= len(self.doas) < self.geometry.element_count:
            problems.append(f"source count {len(self.doas)} must lie in [1, M)")
        if spectra.ndim != 3 or spectra.shape[0] != len(self.doas):
            problems.append(f"spectra shape {spectra.shape} is not N x K_f x Z")
        elif spectra.shape[1] < 1 or spectra.shape[2] != frequencies.size or frequencies.size < 1:
            problems.append(f"spectra shape {spectra.shape} does not match {frequencies.size} frequencies")
        if not self.noise_variance > 0:
            problems.append(f"noise variance {self.noise_variance} must be positive")
        if problems:
            message = "Invalid CRB scenario: " + "; ".join(problems)
            logger.error(message)
            raise InvalidArgumentError(message)
        object.__setattr__(self, "doas", tuple(self.doas))
        object.__setattr__(self, "source_spectra", spectra)
        object.__setattr__(self, "frequencies", frequencies)

    @property
    def source_count(self) -> int:
        return len(self.doas)

    @property
    def snapshots_per_bin(self) -> int:
        return self.source_spectra.shape[1]

    @property
    def fft_size(self) -> int:
        return self.source_spectra.shape[2]

    @property
    def dft_noise_power(self) -> float:
        return self.fft_size * self.noise_variance

    def with_spectra(self, spectra: np.ndarray) -> "CrbScenario":
        return CrbScenario(self.geometry, self.doas, spectra, self.noise_variance, self.frequencies)


@dataclass(frozen=True)
class FisherMatrix:
    """
    Full Fisher information matrix.

    Parameter order: sigma^2; then for every bin z and snapshot k the N real parts and
    the N imaginary parts of s(k, f_z); then theta_1..theta_N, phi_1..phi_N in radians.
    """

    matrix: np.ndarray
    source_count: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def doa_bound_block(self) -> np.ndarray:
        """Lower-right 2N x 2N block of the inverse, in degrees^2."""
        try:
            inverse = linalg.inv(self.matrix)
        except linalg.LinAlgError as e:
            logger.error(f"Fisher matrix is singular: {e}")
            raise UnidentifiableScenarioError(f"Fisher matrix is singular: {e}") from e
        k = 2 * self.source_count
        return RAD2_TO_DEG2 * inverse[-k:, -k:]


@dataclass(frozen=True)
class CrbResult:
    """
    DoA bound of one scenario.

    Attributes:
        doa_block (np.ndarray): 2N x 2N bound matrix in degrees^2.
        per_angle_bounds (np.ndarray): Its diagonal, ordered theta_1..theta_N, phi_1..phi_N.
    """

    doa_block: np.ndarray

    @property
    def per_angle_bounds(self) -> np.ndarray:
        return np.diag(self.doa_block).copy()

    @property
    def trace(self) -> float:
        return float(np.trace(self.doa_block))


def _derivative_matrix(geom: ArrayGeometry, frequency: float, doas: Sequence[DoA]) -> np.ndarray:
    """D(f_z) = [d a / d theta_1 .. d theta_N, d a / d phi_1 .. d phi_N], M x 2N."""
    pairs = [steering_derivatives(geom, frequency, doa) for doa in doas]
    return np.column_stack([p[0] for p in pairs] + [p[1] for p in pairs])


def _orthogonal_projector(a: np.ndarray) -> np.ndarray:
    """I - A (A^H A)^-1 A^H, via an orthonormal basis of the column space."""
    basis = linalg.orth(a)
    return np.eye(a.shape[0]) - basis @ basis.conj().T


def log_likelihood(scn: CrbScenario, observations: NarrowbandStack) -> float:
    """
    Joint log-density of the observed bins given the scenario.

    -K_f M Z (ln(pi Z) + ln sigma^2) - (1 / (Z sigma^2)) * sum |x - A s|^2
    """
    if observations.matrices.shape != (
        scn.fft_size,
        scn.geometry.element_count,
        scn.snapshots_per_bin,
    ):
        logger.error(f"Observation shape {observations.matrices.shape} does not match the scenario")
        raise InvalidArgumentError(
            f"Observation shape {observations.matrices.shape} does not match the scenario"
        )
    m = scn.geometry.element_count
    residual_power = 0.0
    for z, frequency in enumerate(scn.frequencies):
        a = manifold_matrix(scn.geometry, frequency, scn.doas)
        w = observations.matrices[z] - a @ scn.source_spectra[:, :, z]
        residual_power += float(np.sum(w.real ** 2 + w.imag ** 2))
    count = scn.snapshots_per_bin * m * scn.fft_size
    return (
        -count * (math.log(math.pi * scn.fft_size) + math.log(scn.noise_variance))
        - residual_power / scn.dft_noise_power
    )


def fisher_matrix(scn: CrbScenario) -> FisherMatrix:
    """
    Assemble the full Fisher information matrix.

    Mean parameters contribute (2 / (Z sigma^2)) Re[J^H J] per snapshot and bin, with J
    the derivative of A s with respect to those parameters. The sigma^2 entry is
    K_f M Z / sigma^4 and has no cross terms. Only meant for small scenarios; the
    dimension is 1 + 2 N K_f Z + 2 N.
    """
    n = scn.source_count
    k_f = scn.snapshots_per_bin
    z_count = scn.fft_size
    m = scn.geometry.element_count
    size = 1 + 2 * n * k_f * z_count + 2 * n
    doa_cols = slice(size - 2 * n, size)
    factor = 2.0 / scn.dft_noise_power

    f = np.zeros((size, size))
    f[0, 0] = k_f * m * z_count / scn.noise_variance ** 2

    for z, frequency in enumerate(scn.frequencies):
        a = manifold_matrix(scn.geometry, frequency, scn.doas)
        d = _derivative_matrix(scn.geometry, frequency, scn.doas)
        gram = a.conj().T @ a
        signal_block = factor * np.block([[gram.real, -gram.imag], [gram.imag, gram.real]])
        for k in range(k_f):
            start = 1 + 2 * n * (z * k_f + k)
            cols = slice(start, start + 2 * n)
            s = scn.source_spectra[:, k, z]
            d_xi = d * np.concatenate([s, s])[None, :]
            phi = factor * (a.conj().T @ d_xi)
            f[cols, cols] = signal_block
            f[cols, doa_cols] = np.vstack([phi.real, phi.imag])
            f[doa_cols, cols] = f[cols, doa_cols].T
            f[doa_cols, doa_cols] += factor * (d_xi.conj().T @ d_xi).real
    return FisherMatrix(f, n)


def _invert_doa_information(information: np.ndarray, scale: float) -> CrbResult:
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.linalg.cond(information) if np.all(np.isfinite(information)) else np.inf
    if not np.isfinite(condition) or condition > _MAX_CONDITION:
        logger.error("DoA information matrix is singular; the scenario is unidentifiable")
        raise UnidentifiableScenarioError("DoA information matrix is singular; the scenario is unidentifiable")
    try:
        inverse = linalg.inv(information)
    except linalg.LinAlgError as e:
        logger.error(f"DoA information matrix inversion failed: {e}")
        raise UnidentifiableScenarioError(f"DoA information matrix inversion failed: {e}") from e
    block = RAD2_TO_DEG2 * scale * inverse
    return CrbResult(0.5 * (block + block.T))


def crb_closed_form(scn: CrbScenario) -> CrbResult:
    """
    DoA bound (Z sigma^2 / 2) [sum_k sum_z Re((D Xi)^H P_perp (D Xi))]^-1, in degrees^2.

    Xi stacks diag(s(k, f_z)) twice so that D Xi scales each derivative column by its
    source amplitude.

    Raises:
        UnidentifiableScenarioError: If the bracketed sum cannot be inverted.
    """
    n2 = 2 * scn.source_count
    information = np.zeros((n2, n2))
    for z, frequency in enumerate(scn.frequencies):
        a = manifold_matrix(scn.geometry, frequency, scn.doas)
        d = _derivative_matrix(scn.geometry, frequency, scn.doas)
        projector = _orthogonal_projector(a)
        xi = np.concatenate([scn.source_spectra[:, :, z], scn.source_spectra[:, :, z]], axis=0)
        # d_xi[k] = D Xi(k, f_z), one M x 2N matrix per snapshot
        d_xi = d[None, :, :] * xi.T[:, None, :]
        information += np.einsum("kmi,mn,knj->ij", d_xi.conj(), projector, d_xi).real
    return _invert_doa_information(information, scn.dft_noise_power / 2.0)


def crb_hadamard_form(scn: CrbScenario) -> CrbResult:
    """
    Same bound written with Hadamard products:
    (Z sigma^2 / 2) [sum_z Re(D^H P_perp D ⊙ sum_k conj(xi) xi^T)]^-1, xi = [s; s].
    """
    n2 = 2 * scn.source_count
    information = np.zeros((n2, n2))
    for z, frequency in enumerate(scn.frequencies):
        a = manifold_matrix(scn.geometry, frequency, scn.doas)
        d = _derivative_matrix(scn.geometry, frequency, scn.doas)
        g = d.conj().T @ _orthogonal_projector(a) @ d
        xi = np.concatenate([scn.source_spectra[:, :, z], scn.source_spectra[:, :, z]], axis=0)
        source_products = xi.conj() @ xi.T
        information += (g * source_products).real
    return _invert_doa_information(information, scn.dft_noise_power / 2.0)


def rmse_crb(results: List[CrbResult], source_count: int) -> float:
    """sqrt(sum of bound traces / (V N)) in degrees, V the number of scenarios."""
    if not results:
        logger.error("RMSE bound needs at least one scenario")
        raise InvalidArgumentError("RMSE bound needs at least one scenario")
    total = sum(result.trace for result in results)
    return math.sqrt(total / (len(results) * source_count))
