"""
Wideband multipath LFM scenarios received by the UCA.

The chirp is generated at complex baseband. Steering is applied per DFT bin
(bin z of every clean path is multiplied by a(f_z, theta_n, phi_n)), so the
narrowband model X_f(f_z) = A(f_z) S_f(f_z) + W(f_z) holds exactly after
`to_narrowband`. The optional time-domain steering path applies true
per-element delays instead.
"""
from __future__ import annotations

import hashlib
import logging
import math
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import fft

from ucadoa.array_model import ArrayGeometry, DoA, doa_arrays, normalize_azimuth, steering_matrix
from ucadoa.constant.main import (
    DEFAULT_BANDWIDTH,
    DEFAULT_CENTER_FREQUENCY,
    DEFAULT_FFT_SIZE,
    DEFAULT_PATH_DELAY,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_SNR,
    DESK_SCALE_DURATION,
    IQ_HEADER_FORMAT,
    IQ_MAGIC,
)
from ucadoa.exceptions import InvalidArgumentError

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Wideband multipath scenario.

    Attributes:
        center_frequency (float): f0 in hertz.
        bandwidth (float): Chirp bandwidth B in hertz.
        sample_rate (float): fS in hertz.
        duration (float): Sampling duration t0 in seconds.
        fft_size (int): Segment length Z.
        snr (float, optional): Per-element SNR in dB; None disables noise.
        path_doas (list): DoA of every path.
        path_delay (float): Delay between adjacent paths in seconds.
        seed (int): Seed used when no explicit stream is supplied.
        time_domain_steering (bool): Apply true element delays instead of per-bin steering.
    """

    center_frequency: float = DEFAULT_CENTER_FREQUENCY
    bandwidth: float = DEFAULT_BANDWIDTH
    sample_rate: float = DEFAULT_SAMPLE_RATE
    duration: float = DESK_SCALE_DURATION
    fft_size: int = DEFAULT_FFT_SIZE
    snr: Optional[float] = DEFAULT_SNR
    path_doas: Sequence[DoA] = field(default_factory=list)
    path_delay: float = DEFAULT_PATH_DELAY
    seed: int = 0
    time_domain_steering: bool = False

    @property
    def sample_count(self) -> int:
        """K_t = floor(t0 * fS)."""
        # small guard so that 1e-6 * 11.25e9 does not floor to 11249
        return int(math.floor(self.duration * self.sample_rate + 1e-9))

    @property
    def max_frequency(self) -> float:
        return self.center_frequency + self.bandwidth / 2.0

    def validate(self, geom: ArrayGeometry):
        """Raise InvalidArgumentError when the scenario cannot run on the given array."""
        problems = []
        if self.sample_rate < self.bandwidth:
            problems.append(f"sample rate {self.sample_rate} below bandwidth {self.bandwidth}")
        if self.fft_size < 1 or self.fft_size >= self.sample_count:
            problems.append(f"fft size {self.fft_size} must lie in [1, K_t={self.sample_count})")
        if not 1 <= len(self.path_doas) < geom.element_count:
            problems.append(
                f"path count {len(self.path_doas)} must lie in [1, M={geom.element_count})"
            )
        if self.path_delay < 0:
            problems.append(f"path delay {self.path_delay} is negative")
        if problems:
            message = "Invalid scenario: " + "; ".join(problems)
            logger.error(message)
            raise InvalidArgumentError(message)


@dataclass(frozen=True)
class TimeSamples:
    """
    Array output samples.

    Attributes:
        matrix (np.ndarray): Complex M x K_t samples.
        sample_rate (float): fS in hertz.
        noise_variance (float): Per-sample noise power sigma^2 (0 when noiseless).
    """

    matrix: np.ndarray
    sample_rate: float
    noise_variance: float = 0.0

    @property
    def sample_count(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class NarrowbandStack:
    """
    Per-frequency snapshot matrices.

    Attributes:
        matrices (np.ndarray): Z x M x K_f array; matrices[z] is X_f(f_z).
        frequencies (np.ndarray): The Z bin frequencies in hertz.
        center_frequency (float): Reference frequency f0 in hertz.
    """

    matrices: np.ndarray
    frequencies: np.ndarray
    center_frequency: float

    @property
    def fft_size(self) -> int:
        return self.matrices.shape[0]

    @property
    def element_count(self) -> int:
        return self.matrices.shape[1]

    @property
    def snapshots_per_bin(self) -> int:
        return self.matrices.shape[2]

    def checksum(self) -> str:
        """Short digest of the snapshot data, used to prove identical inputs across methods."""
        digest = hashlib.sha256(np.ascontiguousarray(self.matrices).tobytes())
        digest.update(np.ascontiguousarray(self.frequencies).tobytes())
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class TrialData:
    """Everything one Monte-Carlo trial produces before estimation."""

    samples: TimeSamples
    stack: NarrowbandStack
    spectra: np.ndarray
    noise_variance: float


def bin_frequency(z: int, center_frequency: float, sample_rate: float, fft_size: int) -> float:
    """
    Frequency of the 1-based DFT bin z.

    Bins below Z/2 map to non-negative baseband offsets k*fS/Z, the rest to
    (k - Z)*fS/Z, with k = z - 1.
    """
    if not 1 <= z <= fft_size:
        logger.error(f"Bin index {z} outside [1, {fft_size}]")
        raise InvalidArgumentError(f"Bin index {z} outside [1, {fft_size}]")
    k = z - 1
    offset = k if k < fft_size / 2 else k - fft_size
    return center_frequency + offset * sample_rate / fft_size


def bin_frequencies(center_frequency: float, sample_rate: float, fft_size: int) -> np.ndarray:
    return np.array(
        [bin_frequency(z, center_frequency, sample_rate, fft_size) for z in range(1, fft_size + 1)]
    )


def lfm_chirp(t: np.ndarray, bandwidth: float, duration: float) -> np.ndarray:
    """Unit-amplitude baseband chirp sweeping [-B/2, +B/2] over [0, t0); zero outside."""
    rate = bandwidth / duration
    chirp = np.exp(1j * np.pi * rate * t ** 2 - 1j * np.pi * bandwidth * t)
    return np.where((t >= 0.0) & (t < duration), chirp, 0.0)


def _path_signals(cfg: ScenarioConfig) -> np.ndarray:
    """N x K_t clean path signals, path n delayed by n * path_delay."""
    t = np.arange(cfg.sample_count) / cfg.sample_rate
    delays = np.arange(len(cfg.path_doas)) * cfg.path_delay
    return lfm_chirp(t[None, :] - delays[:, None], cfg.bandwidth, cfg.duration)


def _segment_dft(signals: np.ndarray, fft_size: int) -> np.ndarray:
    """DFT of contiguous length-Z segments along the last axis; trailing samples discarded."""
    count = signals.shape[-1] // fft_size
    segments = signals[..., : count * fft_size].reshape(signals.shape[:-1] + (count, fft_size))
    return fft.fft(segments, axis=-1)


def source_spectra(cfg: ScenarioConfig) -> np.ndarray:
    """
    DFT coefficients S(n, k, f_z) of the clean path signals.

    Returns:
        np.ndarray: Complex N x K_f x Z array.
    """
    return _segment_dft(_path_signals(cfg), cfg.fft_size)


def _clean_frequency_steered(geom: ArrayGeometry, cfg: ScenarioConfig, spectra: np.ndarray) -> np.ndarray:
    theta, phi = doa_arrays(cfg.path_doas)
    frequencies = bin_frequencies(cfg.center_frequency, cfg.sample_rate, cfg.fft_size)
    # steering[z] is M x N at f_z
    steering = np.stack([steering_matrix(geom, f, theta, phi) for f in frequencies])
    # X[m, k, z] = sum_n a_m(f_z, n) S(n, k, z)
    bins = np.einsum("zmn,nkz->mkz", steering, spectra)
    segments = fft.ifft(bins, axis=-1)
    snapshots = spectra.shape[1]
    clean = np.zeros((geom.element_count, cfg.sample_count), dtype=complex)
    clean[:, : snapshots * cfg.fft_size] = segments.reshape(geom.element_count, -1)

    remainder = cfg.sample_count - snapshots * cfg.fft_size
    if remainder:
        # trailing samples never reach a bin; steer them at f0
        tail = _path_signals(cfg)[:, -remainder:]
        clean[:, -remainder:] = steering_matrix(geom, cfg.center_frequency, theta, phi) @ tail
    return clean


def _clean_time_steered(geom: ArrayGeometry, cfg: ScenarioConfig) -> np.ndarray:
    theta, phi = doa_arrays(cfg.path_doas)
    t = np.arange(cfg.sample_count) / cfg.sample_rate
    kernel = np.sin(np.deg2rad(theta))[None, :] * np.cos(
        geom.element_angles[:, None] - np.deg2rad(phi)[None, :]
    )
    # element m leads the array center by r/c * kernel
    element_delays = -geom.radius / geom.light_speed * kernel
    clean = np.zeros((geom.element_count, cfg.sample_count), dtype=complex)
    for n in range(len(cfg.path_doas)):
        path_delay = n * cfg.path_delay
        for m in range(geom.element_count):
            tau = element_delays[m, n]
            clean[m] += lfm_chirp(t - path_delay - tau, cfg.bandwidth, cfg.duration) * np.exp(
                -2j * np.pi * cfg.center_frequency * tau
            )
    return clean


def clean_received(geom: ArrayGeometry, cfg: ScenarioConfig) -> np.ndarray:
    """Noise-free M x K_t array output for the scenario."""
    cfg.validate(geom)
    if cfg.time_domain_steering:
        return _clean_time_steered(geom, cfg)
    return _clean_frequency_steered(geom, cfg, source_spectra(cfg))


def noise_variance_for(clean: np.ndarray, snr: Optional[float]) -> float:
    """sigma^2 such that average per-element signal power / sigma^2 equals the SNR."""
    if snr is None or math.isinf(snr):
        return 0.0
    signal_power = float(np.mean(np.abs(clean) ** 2))
    return signal_power / 10.0 ** (snr / 10.0)


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circular complex white Gaussian noise with E|w|^2 = variance."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_received(geom: ArrayGeometry, cfg: ScenarioConfig, rng: np.random.Generator) -> TimeSamples:
    """
    Received UCA samples for a multipath LFM scenario.

    Args:
        geom (ArrayGeometry): The array.
        cfg (ScenarioConfig): Scenario; cfg.snr None means noiseless.
        rng (np.random.Generator): Stream for the additive noise.

    Returns:
        TimeSamples: M x K_t samples and the noise variance that was applied.
    """
    clean = clean_received(geom, cfg)
    variance = noise_variance_for(clean, cfg.snr)
    if variance > 0.0:
        clean = clean + complex_noise(rng, clean.shape, variance)
    return TimeSamples(clean, cfg.sample_rate, variance)


def to_narrowband(samples: TimeSamples, fft_size: int, center_frequency: float = 0.0) -> NarrowbandStack:
    """
    Split every row into floor(K_t/Z) segments and DFT them.

    Bin z of every segment becomes one column of X_f(f_z). No window is applied.
    """
    if fft_size < 1 or fft_size >= samples.sample_count:
        logger.error(f"FFT size {fft_size} must lie in [1, K_t={samples.sample_count})")
        raise InvalidArgumentError(
            f"FFT size {fft_size} must lie in [1, K_t={samples.sample_count})"
        )
    bins = _segment_dft(samples.matrix, fft_size)  # M x K_f x Z
    matrices = np.ascontiguousarray(np.transpose(bins, (2, 0, 1)))
    frequencies = bin_frequencies(center_frequency, samples.sample_rate, fft_size)
    return NarrowbandStack(matrices, frequencies, center_frequency)


def make_pre_estimates(
    truth: Sequence[DoA], avg_err_theta: float, avg_err_phi: float, rng: np.random.Generator
) -> List[DoA]:
    """
    Perturb true DoAs into pre-estimates with the requested mean absolute error.

    Each perturbation magnitude is uniform on [0, 2 * avg_err] with a random sign.
    Elevations are clipped into [0, 90]; azimuths wrap into [0, 360).
    """
    estimates = []
    for doa in truth:
        d_theta = rng.uniform(0.0, 2.0 * avg_err_theta) * rng.choice((-1.0, 1.0))
        d_phi = rng.uniform(0.0, 2.0 * avg_err_phi) * rng.choice((-1.0, 1.0))
        elevation = min(max(doa.elevation + d_theta, 0.0), 90.0)
        azimuth = float(normalize_azimuth(doa.azimuth + d_phi))
        estimates.append(DoA(elevation, azimuth))
    return estimates


def simulate_trial(geom: ArrayGeometry, cfg: ScenarioConfig, rng: np.random.Generator) -> TrialData:
    """Synthesize one trial: samples, narrowband stack, clean spectra and noise power."""
    samples = synthesize_received(geom, cfg, rng)
    stack = to_narrowband(samples, cfg.fft_size, cfg.center_frequency)
    return TrialData(samples, stack, source_spectra(cfg), samples.noise_variance)


def write_iq(samples: TimeSamples, path: str):
    """
    Dump samples as little-endian interleaved float64 (re, im), row-major M x K_t,
    behind a 32-byte header {magic "UCAIQ\\0", u32 M, u64 K_t, f64 fS}.
    """
    element_count, sample_count = samples.matrix.shape
    header = struct.pack(IQ_HEADER_FORMAT, IQ_MAGIC, element_count, sample_count, samples.sample_rate)
    try:
        with open(path, "wb") as fp:
            fp.write(header)
            fp.write(np.ascontiguousarray(samples.matrix, dtype="<c16").tobytes())
    except OSError as e:
        logger.error(f"Failed to write IQ dump {path}: {e}")
        raise
    logger.info(f"IQ dump written to {path} ({element_count} x {sample_count})")


def read_iq(path: str) -> TimeSamples:
    """Read a dump produced by write_iq."""
    header_size = struct.calcsize(IQ_HEADER_FORMAT)
    with open(path, "rb") as fp:
        header = fp.read(header_size)
        payload = fp.read()
    if len(header) < header_size:
        logger.error(f"Truncated IQ header in {path}: {len(header)} of {header_size} bytes")
        raise InvalidArgumentError(f"Truncated IQ header in {path}: {len(header)} of {header_size} bytes")
    magic, element_count, sample_count, sample_rate = struct.unpack(IQ_HEADER_FORMAT, header)
    if magic != IQ_MAGIC:
        logger.error(f"Not an IQ dump: {path}")
        raise InvalidArgumentError(f"Not an IQ dump: {path}")
    expected = element_count * sample_count * 16
    if len(payload) != expected:
        logger.error(f"IQ payload of {path} has {len(payload)} bytes, expected {expected}")
        raise InvalidArgumentError(f"IQ payload of {path} has {len(payload)} bytes, expected {expected}")
    matrix = np.frombuffer(payload, dtype="<c16").reshape(element_count, sample_count)
    return TimeSamples(matrix.astype(complex), sample_rate)
