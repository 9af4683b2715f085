"""Test signal generators: pink-noise carriers, STIPA, Full STI and the exponential swept sine.

All generators are pure functions of their arguments and the seed.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np
from loguru import logger
from scipy.fft import irfft, rfft, rfftfreq
from scipy.signal import fftconvolve, hilbert

from stikit.coefficients import StandardCoefficients
from stikit.config import config
from stikit.core import MIN_ANALYSIS_SAMPLE_RATE, NUM_BANDS, AudioBuffer, LabeledSignal, SignalError
from stikit.filterbank import GENERATION_FILTER_ORDER, BandFilterSpec, Bandwidth

PEAK_LIMIT_DBFS = -0.5
ENVELOPE_FLATTENING_PASSES = 8
SLOW_INTENSITY_BANDWIDTH_HZ = 50.0
RECOMMENDED_STIPA_SECONDS = 15.0
RECOMMENDED_FULL_STI_SECONDS = 10.0
MIN_SWEEP_SECONDS = 1.6
SWEEP_AMPLITUDE = 0.8


@dataclass(frozen=True)
class SweepSpec:
    duration: float
    f1: float
    f2: float
    fade_fraction: float = 0.005
    lead_in_octaves: float = 1.0

    def __post_init__(self):
        if self.duration < MIN_SWEEP_SECONDS:
            raise SignalError(f"Sweeps must last at least {MIN_SWEEP_SECONDS} s, got {self.duration} s.")
        if not 0 < self.f1 < self.f2:
            raise SignalError(f"Sweep frequencies need 0 < f1 < f2, got f1={self.f1}, f2={self.f2}.")
        if not 0 <= self.fade_fraction <= 0.1:
            raise SignalError(f"Fade fraction must lie in [0, 0.1], got {self.fade_fraction}.")
        if not 0 <= self.lead_in_octaves <= 3:
            raise SignalError(f"Lead-in must lie in [0, 3] octaves, got {self.lead_in_octaves}.")

    @property
    def rate_constant(self) -> float:
        """L = T / ln(f2/f1); the instantaneous frequency is f1 * exp(t/L)."""
        return self.duration / math.log(self.f2 / self.f1)

    @property
    def lead_in_seconds(self) -> float:
        return self.rate_constant * math.log(2) * self.lead_in_octaves


@dataclass(eq=False)
class CarrierBank:
    carriers: List[AudioBuffer]

    def __post_init__(self):
        if len(self.carriers) != NUM_BANDS:
            raise SignalError(f"A carrier bank holds {NUM_BANDS} carriers, got {len(self.carriers)}.")


def _num_samples(duration: float, sample_rate: int) -> int:
    if duration <= 0:
        raise SignalError(f"Duration must be positive, got {duration} s.")
    if sample_rate <= 0:
        raise SignalError(f"Sample rate must be positive, got {sample_rate} Hz.")
    return int(round(duration * sample_rate))


def _check_generation_rate(sample_rate: int):
    if sample_rate < MIN_ANALYSIS_SAMPLE_RATE:
        raise SignalError(
            f"Sample rate {sample_rate} Hz is below {MIN_ANALYSIS_SAMPLE_RATE} Hz, "
            "the 8 kHz octave band cannot be represented."
        )


def _pink_samples(num_samples: int, sample_rate: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    num_bins = num_samples // 2 + 1
    spectrum = rng.standard_normal(num_bins) + 1j * rng.standard_normal(num_bins)
    frequencies = rfftfreq(num_samples, d=1 / sample_rate)
    shaping = np.zeros(num_bins)
    shaping[1:] = 1 / np.sqrt(frequencies[1:])
    samples = irfft(spectrum * shaping, n=num_samples)
    return samples / np.sqrt(np.mean(samples**2))


def normalize_rms(samples: np.ndarray, target_dbfs: float | None = None) -> np.ndarray:
    """Scales to the RMS target. The peak has to stay below -0.5 dBFS, the RMS is never lowered to get there."""
    target_dbfs = config.rms_target_dbfs if target_dbfs is None else target_dbfs
    rms = np.sqrt(np.mean(samples**2))
    if rms == 0:
        raise SignalError("Cannot normalize a silent signal.")
    normalized = samples * (10 ** (target_dbfs / 20) / rms)
    peak_dbfs = 20 * np.log10(np.max(np.abs(normalized)))
    if peak_dbfs >= PEAK_LIMIT_DBFS:
        raise SignalError(
            f"Peak of {peak_dbfs:.2f} dBFS at {target_dbfs} dBFS RMS exceeds the {PEAK_LIMIT_DBFS} dBFS limit."
        )
    return normalized


def generate_pink_noise(duration: float, sample_rate: int, seed: int) -> AudioBuffer:
    num_samples = _num_samples(duration, sample_rate)
    return AudioBuffer(normalize_rms(_pink_samples(num_samples, sample_rate, seed)), sample_rate)


def _band_limit(samples: np.ndarray, magnitude: np.ndarray) -> np.ndarray:
    # circular, zero phase
    return irfft(rfft(samples) * magnitude, n=len(samples))


def _flatten_envelope(samples: np.ndarray, magnitude: np.ndarray) -> np.ndarray:
    """Alternately divides by the Hilbert envelope and band-limits again."""
    for _ in range(ENVELOPE_FLATTENING_PASSES):
        envelope = np.abs(hilbert(samples))
        samples = _band_limit(samples / np.maximum(envelope, np.finfo(np.float64).tiny), magnitude)
    return samples


def _remove_slow_intensity(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """Divides out the intensity fluctuation left below the modulation frequency range."""
    frequencies = rfftfreq(len(samples), d=1 / sample_rate)
    smoothing = np.exp(-0.5 * (frequencies / SLOW_INTENSITY_BANDWIDTH_HZ) ** 2)
    intensity = irfft(rfft(samples**2) * smoothing, n=len(samples))
    return samples / np.sqrt(np.maximum(intensity, 1e-12 * np.mean(intensity)))


def generate_carriers(duration: float, sample_rate: int, seed: int, coeffs: StandardCoefficients) -> CarrierBank:
    """Half-octave band-limited pink noise N_k(t) per octave band, unit RMS, band k drawn with seed + k.

    The carriers are circular and their envelopes are flattened, so a carrier on its own shows
    no modulation at the STI modulation frequencies.
    """
    _check_generation_rate(sample_rate)
    num_samples = _num_samples(duration, sample_rate)
    frequencies = rfftfreq(num_samples, d=1 / sample_rate)
    carriers = []
    for band, center in enumerate(coeffs.band_centers, start=1):
        spec = BandFilterSpec(
            center_frequency=center,
            sample_rate=sample_rate,
            order=GENERATION_FILTER_ORDER,
            bandwidth=Bandwidth.HALF_OCTAVE,
        )
        magnitude = spec.magnitude(frequencies)
        carrier = _band_limit(_pink_samples(num_samples, sample_rate, seed + band), magnitude)
        carrier = _remove_slow_intensity(_flatten_envelope(carrier, magnitude), sample_rate)
        carriers.append(AudioBuffer(carrier / np.sqrt(np.mean(carrier**2)), sample_rate))
    logger.debug(f"Generated {len(carriers)} carriers: {duration} s at {sample_rate} Hz, seed {seed}")
    return CarrierBank(carriers)


def time_axis(num_samples: int, sample_rate: int) -> np.ndarray:
    return np.arange(num_samples) / sample_rate


def full_sti_modulator(t: np.ndarray, modulation_frequency: float) -> np.ndarray:
    """sqrt(0.5 (1 + cos(2 pi f_m t))), full modulation depth."""
    return np.sqrt(np.maximum(0.5 * (1 + np.cos(2 * np.pi * modulation_frequency * t)), 0.0))


def stipa_bracket(t: np.ndarray, f1: float, f2: float, depth: float) -> np.ndarray:
    return 1 + depth * (np.sin(2 * np.pi * f1 * t) - np.sin(2 * np.pi * f2 * t))


def stipa_modulator(t: np.ndarray, f1: float, f2: float, depth: float) -> np.ndarray:
    """sqrt(0.5 (1 + depth (sin(2 pi f1 t) - sin(2 pi f2 t)))), bracket clamped at 0."""
    return np.sqrt(0.5 * np.maximum(stipa_bracket(t, f1, f2, depth), 0.0))


def generate_stipa_signal(duration: float, sample_rate: int, seed: int, coeffs: StandardCoefficients) -> AudioBuffer:
    _check_generation_rate(sample_rate)
    if duration < RECOMMENDED_STIPA_SECONDS:
        logger.warning(f"STIPA signal of {duration} s is shorter than the recommended {RECOMMENDED_STIPA_SECONDS} s.")
    bank = generate_carriers(duration, sample_rate, seed, coeffs)
    t = time_axis(len(bank.carriers[0]), sample_rate)
    mixture = np.zeros(len(t))
    for carrier, gain, (f1, f2) in zip(bank.carriers, coeffs.band_gains, coeffs.stipa_signal_pairs):
        mixture += gain * carrier.samples * stipa_modulator(t, f1, f2, coeffs.stipa_modulation_depth)
    logger.debug(f"Generated STIPA signal: {duration} s at {sample_rate} Hz, seed {seed}")
    return AudioBuffer(normalize_rms(mixture), sample_rate)


def generate_full_sti_signals(
    duration_per_signal: float, sample_rate: int, seed: int, coeffs: StandardCoefficients
) -> Iterator[LabeledSignal]:
    """Streams the 98 Full STI signals G_k N_k(t) A_m(t), ordered by band, then modulation frequency."""
    _check_generation_rate(sample_rate)
    _num_samples(duration_per_signal, sample_rate)
    if duration_per_signal < RECOMMENDED_FULL_STI_SECONDS:
        logger.warning(
            f"Full STI signals of {duration_per_signal} s are shorter than the recommended "
            f"{RECOMMENDED_FULL_STI_SECONDS} s."
        )
    bank = generate_carriers(duration_per_signal, sample_rate, seed, coeffs)
    t = time_axis(len(bank.carriers[0]), sample_rate)
    for band, (carrier, gain) in enumerate(zip(bank.carriers, coeffs.band_gains), start=1):
        for modulation, frequency in enumerate(coeffs.modulation_frequencies, start=1):
            samples = gain * carrier.samples * full_sti_modulator(t, frequency)
            yield LabeledSignal(band, modulation, AudioBuffer(normalize_rms(samples), sample_rate))


def _fade(num_samples: int, fade_in: int, fade_out: int) -> np.ndarray:
    window = np.ones(num_samples)
    if fade_in > 0:
        window[:fade_in] = 0.5 * (1 - np.cos(np.pi * np.arange(fade_in) / fade_in))
    if fade_out > 0:
        window[num_samples - fade_out :] = 0.5 * (1 + np.cos(np.pi * np.arange(fade_out) / fade_out))
    return window


def generate_swept_sine(spec: SweepSpec, sample_rate: int) -> Tuple[AudioBuffer, AudioBuffer]:
    """Exponential sine sweep and its inverse filter; sweep convolved with the inverse peaks at exactly 1.

    The sweep passes f1 at t = 0 and reaches f2 at t = duration. A lead-in continues the same law below
    f1 and carries the fade-in, so the deconvolved response is flat from f1 on.
    """
    if spec.f2 > sample_rate / 2:
        raise SignalError(f"Sweep end frequency {spec.f2} Hz exceeds Nyquist ({sample_rate / 2} Hz).")
    num_samples = _num_samples(spec.duration, sample_rate)
    lead_in = int(round(spec.lead_in_seconds * sample_rate))
    fade = int(round(spec.fade_fraction * num_samples))
    t = (np.arange(lead_in + num_samples) - lead_in) / sample_rate
    rate_constant = spec.rate_constant

    phase = 2 * np.pi * spec.f1 * rate_constant * (np.exp(t / rate_constant) - 1)
    sweep = SWEEP_AMPLITUDE * np.sin(phase) * _fade(len(t), lead_in or fade, fade)

    # time reversal puts the high frequencies first, the decaying envelope gives +6 dB/octave
    inverse = sweep[::-1] * np.exp(-time_axis(len(t), sample_rate) / rate_constant)
    inverse /= np.max(np.abs(fftconvolve(sweep, inverse)))

    logger.debug(
        f"Generated sweep {spec.f1:g} Hz -> {spec.f2:g} Hz over {spec.duration} s "
        f"({spec.lead_in_seconds:.3f} s lead-in) at {sample_rate} Hz"
    )
    return AudioBuffer(sweep, sample_rate), AudioBuffer(inverse, sample_rate)

