from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List

import numpy as np
from loguru import logger
from scipy.signal import butter, sosfilt, sosfreqz

from stikit.coefficients import StandardCoefficients
from stikit.core import NUM_BANDS, AnalysisError, AudioBuffer

ANALYSIS_FILTER_ORDER = 18
GENERATION_FILTER_ORDER = 20
TRANSIENT_DISCARD_SECONDS = 0.2
MIN_FILTERED_SECONDS = 0.4
ENVELOPE_CUTOFF_HZ = 100.0
ENVELOPE_FILTER_ORDER = 8


class Bandwidth(float, Enum):
    # exponent of the band edges relative to the center, in octaves
    OCTAVE = 0.5
    HALF_OCTAVE = 0.25


@lru_cache(maxsize=64)
def _bandpass_sos(low: float, high: float, order: int, sample_rate: int) -> np.ndarray:
    # band-pass order is twice the prototype order
    return butter(order // 2, [low, high], btype="bandpass", output="sos", fs=sample_rate)


@lru_cache(maxsize=16)
def _envelope_sos(sample_rate: int) -> np.ndarray:
    return butter(ENVELOPE_FILTER_ORDER, ENVELOPE_CUTOFF_HZ, btype="lowpass", output="sos", fs=sample_rate)


@dataclass(frozen=True)
class BandFilterSpec:
    """Butterworth band-pass around one band center, mapped from the analog prototype and run as SOS cascade."""

    center_frequency: float
    sample_rate: int
    order: int = ANALYSIS_FILTER_ORDER
    bandwidth: Bandwidth = Bandwidth.OCTAVE

    def __post_init__(self):
        if self.upper_edge >= self.sample_rate / 2:
            raise AnalysisError(
                f"Upper band edge {self.upper_edge:.0f} Hz of the {self.center_frequency:g} Hz band "
                f"is not below Nyquist ({self.sample_rate / 2:g} Hz)."
            )

    @property
    def lower_edge(self) -> float:
        return self.center_frequency * 2 ** -self.bandwidth.value

    @property
    def upper_edge(self) -> float:
        return self.center_frequency * 2**self.bandwidth.value

    @property
    def sos(self) -> np.ndarray:
        return _bandpass_sos(self.lower_edge, self.upper_edge, self.order, self.sample_rate)

    def apply(self, samples: np.ndarray) -> np.ndarray:
        # fresh zero state on every call
        return sosfilt(self.sos, samples)

    def magnitude(self, frequencies: np.ndarray) -> np.ndarray:
        _, response = sosfreqz(self.sos, worN=np.asarray(frequencies, dtype=np.float64), fs=self.sample_rate)
        return np.abs(response)

    def response_db(self, frequency: float) -> float:
        return float(20 * np.log10(self.magnitude(np.array([frequency]))[0]))


def analysis_filter(band: int, sample_rate: int, coeffs: StandardCoefficients) -> BandFilterSpec:
    """Octave analysis filter of the 1-based band k."""
    return BandFilterSpec(center_frequency=coeffs.band_centers[band - 1], sample_rate=sample_rate)


def _discard_transient(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    return samples[int(round(TRANSIENT_DISCARD_SECONDS * sample_rate)) :]


def _check_input(signal: AudioBuffer, discard_transient: bool):
    signal.require_analysis_rate()
    if len(signal) == 0:
        raise AnalysisError("Cannot filter an empty signal.")
    if discard_transient and signal.duration < MIN_FILTERED_SECONDS:
        raise AnalysisError(
            f"Signal of {signal.duration:.3f} s is too short, at least {MIN_FILTERED_SECONDS} s are needed "
            f"after discarding the first {TRANSIENT_DISCARD_SECONDS * 1000:.0f} ms of filter transients."
        )


def filter_band(
    signal: AudioBuffer, band: int, coeffs: StandardCoefficients, discard_transient: bool = True
) -> AudioBuffer:
    _check_input(signal, discard_transient)
    filtered = analysis_filter(band, signal.sample_rate, coeffs).apply(signal.samples)
    if discard_transient:
        filtered = _discard_transient(filtered, signal.sample_rate)
    return AudioBuffer(filtered, signal.sample_rate)


def apply_octave_filter_bank(
    signal: AudioBuffer, coeffs: StandardCoefficients, discard_transient: bool = True
) -> List[AudioBuffer]:
    """Splits a signal into the seven octave bands 125 Hz .. 8 kHz."""
    _check_input(signal, discard_transient)
    logger.debug(f"Octave filter bank on {signal.duration:.2f} s at {signal.sample_rate} Hz")
    return [filter_band(signal, band, coeffs, discard_transient) for band in range(1, NUM_BANDS + 1)]


def intensity_envelope(band_signal: AudioBuffer) -> AudioBuffer:
    """Squares the signal and low-passes it at 100 Hz. No decimation."""
    if len(band_signal) == 0:
        raise AnalysisError("Cannot compute the envelope of an empty signal.")
    envelope = sosfilt(_envelope_sos(band_signal.sample_rate), band_signal.samples**2)
    return AudioBuffer(np.maximum(envelope, 0.0), band_signal.sample_rate)


def band_envelope(signal: AudioBuffer, band: int, coeffs: StandardCoefficients) -> AudioBuffer:
    """Intensity envelope of one analysis band.

    The first 200 ms are cut after the envelope low-pass, so neither filter is still settling.
    """
    _check_input(signal, discard_transient=True)
    envelope = intensity_envelope(filter_band(signal, band, coeffs, discard_transient=False))
    return AudioBuffer(_discard_transient(envelope.samples, signal.sample_rate), signal.sample_rate)


def band_envelopes(signal: AudioBuffer, coeffs: StandardCoefficients) -> List[AudioBuffer]:
    _check_input(signal, discard_transient=True)
    logger.debug(f"Band envelopes of {signal.duration:.2f} s at {signal.sample_rate} Hz")
    return [band_envelope(signal, band, coeffs) for band in range(1, NUM_BANDS + 1)]
