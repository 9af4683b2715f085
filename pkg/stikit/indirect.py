"""Indirect method: impulse responses from swept-sine recordings and their modulation transfer."""

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.signal import fftconvolve

from stikit.coefficients import StandardCoefficients, load_coefficients
from stikit.core import AnalysisError, AudioBuffer, MtfMatrix, Scheme, SignalError, StiResult
from stikit.filterbank import apply_octave_filter_bank
from stikit.mtf import AnalysisOptions, finish_analysis, scheme_frequencies, scheme_signal_frequencies, transfer_ratios
from stikit.siggen import SweepSpec

PRE_PEAK_SECONDS = 0.005
MIN_PEAK_TO_RMS_DB = 20.0
RECOMMENDED_IR_SECONDS = 0.5
DECAY_CONSTANT = 13.8  # ln(10^6), 60 dB of decay


@dataclass(eq=False)
class ImpulseResponse:
    samples: np.ndarray
    sample_rate: int
    onset_index: int = 0

    def __post_init__(self):
        # reuse the buffer checks
        buffer = AudioBuffer(self.samples, self.sample_rate)
        self.samples = buffer.samples
        self.sample_rate = buffer.sample_rate
        if not np.any(self.samples):
            raise AnalysisError("Impulse response has no energy.")
        if not 0 <= self.onset_index < len(self.samples):
            raise AnalysisError(f"Onset index {self.onset_index} lies outside the impulse response.")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @staticmethod
    def from_buffer(buffer: AudioBuffer) -> "ImpulseResponse":
        """Takes the absolute peak as onset."""
        if len(buffer) == 0:
            raise AnalysisError("Impulse response is empty.")
        return ImpulseResponse(buffer.samples, buffer.sample_rate, int(np.argmax(np.abs(buffer.samples))))

    def as_buffer(self) -> AudioBuffer:
        return AudioBuffer(self.samples, self.sample_rate)


def deconvolve_impulse_response(
    recorded_sweep: AudioBuffer, inverse_filter: AudioBuffer, sweep: SweepSpec | None = None
) -> ImpulseResponse:
    """Linear convolution of the recording with the inverse filter.

    Harmonic distortion products of an exponential sweep land at negative lags; the kept segment
    starts 5 ms before the earlier of main peak and zero lag and runs to the end, so onset_index
    keeps the system delay. Passing the sweep enables the check against the second-harmonic offset.
    """
    if recorded_sweep.sample_rate != inverse_filter.sample_rate:
        raise SignalError(
            f"Recording ({recorded_sweep.sample_rate} Hz) and inverse filter "
            f"({inverse_filter.sample_rate} Hz) differ in sample rate."
        )
    if len(recorded_sweep) < len(inverse_filter):
        raise SignalError(
            f"Recording of {len(recorded_sweep)} samples is shorter than the inverse filter "
            f"({len(inverse_filter)} samples)."
        )
    sample_rate = recorded_sweep.sample_rate

    response = fftconvolve(recorded_sweep.samples, inverse_filter.samples)
    zero_lag = len(inverse_filter) - 1
    peak = int(np.argmax(np.abs(response)))

    rms = np.sqrt(np.mean(response**2))
    peak_to_rms_db = 20 * np.log10(np.abs(response[peak]) / rms) if rms > 0 else -np.inf
    if peak_to_rms_db < MIN_PEAK_TO_RMS_DB:
        raise AnalysisError(f"no impulse found (peak/RMS {peak_to_rms_db:.1f} dB < {MIN_PEAK_TO_RMS_DB:g} dB)")

    lag_seconds = (peak - zero_lag) / sample_rate
    if sweep is not None and lag_seconds > sweep.rate_constant * math.log(2):
        logger.warning(
            f"Main peak lags by {lag_seconds:.3f} s, beyond the second-harmonic offset of "
            f"{sweep.rate_constant * math.log(2):.3f} s; distortion products may overlap the response."
        )

    start = max(0, min(peak, zero_lag) - int(round(PRE_PEAK_SECONDS * sample_rate)))
    logger.debug(f"Deconvolved impulse response: peak at lag {lag_seconds * 1000:.2f} ms, {peak_to_rms_db:.1f} dB")
    return ImpulseResponse(response[start:], sample_rate, onset_index=peak - start)


def trim_impulse_response(ir: ImpulseResponse, seconds: float) -> ImpulseResponse:
    """Keeps the first `seconds` of the response."""
    if seconds <= 0:
        raise SignalError(f"Trim length must be positive, got {seconds} s.")
    num_samples = int(round(seconds * ir.sample_rate))
    if num_samples <= ir.onset_index:
        raise SignalError(f"Trimming to {seconds} s would cut away the onset at {ir.onset_index / ir.sample_rate} s.")
    return ImpulseResponse(ir.samples[:num_samples], ir.sample_rate, ir.onset_index)


def _schroeder_ratios(samples: np.ndarray, sample_rate: int, frequencies: np.ndarray) -> np.ndarray:
    energy = samples**2
    total = np.sum(energy)
    if total <= 0:
        raise AnalysisError("Impulse response has no energy.")
    t = np.arange(len(energy)) / sample_rate
    # per frequency, never an N x F matrix
    ratios = [np.abs(np.sum(energy * np.exp(-2j * np.pi * f * t))) / total for f in frequencies]
    return np.minimum(np.array(ratios), 1.0)


def noise_factor(snr_db: float) -> float:
    return 1 / (1 + 10 ** (-snr_db / 10))


def schroeder_mtf(band_ir: ImpulseResponse, modulation_frequency: float, snr_db: float | None = None) -> float:
    """|sum h^2 exp(-j 2 pi f t)| / sum h^2, with the noise factor only when an SNR is given."""
    m = float(_schroeder_ratios(band_ir.samples, band_ir.sample_rate, np.array([modulation_frequency]))[0])
    if snr_db is not None:
        m *= noise_factor(snr_db)
    return m


def _band_matrix(samples: np.ndarray, sample_rate: int, scheme: Scheme, coeffs: StandardCoefficients) -> np.ndarray:
    frequencies = scheme_signal_frequencies(scheme, coeffs)
    bands = apply_octave_filter_bank(AudioBuffer(samples, sample_rate), coeffs, discard_transient=False)
    values = np.zeros_like(frequencies)
    for k, band in enumerate(bands):
        try:
            values[k] = _schroeder_ratios(band.samples, sample_rate, frequencies[k])
        except AnalysisError as e:
            raise AnalysisError(str(e), band=k + 1) from e
    return values


def filter_bank_mtf(
    length: int, sample_rate: int, scheme: Scheme, coeffs: StandardCoefficients, onset_index: int = 0
) -> MtfMatrix:
    """Schroeder ratios of the analysis filters themselves, i.e. of a unit impulse at onset_index."""
    delta = np.zeros(length)
    delta[onset_index] = 1.0
    return MtfMatrix(
        values=_band_matrix(delta, sample_rate, scheme, coeffs),
        frequencies=scheme_frequencies(scheme, coeffs),
        scheme=scheme,
    )


def decay_mtf(modulation_frequency, t60):
    """Modulation transfer of an exponential decay with reverberation time t60."""
    return 1 / np.sqrt(1 + (2 * np.pi * np.asarray(modulation_frequency) * np.asarray(t60) / DECAY_CONSTANT) ** 2)


def analyze_impulse_response(
    ir: ImpulseResponse,
    scheme: Scheme = Scheme.FULL_STI,
    options: AnalysisOptions | None = None,
    coeffs: StandardCoefficients | None = None,
    strict_eq5: bool = False,
    compensate_filters: bool = True,
) -> StiResult:
    """STI of an impulse response.

    The filter bank runs without transient discard. By default the smearing of the octave filters is
    divided out with the ratios of a unit impulse at the same onset; a reference impulse response in
    the options replaces that unit impulse. In strict mode the per-band SNR enters the Schroeder
    ratios directly and the later ambient-noise step is skipped.
    """
    options = options or AnalysisOptions()
    coeffs = coeffs or load_coefficients()
    ir.as_buffer().require_analysis_rate()
    if ir.duration < RECOMMENDED_IR_SECONDS:
        logger.warning(f"Impulse response of {ir.duration:.3f} s may not capture the full decay.")

    frequencies = scheme_frequencies(scheme, coeffs)
    values = _band_matrix(ir.samples, ir.sample_rate, scheme, coeffs)

    strict_noise = strict_eq5 and options.ambient_noise_known
    if strict_noise:
        snr_db = options.signal_levels.decibels() - options.noise_levels.decibels()
        values = values * np.array([noise_factor(snr) for snr in snr_db])[:, np.newaxis]
    ratios = MtfMatrix(values=values, frequencies=frequencies, scheme=scheme)

    reference_used = False
    if options.reference is not None:
        if not isinstance(options.reference, AudioBuffer):
            raise AnalysisError("An impulse response reference has to be a single audio buffer.")
        reference = ImpulseResponse.from_buffer(options.reference)
        ratios = transfer_ratios(
            ratios,
            MtfMatrix(
                values=_band_matrix(reference.samples, reference.sample_rate, scheme, coeffs),
                frequencies=frequencies,
                scheme=scheme,
            ),
        )
        reference_used = True
    elif compensate_filters:
        ratios = transfer_ratios(ratios, filter_bank_mtf(len(ir), ir.sample_rate, scheme, coeffs, ir.onset_index))

    result = finish_analysis(
        ratios, options, coeffs, reference_used=reference_used, ambient_applied_upstream=strict_noise
    )
    logger.info(f"Impulse response ({scheme.value}): STI = {result.sti:.3f} ({result.category})")
    return result
