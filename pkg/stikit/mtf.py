"""From intensity envelopes to the STI.

The direct method measures output modulation depths, divides them by the input depths and runs the
result through the shared correction and indexing chain in `finish_analysis`, which the indirect
method reuses for its Schroeder ratios.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import floor
from typing import Iterable, List, Tuple

import numpy as np
from loguru import logger

from stikit.coefficients import StandardCoefficients, load_coefficients, qualify
from stikit.core import (
    NUM_BANDS,
    AnalysisError,
    AudioBuffer,
    CorrectionsApplied,
    DepthMatrix,
    LabeledSignal,
    MtfMatrix,
    OctaveLevels,
    Scheme,
    StiResult,
    total_levels,
)
from stikit.filterbank import band_envelope, band_envelopes

SNR_LIMIT_DB = 15.0
RECOMMENDED_ANALYSIS_SECONDS = 10.0
MIN_PERIODS_OF_LOWEST_FREQUENCY = 2


class MaskingModel(str, Enum):
    # Per-band masking slope L_a,k from the coefficient file.
    TABLE = "table"

    # Slope derived from the level of the band below.
    LEVEL_DEPENDENT = "level-dependent"


@dataclass(frozen=True)
class AnalysisOptions:
    # AudioBuffer for STIPA and impulse responses, labeled signals for Full STI
    reference: AudioBuffer | Iterable[LabeledSignal] | None = None
    signal_levels: OctaveLevels | None = None
    noise_levels: OctaveLevels | None = None
    apply_auditory_effects: bool = True
    masking: MaskingModel = MaskingModel.TABLE

    def __post_init__(self):
        if self.noise_levels is not None and self.signal_levels is None:
            raise AnalysisError("Ambient noise levels require the test signal levels as well.")

    @property
    def ambient_noise_known(self) -> bool:
        return self.signal_levels is not None and self.noise_levels is not None

    @property
    def auditory_effects_active(self) -> bool:
        return self.apply_auditory_effects and self.signal_levels is not None


def modulation_depth(envelope: AudioBuffer, modulation_frequency: float) -> float:
    """Quadrature estimate of the modulation depth at one frequency.

    The envelope is cut from the end to the largest whole number of modulation periods.
    """
    sample_rate = envelope.sample_rate
    # str() keeps the decimal value (0.63 -> 63/100) instead of the nearest binary float
    frequency = Fraction(str(modulation_frequency))
    periods = floor(Fraction(len(envelope)) * frequency / sample_rate)
    if periods < 1:
        raise AnalysisError(
            f"Envelope of {envelope.duration:.3f} s is shorter than one period of {modulation_frequency:g} Hz."
        )
    num_samples = min(round(periods * sample_rate / frequency), len(envelope))

    intensity = envelope.samples[:num_samples]
    total = float(np.sum(intensity))
    if total <= 0:
        raise AnalysisError("Envelope is all zero, the modulation depth is undefined.")

    phase = 2 * np.pi * modulation_frequency * np.arange(num_samples) / sample_rate
    in_phase = float(np.sum(intensity * np.sin(phase)))
    quadrature = float(np.sum(intensity * np.cos(phase)))
    return 2 * np.hypot(in_phase, quadrature) / total


def _depth(envelope: AudioBuffer, modulation_frequency: float, band: int) -> float:
    try:
        return modulation_depth(envelope, modulation_frequency)
    except AnalysisError as e:
        raise AnalysisError(str(e), band=band, modulation_frequency=modulation_frequency) from e


def stipa_frequencies(coeffs: StandardCoefficients) -> np.ndarray:
    """Grid labels of the STIPA pairs, as reported."""
    return np.array(coeffs.stipa_pairs, dtype=np.float64)


def stipa_signal_frequencies(coeffs: StandardCoefficients) -> np.ndarray:
    """Frequencies the STIPA modulators run at and the depths are measured at."""
    return np.array(coeffs.stipa_signal_pairs, dtype=np.float64)


def full_sti_frequencies(coeffs: StandardCoefficients) -> np.ndarray:
    return np.tile(np.asarray(coeffs.modulation_frequencies, dtype=np.float64), (NUM_BANDS, 1))


def scheme_frequencies(scheme: Scheme, coeffs: StandardCoefficients) -> np.ndarray:
    return full_sti_frequencies(coeffs) if scheme == Scheme.FULL_STI else stipa_frequencies(coeffs)


def scheme_signal_frequencies(scheme: Scheme, coeffs: StandardCoefficients) -> np.ndarray:
    return full_sti_frequencies(coeffs) if scheme == Scheme.FULL_STI else stipa_signal_frequencies(coeffs)


def measure_stipa_depths(signal: AudioBuffer, coeffs: StandardCoefficients) -> DepthMatrix:
    frequencies = stipa_signal_frequencies(coeffs)
    depths = np.zeros_like(frequencies)
    for k, envelope in enumerate(band_envelopes(signal, coeffs)):
        for j, frequency in enumerate(frequencies[k]):
            depths[k, j] = _depth(envelope, frequency, band=k + 1)
    logger.debug(f"STIPA depths measured: {np.array2string(depths, precision=4)}")
    return DepthMatrix(values=depths, frequencies=stipa_frequencies(coeffs), scheme=Scheme.STIPA)


def measure_full_sti_depths(signals: Iterable[LabeledSignal], coeffs: StandardCoefficients) -> DepthMatrix:
    """Depth of every labeled signal at its own modulation frequency, after filtering in its own band.

    Signals are consumed one at a time, so a generator of the 98 signals is never held in memory at once.
    """
    frequencies = full_sti_frequencies(coeffs)
    depths = np.zeros_like(frequencies)
    seen = set()
    duplicates: List[Tuple[int, int]] = []
    unknown: List[Tuple[int, int]] = []

    for signal in signals:
        band, modulation = signal.label
        if not (1 <= band <= NUM_BANDS and 1 <= modulation <= frequencies.shape[1]):
            unknown.append(signal.label)
            continue
        if signal.label in seen:
            duplicates.append(signal.label)
            continue
        seen.add(signal.label)
        envelope = band_envelope(signal.buffer, band, coeffs)
        depths[band - 1, modulation - 1] = _depth(envelope, frequencies[band - 1, modulation - 1], band=band)

    expected = {(k, m) for k in range(1, NUM_BANDS + 1) for m in range(1, frequencies.shape[1] + 1)}
    missing = sorted(expected - seen)
    problems = []
    if missing:
        problems.append(f"missing {missing}")
    if duplicates:
        problems.append(f"duplicate {sorted(duplicates)}")
    if unknown:
        problems.append(f"unknown {sorted(unknown)}")
    if problems:
        raise AnalysisError(f"Incomplete Full STI signal set (band, modulation index): {'; '.join(problems)}.")

    logger.debug("Full STI depths measured for all 98 signals")
    return DepthMatrix(values=depths, frequencies=frequencies, scheme=Scheme.FULL_STI)


def nominal_input_depth(scheme: Scheme, coeffs: StandardCoefficients) -> float:
    return 1.0 if scheme == Scheme.FULL_STI else coeffs.stipa_modulation_depth


def transfer_ratios(output: DepthMatrix, input: DepthMatrix | float) -> MtfMatrix:
    if isinstance(input, MtfMatrix):
        if input.scheme != output.scheme or not np.array_equal(input.frequencies, output.frequencies):
            raise AnalysisError(
                f"Input depths ({input.scheme.value}) do not match the output depths ({output.scheme.value})."
            )
        for band, frequency, value in input.cells():
            if value == 0:
                raise AnalysisError("Input modulation depth is zero.", band=band, modulation_frequency=frequency)
        return output.with_values(output.values / input.values)

    if input <= 0:
        raise AnalysisError(f"Nominal input depth must be positive, got {input}.")
    return output.with_values(output.values / input)


def limit_ratios(m: MtfMatrix) -> MtfMatrix:
    return m.with_values(np.minimum(m.values, 1.0))


def apply_ambient_noise(m: MtfMatrix, signal_levels: OctaveLevels, noise_levels: OctaveLevels) -> MtfMatrix:
    """Multiplies band k by I_s,k / (I_s,k + I_n,k)."""
    signal = signal_levels.intensities()
    factor = signal / (signal + noise_levels.intensities())
    return m.with_values(m.values * factor[:, np.newaxis])


def _level_dependent_slope_db(levels_db: np.ndarray) -> np.ndarray:
    return np.select(
        [levels_db < 63, levels_db < 67, levels_db < 100],
        [0.5 * levels_db - 65, 1.8 * levels_db - 146.9, 0.5 * levels_db - 59.8],
        default=-10.0,
    )


def masking_intensities(
    total: OctaveLevels, coeffs: StandardCoefficients, masking: MaskingModel = MaskingModel.TABLE
) -> np.ndarray:
    """I_am,k = I_(k-1) * 10^(L_a,k / 10); nothing masks the lowest band."""
    levels_db = total.decibels()
    intensities = total.intensities()
    if masking == MaskingModel.TABLE:
        slope_db = np.asarray(coeffs.masking_db)[1:]
    else:
        slope_db = _level_dependent_slope_db(levels_db[:-1])
    result = np.zeros(NUM_BANDS)
    result[1:] = intensities[:-1] * 10 ** (slope_db / 10)
    return result


def threshold_intensities(coeffs: StandardCoefficients) -> np.ndarray:
    return 10 ** (np.asarray(coeffs.threshold_db) / 10)


def apply_auditory_effects(
    m: MtfMatrix, total: OctaveLevels, coeffs: StandardCoefficients, masking: MaskingModel = MaskingModel.TABLE
) -> MtfMatrix:
    intensities = total.intensities()
    factor = intensities / (intensities + masking_intensities(total, coeffs, masking) + threshold_intensities(coeffs))
    return m.with_values(m.values * factor[:, np.newaxis])


def effective_snr(m: MtfMatrix) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = 10 * np.log10(m.values / (1 - m.values))
    return np.clip(snr, -SNR_LIMIT_DB, SNR_LIMIT_DB)


def transmission_indices(snr: np.ndarray) -> np.ndarray:
    return (np.asarray(snr) + SNR_LIMIT_DB) / (2 * SNR_LIMIT_DB)


def mti_per_band(ti: np.ndarray) -> np.ndarray:
    return np.mean(np.asarray(ti), axis=1)


def sti_from_mti(mti: np.ndarray, coeffs: StandardCoefficients) -> float:
    """Weighted MTI sum minus the redundancy of adjacent bands, clipped at 1. Values below 0 pass through."""
    mti = np.asarray(mti, dtype=np.float64)
    weighted = float(np.sum(np.asarray(coeffs.alpha) * mti))
    redundancy = float(np.sum(np.asarray(coeffs.beta) * np.sqrt(mti[:-1] * mti[1:])))
    return min(weighted - redundancy, 1.0)


def finish_analysis(
    ratios: MtfMatrix,
    options: AnalysisOptions,
    coeffs: StandardCoefficients,
    reference_used: bool = False,
    ambient_applied_upstream: bool = False,
) -> StiResult:
    """Limit, correct, and reduce a matrix of transfer ratios to the STI."""
    m = limit_ratios(ratios)

    ambient_applied = ambient_applied_upstream
    if options.ambient_noise_known and not ambient_applied_upstream:
        m = apply_ambient_noise(m, options.signal_levels, options.noise_levels)
        ambient_applied = True

    if options.auditory_effects_active:
        total = total_levels(options.signal_levels, options.noise_levels)
        m = apply_auditory_effects(m, total, coeffs, options.masking)

    snr = effective_snr(m)
    ti = transmission_indices(snr)
    mti = mti_per_band(ti)
    sti = sti_from_mti(mti, coeffs)

    below_zero = sti < 0
    if below_zero:
        logger.warning(f"STI of {sti:.4f} is below zero, reporting the raw value.")

    logger.debug(f"MTI per band: {np.array2string(mti, precision=4)}")
    return StiResult(
        sti=sti,
        mti=mti,
        ti=ti,
        snr_eff=snr,
        mtf=m,
        corrections=CorrectionsApplied(
            ambient_noise=ambient_applied,
            auditory_effects=options.auditory_effects_active,
            reference_input_depths=reference_used,
        ),
        category=qualify(sti, coeffs),
        band_centers=tuple(coeffs.band_centers),
        below_zero=below_zero,
    )


def analyze_stipa(
    received: AudioBuffer, options: AnalysisOptions | None = None, coeffs: StandardCoefficients | None = None
) -> StiResult:
    options = options or AnalysisOptions()
    coeffs = coeffs or load_coefficients()
    received.require_analysis_rate()

    lowest = float(np.min(stipa_signal_frequencies(coeffs)))
    minimum = MIN_PERIODS_OF_LOWEST_FREQUENCY / lowest
    if received.duration < minimum:
        raise AnalysisError(
            f"STIPA recording of {received.duration:.2f} s is too short, "
            f"{MIN_PERIODS_OF_LOWEST_FREQUENCY} periods of {lowest:g} Hz need {minimum:.2f} s."
        )
    if received.duration < RECOMMENDED_ANALYSIS_SECONDS:
        logger.warning(
            f"STIPA recording of {received.duration:.2f} s is shorter than the recommended "
            f"{RECOMMENDED_ANALYSIS_SECONDS} s."
        )

    output = measure_stipa_depths(received, coeffs)
    if options.reference is None:
        input = nominal_input_depth(Scheme.STIPA, coeffs)
    elif isinstance(options.reference, AudioBuffer):
        input = measure_stipa_depths(options.reference, coeffs)
    else:
        raise AnalysisError("A STIPA reference has to be a single audio buffer.")

    result = finish_analysis(
        transfer_ratios(output, input), options, coeffs, reference_used=options.reference is not None
    )
    logger.info(f"STIPA: STI = {result.sti:.3f} ({result.category})")
    return result


def analyze_full_sti(
    received: Iterable[LabeledSignal],
    options: AnalysisOptions | None = None,
    coeffs: StandardCoefficients | None = None,
) -> StiResult:
    options = options or AnalysisOptions()
    coeffs = coeffs or load_coefficients()

    output = measure_full_sti_depths(received, coeffs)
    if options.reference is None:
        input = nominal_input_depth(Scheme.FULL_STI, coeffs)
    elif isinstance(options.reference, AudioBuffer):
        raise AnalysisError("A Full STI reference has to be a labeled signal set.")
    else:
        input = measure_full_sti_depths(options.reference, coeffs)

    result = finish_analysis(
        transfer_ratios(output, input), options, coeffs, reference_used=options.reference is not None
    )
    logger.info(f"Full STI: STI = {result.sti:.3f} ({result.category})")
    return result
