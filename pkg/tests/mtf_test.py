from dataclasses import replace

import numpy as np
import pytest

from stikit.coefficients import load_coefficients
from stikit.core import AnalysisError, AudioBuffer, LabeledSignal, MtfMatrix, OctaveLevels, Scheme, total_levels
from stikit.mtf import (
    AnalysisOptions,
    MaskingModel,
    analyze_full_sti,
    analyze_stipa,
    apply_ambient_noise,
    apply_auditory_effects,
    effective_snr,
    finish_analysis,
    full_sti_frequencies,
    limit_ratios,
    masking_intensities,
    measure_full_sti_depths,
    measure_stipa_depths,
    modulation_depth,
    mti_per_band,
    nominal_input_depth,
    sti_from_mti,
    stipa_frequencies,
    threshold_intensities,
    transfer_ratios,
    transmission_indices,
)
from stikit.siggen import generate_full_sti_signals, generate_stipa_signal

RATE = 48000


def sinusoidal_envelope(depth, frequency, duration, sample_rate=RATE, phase=0.0, mean=1.0):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioBuffer(mean * (1 + depth * np.cos(2 * np.pi * frequency * t + phase)), sample_rate)


def stipa_matrix(value, coeffs):
    frequencies = stipa_frequencies(coeffs)
    return MtfMatrix(values=np.full(frequencies.shape, value), frequencies=frequencies, scheme=Scheme.STIPA)


def full_matrix(value, coeffs):
    frequencies = full_sti_frequencies(coeffs)
    return MtfMatrix(values=np.full(frequencies.shape, value), frequencies=frequencies, scheme=Scheme.FULL_STI)


@pytest.fixture(scope="module")
def stipa_signal():
    return generate_stipa_signal(25, RATE, seed=1, coeffs=load_coefficients())


# --- modulation depth ---


def test__depth_of_a_sinusoidal_envelope():
    assert modulation_depth(sinusoidal_envelope(0.55, 2, 10), 2) == pytest.approx(0.55, abs=1e-6)


def test__depth_of_a_constant_envelope_is_zero():
    assert modulation_depth(AudioBuffer(np.ones(RATE * 10), RATE), 2) == pytest.approx(0, abs=1e-9)


def test__depth_ignores_other_modulation_frequencies():
    assert modulation_depth(sinusoidal_envelope(0.5, 3, 10), 2) <= 0.01


def test__depth_is_independent_of_phase_and_level():
    reference = modulation_depth(sinusoidal_envelope(0.3, 1.25, 8), 1.25)
    shifted = modulation_depth(sinusoidal_envelope(0.3, 1.25, 8, phase=1.1, mean=250.0), 1.25)
    assert shifted == pytest.approx(reference, abs=1e-12)


@pytest.mark.parametrize(
    argnames=["depth", "phase", "frequency"],
    argvalues=[
        (depth / 10, phase, frequency)
        for depth in range(11)
        for phase in [0, np.pi / 3, np.pi]
        for frequency in load_coefficients().modulation_frequencies
    ],
)
def test__depth_is_exact_over_whole_periods_at_44_1_khz(depth, phase, frequency):
    sample_rate = 44100
    # an even number of periods makes P * fs / f an integer for every grid frequency
    periods = 2 if frequency < 1 else 4
    duration = (periods + 0.7) / frequency
    envelope = sinusoidal_envelope(depth, frequency, duration, sample_rate=sample_rate, phase=phase)
    assert modulation_depth(envelope, frequency) == pytest.approx(depth, abs=1e-9)


def test__depth_of_envelope_shorter_than_one_period_is_rejected():
    with pytest.raises(AnalysisError, match="shorter than one period"):
        modulation_depth(sinusoidal_envelope(0.5, 0.63, 1.5), 0.63)


def test__depth_of_a_silent_envelope_is_rejected():
    with pytest.raises(AnalysisError, match="all zero"):
        modulation_depth(AudioBuffer(np.zeros(RATE * 4), RATE), 1)


# --- ratios and corrections ---


def test__nominal_input_depths(coeffs):
    assert nominal_input_depth(Scheme.FULL_STI, coeffs) == 1.0
    assert nominal_input_depth(Scheme.STIPA, coeffs) == 0.55


def test__transfer_ratio_against_nominal_depth(coeffs):
    ratios = transfer_ratios(stipa_matrix(0.275, coeffs), 0.55)
    assert np.allclose(ratios.values, 0.5)


def test__transfer_ratio_against_reference_depths(coeffs):
    ratios = transfer_ratios(stipa_matrix(0.3, coeffs), stipa_matrix(0.6, coeffs))
    assert np.allclose(ratios.values, 0.5)


def test__transfer_ratio_with_zero_input_depth_names_the_cell(coeffs):
    input = stipa_matrix(0.5, coeffs)
    values = input.values.copy()
    values[3, 1] = 0
    with pytest.raises(AnalysisError) as info:
        transfer_ratios(stipa_matrix(0.3, coeffs), input.with_values(values))
    assert info.value.band == 4
    assert info.value.modulation_frequency == 10.0


def test__transfer_ratio_rejects_mismatched_schemes(coeffs):
    with pytest.raises(AnalysisError):
        transfer_ratios(stipa_matrix(0.3, coeffs), full_matrix(0.5, coeffs))


def test__ratios_are_limited_to_one(coeffs):
    values = np.full((7, 2), 0.5)
    values[0, 0] = 1.2
    limited = limit_ratios(stipa_matrix(0.5, coeffs).with_values(values))
    assert limited.values[0, 0] == 1.0
    assert limited.values[1, 0] == 0.5


def test__equal_signal_and_noise_halve_the_ratios(coeffs):
    levels = OctaveLevels.from_db([60] * 7)
    corrected = apply_ambient_noise(stipa_matrix(1.0, coeffs), levels, levels)
    assert np.allclose(corrected.values, 0.5)


def test__noise_levels_need_signal_levels():
    with pytest.raises(AnalysisError):
        AnalysisOptions(noise_levels=OctaveLevels.from_db([50] * 7))


def test__table_masking_is_applied_from_the_band_below(coeffs):
    total = OctaveLevels.from_db([60] * 7)
    masking = masking_intensities(total, coeffs)
    assert masking[0] == 0
    assert np.allclose(masking[1:], 10 ** ((60 - 35) / 10))


@pytest.mark.parametrize(
    argnames=["level", "slope"],
    argvalues=[(50, -40), (60, -35), (65, -29.9), (70, -24.8), (99, -10.3), (110, -10)],
)
def test__level_dependent_masking_slope(coeffs, level, slope):
    total = OctaveLevels.from_db([level] * 7)
    masking = masking_intensities(total, coeffs, MaskingModel.LEVEL_DEPENDENT)
    assert 10 * np.log10(masking[1]) == pytest.approx(level + slope)


def test__level_dependent_masking_slope_is_continuous(coeffs):
    for edge in [63, 67, 100]:
        below = masking_intensities(OctaveLevels.from_db([edge - 1e-9] * 7), coeffs, MaskingModel.LEVEL_DEPENDENT)
        above = masking_intensities(OctaveLevels.from_db([edge] * 7), coeffs, MaskingModel.LEVEL_DEPENDENT)
        assert 10 * np.log10(above[1] / below[1]) == pytest.approx(0, abs=0.25)


def test__auditory_effects_follow_masking_and_threshold(coeffs):
    total = OctaveLevels.from_db([70] * 7)
    corrected = apply_auditory_effects(stipa_matrix(1.0, coeffs), total, coeffs)
    intensity = 10**7
    expected = intensity / (intensity + masking_intensities(total, coeffs) + threshold_intensities(coeffs))
    assert np.allclose(corrected.values[:, 0], expected)
    assert corrected.values[0, 0] == pytest.approx(intensity / (intensity + 10**4.6))


@pytest.mark.parametrize(argnames=["model"], argvalues=[(MaskingModel.TABLE,), (MaskingModel.LEVEL_DEPENDENT,)])
def test__corrections_never_increase_entries(coeffs, model):
    ratios = stipa_matrix(0.8, coeffs)
    signal = OctaveLevels.from_db([72, 70, 66, 60, 55, 50, 45])
    noise = OctaveLevels.from_db([60, 58, 55, 50, 45, 40, 35])
    corrected = apply_ambient_noise(ratios, signal, noise)
    assert np.all(corrected.values <= ratios.values)
    audible = apply_auditory_effects(corrected, total_levels(signal, noise), coeffs, model)
    assert np.all(audible.values <= corrected.values)


# --- indices ---


@pytest.mark.parametrize(
    argnames=["m", "snr"],
    argvalues=[(0.5, 0.0), (0.9, 9.5424), (1.0, 15.0), (0.0, -15.0), (0.999, 15.0), (0.01, -15.0)],
)
def test__effective_snr(coeffs, m, snr):
    assert effective_snr(stipa_matrix(m, coeffs))[0, 0] == pytest.approx(snr, abs=1e-4)


def test__transmission_indices():
    assert np.allclose(transmission_indices(np.array([-15.0, 0.0, 15.0])), [0.0, 0.5, 1.0])


def test__mti_is_the_row_mean():
    ti = np.array([[0.2, 0.4]] * 7)
    assert np.allclose(mti_per_band(ti), 0.3)


@pytest.mark.parametrize(argnames=["mti", "sti"], argvalues=[(1.0, 1.0), (0.5, 0.5), (0.37, 0.37), (0.0, 0.0)])
def test__sti_of_uniform_mti(coeffs, mti, sti):
    assert sti_from_mti(np.full(7, mti), coeffs) == pytest.approx(sti, abs=1e-12)


def test__sti_below_zero_is_reported_raw(coeffs, logged_warnings):
    odd_coeffs = replace(coeffs, alpha=(0.01,) * 7, beta=(0.3,) * 6)
    result = finish_analysis(stipa_matrix(0.5, coeffs), AnalysisOptions(), odd_coeffs)
    assert result.sti == pytest.approx(0.5 * 0.07 - 0.5 * 1.8)
    assert result.below_zero
    assert result.category == "bad"
    assert any("below zero" in message for message in logged_warnings)


def test__unity_ratios_give_sti_one(coeffs):
    result = finish_analysis(full_matrix(1.0, coeffs), AnalysisOptions(), coeffs)
    assert result.sti == pytest.approx(1.0)
    assert result.category == "excellent"
    assert not result.below_zero


def test__ambient_correction_upstream_is_not_repeated(coeffs):
    levels = OctaveLevels.from_db([60] * 7)
    options = AnalysisOptions(signal_levels=levels, noise_levels=levels, apply_auditory_effects=False)
    result = finish_analysis(stipa_matrix(1.0, coeffs), options, coeffs, ambient_applied_upstream=True)
    assert result.sti == pytest.approx(1.0)
    assert result.corrections.ambient_noise


# --- end to end ---


def test__stipa_loopback(stipa_signal, coeffs):
    result = analyze_stipa(stipa_signal, coeffs=coeffs)
    assert result.sti >= 0.98
    assert result.scheme == Scheme.STIPA
    assert not result.corrections.reference_input_depths


@pytest.mark.parametrize(argnames=["gain"], argvalues=[(0.1,), (3.0,)])
def test__stipa_is_gain_invariant(gain, stipa_signal, coeffs):
    reference = analyze_stipa(stipa_signal, coeffs=coeffs)
    scaled = analyze_stipa(stipa_signal.scaled(gain), coeffs=coeffs)
    assert scaled.sti == pytest.approx(reference.sti, abs=1e-6)


def test__stipa_equals_its_manual_composition(coeffs):
    signal = generate_stipa_signal(12, RATE, seed=3, coeffs=coeffs)
    levels = OctaveLevels.from_db([60] * 7)
    options = AnalysisOptions(signal_levels=levels, noise_levels=OctaveLevels.from_db([45] * 7))
    ratios = transfer_ratios(measure_stipa_depths(signal, coeffs), nominal_input_depth(Scheme.STIPA, coeffs))
    assert analyze_stipa(signal, options, coeffs) == finish_analysis(ratios, options, coeffs)


def test__stipa_against_itself_as_reference_is_perfect(coeffs):
    signal = generate_stipa_signal(12, RATE, seed=5, coeffs=coeffs)
    result = analyze_stipa(signal, AnalysisOptions(reference=signal), coeffs)
    assert result.sti == pytest.approx(1.0)
    assert result.corrections.reference_input_depths


def test__stipa_at_zero_db_snr(stipa_signal, coeffs):
    levels = OctaveLevels.from_db([60] * 7)
    options = AnalysisOptions(signal_levels=levels, noise_levels=levels, apply_auditory_effects=False)
    result = analyze_stipa(stipa_signal, options, coeffs)
    assert result.sti == pytest.approx(0.5, abs=0.02)
    assert result.corrections.ambient_noise
    assert not result.corrections.auditory_effects


def test__short_stipa_recordings_are_rejected(coeffs):
    with pytest.raises(AnalysisError, match="too short"):
        analyze_stipa(AudioBuffer(np.random.default_rng(1).standard_normal(RATE), RATE), coeffs=coeffs)


def test__stipa_reference_must_be_a_buffer(stipa_signal, coeffs):
    with pytest.raises(AnalysisError):
        analyze_stipa(stipa_signal, AnalysisOptions(reference=[]), coeffs)


@pytest.mark.parametrize(argnames=["seed"], argvalues=[(1,), (2,), (3,)])
def test__full_sti_loopback_at_three_seconds_per_signal(seed, coeffs):
    result = analyze_full_sti(generate_full_sti_signals(3, RATE, seed=seed, coeffs=coeffs), coeffs=coeffs)
    assert result.sti >= 0.98
    assert result.mtf.values.shape == (7, 14)


def noise_set(labels):
    noise = AudioBuffer(np.random.default_rng(1).standard_normal(2 * RATE), RATE)
    return [LabeledSignal(band, modulation, noise) for band, modulation in labels]


ALL_LABELS = [(band, modulation) for band in range(1, 8) for modulation in range(1, 15)]


def test__full_sti_set_with_a_missing_signal_is_rejected(coeffs):
    labels = [label for label in ALL_LABELS if label != (4, 7)]
    with pytest.raises(AnalysisError, match=r"missing \[\(4, 7\)\]"):
        measure_full_sti_depths(noise_set(labels), coeffs)


def test__full_sti_set_with_duplicate_and_unknown_signals_is_rejected(coeffs):
    labels = ALL_LABELS + [(2, 3), (8, 1)]
    with pytest.raises(AnalysisError) as info:
        measure_full_sti_depths(noise_set(labels), coeffs)
    assert "duplicate [(2, 3)]" in str(info.value)
    assert "unknown [(8, 1)]" in str(info.value)


def test__complete_full_sti_set_of_noise_is_measured(coeffs):
    depths = measure_full_sti_depths(noise_set(ALL_LABELS), coeffs)
    assert depths.scheme == Scheme.FULL_STI
    assert np.all(depths.values >= 0)


def test__full_sti_depths_are_gain_invariant(coeffs):
    signals = noise_set(ALL_LABELS)
    quiet = [LabeledSignal(s.band, s.modulation, s.buffer.scaled(0.1)) for s in signals]
    loud_depths = measure_full_sti_depths(signals, coeffs)
    quiet_depths = measure_full_sti_depths(quiet, coeffs)
    assert np.allclose(quiet_depths.values, loud_depths.values, rtol=0, atol=1e-9)
