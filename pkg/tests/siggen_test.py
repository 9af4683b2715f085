import numpy as np
import pytest
from scipy.signal import fftconvolve, welch

from stikit.core import NUM_BANDS, AudioBuffer, SignalError
from stikit.filterbank import apply_octave_filter_bank, band_envelope
from stikit.mtf import modulation_depth
from stikit.siggen import (
    SweepSpec,
    full_sti_modulator,
    generate_carriers,
    generate_full_sti_signals,
    generate_pink_noise,
    generate_stipa_signal,
    generate_swept_sine,
    stipa_bracket,
    stipa_modulator,
    time_axis,
)

RATE = 48000


def band_power_db(buffer: AudioBuffer, center: float) -> float:
    frequencies, psd = welch(buffer.samples, fs=buffer.sample_rate, nperseg=16384)
    band = (frequencies >= center / np.sqrt(2)) & (frequencies < center * np.sqrt(2))
    return 10 * np.log10(np.sum(psd[band]))


def test__pink_noise_is_deterministic():
    first = generate_pink_noise(10, RATE, seed=1)
    second = generate_pink_noise(10, RATE, seed=1)
    assert np.array_equal(first.samples, second.samples)


def test__pink_noise_has_equal_energy_per_octave():
    noise = generate_pink_noise(30, RATE, seed=1)
    assert band_power_db(noise, 250) == pytest.approx(band_power_db(noise, 1000), abs=1)
    assert band_power_db(noise, 125) == pytest.approx(band_power_db(noise, 8000), abs=1)


def test__pink_noise_seeds_differ_sample_wise_but_not_spectrally():
    first = generate_pink_noise(10, RATE, seed=1)
    second = generate_pink_noise(10, RATE, seed=2)
    assert not np.allclose(first.samples, second.samples)
    for center in [250, 1000, 4000]:
        assert band_power_db(first, center) == pytest.approx(band_power_db(second, center), abs=1)


def test__pink_noise_is_normalized():
    noise = generate_pink_noise(5, RATE, seed=1)
    assert 20 * np.log10(noise.rms) == pytest.approx(-20, abs=1e-9)


@pytest.mark.parametrize(argnames=["duration"], argvalues=[(0,), (-1,)])
def test__non_positive_durations_are_rejected(duration):
    with pytest.raises(SignalError):
        generate_pink_noise(duration, RATE, seed=1)


def test__carriers_have_unit_rms_and_stay_in_their_band(coeffs):
    bank = generate_carriers(2, RATE, seed=1, coeffs=coeffs)
    assert len(bank.carriers) == NUM_BANDS
    for carrier, center in zip(bank.carriers, coeffs.band_centers):
        assert carrier.rms == pytest.approx(1.0)
        if center * 4 < 16000:
            assert band_power_db(carrier, center * 4) < band_power_db(carrier, center) - 30


def test__stipa_bracket_never_needs_clamping(coeffs):
    t = time_axis(25 * RATE, RATE)
    for f1, f2 in coeffs.stipa_signal_pairs:
        bracket = stipa_bracket(t, f1, f2, coeffs.stipa_modulation_depth)
        assert np.mean(bracket < 0) < 1e-4


def test__modulators_are_non_negative(coeffs):
    t = time_axis(10 * RATE, RATE)
    assert np.all(full_sti_modulator(t, 12.5) >= 0)
    f1, f2 = coeffs.stipa_signal_pairs[4]
    assert np.all(stipa_modulator(t, f1, f2, 0.55) >= 0)


@pytest.fixture(scope="module")
def stipa_signal():
    from stikit.coefficients import load_coefficients

    return generate_stipa_signal(25, RATE, seed=1, coeffs=load_coefficients())


def test__stipa_signal_length_and_level(stipa_signal):
    assert len(stipa_signal) == 1_200_000
    assert stipa_signal.peak < 1.0
    assert 20 * np.log10(stipa_signal.rms) == pytest.approx(-20, abs=0.5)


def test__stipa_octave_levels_follow_the_speech_spectrum(stipa_signal, coeffs):
    levels = [20 * np.log10(band.rms) for band in apply_octave_filter_bank(stipa_signal, coeffs)]
    relative = np.array(levels) - levels[3]
    expected = np.array(coeffs.band_weights_db) - coeffs.band_weights_db[3]
    assert np.all(np.abs(relative - expected) <= 1)


def test__stipa_signal_is_deterministic(coeffs):
    first = generate_stipa_signal(4, RATE, seed=7, coeffs=coeffs)
    second = generate_stipa_signal(4, RATE, seed=7, coeffs=coeffs)
    assert np.array_equal(first.samples, second.samples)


def test__short_stipa_signals_warn(coeffs, logged_warnings):
    generate_stipa_signal(4, RATE, seed=1, coeffs=coeffs)
    assert any("recommended" in message for message in logged_warnings)


def test__low_sample_rates_are_rejected_by_the_generators(coeffs):
    with pytest.raises(SignalError):
        generate_stipa_signal(15, 16000, seed=1, coeffs=coeffs)
    with pytest.raises(SignalError):
        next(generate_full_sti_signals(10, 22050, seed=1, coeffs=coeffs))


def test__full_sti_set_has_98_labeled_signals(coeffs):
    labels = [signal.label for signal in generate_full_sti_signals(0.5, RATE, seed=1, coeffs=coeffs)]
    assert len(labels) == 98
    assert labels[0] == (1, 1)
    assert labels[-1] == (7, 14)
    assert len(set(labels)) == 98


FULL_STI_DEPTH_LABELS = [(1, 1), (3, 3), (4, 8), (7, 14)]


@pytest.fixture(scope="module")
def full_sti_signals():
    from stikit.coefficients import load_coefficients

    coeffs = load_coefficients()
    return {
        signal.label: signal
        for signal in generate_full_sti_signals(10, RATE, seed=1, coeffs=coeffs)
        if signal.label in FULL_STI_DEPTH_LABELS
    }


@pytest.mark.parametrize(argnames=["band", "modulation"], argvalues=FULL_STI_DEPTH_LABELS)
def test__full_sti_signal_is_fully_modulated(band, modulation, full_sti_signals, coeffs):
    signal = full_sti_signals[(band, modulation)]
    envelope = band_envelope(signal.buffer, band, coeffs)
    depth = modulation_depth(envelope, coeffs.modulation_frequencies[modulation - 1])
    assert depth == pytest.approx(1.0, abs=0.02)
    assert 20 * np.log10(signal.buffer.rms) == pytest.approx(-20, abs=1e-9)


@pytest.mark.parametrize(argnames=["band"], argvalues=[(1,), (4,), (7,)])
def test__carriers_alone_carry_no_modulation(band, coeffs):
    carrier = generate_carriers(3, RATE, seed=1, coeffs=coeffs).carriers[band - 1]
    envelope = band_envelope(carrier, band, coeffs)
    for frequency in coeffs.modulation_frequencies:
        assert modulation_depth(envelope, frequency) < 0.05


def test__sweeps_shorter_than_1_6_seconds_are_rejected():
    with pytest.raises(SignalError):
        SweepSpec(duration=1.0, f1=20, f2=20000)


@pytest.mark.parametrize(
    argnames=["f1", "f2", "fade_fraction", "lead_in_octaves"],
    argvalues=[
        (0, 20000, 0.005, 1),
        (2000, 1000, 0.005, 1),
        (20, 20000, 0.2, 1),
        (20, 20000, 0.005, -1),
        (20, 20000, 0.005, 4),
    ],
)
def test__invalid_sweep_specs_are_rejected(f1, f2, fade_fraction, lead_in_octaves):
    with pytest.raises(SignalError):
        SweepSpec(duration=3, f1=f1, f2=f2, fade_fraction=fade_fraction, lead_in_octaves=lead_in_octaves)


def test__sweep_above_nyquist_is_rejected():
    with pytest.raises(SignalError, match="Nyquist"):
        generate_swept_sine(SweepSpec(duration=3, f1=20, f2=30000), RATE)


@pytest.mark.parametrize(argnames=["duration"], argvalues=[(3,), (5,)])
def test__sweep_convolved_with_inverse_is_an_impulse(duration):
    sweep, inverse = generate_swept_sine(SweepSpec(duration=duration, f1=20, f2=20000), RATE)
    response = np.abs(fftconvolve(sweep.samples, inverse.samples))
    peak = int(np.argmax(response))
    assert response[peak] == pytest.approx(1.0)
    assert abs(peak - (len(inverse) - 1)) <= 2

    window = int(0.005 * RATE)
    sidelobes = np.concatenate([response[: peak - window], response[peak + window :]])
    assert 20 * np.log10(response[peak] / np.max(sidelobes)) >= 60


def _zero_crossings(samples: np.ndarray) -> int:
    signs = np.sign(samples[samples != 0])
    return int(np.sum(signs[1:] != signs[:-1]))


def test__sweep_frequency_rises_exponentially():
    spec = SweepSpec(duration=4, f1=200, f2=16000)
    sweep, _ = generate_swept_sine(spec, RATE)
    window = int(0.1 * RATE)
    rate_constant = spec.rate_constant

    def expected_crossings(start: float, end: float) -> float:
        def phase(t):
            return 2 * np.pi * spec.f1 * rate_constant * (np.exp(t / rate_constant) - 1)

        return (phase(end) - phase(start)) / np.pi

    lead_in = int(round(spec.lead_in_seconds * RATE))
    assert len(sweep) == lead_in + 4 * RATE

    first = _zero_crossings(sweep.samples[lead_in : lead_in + window])
    last = _zero_crossings(sweep.samples[-window:])
    assert abs(first - expected_crossings(0, 0.1)) <= 3
    assert abs(last - expected_crossings(spec.duration - 0.1, spec.duration)) <= 3


def test__sweep_lead_in_spans_whole_octaves():
    spec = SweepSpec(duration=3, f1=20, f2=20000, lead_in_octaves=1)
    assert spec.lead_in_seconds == pytest.approx(spec.rate_constant * np.log(2))

    sweep, inverse = generate_swept_sine(SweepSpec(duration=3, f1=20, f2=20000, lead_in_octaves=0), RATE)
    assert len(sweep) == len(inverse) == 3 * RATE
