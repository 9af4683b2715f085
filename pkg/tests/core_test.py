import numpy as np
import pytest

from stikit.core import (
    AnalysisError,
    AudioBuffer,
    CorrectionsApplied,
    LevelUnit,
    MtfMatrix,
    OctaveLevels,
    Scheme,
    SignalError,
    StiResult,
    total_levels,
)


def _result() -> StiResult:
    mtf = MtfMatrix(values=np.full((7, 2), 0.5), frequencies=np.tile([1.0, 5.0], (7, 1)), scheme=Scheme.STIPA)
    return StiResult(
        sti=0.5,
        mti=np.full(7, 0.5),
        ti=np.full((7, 2), 0.5),
        snr_eff=np.zeros((7, 2)),
        mtf=mtf,
        corrections=CorrectionsApplied(ambient_noise=True),
        category="fair",
        band_centers=(125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0),
    )


def test__audio_buffer_rejects_stereo():
    with pytest.raises(SignalError):
        AudioBuffer(np.zeros((10, 2)), 48000)


@pytest.mark.parametrize(argnames=["sample_rate"], argvalues=[(0,), (-48000,), (44100.5,)])
def test__audio_buffer_rejects_invalid_sample_rates(sample_rate):
    with pytest.raises(SignalError):
        AudioBuffer(np.zeros(10), sample_rate)


def test__audio_buffer_rejects_non_finite_samples():
    with pytest.raises(SignalError):
        AudioBuffer(np.array([0.0, np.nan]), 48000)


def test__audio_buffer_properties():
    buffer = AudioBuffer(np.array([0.5, -0.5, 0.5, -0.5]), 4)
    assert buffer.duration == 1.0
    assert buffer.rms == pytest.approx(0.5)
    assert buffer.peak == 0.5
    assert buffer.scaled(2).peak == 1.0


def test__analysis_rate_below_24k_is_rejected():
    with pytest.raises(AnalysisError, match="24000"):
        AudioBuffer(np.zeros(10), 16000).require_analysis_rate()


def test__analysis_error_names_band_and_frequency():
    error = AnalysisError("Input modulation depth is zero.", band=4, modulation_frequency=6.3)
    assert str(error) == "Input modulation depth is zero. (band k=4, f_m=6.3 Hz)"
    assert error.band == 4


def test__octave_levels_need_seven_values():
    with pytest.raises(SignalError):
        OctaveLevels.from_db([60, 60])


def test__octave_levels_convert_between_units():
    levels = OctaveLevels.from_db([10, 20, 0, 0, 0, 0, 0])
    assert levels.intensities()[:2] == pytest.approx([10, 100])
    intensities = OctaveLevels((100, 1, 1, 1, 1, 1, 1), LevelUnit.INTENSITY)
    assert intensities.decibels()[0] == pytest.approx(20)


def test__total_levels_add_intensities():
    total = total_levels(OctaveLevels.from_db([60] * 7), OctaveLevels.from_db([60] * 7))
    assert total.decibels() == pytest.approx([60 + 10 * np.log10(2)] * 7)


def test__mtf_matrix_checks_shape_for_scheme():
    with pytest.raises(AnalysisError):
        MtfMatrix(values=np.ones((7, 14)), frequencies=np.ones((7, 14)), scheme=Scheme.STIPA)


def test__mtf_matrix_rejects_negative_entries():
    with pytest.raises(AnalysisError):
        MtfMatrix(values=-np.ones((7, 2)), frequencies=np.ones((7, 2)), scheme=Scheme.STIPA)


def test__result_json_keeps_all_fields():
    result = _result()
    json_data = result.to_json()
    assert json_data["schema_version"] == 1
    assert StiResult.from_json(json_data) == result


@pytest.mark.parametrize(argnames=["version"], argvalues=[(None,), ("1",), (2,)])
def test__result_json_rejects_unknown_schema_versions(version):
    json_data = _result().to_json()
    json_data["schema_version"] = version
    with pytest.raises(AnalysisError):
        StiResult.from_json(json_data)
