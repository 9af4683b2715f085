from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np

NUM_BANDS = 7
MIN_ANALYSIS_SAMPLE_RATE = 24000
SCHEMA_VERSION = 1


class StiError(Exception):
    """Base class for all errors raised by stikit."""


class CoefficientError(StiError):
    pass


class SignalError(StiError):
    pass


class AudioFileError(StiError):
    pass


class ConfigError(StiError):
    pass


class AnalysisError(StiError):
    def __init__(self, message: str, band: int | None = None, modulation_frequency: float | None = None):
        self.band = band
        self.modulation_frequency = modulation_frequency
        context = []
        if band is not None:
            context.append(f"band k={band}")
        if modulation_frequency is not None:
            context.append(f"f_m={modulation_frequency:g} Hz")
        super().__init__(f"{message} ({', '.join(context)})" if context else message)


class Scheme(str, Enum):
    # 98 signals, 14 modulation frequencies per band.
    FULL_STI = "full"

    # One mixed signal, 2 modulation frequencies per band.
    STIPA = "stipa"


@dataclass(eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise SignalError(f"Audio buffers are mono, got shape {self.samples.shape}.")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise SignalError(f"Sample rate must be a positive integer, got {self.sample_rate}.")
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise SignalError("Audio buffer contains non-finite samples.")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    @property
    def peak(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.max(np.abs(self.samples)))

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)

    def require_analysis_rate(self):
        # the 8 kHz octave reaches ~11.3 kHz
        if self.sample_rate < MIN_ANALYSIS_SAMPLE_RATE:
            raise AnalysisError(
                f"Sample rate {self.sample_rate} Hz is below {MIN_ANALYSIS_SAMPLE_RATE} Hz, "
                "the 8 kHz octave band cannot be represented."
            )


@dataclass(eq=False)
class LabeledSignal:
    """One signal of the Full STI set. Band and modulation are 1-based."""

    band: int
    modulation: int
    buffer: AudioBuffer

    @property
    def label(self) -> Tuple[int, int]:
        return (self.band, self.modulation)


class LevelUnit(str, Enum):
    DB = "db"
    INTENSITY = "intensity"


@dataclass(frozen=True)
class OctaveLevels:
    values: Tuple[float, ...]
    unit: LevelUnit = LevelUnit.DB

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) != NUM_BANDS:
            raise SignalError(f"Octave levels need exactly {NUM_BANDS} values, got {len(values)}.")
        if self.unit == LevelUnit.INTENSITY and any(v < 0 for v in values):
            raise SignalError("Intensities must not be negative.")
        object.__setattr__(self, "values", values)

    @staticmethod
    def from_db(values: Sequence[float]) -> "OctaveLevels":
        return OctaveLevels(tuple(values), LevelUnit.DB)

    def intensities(self) -> np.ndarray:
        values = np.asarray(self.values)
        if self.unit == LevelUnit.INTENSITY:
            return values
        return 10 ** (values / 10)

    def decibels(self) -> np.ndarray:
        values = np.asarray(self.values)
        if self.unit == LevelUnit.DB:
            return values
        with np.errstate(divide="ignore"):
            return 10 * np.log10(values)


def total_levels(signal: OctaveLevels, noise: OctaveLevels | None) -> OctaveLevels:
    """Per-band total level I_k = I_s,k + I_n,k, in dB."""
    intensity = signal.intensities()
    if noise is not None:
        intensity = intensity + noise.intensities()
    with np.errstate(divide="ignore"):
        return OctaveLevels.from_db(10 * np.log10(intensity))


@dataclass(eq=False)
class MtfMatrix:
    """Per-band, per-modulation-frequency values (ratios or depths).

    Rows are the octave bands 125 Hz .. 8 kHz, columns the modulation frequencies used in that band.
    """

    values: np.ndarray
    frequencies: np.ndarray
    scheme: Scheme

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.frequencies = np.asarray(self.frequencies, dtype=np.float64)
        expected_columns = 14 if self.scheme == Scheme.FULL_STI else 2
        if self.values.shape != (NUM_BANDS, expected_columns) or self.frequencies.shape != self.values.shape:
            raise AnalysisError(
                f"{self.scheme.value} matrices are {NUM_BANDS}x{expected_columns}, "
                f"got values {self.values.shape} and frequencies {self.frequencies.shape}."
            )
        if np.any(np.isnan(self.values)) or np.any(self.values < 0):
            raise AnalysisError("Modulation matrices must not contain negative or NaN entries.")

    def with_values(self, values: np.ndarray) -> "MtfMatrix":
        return MtfMatrix(values=values, frequencies=self.frequencies, scheme=self.scheme)

    def cells(self):
        """Yields (band, modulation frequency, value) with 1-based bands."""
        for k in range(NUM_BANDS):
            for f, v in zip(self.frequencies[k], self.values[k]):
                yield k + 1, float(f), float(v)

    def to_json(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme.value,
            "values": self.values.tolist(),
            "frequencies": self.frequencies.tolist(),
        }

    @staticmethod
    def from_json(json: Dict[str, Any]) -> "MtfMatrix":
        return MtfMatrix(
            values=np.array(json["values"]),
            frequencies=np.array(json["frequencies"]),
            scheme=Scheme(json["scheme"]),
        )

    def __eq__(self, other):
        if not isinstance(other, MtfMatrix):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.frequencies, other.frequencies)
        )


# Holds m_o(k, f_m) or m_i(k, f_m).
DepthMatrix = MtfMatrix


@dataclass(frozen=True)
class CorrectionsApplied:
    ambient_noise: bool = False
    auditory_effects: bool = False
    reference_input_depths: bool = False

    def to_json(self) -> Dict[str, bool]:
        return {
            "ambient_noise": self.ambient_noise,
            "auditory_effects": self.auditory_effects,
            "reference_input_depths": self.reference_input_depths,
        }

    @staticmethod
    def from_json(json: Dict[str, Any]) -> "CorrectionsApplied":
        return CorrectionsApplied(
            ambient_noise=json["ambient_noise"],
            auditory_effects=json["auditory_effects"],
            reference_input_depths=json["reference_input_depths"],
        )


@dataclass(eq=False)
class StiResult:
    sti: float
    mti: np.ndarray
    ti: np.ndarray
    snr_eff: np.ndarray
    mtf: MtfMatrix
    corrections: CorrectionsApplied
    category: str
    band_centers: Tuple[float, ...]
    below_zero: bool = False

    @property
    def scheme(self) -> Scheme:
        return self.mtf.scheme

    def to_json(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "scheme": self.scheme.value,
            "sti": self.sti,
            "category": self.category,
            "below_zero": self.below_zero,
            "band_centers": list(self.band_centers),
            "mti": np.asarray(self.mti).tolist(),
            "mtf": self.mtf.to_json(),
            "ti": np.asarray(self.ti).tolist(),
            "snr_eff": np.asarray(self.snr_eff).tolist(),
            "corrections": self.corrections.to_json(),
        }

    @staticmethod
    def from_json(json: Dict[str, Any]) -> "StiResult":
        version = json.get("schema_version")
        if not isinstance(version, int) or version > SCHEMA_VERSION:
            raise AnalysisError(f"Unsupported report schema version: {version!r}.")
        return StiResult(
            sti=json["sti"],
            mti=np.array(json["mti"]),
            ti=np.array(json["ti"]),
            snr_eff=np.array(json["snr_eff"]),
            mtf=MtfMatrix.from_json(json["mtf"]),
            corrections=CorrectionsApplied.from_json(json["corrections"]),
            category=json["category"],
            band_centers=tuple(json["band_centers"]),
            below_zero=json["below_zero"],
        )

    def __eq__(self, other):
        if not isinstance(other, StiResult):
            return NotImplemented
        return (
            self.sti == other.sti
            and self.category == other.category
            and self.below_zero == other.below_zero
            and tuple(self.band_centers) == tuple(other.band_centers)
            and self.corrections == other.corrections
            and self.mtf == other.mtf
            and np.array_equal(self.mti, other.mti)
            and np.array_equal(self.ti, other.ti)
            and np.array_equal(self.snr_eff, other.snr_eff)
        )
