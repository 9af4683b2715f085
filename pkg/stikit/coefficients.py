import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
from loguru import logger

from stikit.core import NUM_BANDS, CoefficientError

DEFAULT_COEFFICIENTS_PATH = Path(__file__).parent / "data" / "coefficients.json"
NUM_MODULATION_FREQUENCIES = 14

# A STIPA signal frequency may differ from its grid label by at most this fraction.
SIGNAL_LABEL_TOLERANCE = 0.01


@dataclass(frozen=True)
class Category:
    label: str
    lower: float


@dataclass(frozen=True)
class StandardCoefficients:
    band_centers: Tuple[float, ...]
    modulation_frequencies: Tuple[float, ...]
    stipa_pairs: Tuple[Tuple[float, float], ...]
    stipa_signal_pairs: Tuple[Tuple[float, float], ...]
    band_weights_db: Tuple[float, ...]
    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]
    masking_db: Tuple[float, ...]
    threshold_db: Tuple[float, ...]
    stipa_modulation_depth: float
    categories: Tuple[Category, ...]
    a_weighting_db: Tuple[float, ...]

    @property
    def band_gains(self) -> np.ndarray:
        """G_k = 10^(L_k/20)."""
        return 10 ** (np.asarray(self.band_weights_db) / 20)

    def validate(self):
        def check(condition: bool, key: str, message: str):
            if not condition:
                raise CoefficientError(f"Invalid coefficient '{key}': {message}")

        check(len(self.band_centers) == NUM_BANDS, "band_centers", f"expected {NUM_BANDS} values")
        check(
            all(b == 2 * a for a, b in zip(self.band_centers, self.band_centers[1:])),
            "band_centers",
            "centers must be octave spaced (strictly doubling)",
        )
        check(
            len(self.modulation_frequencies) == NUM_MODULATION_FREQUENCIES,
            "modulation_frequencies",
            f"expected {NUM_MODULATION_FREQUENCIES} values",
        )
        check(
            all(a < b for a, b in zip(self.modulation_frequencies, self.modulation_frequencies[1:])),
            "modulation_frequencies",
            "values must be strictly increasing",
        )
        check(
            self.modulation_frequencies[0] == 0.63 and self.modulation_frequencies[-1] == 12.5,
            "modulation_frequencies",
            "grid must span 0.63 Hz to 12.5 Hz",
        )
        check(len(self.stipa_pairs) == NUM_BANDS, "stipa_pairs", f"expected {NUM_BANDS} pairs")
        check(len(self.stipa_signal_pairs) == NUM_BANDS, "stipa_signal_pairs", f"expected {NUM_BANDS} pairs")
        for pair, signal_pair in zip(self.stipa_pairs, self.stipa_signal_pairs):
            check(len(pair) == 2 and pair[0] < pair[1], "stipa_pairs", f"pair {pair} must be (f1, f2) with f1 < f2")
            for label in pair:
                check(
                    label in self.modulation_frequencies,
                    "stipa_pairs",
                    f"{label} Hz is not on the modulation frequency grid",
                )
            check(len(signal_pair) == 2, "stipa_signal_pairs", f"pair {signal_pair} must hold two frequencies")
            for label, frequency in zip(pair, signal_pair):
                check(
                    abs(frequency - label) <= SIGNAL_LABEL_TOLERANCE * label,
                    "stipa_signal_pairs",
                    f"{frequency} Hz is more than {SIGNAL_LABEL_TOLERANCE:.0%} away from its label {label} Hz",
                )
        for key in ["band_weights_db", "alpha", "masking_db", "threshold_db", "a_weighting_db"]:
            check(len(getattr(self, key)) == NUM_BANDS, key, f"expected {NUM_BANDS} values")
        check(len(self.beta) == NUM_BANDS - 1, "beta", f"expected {NUM_BANDS - 1} values")
        check(
            abs(sum(self.alpha) - sum(self.beta) - 1) < 1e-9,
            "alpha",
            f"sum(alpha) - sum(beta) must be 1, got {sum(self.alpha) - sum(self.beta)!r}",
        )
        check(0 < self.stipa_modulation_depth <= 1, "stipa_modulation_depth", "must lie in (0, 1]")
        check(len(self.categories) > 0, "categories", "at least one category is needed")
        lowers = [c.lower for c in self.categories]
        check(lowers[0] == 0 and lowers == sorted(lowers), "categories", "lower bounds must ascend from 0")

    def to_json(self) -> Dict[str, Any]:
        json_data = asdict(self)
        for key in ["stipa_pairs", "stipa_signal_pairs"]:
            json_data[key] = [list(pair) for pair in getattr(self, key)]
        return json_data


def _parse_value(key: str, value: Any) -> Any:
    try:
        if key == "stipa_modulation_depth":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError("expected a number")
            return float(value)
        if key in ("stipa_pairs", "stipa_signal_pairs"):
            return tuple((float(a), float(b)) for a, b in value)
        if key == "categories":
            return tuple(Category(label=str(c["label"]), lower=float(c["lower"])) for c in value)
        if isinstance(value, (str, bytes)):
            raise TypeError("expected a list of numbers")
        return tuple(float(v) for v in value)
    except (TypeError, ValueError, KeyError) as e:
        raise CoefficientError(f"Malformed coefficient '{key}': {e}") from e


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise CoefficientError(f"Cannot read coefficient file '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise CoefficientError(f"Malformed coefficient file '{path}': {e}") from e
    if not isinstance(data, dict):
        raise CoefficientError(f"Coefficient file '{path}' must contain a JSON object.")
    return data


def _parse(data: Dict[str, Any], path: Path) -> Dict[str, Any]:
    known = {f.name for f in fields(StandardCoefficients)}
    parsed = {}
    for key, value in data.items():
        if key.startswith("_"):
            continue
        if key not in known:
            raise CoefficientError(f"Unknown coefficient '{key}' in '{path}'.")
        parsed[key] = _parse_value(key, value)
    return parsed


def load_coefficients(override_path: str | Path | None = None) -> StandardCoefficients:
    defaults = _parse(_read_json(DEFAULT_COEFFICIENTS_PATH), DEFAULT_COEFFICIENTS_PATH)
    coefficients = StandardCoefficients(**defaults)

    if override_path is not None:
        override_path = Path(override_path)
        logger.debug(f'Reading coefficient override: "{override_path}"')
        overrides = _parse(_read_json(override_path), override_path)
        for key in overrides:
            logger.debug(f'Overriding "{key}" from "{override_path}"')
        coefficients = replace(coefficients, **overrides)

    coefficients.validate()
    return coefficients


def write_coefficients(coefficients: StandardCoefficients, path: str | Path):
    Path(path).write_text(json.dumps(coefficients.to_json(), indent=2) + "\n")


def qualify(sti: float, coefficients: StandardCoefficients) -> str:
    """Verbal qualification category of an STI value."""
    label = coefficients.categories[0].label
    for category in coefficients.categories:
        if sti >= category.lower:
            label = category.label
    return label


def category_bounds(coefficients: StandardCoefficients) -> List[Tuple[str, float, float]]:
    bounds = []
    for current, following in zip(coefficients.categories, list(coefficients.categories[1:]) + [None]):
        bounds.append((current.label, current.lower, following.lower if following else 1.0))
    return bounds
