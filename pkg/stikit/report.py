from dataclasses import dataclass
from pathlib import Path
from typing import List

import jinja2
import numpy as np

import stikit.formatting as formatting
from stikit.coefficients import StandardCoefficients, category_bounds
from stikit.core import OctaveLevels, Scheme, StiResult, total_levels
from stikit.mtf import MaskingModel, masking_intensities, threshold_intensities

templates_path = Path(__file__).parent / "templates"
jinja_env = jinja2.Environment(loader=jinja2.FileSystemLoader(templates_path), trim_blocks=True)
jinja_env.filters["num"] = formatting.format_number
jinja_env.filters["freq"] = formatting.format_frequency
jinja_env.filters["bar"] = formatting.format_bar
jinja_env.filters["zip"] = zip


def _db(intensity: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10 * np.log10(intensity)


@dataclass
class LevelRow:
    band_center: float
    signal_db: float
    noise_db: float | None
    total_db: float
    total_a_db: float
    masking_db: float
    threshold_db: float


@dataclass
class LevelTable:
    """Per-band levels in dB; masking is -inf in the lowest band."""

    rows: List[LevelRow]

    @staticmethod
    def from_levels(
        signal_levels: OctaveLevels,
        noise_levels: OctaveLevels | None,
        coeffs: StandardCoefficients,
        masking: MaskingModel = MaskingModel.TABLE,
    ) -> "LevelTable":
        total = total_levels(signal_levels, noise_levels)
        total_db = total.decibels()
        masking_db = _db(masking_intensities(total, coeffs, masking))
        threshold_db = _db(threshold_intensities(coeffs))
        noise_db = noise_levels.decibels() if noise_levels is not None else [None] * len(total_db)
        rows = [
            LevelRow(
                band_center=center,
                signal_db=float(signal),
                noise_db=None if noise is None else float(noise),
                total_db=float(t),
                total_a_db=float(t + a),
                masking_db=float(m),
                threshold_db=float(th),
            )
            for center, signal, noise, t, a, m, th in zip(
                coeffs.band_centers,
                signal_levels.decibels(),
                noise_db,
                total_db,
                coeffs.a_weighting_db,
                masking_db,
                threshold_db,
            )
        ]
        return LevelTable(rows)

    @property
    def overall_a_db(self) -> float:
        """Energetic sum of the A-weighted band totals."""
        return float(10 * np.log10(np.sum(10 ** (np.array([r.total_a_db for r in self.rows]) / 10))))


class Template:
    def __init__(self, template_path: str):
        self.path = template_path
        self.template = jinja_env.get_template(template_path)


class TextPanelTemplate(Template):
    def render(self, result: StiResult) -> str:
        return self.template.render(result=result).strip() + "\n"


class ResultTableTemplate(Template):
    def render(self, result: StiResult, coeffs: StandardCoefficients, levels: LevelTable | None = None) -> str:
        rows = zip(result.band_centers, result.mtf.values, result.mti, coeffs.alpha, list(coeffs.beta) + [None])
        return (
            self.template.render(
                result=result,
                rows=list(rows),
                frequencies=result.mtf.frequencies[0] if result.scheme == Scheme.FULL_STI else None,
                categories=category_bounds(coeffs),
                levels=levels,
            ).strip()
            + "\n"
        )


def render_text_panel(result: StiResult) -> str:
    return TextPanelTemplate("text_panel.md").render(result)


def render_result_table(result: StiResult, coeffs: StandardCoefficients, levels: LevelTable | None = None) -> str:
    return ResultTableTemplate("result_table.md").render(result, coeffs, levels)
