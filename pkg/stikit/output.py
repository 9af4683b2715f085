import csv
import dataclasses
import json
from json import JSONEncoder
from pathlib import Path
from typing import List

import numpy as np
from loguru import logger

from stikit.coefficients import StandardCoefficients
from stikit.core import Scheme, StiResult
from stikit.formatting import clean_filename, format_frequency
from stikit.report import LevelTable, render_result_table, render_text_panel

CSV_DIGITS = 6


@dataclasses.dataclass
class ReportBundle:
    result: StiResult
    json_path: Path | None
    mtf_csv_path: Path | None
    mti_csv_path: Path | None
    text_panel: str
    table_path: Path
    levels_csv_path: Path | None = None
    rendered_image_path: Path | None = None


def _cell(value: float | None) -> str:
    return "" if value is None else f"{value:.{CSV_DIGITS}f}"


def _write_csv(path: Path, header: List[str], rows: List[List[str]]):
    with path.open("w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_json(result: StiResult, path: Path):
    path.write_text(json.dumps(result, cls=CustomJSONEncoder, indent=2) + "\n")


def write_mtf_csv(result: StiResult, path: Path):
    """Pixel map: one row per band from 125 Hz up, columns in ascending modulation frequency."""
    mtf = result.mtf
    if result.scheme == Scheme.FULL_STI:
        header = ["band_hz"] + [f"{f:g}" for f in mtf.frequencies[0]]
        rows = [
            [format_frequency(center)] + [_cell(v) for v in values]
            for center, values in zip(result.band_centers, mtf.values)
        ]
    else:
        header = ["band_hz", "f1_hz", "m_f1", "f2_hz", "m_f2"]
        rows = [
            [format_frequency(center), f"{fs[0]:g}", _cell(values[0]), f"{fs[1]:g}", _cell(values[1])]
            for center, fs, values in zip(result.band_centers, mtf.frequencies, mtf.values)
        ]
    _write_csv(path, header, rows)


def write_mti_csv(result: StiResult, coeffs: StandardCoefficients, path: Path):
    betas = list(coeffs.beta) + [None]
    rows = [
        [format_frequency(center), _cell(mti), _cell(alpha), _cell(beta)]
        for center, mti, alpha, beta in zip(result.band_centers, result.mti, coeffs.alpha, betas)
    ]
    _write_csv(path, ["band_hz", "mti", "alpha", "beta"], rows)


def write_levels_csv(levels: LevelTable, path: Path):
    rows = [
        [
            format_frequency(row.band_center),
            _cell(row.signal_db),
            _cell(row.noise_db),
            _cell(row.total_db),
            _cell(row.total_a_db),
            "" if i == 0 else _cell(row.masking_db),
            _cell(row.threshold_db),
        ]
        for i, row in enumerate(levels.rows)
    ]
    header = ["band_hz", "signal_db", "noise_db", "total_db", "total_a_db", "masking_db", "threshold_db"]
    _write_csv(path, header, rows)


def write_report_bundle(
    result: StiResult,
    out_dir: Path | str,
    stem: str,
    coeffs: StandardCoefficients,
    levels: LevelTable | None = None,
    json_output: bool = True,
    csv_output: bool = True,
    png_output: bool = False,
) -> ReportBundle:
    out_dir = Path(out_dir)
    out_dir.mkdir(exist_ok=True, parents=True)
    stem = clean_filename(stem)

    json_path = out_dir / f"{stem}.json" if json_output else None
    mtf_csv_path = out_dir / f"{stem}_mtf.csv" if csv_output else None
    mti_csv_path = out_dir / f"{stem}_mti.csv" if csv_output else None
    levels_csv_path = out_dir / f"{stem}_levels.csv" if csv_output and levels is not None else None
    table_path = out_dir / f"{stem}.md"

    if json_path:
        write_json(result, json_path)
    if mtf_csv_path and mti_csv_path:
        write_mtf_csv(result, mtf_csv_path)
        write_mti_csv(result, coeffs, mti_csv_path)
    if levels_csv_path and levels is not None:
        write_levels_csv(levels, levels_csv_path)
    table_path.write_text(render_result_table(result, coeffs, levels))

    rendered_image_path = None
    if png_output:
        from stikit.plotting import render_png

        rendered_image_path = render_png(result, out_dir / f"{stem}.png", levels)

    logger.info(f"Wrote report '{stem}' to '{out_dir}'")
    return ReportBundle(
        result=result,
        json_path=json_path,
        mtf_csv_path=mtf_csv_path,
        mti_csv_path=mti_csv_path,
        text_panel=render_text_panel(result),
        table_path=table_path,
        levels_csv_path=levels_csv_path,
        rendered_image_path=rendered_image_path,
    )


class CustomJSONEncoder(JSONEncoder):
    def default(self, o):
        if isinstance(o, StiResult):
            return o.to_json()
        elif isinstance(o, np.generic):
            return o.item()
        else:
            return super().default(o)
