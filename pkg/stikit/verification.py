"""Checks the analysis against externally obtained reference signals with known STI values.

The directory holds the signals and a `manifest.yaml`:

    signals:
      - file: stipa_062.wav
        method: stipa            # stipa | fullsti | ir
        expected_sti: 0.62
      - file: fullsti_set/       # directory of fullsti_k{band}_m{index}.wav
        method: fullsti
        expected_sti: 0.41
        signal_levels: [60, 60, 60, 60, 60, 60, 60]
        noise_levels: [50, 50, 50, 50, 50, 50, 50]
      - file: room.wav
        method: ir
        scheme: stipa
        expected_sti: 0.55
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import yaml
from loguru import logger

from stikit.coefficients import StandardCoefficients, load_coefficients
from stikit.core import AudioFileError, OctaveLevels, Scheme, StiError, StiResult
from stikit.indirect import ImpulseResponse, analyze_impulse_response
from stikit.mtf import AnalysisOptions, analyze_full_sti, analyze_stipa
from stikit.wav import read_labeled_signals, read_wav

MANIFEST_NAME = "manifest.yaml"
DEFAULT_TOLERANCE = 0.01
METHODS = ["stipa", "fullsti", "ir"]


@dataclass
class VerificationEntry:
    name: str
    method: str
    expected: float
    measured: float | None
    error: str | None = None

    @property
    def delta(self) -> float | None:
        return None if self.measured is None else self.measured - self.expected

    def passed(self, tolerance: float) -> bool:
        return self.delta is not None and abs(self.delta) <= tolerance


@dataclass
class VerificationReport:
    tolerance: float
    entries: List[VerificationEntry] = field(default_factory=list)
    skipped: bool = False
    reason: str | None = None

    @property
    def passed(self) -> bool:
        return all(entry.passed(self.tolerance) for entry in self.entries)

    def summary(self) -> str:
        if self.skipped:
            return f"Verification skipped: {self.reason}"
        lines = []
        for entry in self.entries:
            if entry.measured is None:
                lines.append(f"FAIL  {entry.name}: {entry.error}")
            else:
                status = "ok  " if entry.passed(self.tolerance) else "FAIL"
                lines.append(
                    f"{status}  {entry.name}: expected {entry.expected:.3f}, "
                    f"measured {entry.measured:.3f}, delta {entry.delta:+.3f}"
                )
        num_passed = sum(e.passed(self.tolerance) for e in self.entries)
        lines.append(f"{num_passed}/{len(self.entries)} within ±{self.tolerance}")
        return "\n".join(lines)


def _levels(spec: Dict[str, Any], key: str) -> OctaveLevels | None:
    return OctaveLevels.from_db(spec[key]) if spec.get(key) is not None else None


def _analyze_entry(directory: Path, spec: Dict[str, Any], coeffs: StandardCoefficients) -> StiResult:
    method = spec.get("method")
    if method not in METHODS:
        raise AudioFileError(f"Unknown method {method!r} in {MANIFEST_NAME}, expected one of {', '.join(METHODS)}.")
    options = AnalysisOptions(signal_levels=_levels(spec, "signal_levels"), noise_levels=_levels(spec, "noise_levels"))
    path = directory / spec["file"]
    if method == "stipa":
        return analyze_stipa(read_wav(path), options, coeffs)
    if method == "fullsti":
        return analyze_full_sti(read_labeled_signals(path), options, coeffs)
    ir = ImpulseResponse.from_buffer(read_wav(path))
    return analyze_impulse_response(ir, Scheme(spec.get("scheme", "full")), options, coeffs)


def read_manifest(path: Path) -> List[Dict[str, Any]]:
    try:
        manifest = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise AudioFileError(f"Malformed {MANIFEST_NAME} '{path}': {e}") from e
    if not isinstance(manifest, dict) or not isinstance(manifest.get("signals"), list):
        raise AudioFileError(f"'{path}' must contain a 'signals' list.")
    for spec in manifest["signals"]:
        if not isinstance(spec, dict) or "file" not in spec or "expected_sti" not in spec:
            raise AudioFileError(f"Every entry of '{path}' needs 'file' and 'expected_sti', got {spec!r}.")
    return manifest["signals"]


def run_verification(
    directory: str | Path, tolerance: float = DEFAULT_TOLERANCE, coeffs: StandardCoefficients | None = None
) -> VerificationReport:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        reason = f"no {MANIFEST_NAME} in '{directory}'"
        logger.warning(f"Verification skipped: {reason}")
        return VerificationReport(tolerance=tolerance, skipped=True, reason=reason)

    coeffs = coeffs or load_coefficients()
    report = VerificationReport(tolerance=tolerance)
    for spec in read_manifest(manifest_path):
        name = str(spec["file"])
        entry = VerificationEntry(
            name=name, method=str(spec.get("method")), expected=float(spec["expected_sti"]), measured=None
        )
        try:
            entry.measured = _analyze_entry(directory, spec, coeffs).sti
        except StiError as e:
            entry.error = str(e)
            logger.warning(f"Verification of '{name}' failed: {e}")
        report.entries.append(entry)
    logger.info(f"Verification: {sum(e.passed(tolerance) for e in report.entries)}/{len(report.entries)} passed")
    return report
