import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import click
from loguru import logger

from stikit.coefficients import StandardCoefficients, load_coefficients
from stikit.config import config
from stikit.core import (
    AnalysisError,
    AudioFileError,
    CoefficientError,
    ConfigError,
    OctaveLevels,
    Scheme,
    SignalError,
    StiResult,
)
from stikit.formatting import parse_levels
from stikit.indirect import (
    ImpulseResponse,
    analyze_impulse_response,
    deconvolve_impulse_response,
    trim_impulse_response,
)
from stikit.logging import ResultPrinter, RunLogger, configure_logging
from stikit.mtf import AnalysisOptions, MaskingModel, analyze_full_sti, analyze_stipa
from stikit.output import ReportBundle, write_report_bundle
from stikit.report import LevelTable
from stikit.siggen import SweepSpec, generate_full_sti_signals, generate_stipa_signal, generate_swept_sine
from stikit.verification import DEFAULT_TOLERANCE, run_verification
from stikit.wav import read_labeled_signals, read_wav, write_labeled_signal, write_wav

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ANALYSIS = 3


@dataclass
class CommandResult:
    exit_code: int
    bundle: ReportBundle | None = None


def _levels_option(ctx: click.Context, param: click.Parameter, value: str | None) -> OctaveLevels | None:
    if value is None:
        return None
    try:
        return OctaveLevels.from_db(parse_levels(value))
    except ValueError as e:
        raise click.BadParameter(str(e), ctx=ctx, param=param)


def _coefficients(path: str | None) -> StandardCoefficients:
    return load_coefficients(path if path else config.coefficients_path)


ANALYSIS_OPTIONS = [
    click.option("--coeffs", nargs=1, type=str, required=False, help="Coefficient override file (JSON)."),
    click.option(
        "--out",
        nargs=1,
        type=click.Path(file_okay=False),
        required=False,
        help="Write the report to the given directory instead of next to the input.",
    ),
    click.option("--json", "json_output", is_flag=True, default=False, help="Write the JSON report."),
    click.option("--csv", "csv_output", is_flag=True, default=False, help="Write the CSV reports."),
    click.option("--png", "png_output", is_flag=True, default=False, help="Render a PNG (needs matplotlib)."),
    click.option(
        "--signal-levels",
        nargs=1,
        type=str,
        callback=_levels_option,
        required=False,
        help="Test signal levels of the 7 octave bands in dB, comma-separated.",
    ),
    click.option(
        "--noise-levels",
        nargs=1,
        type=str,
        callback=_levels_option,
        required=False,
        help="Ambient noise levels of the 7 octave bands in dB, comma-separated. Requires --signal-levels.",
    ),
    click.option("--no-auditory", is_flag=True, default=False, help="Skip the masking and threshold correction."),
    click.option(
        "--masking",
        nargs=1,
        type=click.Choice([m.value for m in MaskingModel]),
        default=MaskingModel.TABLE.value,
        help="Masking model of the auditory correction.",
    ),
    click.option("--silent", "-s", is_flag=True, default=False, help="Disable the printing of the result panel."),
    click.option("--nologs", "-n", is_flag=True, default=False, help="Disable the logging of results."),
]


def analysis_options(command):
    """Options shared by all analysis commands."""
    for option in reversed(ANALYSIS_OPTIONS):
        command = option(command)
    return command


def _analysis_settings(signal_levels, noise_levels, no_auditory, masking, reference=None) -> AnalysisOptions:
    if noise_levels is not None and signal_levels is None:
        raise click.UsageError("--noise-levels requires --signal-levels.")
    return AnalysisOptions(
        reference=reference,
        signal_levels=signal_levels,
        noise_levels=noise_levels,
        apply_auditory_effects=not no_auditory,
        masking=MaskingModel(masking),
    )


def _finish(
    result: StiResult,
    input_path: Path,
    coeffs: StandardCoefficients,
    options: AnalysisOptions,
    out: str | None,
    json_output: bool,
    csv_output: bool,
    png_output: bool,
    silent: bool,
    nologs: bool,
) -> ReportBundle:
    if not json_output and not csv_output:
        json_output = csv_output = True
    name = input_path.stem if input_path.is_file() else input_path.name
    out_dir = Path(out) if out else input_path.parent

    levels = None
    if options.signal_levels is not None:
        levels = LevelTable.from_levels(options.signal_levels, options.noise_levels, coeffs, options.masking)

    if not nologs:
        RunLogger().log_result(result, name)
    ResultPrinter(silent=silent).print_result(result, title=name)
    return write_report_bundle(
        result,
        out_dir,
        stem=name,
        coeffs=coeffs,
        levels=levels,
        json_output=json_output,
        csv_output=csv_output,
        png_output=png_output,
    )


@click.group()
@click.option("--verbose", "-v", is_flag=True, default=False, help="Log every pipeline step.")
@click.option("--quiet", "-q", is_flag=True, default=False, help="Only log warnings and errors.")
def cli(verbose: bool, quiet: bool):
    configure_logging(verbose=verbose, quiet=quiet)


@cli.group()
def gen():
    pass


@cli.group()
def analyze():
    pass


@cli.group()
def verify():
    pass


@gen.command("stipa")
@click.option("--duration", nargs=1, type=float, default=25.0, help="Duration in seconds.")
@click.option("--rate", nargs=1, type=int, default=None, help="Sample rate in Hz. Defaults to the configured rate.")
@click.option("--seed", nargs=1, type=int, default=1, help="Seed of the noise carriers.")
@click.option("--out", nargs=1, type=click.Path(dir_okay=False), required=True, help="Output WAV file.")
@click.option("--coeffs", nargs=1, type=str, required=False, help="Coefficient override file (JSON).")
def gen_stipa(duration: float, rate: int | None, seed: int, out: str, coeffs: str | None):
    signal = generate_stipa_signal(duration, rate or config.sample_rate, seed, _coefficients(coeffs))
    write_wav(out, signal)


@gen.command("fullsti")
@click.option("--duration", nargs=1, type=float, default=10.0, help="Duration of every signal in seconds.")
@click.option("--rate", nargs=1, type=int, default=None, help="Sample rate in Hz. Defaults to the configured rate.")
@click.option("--seed", nargs=1, type=int, default=1, help="Seed of the noise carriers.")
@click.option("--out", nargs=1, type=click.Path(file_okay=False), required=True, help="Output directory.")
@click.option("--coeffs", nargs=1, type=str, required=False, help="Coefficient override file (JSON).")
def gen_fullsti(duration: float, rate: int | None, seed: int, out: str, coeffs: str | None):
    coefficients = _coefficients(coeffs)
    sample_rate = rate or config.sample_rate
    out_dir = Path(out)
    out_dir.mkdir(exist_ok=True, parents=True)

    entries = []
    for signal in generate_full_sti_signals(duration, sample_rate, seed, coefficients):
        path = write_labeled_signal(out_dir, signal)
        entries.append(
            {
                "band": signal.band,
                "band_center": coefficients.band_centers[signal.band - 1],
                "modulation": signal.modulation,
                "modulation_frequency": coefficients.modulation_frequencies[signal.modulation - 1],
                "file": path.name,
            }
        )
    manifest = {"sample_rate": sample_rate, "duration": duration, "seed": seed, "signals": entries}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    logger.info(f"Wrote {len(entries)} Full STI signals to '{out_dir}'")


@gen.command("sweep")
@click.option("--duration", nargs=1, type=float, default=3.0, help="Duration in seconds.")
@click.option("--f1", nargs=1, type=float, default=20.0, help="Start frequency in Hz.")
@click.option("--f2", nargs=1, type=float, default=20000.0, help="End frequency in Hz.")
@click.option("--fade", nargs=1, type=float, default=0.005, help="Fade length as a fraction of the duration.")
@click.option(
    "--lead-in",
    nargs=1,
    type=float,
    default=1.0,
    help="Octaves swept below f1 while fading in. The response is flat from f1 on.",
)
@click.option("--rate", nargs=1, type=int, default=None, help="Sample rate in Hz. Defaults to the configured rate.")
@click.option(
    "--out",
    nargs=1,
    type=click.Path(dir_okay=False),
    required=True,
    help="Output WAV file. The inverse filter is written next to it as <stem>_inverse.wav.",
)
def gen_sweep(duration: float, f1: float, f2: float, fade: float, lead_in: float, rate: int | None, out: str):
    sweep, inverse = generate_swept_sine(SweepSpec(duration, f1, f2, fade, lead_in), rate or config.sample_rate)
    out_path = Path(out)
    write_wav(out_path, sweep)
    # float keeps the precision of the small inverse filter samples
    write_wav(out_path.with_name(f"{out_path.stem}_inverse.wav"), inverse, subtype="FLOAT")


@analyze.command("stipa")
@click.argument("file", nargs=1, type=str, required=True)
@click.option("--reference", nargs=1, type=str, required=False, help="Recording of the input signal (WAV).")
@analysis_options
def analyze_stipa_command(file: str, reference: str | None, coeffs: str | None, **kwargs) -> ReportBundle:
    coefficients = _coefficients(coeffs)
    options = _analysis_settings(
        kwargs.pop("signal_levels"),
        kwargs.pop("noise_levels"),
        kwargs.pop("no_auditory"),
        kwargs.pop("masking"),
        reference=read_wav(reference) if reference else None,
    )
    result = analyze_stipa(read_wav(file), options, coefficients)
    return _finish(result, Path(file).resolve(), coefficients, options, **kwargs)


@analyze.command("fullsti")
@click.argument("directory", nargs=1, type=str, required=True)
@click.option("--reference", nargs=1, type=str, required=False, help="Directory of the input signals.")
@analysis_options
def analyze_fullsti_command(directory: str, reference: str | None, coeffs: str | None, **kwargs) -> ReportBundle:
    coefficients = _coefficients(coeffs)
    options = _analysis_settings(
        kwargs.pop("signal_levels"),
        kwargs.pop("noise_levels"),
        kwargs.pop("no_auditory"),
        kwargs.pop("masking"),
        reference=read_labeled_signals(reference) if reference else None,
    )
    result = analyze_full_sti(read_labeled_signals(directory), options, coefficients)
    return _finish(result, Path(directory).resolve(), coefficients, options, **kwargs)


@analyze.command("ir")
@click.argument("file", nargs=1, type=str, required=True)
@click.option(
    "--inverse",
    nargs=1,
    type=str,
    required=False,
    help="Inverse filter (WAV). FILE is then a recorded sweep and gets deconvolved first.",
)
@click.option("--reference", nargs=1, type=str, required=False, help="Impulse response of the measurement chain.")
@click.option(
    "--scheme",
    nargs=1,
    type=click.Choice([s.value for s in Scheme]),
    default=Scheme.FULL_STI.value,
    help="Modulation frequencies to evaluate.",
)
@click.option(
    "--strict-eq5",
    is_flag=True,
    default=False,
    help="Apply the per-band SNR inside the Schroeder ratios instead of the ambient-noise step.",
)
@click.option("--no-compensation", is_flag=True, default=False, help="Do not divide out the octave filters' smearing.")
@click.option("--trim", nargs=1, type=float, required=False, help="Keep only the first S seconds of the response.")
@analysis_options
def analyze_ir_command(
    file: str,
    inverse: str | None,
    reference: str | None,
    scheme: str,
    strict_eq5: bool,
    no_compensation: bool,
    trim: float | None,
    coeffs: str | None,
    **kwargs,
) -> ReportBundle:
    coefficients = _coefficients(coeffs)
    options = _analysis_settings(
        kwargs.pop("signal_levels"),
        kwargs.pop("noise_levels"),
        kwargs.pop("no_auditory"),
        kwargs.pop("masking"),
        reference=read_wav(reference) if reference else None,
    )
    if inverse:
        ir = deconvolve_impulse_response(read_wav(file), read_wav(inverse))
    else:
        ir = ImpulseResponse.from_buffer(read_wav(file))
    if trim is not None:
        ir = trim_impulse_response(ir, trim)

    result = analyze_impulse_response(
        ir,
        Scheme(scheme),
        options,
        coefficients,
        strict_eq5=strict_eq5,
        compensate_filters=not no_compensation,
    )
    return _finish(result, Path(file).resolve(), coefficients, options, **kwargs)


@verify.command("annex-c")
@click.option("--dir", "directory", nargs=1, type=str, required=False, help="Directory with manifest.yaml.")
@click.option("--tolerance", nargs=1, type=float, default=DEFAULT_TOLERANCE, help="Allowed STI deviation.")
@click.option("--coeffs", nargs=1, type=str, required=False, help="Coefficient override file (JSON).")
def verify_annex_c(directory: str | None, tolerance: float, coeffs: str | None):
    path = Path(directory) if directory else config.annex_c_path
    if path is None:
        logger.warning("Verification skipped: no directory given and annex_c_path is not configured.")
        return
    report = run_verification(path, tolerance, _coefficients(coeffs))
    print(report.summary())
    if not report.skipped and not report.passed:
        failed = sum(not entry.passed(tolerance) for entry in report.entries)
        raise AnalysisError(f"{failed} of {len(report.entries)} reference signals outside ±{tolerance}.")


def run_command(argv: Sequence[str]) -> CommandResult:
    try:
        rv = cli.main(args=list(argv), prog_name="stikit", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return CommandResult(EXIT_USAGE)
    except click.Abort:
        return CommandResult(EXIT_USAGE)
    except (SignalError, CoefficientError) as e:
        logger.error(str(e))
        return CommandResult(EXIT_USAGE)
    except (AudioFileError, ConfigError, OSError) as e:
        logger.error(str(e))
        return CommandResult(EXIT_IO)
    except AnalysisError as e:
        logger.error(str(e))
        return CommandResult(EXIT_ANALYSIS)

    # --help and similar early exits return their exit code
    if isinstance(rv, int):
        return CommandResult(rv)
    return CommandResult(EXIT_SUCCESS, rv if isinstance(rv, ReportBundle) else None)


def main(argv: List[str] | None = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv).exit_code
