import re
from pathlib import Path
from typing import Iterator

import numpy as np
import soundfile as sf
from loguru import logger

from stikit.core import AudioBuffer, AudioFileError, LabeledSignal, SignalError

SUPPORTED_SUBTYPES = ["PCM_16", "PCM_24", "PCM_32", "FLOAT", "DOUBLE"]
CLIP_RUN_LENGTH = 3

# Largest value each integer format represents, as float in [-1, 1).
_FULL_SCALE = {
    "PCM_16": 1 - 2**-15,
    "PCM_24": 1 - 2**-23,
    "PCM_32": 1 - 2**-31,
}


def _longest_full_scale_run(samples: np.ndarray, full_scale: float) -> int:
    at_full_scale = np.concatenate([[False], np.abs(samples) >= full_scale, [False]])
    edges = np.flatnonzero(np.diff(at_full_scale.astype(np.int8)))
    if len(edges) == 0:
        return 0
    return int(np.max(edges[1::2] - edges[::2]))


def read_wav(path: str | Path) -> AudioBuffer:
    path = Path(path)
    if not path.is_file():
        raise AudioFileError(f"WAV file not found: '{path}'.")
    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise AudioFileError(f"Cannot read '{path}': {e}") from e

    if info.subtype not in SUPPORTED_SUBTYPES:
        raise AudioFileError(
            f"Unsupported sample format '{info.subtype}' in '{path}', expected one of {', '.join(SUPPORTED_SUBTYPES)}."
        )

    samples, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    if samples.shape[1] > 1:
        logger.warning(f"'{path.name}' has {samples.shape[1]} channels, analysing the first one only.")
    samples = samples[:, 0]

    run = _longest_full_scale_run(samples, _FULL_SCALE.get(info.subtype, 1.0))
    if run >= CLIP_RUN_LENGTH:
        logger.warning(f"'{path.name}' appears clipped: {run} consecutive samples at full scale.")

    logger.debug(f"Read '{path}': {len(samples)} samples at {sample_rate} Hz ({info.subtype})")
    return AudioBuffer(samples, sample_rate)


def write_wav(path: str | Path, buffer: AudioBuffer, subtype: str = "PCM_24"):
    if subtype not in SUPPORTED_SUBTYPES:
        raise AudioFileError(f"Unsupported sample format '{subtype}'.")
    if buffer.peak > 1.0:
        raise SignalError(f"Samples exceed full scale (peak {buffer.peak:.3f}), refusing to write '{path}'.")
    sf.write(str(path), buffer.samples, buffer.sample_rate, subtype=subtype)
    logger.info(f"Wrote '{path}' ({buffer.duration:.2f} s, {subtype})")


FULL_STI_FILENAME = "fullsti_k{band}_m{modulation}.wav"
FULL_STI_FILENAME_REGEX = re.compile(r"^fullsti_k(\d+)_m(\d+)\.wav$")


def write_labeled_signal(directory: str | Path, signal: LabeledSignal, subtype: str = "PCM_24") -> Path:
    path = Path(directory) / FULL_STI_FILENAME.format(band=signal.band, modulation=signal.modulation)
    write_wav(path, signal.buffer, subtype)
    return path


def read_labeled_signals(directory: str | Path) -> Iterator[LabeledSignal]:
    """Yields the Full STI signals of a directory one by one, ordered by band and modulation index."""
    directory = Path(directory)
    if not directory.is_dir():
        raise AudioFileError(f"Full STI directory not found: '{directory}'.")
    labeled = []
    for path in directory.iterdir():
        if match := FULL_STI_FILENAME_REGEX.match(path.name):
            labeled.append(((int(match.group(1)), int(match.group(2))), path))
    if not labeled:
        raise AudioFileError(f"No files named like '{FULL_STI_FILENAME}' in '{directory}'.")
    for (band, modulation), path in sorted(labeled):
        yield LabeledSignal(band, modulation, read_wav(path))
