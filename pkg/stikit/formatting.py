import math
import re
from datetime import datetime
from typing import List

FILENAME_REPLACEMENT_REGEX = r"[^0-9a-zA-Z.\-]+"


def clean_filename(name: str) -> str:
    return re.sub(FILENAME_REPLACEMENT_REGEX, "_", name)


def format_number(value: float, digits: int = 3) -> str:
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    if math.isnan(value):
        return "nan"
    text = f"{value:.{digits}f}"
    # no "-0.000"
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def format_frequency(frequency: float) -> str:
    """125 -> '125', 8000 -> '8k', 0.63 -> '0.63'."""
    if frequency >= 1000 and frequency % 1000 == 0:
        return f"{frequency / 1000:g}k"
    return f"{frequency:g}"


def parse_levels(text: str, expected: int = 7) -> List[float]:
    """Parses comma-separated dB values."""
    parts = [part.strip() for part in text.split(",")]
    try:
        values = [float(part) for part in parts]
    except ValueError:
        raise ValueError(f"expected {expected} comma-separated numbers, got '{text}'")
    if len(values) != expected:
        raise ValueError(f"expected {expected} comma-separated numbers, got {len(values)}")
    return values


def format_bar(value: float, width: int = 40) -> str:
    """Horizontal bar for a value in [0, 1]."""
    filled = round(min(max(value, 0.0), 1.0) * width)
    return "█" * filled + "░" * (width - filled)


def wrap_text(text: str, width: int = 100) -> List[str]:
    lines = []
    for line in text.splitlines():
        if len(line) <= width:
            lines.append(line)
        else:
            num_chars = 0
            words = []
            for word in line.split(" "):
                if num_chars + len(word) > width:
                    if words:
                        lines.append(" ".join(words))
                        words = [word]
                        num_chars = len(word) + 1
                    else:
                        lines.append(word[:width])
                        words = [word[width:]]
                        num_chars = len(word[width:]) + 1
                else:
                    words.append(word)
                    num_chars += len(word) + 1
            if words:
                lines.append(" ".join(words))
    return lines


def wrap_text_in_box(text: str, width: int = 60, title: str = ""):
    if title:
        title = f" {title} "
    wrapped_text = wrap_text(text, width)
    boxed_text = "\n".join(f"│ {line.ljust(width)} │" for line in wrapped_text)
    return f"""┌─{title}{"─" * (width + 1 - len(title))}┐
{boxed_text}
└{"─" * (width + 2)}┘"""


def format_timestamp(timestamp: datetime) -> str:
    return timestamp.strftime("%Y-%m-%d %H:%M:%S")
