import json
import sys
from datetime import datetime
from pathlib import Path
from typing import List

from loguru import logger

from stikit.config import config
from stikit.core import StiResult
from stikit.formatting import clean_filename, format_timestamp, wrap_text_in_box
from stikit.report import render_text_panel


def configure_logging(verbose: bool = False, quiet: bool = False):
    logger.remove()
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.add(sys.stderr, level=level)


class RunLogger:
    """Keeps one timestamped JSON and text panel per run name in the log directory.

    Logging a name again replaces the earlier pair, also when another logger or an earlier run wrote it.
    """

    def __init__(self, directory: Path | None = None):
        self.directory = directory or config.logging_path

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def log_result(self, result: StiResult, name: str) -> None:
        if not self.enabled:
            return
        name = clean_filename(name)
        for path in self.find_logs(name):
            path.unlink(missing_ok=True)

        timestamp = datetime.now()
        json_path = self.construct_file_name(name, "json", timestamp)
        text_path = self.construct_file_name(name, "txt", timestamp)

        with json_path.open("w") as file:
            json.dump(result.to_json(), file)
        text_path.write_text(render_text_panel(result))
        logger.debug(f"Logged run '{name}' to '{self.directory}'")

    def find_logs(self, name: str) -> List[Path]:
        suffixes = (f"] {name}.json", f"] {name}.txt")
        return [
            path
            for path in Path(self.directory).iterdir()
            if path.is_file() and path.name.startswith("[") and path.name.endswith(suffixes)
        ]

    def construct_file_name(self, name: str, suffix: str, timestamp: datetime) -> Path:
        return Path(self.directory) / f"[{format_timestamp(timestamp)}] {name}.{suffix}"


class ResultPrinter:
    def __init__(self, silent: bool = False):
        self.silent = silent

    def print_result(self, result: StiResult, title: str = "STI"):
        if self.silent:
            return
        print(wrap_text_in_box(render_text_panel(result).rstrip(), title=title), flush=True)
