"""Speech Transmission Index toolkit: test signal generation and direct / indirect STI analysis."""

__version__ = "0.1"
