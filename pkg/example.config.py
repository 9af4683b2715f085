# Copy the config file to "~/.config/stikit/config.py" or keep it in the working directory.
# Every key can also be set as environment variable, e.g. STIKIT_SAMPLE_RATE=44100.

# Directory for per-run logs (JSON result and text panel). No logs are written if omitted.
logging_path = ""

# Coefficient override file (JSON), merged field by field over the shipped coefficients.
coefficients_path = ""

# Directory with externally obtained reference signals and their manifest.yaml ("verify annex-c").
annex_c_path = ""

# Sample rate of generated signals in Hz.
sample_rate = 48000

# RMS level of generated signals in dBFS.
rms_target_dbfs = -20.0
