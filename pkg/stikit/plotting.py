"""PNG rendering of a result. Needs the optional `png` extra (matplotlib)."""

from pathlib import Path
from typing import Dict, List

import numpy as np

from stikit.core import AnalysisError, Scheme, StiResult
from stikit.formatting import format_frequency
from stikit.report import LevelTable


LEVEL_CURVE_STYLES = {
    "Signal": {"marker": "o"},
    "Noise": {"marker": "s"},
    "Total S+N": {"marker": "^"},
    "Total S+N (A)": {"marker": "v", "linestyle": ":"},
    "Masking": {"marker": "x", "linestyle": "-."},
    "Threshold": {"linestyle": "--"},
}


def _pyplot():
    try:
        import matplotlib
    except ImportError as e:
        raise AnalysisError("PNG output needs matplotlib, install stikit with the 'png' extra.") from e
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def level_curves(levels: LevelTable) -> Dict[str, List[float]]:
    """Curves of the levels plot in dB; the lowest band has no masking and plots as a gap."""
    curves = {"Signal": [r.signal_db for r in levels.rows]}
    if levels.rows[0].noise_db is not None:
        curves["Noise"] = [r.noise_db for r in levels.rows]
    curves["Total S+N"] = [r.total_db for r in levels.rows]
    curves["Total S+N (A)"] = [r.total_a_db for r in levels.rows]
    curves["Masking"] = [r.masking_db if np.isfinite(r.masking_db) else np.nan for r in levels.rows]
    curves["Threshold"] = [r.threshold_db for r in levels.rows]
    return curves


def render_png(result: StiResult, path: Path, levels: LevelTable | None = None) -> Path:
    plt = _pyplot()
    num_plots = 3 if levels is not None else 2
    fig, axes = plt.subplots(1, num_plots, figsize=(5 * num_plots, 4.5))
    band_labels = [format_frequency(c) for c in result.band_centers]

    pixel_map = axes[0]
    image = pixel_map.imshow(result.mtf.values, vmin=0, vmax=1, cmap="viridis", aspect="auto", origin="lower")
    pixel_map.set_yticks(range(len(band_labels)), band_labels)
    pixel_map.set_ylabel("Octave band (Hz)")
    if result.scheme == Scheme.FULL_STI:
        frequencies = result.mtf.frequencies[0]
        pixel_map.set_xticks(range(len(frequencies)), [f"{f:g}" for f in frequencies], rotation=90)
        pixel_map.set_xlabel("Modulation frequency (Hz)")
    else:
        pixel_map.set_xticks([0, 1], ["f1", "f2"])
        pixel_map.set_xlabel("Modulation frequency pair")
    pixel_map.set_title("Modulation transfer")
    fig.colorbar(image, ax=pixel_map)

    bars = axes[1]
    bars.bar(band_labels, result.mti, color="tab:blue")
    bars.set_ylim(0, 1)
    bars.set_xlabel("Octave band (Hz)")
    bars.set_ylabel("MTI")
    bars.set_title(f"STI = {result.sti:.2f} ({result.category})")

    if levels is not None:
        plot = axes[2]
        x = np.arange(len(levels.rows))
        for label, curve in level_curves(levels).items():
            plot.plot(x, curve, **LEVEL_CURVE_STYLES[label], label=label)
        plot.set_xticks(x, band_labels)
        plot.set_xlabel("Octave band (Hz)")
        plot.set_ylabel("Level (dB)")
        plot.legend()
        plot.set_title(f"Levels, {levels.overall_a_db:.1f} dB(A) overall")

    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return Path(path)
