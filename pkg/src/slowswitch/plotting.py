"""Self-contained SVG line plots of scenario tables (presentation only)."""
from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_LABELS = {
    "delta_p_mhz": "probe detuning / 2pi (MHz)",
    "n_pump": "pump photons",
    "control_photons": "control photons",
    "switch_photons": "switch photons",
    "od": "optical depth",
    "t_p": "pulse rms width t_p (s)",
    "rabi_c_sq": "control |Omega_c|^2 (rad^2/s^2)",
    "rabi_s_sq": "switch |Omega_s|^2 (rad^2/s^2)",
    "gamma12": "ground-state decoherence gamma_12 (rad/s)",
    "temperature": "temperature (K)",
    "time_s": "time (ns)",
}


def render_svg(config, table) -> bytes:
    """SVG bytes; deterministic for identical tables (fixed hash salt, no date)."""
    with plt.rc_context({"svg.hashsalt": "slowswitch", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            if config.pipeline == "truth-table":
                _bars(ax, table)
            else:
                _lines(ax, config, table)
            ax.set_title(config.data.get("description", config.scenario), fontsize=9)
            fig.tight_layout()
            buf = io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def _lines(ax, config, table):
    x = table.column(table.header[0])
    xlabel = _LABELS.get(table.header[0], table.header[0])
    if table.header[0] == "time_s":
        x = x * 1e9
    for name in table.header[1:]:
        y = table.column(name)
        if name.endswith("_sampled"):
            ax.plot(x, y, "o", ms=3, label=name)
        else:
            ax.plot(x, y, "-", lw=1.5, label=name)
    sw = config.data.get("sweep", {})
    if sw.get("spacing") == "log":
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    if config.pipeline == "pulse":
        ax.set_ylabel("intensity (photons/s)")
    elif table.meta.get("normalized"):
        ax.set_ylabel("transmission / transmission without switch")
    else:
        ax.set_ylabel("transmission")
    ax.legend(fontsize=8)


def _bars(ax, table):
    names = [f"probe {'on' if p else 'off'}\nswitch {'on' if s else 'off'}"
             for p, s in zip(table.column("probe"), table.column("switch"))]
    means = table.column("mean")
    stds = table.column("std")
    ax.bar(range(len(names)), means, yerr=stds, color="0.6", capsize=4)
    ax.set_xticks(range(len(names)), names, fontsize=8)
    ax.set_ylabel("detected photons per pulse")
