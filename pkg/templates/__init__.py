"""The matplotlib script written next to run outputs by ``simulate --plots``."""

from __future__ import annotations

from pathlib import Path

PLOT_TEMPLATE = Path(__file__).resolve().parent / "plot_run.py.tmpl"


def render_plot_script(title: str, snapshot_glob: str = "curve_*.csv", diagnostics: str = "diagnostics.csv") -> str:
    """Fill the plot template; literal braces in the file are doubled."""
    text = PLOT_TEMPLATE.read_text(encoding="utf-8")
    return text.format(title=title, snapshot_glob=snapshot_glob, diagnostics=diagnostics)
