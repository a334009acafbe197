"""Charts for experiment results files: metric vs noise level, one panel per
group, one line per model variant."""

__version__ = "0.1.0"

from .render import PlotSpec, render

__all__ = ["PlotSpec", "render"]
