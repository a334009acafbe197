"""Render metric-vs-noise charts from a results file.

The input is the experiment runner's JSON-lines output: a manifest record
followed by one record per (trial, noise level, variant). Rendering only
aggregates (mean with a min-max band across trials); every number drawn comes
from the file.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRICS = ("ma_err", "accuracy")

VARIANT_STYLES = {
    "clf": {"linestyle": "--", "color": "#c44e52"},
    "clf_pp": {"linestyle": "-", "color": "#4c72b0"},
}


class PlotError(Exception):
    pass


@dataclass(frozen=True)
class PlotSpec:
    results_path: str | Path
    metric: str | None = None  # None renders every metric
    groups: tuple[str, ...] | None = None  # None renders every group found
    out_dir: str | Path = "."
    image_format: str = "png"

    def metrics(self) -> tuple[str, ...]:
        if self.metric is None:
            return METRICS
        if self.metric not in METRICS:
            raise PlotError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        return (self.metric,)


def _read_results(path: Path) -> tuple[dict | None, list[dict]]:
    if not path.exists():
        raise PlotError(f"results file {path} does not exist")
    manifest = None
    trials = []
    with path.open() as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("record") == "manifest":
                manifest = record
            elif record.get("record") == "trial":
                trials.append(record)
    if not trials:
        raise PlotError(f"results file {path} holds no trial records")
    return manifest, trials


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def render(spec: PlotSpec) -> list[Path]:
    """Write one image per (metric, group); returns the written paths.

    Unknown requested groups are reported and skipped. The results must span
    at least two noise levels for the x-axis to be meaningful.
    """
    path = Path(spec.results_path)
    manifest, trials = _read_results(path)
    epsilon = None
    if manifest is not None:
        epsilon = manifest.get("config", {}).get("boost", {}).get("epsilon")

    # series[(group, metric, variant)][noise_level] -> list of trial values
    series: dict[tuple, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    found_groups: list[str] = []
    levels = set()
    for record in trials:
        levels.add(record["noise_level"])
        for entry in record["groups"]:
            group = entry["group"]
            if group not in found_groups:
                found_groups.append(group)
            for metric in METRICS:
                value = entry.get(metric)
                if value is not None:
                    series[(group, metric, record["variant"])][record["noise_level"]].append(
                        value
                    )
    if len(levels) < 2:
        raise PlotError("results span fewer than two noise levels")

    wanted = list(found_groups) if spec.groups is None else list(spec.groups)
    missing = [g for g in wanted if g not in found_groups]
    if missing:
        print(f"skipping unknown groups: {', '.join(missing)}")
    wanted = [g for g in wanted if g in found_groups]

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for metric in spec.metrics():
        for group in wanted:
            fig, ax = plt.subplots(figsize=(5.0, 3.4))
            for variant, style in VARIANT_STYLES.items():
                per_level = series.get((group, metric, variant))
                if not per_level:
                    continue
                xs = sorted(per_level)
                means = [sum(per_level[x]) / len(per_level[x]) for x in xs]
                lows = [min(per_level[x]) for x in xs]
                highs = [max(per_level[x]) for x in xs]
                ax.plot(xs, means, label=variant, **style)
                ax.fill_between(xs, lows, highs, color=style["color"], alpha=0.15, lw=0)
            if metric == "ma_err":
                ax.axhline(0.0, color="black", lw=0.8)
                if epsilon is not None:
                    ax.axhspan(-epsilon, epsilon, color="gray", alpha=0.12, lw=0)
            ax.set_xlabel("noise level")
            ax.set_ylabel(metric)
            ax.set_title(group)
            ax.legend()
            fig.tight_layout()
            target = out_dir / f"{metric}_{_safe_name(group)}.{spec.image_format}"
            save_kwargs = {}
            if spec.image_format == "png":
                save_kwargs["metadata"] = {"Software": "mgplots"}
            fig.savefig(target, **save_kwargs)
            plt.close(fig)
            written.append(target)
    return written
