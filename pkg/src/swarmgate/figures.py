"""Matplotlib figure rendering for the report CLI.

Everything here is headless: the Agg backend is forced before pyplot loads,
each function writes one PNG next to the delimited outputs and returns the
path. Import of matplotlib is deferred so the numeric modules stay usable
without it.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from .core import ArmStatistics, EntropyTrace, ScalingFit, kinship_latch, default_registry
from .fingerprint import DistanceMatrix
from .gating import coupled_cascade_rate, critical_complexity, sycophancy_at_complexity

DPI = 150


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=DPI, bbox_inches="tight")
    _plt().close(fig)
    return out


def step_trace_figure(trace: EntropyTrace, path: str | Path) -> Path:
    """Per-step error rate and entropy of one simulated chain."""
    plt = _plt()
    steps = list(range(1, len(trace.per_step_error) + 1))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, trace.per_step_error, marker="o", color="#b03a2e", label="error rate")
    ax.plot(steps, trace.per_step_entropy, marker="s", color="#2874a6", label="entropy (bits)")
    ax.set_xlabel("step")
    ax.set_ylabel("value")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xticks(steps if len(steps) <= 20 else steps[:: max(1, len(steps) // 20)])
    title = trace.config or "chain"
    if trace.benchmark:
        title += f" on {trace.benchmark}"
    ax.set_title(f"Step trace: {title}")
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)


def metric_heatmap(stats: Sequence[ArmStatistics], metric: str, path: str | Path) -> Path:
    """Arms-by-benchmark heatmap of one ArmStatistics column or derived property."""
    plt = _plt()
    benchmarks = sorted({s.benchmark for s in stats})
    configs = sorted({s.config for s in stats})
    table = {(s.benchmark, s.config): getattr(s, metric) for s in stats}
    grid = [
        [table.get((b, c), math.nan) for c in configs]
        for b in benchmarks
    ]
    fig, ax = plt.subplots(figsize=(max(6, 0.65 * len(configs)), max(3, 0.7 * len(benchmarks))))
    image = ax.imshow(grid, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(configs)), configs, rotation=45, ha="right")
    ax.set_yticks(range(len(benchmarks)), benchmarks)
    for i, row in enumerate(grid):
        for j, value in enumerate(row):
            if not math.isnan(value):
                ax.text(j, i, f"{value:.2f}", ha="center", va="center", fontsize=7, color="white")
    ax.set_title(f"{metric} by arm")
    fig.colorbar(image, ax=ax, shrink=0.8)
    return _save(fig, path)


def distance_heatmap(matrix: DistanceMatrix, path: str | Path, metric: str = "jsd") -> Path:
    """Pairwise divergence between family fingerprints."""
    plt = _plt()
    values = matrix.jsd_values if metric == "jsd" else matrix.js_distance
    letters = list(matrix.families)
    fig, ax = plt.subplots(figsize=(1.2 * len(letters) + 2, 1.2 * len(letters) + 1))
    image = ax.imshow(values, cmap="magma")
    ax.set_xticks(range(len(letters)), letters)
    ax.set_yticks(range(len(letters)), letters)
    for i in range(len(letters)):
        for j in range(len(letters)):
            ax.text(i, j, f"{values[j][i]:.3f}", ha="center", va="center", fontsize=9, color="#cccccc")
    ax.set_title("JS divergence (bits)" if metric == "jsd" else "JS distance")
    fig.colorbar(image, ax=ax, shrink=0.8)
    return _save(fig, path)


def scaling_figure(
    fit: ScalingFit,
    points: Sequence[tuple[float, float]],
    omega: float,
    path: str | Path,
) -> Path:
    """Fitted exponential sycophancy curve with the critical complexity mark."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = sorted(k for k, _ in points)
    lo, hi = min(0.0, ks[0]), max(ks[-1] * 1.3, ks[-1] + 0.1)
    xs = [lo + (hi - lo) * i / 200 for i in range(201)]
    ax.plot(xs, [sycophancy_at_complexity(fit, x) for x in xs], color="#2874a6", label="fit")
    ax.scatter([k for k, _ in points], [s for _, s in points], color="#b03a2e", zorder=3, label="measured")
    ax.axhline(omega, color="#7d6608", linestyle=":", label=f"saturation boundary {omega:g}")
    try:
        kc = critical_complexity(fit, omega)
        ax.axvline(kc, color="#7d6608", linestyle="--", label=f"critical complexity {kc:.3f}")
    except ValueError:
        pass
    ax.set_xlabel("task complexity")
    ax.set_ylabel("sycophancy")
    ax.set_title("Sycophancy scaling")
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)


def sensitivity_figure(rows: Sequence[tuple[float, float, str]], path: str | Path) -> Path:
    """Observed latch against fingerprint divergence, one point per arm.

    rows: (latch, divergence, pair_label). Arms with an undefined latch are
    dropped by the caller.
    """
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = {"kinship": "#b03a2e", "stranger": "#2874a6"}
    seen = set()
    for latch, divergence, pair in rows:
        label = pair if pair not in seen else None
        seen.add(pair)
        ax.scatter(divergence, latch, color=colors.get(pair, "#555555"), alpha=0.8, label=label)
    ax.axvline(0.1, color="#7d6608", linestyle=":", linewidth=1)
    ax.set_xlabel("propagator/synthesizer fingerprint divergence (bits)")
    ax.set_ylabel("observed latch")
    ax.set_title("Latch sensitivity to family distance")
    ax.grid(alpha=0.3)
    if seen:
        ax.legend()
    return _save(fig, path)


def model_fit_figure(stats: Sequence[ArmStatistics], path: str | Path) -> Path:
    """Observed cascade rate against the coupled-gate prediction.

    The prediction uses the coarse kinship latch implied by each arm's code,
    so points off the diagonal show where the two-level rule misestimates the
    realized amplification.
    """
    plt = _plt()
    registry = default_registry()
    xs, ys, labels = [], [], []
    for s in stats:
        try:
            p, a, syn = registry.parse_config(s.config)
        except (KeyError, ValueError):
            continue
        latch = kinship_latch(p, a, syn)
        xs.append(coupled_cascade_rate(s.sycophancy, s.tribalism, s.critic_accuracy, latch))
        ys.append(s.mu)
        labels.append(s.config)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], color="#888888", linestyle="--", linewidth=1)
    ax.scatter(xs, ys, color="#2874a6", alpha=0.8)
    for x, y, label in zip(xs, ys, labels):
        ax.annotate(label, (x, y), fontsize=6, xytext=(3, 3), textcoords="offset points")
    ax.set_xlabel("predicted cascade rate (kinship latch)")
    ax.set_ylabel("observed cascade rate")
    ax.set_xlim(-0.03, 1.05)
    ax.set_ylim(-0.03, 1.05)
    ax.set_title("Observed vs predicted")
    ax.grid(alpha=0.3)
    return _save(fig, path)
