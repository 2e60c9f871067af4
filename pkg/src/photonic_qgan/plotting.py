"""Matplotlib figures for the training runs and calibration fits.

Figures are written with the Agg backend. SVG output uses a fixed hash salt
and no date stamp so that reruns produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_FORMATS = ("svg", "png", "pdf")
STYLE = {
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "svg.hashsalt": "photonic-qgan",
}


def _save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".")
    if fmt not in FIGURE_FORMATS:
        raise ValueError(f"unsupported figure format {fmt!r}")
    meta = {"Date": None} if fmt == "svg" else ({"CreationDate": None} if fmt == "pdf" else {})
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def _band(ax, epochs, values, label, color):
    values = np.asarray(values, dtype=float)
    mean, std = values.mean(axis=0), values.std(axis=0)
    ax.plot(epochs, mean, color=color, lw=1.2, label=label)
    if values.shape[0] > 1:
        ax.fill_between(epochs, mean - std, mean + std, color=color, alpha=0.25, lw=0)


LOSS_LABELS = {"loss_d": "critic / discriminator loss", "loss_g": "generator loss"}


def plot_training(histories, path, metric_label=None, loss_label="loss_d"):
    """Mean and spread across rounds of the metric (left) and a loss column (right)."""
    with plt.rc_context(STYLE):
        fig, (ax_m, ax_l) = plt.subplots(1, 2, figsize=(7.5, 2.8))
        n = min(len(h) for h in histories)
        epochs = np.arange(n)
        metric_label = metric_label or histories[0].metric_name
        _band(ax_m, epochs, [h.metric[:n] for h in histories], metric_label, "C1")
        _band(ax_l, epochs, [h.column(loss_label)[:n] for h in histories], loss_label, "C0")
        ax_m.set_ylabel(metric_label)
        ax_l.set_ylabel(LOSS_LABELS.get(loss_label, loss_label))
        for ax in (ax_m, ax_l):
            ax.set_xlabel("epoch")
        ax_l.axhline(0, color="0.6", lw=0.6)
        fig.tight_layout()
        return _save(fig, path)


def plot_distribution(target, generated, path):
    """Target versus generated four-point distribution as grouped bars."""
    target = np.asarray(target, dtype=float)
    generated = np.atleast_2d(np.asarray(generated, dtype=float))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.6))
        x = np.arange(target.size)
        ax.bar(x - 0.2, target, width=0.4, color="0.7", label="target")
        err = generated.std(axis=0) if generated.shape[0] > 1 else None
        ax.bar(x + 0.2, generated.mean(axis=0), width=0.4, yerr=err, color="C0",
               capsize=2, label="generated")
        ax.set_xticks(x)
        ax.set_xticklabels([f"|{i:02b}>" for i in x])
        ax.set_ylabel("probability")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def plot_calibration(samples, calibration, path):
    samples = np.asarray(samples, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.6))
        ax.plot(samples[:, 0], samples[:, 1], ".", ms=3, color="0.4", label="measured")
        grid = np.linspace(samples[:, 0].min(), samples[:, 0].max(), 400)
        ax.plot(grid, calibration.predict(grid), color="C3", lw=1, label="fit")
        ax.set_xlabel("current (mA)")
        ax.set_ylabel("coincidences (1/s)")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def plot_image_grid(real, generated, path, columns=5):
    """Real (left) and generated (right) binarised images side by side."""
    with plt.rc_context(STYLE):
        rows = -(-max(len(real), len(generated)) // columns)
        fig, axes = plt.subplots(rows, 2 * columns, figsize=(2 * columns * 0.7, rows * 0.8),
                                 squeeze=False)
        for ax in axes.flat:
            ax.set_axis_off()
        for block, images in enumerate((real, generated)):
            for n, img in enumerate(images):
                r, c = divmod(n, columns)
                axes[r, block * columns + c].imshow(img, cmap="gray_r", vmin=0, vmax=1)
        axes[0, columns // 2].set_title("real")
        axes[0, columns + columns // 2].set_title("generated")
        return _save(fig, path)
