"""Render experiment tables to matplotlib figures saved next to the CSV data."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _heatmap(ax, x, y, z, title, cmap="viridis"):
    mesh = ax.pcolormesh(x, y, z, shading="nearest", cmap=cmap)
    ax.set_title(title, fontsize=10)
    plt.colorbar(mesh, ax=ax)


def save_panel_maps(path, x, y, panels, xlabel, ylabel):
    """Stack of heatmap panels sharing axes; panels = [(title, Z), ...]."""
    fig, axes = plt.subplots(len(panels), 1, figsize=(5.2, 3.0 * len(panels)), squeeze=False)
    for ax, (title, z) in zip(axes[:, 0], panels):
        _heatmap(ax, x, y, z, title)
        ax.set_ylabel(ylabel)
    axes[-1, 0].set_xlabel(xlabel)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_distribution_heatmap(path, values, widths, probs, xlabel, title):
    """Observable histograms stacked over disorder width (rows)."""
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    _heatmap(ax, values, np.arange(len(widths)), probs, title, cmap="inferno")
    ax.set_yticks(np.arange(len(widths)))
    ax.set_yticklabels([f"{w:g}" for w in widths], fontsize=7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("disorder width / g")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_curve(path, x, y, xlabel, ylabel, title=""):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(x, y, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
