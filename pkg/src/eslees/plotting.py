"""Static figures and their (x, y) data files.

Eigenfunctions are sampled along a parameterised curve (the circle
itself, a meridian great circle of the sphere, the ``theta_2 = 0`` loop of
the torus) and written both as whitespace-delimited data and as a PNG.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .manifold import Kind, ManifoldDiscretization  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "figure.figsize": (5.0, 5.0 * (math.sqrt(5) - 1) / 2),
}


def curve_samples(disc: ManifoldDiscretization, u: np.ndarray, n: int = 361):
    """Values of ``u`` along a closed curve; returns (parameter, values) or
    ``None`` for kinds without a canonical curve."""
    t = np.linspace(0.0, 2 * math.pi, n)
    if disc.kind is Kind.CIRCLE:
        return t, disc.evaluator(t) @ u
    if disc.kind is Kind.FLAT_TORUS:
        return t, disc.evaluator(np.column_stack([t, np.zeros_like(t)])) @ u
    if disc.kind is Kind.SPHERE:
        # meridian through both poles, nudged off the coordinate singularity
        s = np.clip(np.where(t <= math.pi, t, 2 * math.pi - t), 1e-6, math.pi - 1e-6)
        phi = np.where(t <= math.pi, 0.0, math.pi)
        return t, disc.evaluator(np.column_stack([s, phi])) @ u
    return None


def write_xy(path, x, y, header: str) -> Path:
    path = Path(path)
    np.savetxt(path, np.column_stack([x, y]), fmt="%.12e", header=header)
    return path


def plot_certificate(disc: ManifoldDiscretization, u: np.ndarray, path, title: str = "") -> list[Path]:
    """Write ``<path>.dat`` and ``<path>.png`` for the certificate ``u``."""
    path = Path(path)
    written = []
    data = curve_samples(disc, u)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        if data is not None:
            x, y = data
            written.append(write_xy(path.with_suffix(".dat"), x, y, "curve_parameter value"))
            ax.plot(x, y, lw=1.2)
            ax.set_xlabel("curve parameter")
        else:
            # meshes: vertex values against height
            z = disc.node_coords[:, 2]
            order = np.argsort(z)
            written.append(write_xy(path.with_suffix(".dat"), z[order], u[order], "z value"))
            ax.plot(z[order], u[order], ".", ms=2)
            ax.set_xlabel("z")
        ax.axhline(0.0, color="0.5", lw=0.6)
        ax.set_ylabel("certificate")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path.with_suffix(".png"))
        plt.close(fig)
    written.append(path.with_suffix(".png"))
    return written


def plot_spectrum(values, path, reference=None, title: str = "") -> list[Path]:
    """Eigenvalue index plot, optionally against reference values."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    idx = np.arange(len(values))
    written = [write_xy(path.with_suffix(".dat"), idx, values, "index eigenvalue")]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(idx, values, "o", ms=4, label="computed")
        if reference is not None:
            ref = np.asarray(reference, dtype=float)
            ax.plot(np.arange(len(ref)), ref, "x", ms=5, label="reference")
            ax.legend(frameon=False)
        ax.set_xlabel("index")
        ax.set_ylabel("eigenvalue")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path.with_suffix(".png"))
        plt.close(fig)
    written.append(path.with_suffix(".png"))
    return written
