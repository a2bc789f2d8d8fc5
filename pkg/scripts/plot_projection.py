"""Scatter-plot the CSV files written by ``dqlap project``.

    python scripts/plot_projection.py RUN_DIR [--out figure.png]

Draws the true labels and, when present, the predicted labels side by side.
Needs matplotlib (``pip install .[plot]``).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

NAMES = {0: "fault", 1: "normal"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    panels = [(name, args.run_dir / f"projection_{name}.csv") for name in ("truth", "predicted")]
    panels = [(n, p) for n, p in panels if p.is_file()]
    if not panels:
        raise SystemExit(f"no projection_*.csv files in {args.run_dir}")
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4.5), squeeze=False)
    for ax, (name, path) in zip(axes[0], panels):
        pts = np.genfromtxt(path, delimiter=",", names=True)
        for label in (1, 0):
            sel = pts["label"] == label
            ax.scatter(pts["x"][sel], pts["y"][sel], s=6, alpha=0.6, label=NAMES[label])
        ax.set_title(f"{name} labels")
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.legend(markerscale=3)
    fig.tight_layout()
    out = args.out or args.run_dir / "projection.png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
