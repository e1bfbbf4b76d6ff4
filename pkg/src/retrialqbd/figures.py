"""Optional figure rendering for CLI reports.

Each renderer reads the CSV a command just wrote and saves a PNG next to
it; the CSV stays the authoritative output.  Imported lazily so that plain
runs never touch matplotlib.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def _plot_solve(header, rows, ax):
    sweeping = header[0] == "rho_star"
    off = 1 if sweeping else 0
    by_key: dict[str, dict[int, float]] = {}
    for row in rows:
        key = row[0] if sweeping else ""
        mass = by_key.setdefault(key, {})
        n = int(row[off])
        mass[n] = mass.get(n, 0.0) + float(row[off + 2])
    for key, mass in sorted(by_key.items()):
        ns = sorted(mass)
        label = f"rho*={key}" if key else None
        ax.semilogy(ns, [max(mass[n], 1e-320) for n in ns], label=label)
    ax.set_xlabel("customers in orbit n")
    ax.set_ylabel("level mass")
    if sweeping:
        ax.legend()


def _plot_expand_error(header, rows, ax):
    xs = [float(r[0]) for r in rows]
    for col in range(1, len(header)):
        ax.semilogy(xs, [float(r[col]) for r in rows], marker="o", label=header[col])
    ax.set_xlabel("traffic intensity rho*")
    ax.set_ylabel("relative error (L1)")
    ax.legend()


def _plot_tail(header, rows, ax):
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for row in rows:
        if row[3] == "":
            continue
        series.setdefault((row[0], row[2]), []).append((int(row[1]), float(row[3])))
    for (rho, k), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"rho*={rho}, k={k}")
    ax.set_xlabel("customers in orbit n")
    ax.set_ylabel("compensated tail ratio")
    ax.legend()


def _plot_coeffs(header, rows, ax):
    series: dict[str, list[tuple[int, float]]] = {}
    for row in rows:
        series.setdefault(row[0], []).append((int(row[1]), abs(float(row[2]))))
    for k, pts in sorted(series.items(), key=lambda kv: int(kv[0])):
        pts.sort()
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-320) for p in pts],
                    marker="o", label=f"k={k}")
    ax.set_xlabel("order m")
    ax.set_ylabel("|coefficient|")
    ax.legend(fontsize="small", ncol=2)


_RENDERERS = {
    "solve": _plot_solve,
    "expand-error": _plot_expand_error,
    "tail": _plot_tail,
    "coeffs": _plot_coeffs,
}


def render(command: str, csv_path: str) -> str:
    """Render the figure for `command` from its CSV; returns the PNG path."""
    header, rows = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _RENDERERS[command](header, rows, ax)
    ax.set_title(command)
    fig.tight_layout()
    png = str(Path(csv_path).with_suffix(".png"))
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png
