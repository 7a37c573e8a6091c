from __future__ import annotations

from pathlib import Path

import matplotlib.pyplot as plt
import matplotlib.tri as mtri

from ..export import VtkData, read_vtk

FIELD_LABELS = {
    "speed": "|u|",
    "phi": "concentration",
    "T": "temperature",
    "p": "pressure",
}


def _triangulation(data: VtkData) -> mtri.Triangulation:
    return mtri.Triangulation(data.points[:, 0], data.points[:, 1], data.cells)


def _draw(ax: plt.Axes, data: VtkData, name: str, title: str, cmap: str) -> None:
    if name not in data.point_data:
        raise ValueError(f"Field '{name}' not found; available: {', '.join(sorted(data.point_data))}.")
    contour = ax.tricontourf(_triangulation(data), data.point_data[name], levels=24, cmap=cmap)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=12, pad=8)
    ax.set_xticks([])
    ax.set_yticks([])
    plt.colorbar(contour, ax=ax, shrink=0.8, label=FIELD_LABELS.get(name, name))


def render_fields(
    vtk_path: Path,
    output_png: Path,
    comparison_vtk: Path | None = None,
    fields: tuple[str, ...] = ("speed", "phi"),
) -> Path:
    """
    Contour snapshots of a cavity run. With ``comparison_vtk`` (the run without
    thermophoresis) the speed is shown for both runs side by side.
    """

    data = read_vtk(vtk_path)
    panels: list[tuple[VtkData, str, str]] = []
    for name in fields:
        label = FIELD_LABELS.get(name, name)
        if comparison_vtk is not None and name == "speed":
            panels.append((data, name, f"{label}, with thermophoresis"))
            panels.append((read_vtk(comparison_vtk), name, f"{label}, without thermophoresis"))
        else:
            panels.append((data, name, label))

    fig, axes = plt.subplots(len(panels), 1, figsize=(8, 3.6 * len(panels)), dpi=144, squeeze=False)
    for ax, (panel, name, title) in zip(axes[:, 0], panels):
        _draw(ax, panel, name, title, cmap="viridis" if name == "speed" else "coolwarm")
    fig.tight_layout()

    output_png = Path(output_png)
    output_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_png)
    plt.close(fig)
    return output_png
