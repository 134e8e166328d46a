"""Figure recipes and deterministic rendering.

Each figure kind consumes specific artifact files:

* ``decay``: radial scan CSVs (a, omega_*, r, abs_mu_hat,
  bound_value); log-log measured transform magnitude per direction
  with the bound overlay dashed.
* ``sweep``: denominator sweep CSVs (kind, alpha, eta, N, q_or_u,
  value, doubling_check_rel_change); value against |log eta| on the
  left panel, log-log value against 1/eta on the right, one series
  per input file.
* ``surface3d``: one mesh container (.npz) plus one curve JSON; the
  level set colored by Gauss curvature with the zero-curvature curve
  and its tangential points drawn on top.
* ``dyadic-heatmap``: one diagnostics CSV (k, j, volume, bound,
  second_branch, violation); measured patch volumes beside their
  bounds on a shared log color scale, violations marked.

Rendering is deterministic: a fixed style sheet, a pinned svg hash
salt, and no timestamps in the output metadata, so identical inputs
give byte-identical PNG or SVG files.  Recipes live in JSON files,
``{"kind": ..., "inputs": [...], "output": ...}``, with relative
paths resolved against the recipe file's directory.  The
latsurf-figures script renders one or more recipes and exits 0 on
success, 1 when an input artifact does not match the figure kind,
2 when a recipe itself is invalid.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import matplotlib
import numpy as np
from matplotlib.colors import LogNorm, Normalize
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

from .artifacts import (SchemaMismatch, parse_notes, read_gamma, read_mesh,
                        read_table)

STYLE = {
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.5,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.4,
    "lines.markersize": 4.0,
    "legend.fontsize": 8,
    "legend.framealpha": 0.9,
    "svg.hashsalt": "latsurf-figures",
}

_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

KINDS = ("decay", "sweep", "surface3d", "dyadic-heatmap")
_FORMATS = (".png", ".svg")


@dataclass(frozen=True)
class FigureRecipe:
    """One figure: input artifact paths, figure kind, output image path."""

    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown figure kind %r; expected one of %s"
                             % (self.kind, ", ".join(KINDS)))
        object.__setattr__(self, "inputs",
                           tuple(os.fspath(p) for p in self.inputs))
        if not self.inputs:
            raise ValueError("recipe needs at least one input artifact")
        ext = os.path.splitext(self.output)[1].lower()
        if ext not in _FORMATS:
            raise ValueError("output must end in .png or .svg, got %r"
                             % self.output)

    @classmethod
    def from_json(cls, path):
        """Load a recipe file; relative paths resolve against it."""
        path = os.fspath(path)
        with open(path) as f:
            doc = json.load(f)
        if not isinstance(doc, dict):
            raise ValueError("%s: recipe must be a JSON object" % path)
        missing = [k for k in ("kind", "inputs", "output") if k not in doc]
        if missing:
            raise ValueError("%s: recipe missing %s"
                             % (path, ", ".join(missing)))
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            p = os.fspath(p)
            return p if os.path.isabs(p) else os.path.join(base, p)

        inputs = doc["inputs"]
        if isinstance(inputs, str):
            inputs = [inputs]
        return cls(kind=str(doc["kind"]),
                   inputs=tuple(resolve(p) for p in inputs),
                   output=resolve(doc["output"]))


def render(recipe):
    """Render one recipe to its output image; returns the output path."""
    with matplotlib.rc_context(STYLE):
        fig = _BUILDERS[recipe.kind](recipe.inputs)
        _save(fig, recipe.output)
    return recipe.output


def _save(fig, path):
    # strip writer metadata so identical inputs give identical bytes
    if path.lower().endswith(".svg"):
        fig.savefig(path, format="svg", metadata={"Date": None})
    else:
        fig.savefig(path, format="png", metadata={"Software": None})


def _nonempty(table):
    if len(table) == 0:
        raise SchemaMismatch("%s: no data rows" % table.path)
    return table


# ------------------------------------------------------------------ decay

def _render_decay(paths):
    tables = [_nonempty(read_table(p)) for p in paths]
    fig = Figure(figsize=(6.4, 4.4), layout="constrained")
    ax = fig.subplots()
    levels = []
    series = 0
    for table in tables:
        a, wx, wy, wz, r, value, bound = table.numeric(
            "a", "omega_x", "omega_y", "omega_z", "r", "abs_mu_hat",
            "bound_value")
        levels.extend(np.unique(np.round(a, 9)).tolist())
        omegas = np.round(np.column_stack([wx, wy, wz]), 9)
        for w in np.unique(omegas, axis=0):
            sel = (omegas == w).all(axis=1)
            order = np.argsort(r[sel])
            color = _COLORS[series % len(_COLORS)]
            # raw samples oscillate below their envelope, so draw them
            # as points and let the dashed bound carry the trend
            ax.loglog(r[sel][order], value[sel][order], linestyle="none",
                      marker="o", color=color,
                      label=r"$\omega = (%.2f, %.2f, %.2f)$" % tuple(w))
            ax.loglog(r[sel][order], bound[sel][order], linestyle="--",
                      color=color, alpha=0.55)
            series += 1
    ax.set_xlabel("$r$")
    ax.set_ylabel(r"$|\widehat{\mu}(r\,\omega)|$")
    ax.set_title("surface measure transform decay, a = %s"
                 % ", ".join("%.3g" % a for a in sorted(set(levels))))
    if series <= 10:
        handles, labels = ax.get_legend_handles_labels()
        handles.append(Line2D([], [], linestyle="--", color="0.3"))
        labels.append("bound")
        ax.legend(handles, labels, loc="best")
    return fig


# ------------------------------------------------------------------ sweep

def _render_sweep(paths):
    tables = [_nonempty(read_table(p)) for p in paths]
    fig = Figure(figsize=(8.0, 3.6), layout="constrained")
    ax_lin, ax_log = fig.subplots(1, 2)
    for i, table in enumerate(tables):
        table.require("N", "doubling_check_rel_change")
        eta, alpha, shift = table.numeric("eta", "alpha", "q_or_u")
        value = table.numeric("value")
        kind = table.strings("kind")[0]
        order = np.argsort(eta)[::-1]
        color = _COLORS[i % len(_COLORS)]
        label = "%s, alpha = %.3g" % (kind, alpha[0])
        if shift[0] != 0.0:
            label += ", |shift| = %.3g" % shift[0]
        ax_lin.plot(np.abs(np.log(eta[order])), value[order], marker="o",
                    color=color, label=label)
        ax_log.loglog(1.0 / eta[order], value[order], marker="o",
                      color=color, label=label)
    ax_lin.set_xlabel(r"$|\log \eta|$")
    ax_lin.set_ylabel("integral value")
    ax_lin.set_title("loglinear axes")
    ax_log.set_xlabel(r"$\eta^{-1}$")
    ax_log.set_title("log-log axes")
    ax_lin.legend(loc="best")
    return fig


# -------------------------------------------------------------- surface3d

def _split_wraps(points):
    """Cut a torus polyline where it jumps across the domain seam."""
    jumps = np.where(np.abs(np.diff(points, axis=0)).max(axis=1) > np.pi)[0]
    return [p for p in np.split(points, jumps + 1) if len(p) > 1]


def _render_surface3d(paths):
    mesh_paths = [p for p in paths if p.lower().endswith(".npz")]
    json_paths = [p for p in paths if p.lower().endswith(".json")]
    if len(paths) != 2 or len(mesh_paths) != 1 or len(json_paths) != 1:
        raise SchemaMismatch(
            "surface3d needs exactly one mesh container (.npz) and one "
            "curve JSON, got: %s" % (", ".join(paths) or "nothing"))
    mesh = read_mesh(mesh_paths[0])
    components, points, level = read_gamma(json_paths[0])
    if len(mesh.triangles) == 0:
        raise SchemaMismatch("%s: empty mesh" % mesh_paths[0])

    corners = mesh.vertices[mesh.triangles]
    # faces that wrap around the torus seam would draw as box-wide
    # slivers; drop them and show the fundamental domain only
    span = corners.max(axis=1) - corners.min(axis=1)
    keep = (span < np.pi).all(axis=1)
    corners = corners[keep]
    k_face = mesh.gauss[mesh.triangles[keep]].mean(axis=1)
    vmax = float(np.percentile(np.abs(k_face), 98.0))
    if vmax == 0.0:
        vmax = 1.0
    shade = matplotlib.colormaps["coolwarm"](
        Normalize(vmin=-vmax, vmax=vmax)(k_face))

    fig = Figure(figsize=(6.0, 5.4))
    fig.subplots_adjust(left=0.02, right=0.98, bottom=0.02, top=0.93)
    ax = fig.add_subplot(projection="3d")
    ax.set_proj_type("ortho")
    # the surface is a single artist, so per-artist depth sorting would
    # hide curves lying on it; draw in explicit order instead and keep
    # face-level sorting inside the collection
    ax.computed_zorder = False
    surf = Poly3DCollection(corners, facecolors=shade, edgecolors="none",
                            zorder=2)
    surf.set_zsort("average")
    ax.add_collection3d(surf)
    for comp in components:
        if not np.allclose(comp[0], comp[-1]):
            comp = np.vstack([comp, comp[:1]])
        for seg in _split_wraps(comp):
            ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="black",
                    linewidth=1.6, zorder=3)
    if len(points):
        ax.scatter(points[:, 0], points[:, 1], points[:, 2], color="gold",
                   edgecolors="black", s=30, depthshade=False, zorder=4)
    for axis in (ax.set_xlim, ax.set_ylim, ax.set_zlim):
        axis(-np.pi, np.pi)
    ax.set_xlabel("$p_1$")
    ax.set_ylabel("$p_2$")
    ax.set_zlabel("$p_3$")
    ax.set_box_aspect((1.0, 1.0, 1.0))
    ax.view_init(elev=20.0, azim=-56.0)
    ax.set_title("level set e(p) = %.3g, zero-curvature curve and "
                 "tangential points" % level)
    return fig


# ---------------------------------------------------------------- heatmap

def _render_heatmap(paths):
    if len(paths) != 1:
        raise SchemaMismatch(
            "dyadic-heatmap takes exactly one diagnostics table, got %d"
            % len(paths))
    table = _nonempty(read_table(paths[0]))
    k, j, volume, bound, branch2, violation = table.numeric(
        "k", "j", "volume", "bound", "second_branch", "violation")
    ki = k.astype(int)
    ji = j.astype(int)
    if (ki < 1).any() or (ji < 0).any():
        raise SchemaMismatch("%s: k must start at 1 and j at 0" % table.path)
    n_k, n_j = ki.max(), ji.max() + 1
    vol = np.full((n_k, n_j), np.nan)
    bnd = np.full((n_k, n_j), np.nan)
    vol[ki - 1, ji] = volume
    bnd[ki - 1, ji] = bound
    positive = np.concatenate([volume[volume > 0], bound[bound > 0]])
    if positive.size == 0:
        raise SchemaMismatch("%s: no positive cells to plot" % table.path)
    norm = LogNorm(vmin=positive.min(), vmax=positive.max())
    cmap = matplotlib.colormaps["viridis"].copy()
    cmap.set_bad("0.88")

    fig = Figure(figsize=(8.0, 3.8), layout="constrained")
    ax_v, ax_b = fig.subplots(1, 2, sharey=True)
    extent = (-0.5, n_j - 0.5, 0.5, n_k + 0.5)
    imshow = dict(origin="lower", extent=extent, aspect="auto",
                  norm=norm, cmap=cmap)
    image = ax_v.imshow(np.ma.masked_invalid(np.ma.masked_less_equal(
        vol, 0.0)), **imshow)
    ax_b.imshow(np.ma.masked_invalid(np.ma.masked_less_equal(bnd, 0.0)),
                **imshow)
    bad = violation != 0
    if bad.any():
        ax_v.scatter(ji[bad], ki[bad], marker="x", color="red", s=40,
                     linewidths=1.5)
    second = branch2 != 0
    if second.any():
        ax_b.scatter(ji[second], ki[second], marker=".", color="white",
                     s=12)
    for ax, title in ((ax_v, "measured volume"), (ax_b, "volume bound")):
        ax.set_xlabel("annulus index $j$")
        ax.set_title(title)
        ax.grid(False)
        ax.set_xticks(range(0, n_j, max(1, n_j // 10)))
    ax_v.set_yticks(range(1, n_k + 1))
    ax_v.set_ylabel("curvature shell $k$")
    fig.colorbar(image, ax=(ax_v, ax_b), shrink=0.92)
    info = parse_notes(table)
    if "d_omega" in info:
        try:
            fig.suptitle("dyadic cells: volumes vs bound, d_omega = %.3g, "
                         "violations = %s"
                         % (float(info["d_omega"]),
                            info.get("violations", "?")))
        except ValueError:
            pass
    return fig


_BUILDERS = {
    "decay": _render_decay,
    "sweep": _render_sweep,
    "surface3d": _render_surface3d,
    "dyadic-heatmap": _render_heatmap,
}


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="latsurf-figures",
        description="render figures from latsurf artifact files")
    ap.add_argument("recipes", nargs="+",
                    help="recipe JSON files ({kind, inputs, output})")
    args = ap.parse_args(argv)
    for path in args.recipes:
        try:
            recipe = FigureRecipe.from_json(path)
        except (OSError, ValueError) as exc:
            print("recipe error: %s" % exc, file=sys.stderr)
            return 2
        try:
            out = render(recipe)
        except SchemaMismatch as exc:
            print("schema mismatch: %s" % exc, file=sys.stderr)
            return 1
        except OSError as exc:
            print("error: %s" % exc, file=sys.stderr)
            return 1
        print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
