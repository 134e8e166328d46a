"""Publication figures rendered from latsurf command line artifacts.

The package reads the CSV, JSON, and npz files the latsurf tool
writes and turns them into deterministic PNG or SVG figures.  It
never recomputes anything and never imports the producing library;
the artifact formats are the whole interface.
"""

from .artifacts import (MeshArtifact, SchemaMismatch, Table, parse_notes,
                        read_gamma, read_json_artifact, read_mesh,
                        read_table)
from .render import KINDS, STYLE, FigureRecipe, main, render

__all__ = [
    "FigureRecipe",
    "KINDS",
    "MeshArtifact",
    "STYLE",
    "SchemaMismatch",
    "Table",
    "main",
    "parse_notes",
    "read_gamma",
    "read_json_artifact",
    "read_mesh",
    "read_table",
    "render",
]
