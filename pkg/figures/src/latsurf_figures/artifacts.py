"""Readers for the command line artifact files the figures consume.

This package never imports the library that produced the artifacts;
the file formats are the interface.  Three formats exist:

* CSV tables: one ``# latsurf <command> config=<hash>`` comment line,
  optional further ``# `` note lines, a schema line naming the
  columns, then comma separated data rows.
* JSON documents: an ``_meta`` object with the command name and
  config hash stored next to the payload keys.
* npz mesh containers: a ``__meta__`` member holding a JSON header
  (kind, level, resolution) beside the payload arrays.

Every reader validates the pieces a figure needs and raises
SchemaMismatch naming what is missing, so a recipe pointed at the
wrong artifact fails loudly instead of plotting nonsense.  Readers
only ever open files for reading; inputs are never modified.
"""

import json
import os
import zipfile
import zlib
from dataclasses import dataclass

import numpy as np


class SchemaMismatch(Exception):
    """Artifact lacks the columns, keys, or arrays a figure requires."""


class Table:
    """Parsed CSV artifact: header metadata plus per-column cells."""

    def __init__(self, path, command, config_hash, notes, columns, cells):
        self.path = path
        self.command = command
        self.config_hash = config_hash
        self.notes = tuple(notes)
        self.columns = tuple(columns)
        self._cells = cells

    def __len__(self):
        if not self.columns:
            return 0
        return len(self._cells[self.columns[0]])

    def require(self, *names):
        missing = [n for n in names if n not in self._cells]
        if missing:
            raise SchemaMismatch(
                "%s: missing column(s) %s; found %s"
                % (self.path, ", ".join(missing), ", ".join(self.columns)))

    def numeric(self, *names):
        """Columns as float arrays; SchemaMismatch when absent or text."""
        self.require(*names)
        out = []
        for name in names:
            try:
                out.append(np.array([float(x) for x in self._cells[name]]))
            except ValueError:
                raise SchemaMismatch("%s: column %r is not numeric"
                                     % (self.path, name))
        if len(out) == 1:
            return out[0]
        return tuple(out)

    def strings(self, name):
        self.require(name)
        return list(self._cells[name])


def read_table(path):
    """Parse a CSV artifact; SchemaMismatch when the layout is wrong."""
    path = os.fspath(path)
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or not lines[0].startswith("# latsurf "):
        raise SchemaMismatch(
            "%s: missing '# latsurf <command> config=<hash>' header" % path)
    head = lines[0][len("# latsurf "):].split()
    if len(head) != 2 or not head[1].startswith("config="):
        raise SchemaMismatch("%s: malformed header %r" % (path, lines[0]))
    command, config_hash = head[0], head[1][len("config="):]
    notes = []
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        notes.append(lines[i][2:] if lines[i].startswith("# ")
                     else lines[i][1:])
        i += 1
    if i >= len(lines) or not lines[i]:
        raise SchemaMismatch("%s: missing schema line" % path)
    columns = lines[i].split(",")
    rows = [ln.split(",") for ln in lines[i + 1:] if ln]
    for r in rows:
        if len(r) != len(columns):
            raise SchemaMismatch("%s: row with %d cells under %d columns"
                                 % (path, len(r), len(columns)))
    cells = {c: [r[j] for r in rows] for j, c in enumerate(columns)}
    return Table(path, command, config_hash, notes, columns, cells)


def parse_notes(table):
    """key=value tokens from the note lines, as a dict of strings."""
    info = {}
    for note in table.notes:
        for token in note.split():
            key, sep, value = token.partition("=")
            if sep:
                info[key] = value
    return info


def read_json_artifact(path):
    """Load a JSON artifact; SchemaMismatch unless _meta.command exists."""
    path = os.fspath(path)
    with open(path) as f:
        try:
            doc = json.load(f)
        except ValueError as exc:
            raise SchemaMismatch("%s: not JSON (%s)" % (path, exc))
    meta = doc.get("_meta") if isinstance(doc, dict) else None
    if not isinstance(meta, dict) or "command" not in meta:
        raise SchemaMismatch("%s: missing _meta.command" % path)
    return doc


def read_gamma(path):
    """Curve JSON -> (component polylines, tangential points, level)."""
    doc = read_json_artifact(path)
    command = doc["_meta"]["command"]
    if command != "gamma":
        raise SchemaMismatch("%s: artifact of command %r, expected gamma"
                             % (path, command))
    try:
        components = [np.asarray(c, dtype=float) for c in doc["components"]]
        points = np.asarray(doc["tangential"]["points"], dtype=float)
        level = float(doc["level"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch("%s: malformed curve payload (%s)" % (path, exc))
    for c in components:
        if c.ndim != 2 or c.shape[1] != 3:
            raise SchemaMismatch("%s: curve samples must be (n, 3)" % path)
    points = points.reshape(-1, 3) if points.size else points.reshape(0, 3)
    return components, points, level


@dataclass(frozen=True)
class MeshArtifact:
    """The slice of a mesh container the 3D figure needs."""

    level: float
    resolution: int
    vertices: np.ndarray
    triangles: np.ndarray
    gauss: np.ndarray


def read_mesh(path):
    """Read a mesh container with an independent parser.

    Validates the container layout (header member, kind tag, array
    shapes) but not the producer's checksum; integrity is the
    producer's concern, schema is ours.
    """
    path = os.fspath(path)
    try:
        with np.load(path) as z:
            if "__meta__" not in z.files:
                raise SchemaMismatch("%s: missing __meta__ header" % path)
            try:
                header = json.loads(bytes(z["__meta__"].tobytes())
                                    .decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                raise SchemaMismatch("%s: unreadable header (%s)"
                                     % (path, exc))
            arrays = {k: z[k] for k in z.files if k != "__meta__"}
    except (OSError, zipfile.BadZipFile, zlib.error, ValueError) as exc:
        raise SchemaMismatch("%s: not an npz container (%s)" % (path, exc))
    if header.get("kind") != "mesh":
        raise SchemaMismatch("%s: container kind %r, expected mesh"
                             % (path, header.get("kind")))
    missing = [n for n in ("vertices", "triangles", "geom_gauss")
               if n not in arrays]
    if missing:
        raise SchemaMismatch("%s: missing array(s) %s"
                             % (path, ", ".join(missing)))
    vertices = np.asarray(arrays["vertices"], dtype=float)
    triangles = np.asarray(arrays["triangles"], dtype=np.int64)
    gauss = np.asarray(arrays["geom_gauss"], dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise SchemaMismatch("%s: vertices must be (n, 3)" % path)
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise SchemaMismatch("%s: triangles must be (m, 3)" % path)
    if len(gauss) != len(vertices):
        raise SchemaMismatch("%s: curvature array length %d, %d vertices"
                             % (path, len(gauss), len(vertices)))
    if triangles.size and triangles.max() >= len(vertices):
        raise SchemaMismatch("%s: triangle index out of range" % path)
    return MeshArtifact(level=float(header.get("level", np.nan)),
                        resolution=int(header.get("resolution", 0)),
                        vertices=vertices, triangles=triangles, gauss=gauss)
