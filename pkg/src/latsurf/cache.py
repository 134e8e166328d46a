"""Versioned on-disk artifacts with integrity checks.

Surface meshes and denominator grid fields are stored as compressed
npz containers carrying a format version and a sha256 checksum over
the payload. load refuses containers written under another format
version (VersionMismatch) and containers whose checksum no longer
matches (CorruptFile), so silent corruption never reaches the
numerics. Payload arrays round-trip bit exactly.
"""

import hashlib
import json
import zipfile
import zlib

import numpy as np

from .denominators import GridField, ResolventParams
from .dispersion import CurvatureSample, CutoffSpec
from .errors import CorruptFile, VersionMismatch
from .levelset import SurfaceMesh

FORMAT_VERSION = 1

_GEOMETRY_FIELDS = ("grad_norm", "normal", "gauss", "mean",
                    "kappa1", "kappa2")


def _checksum(arrays, meta):
    h = hashlib.sha256()
    h.update(json.dumps(meta, sort_keys=True).encode("utf-8"))
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode("utf-8"))
        h.update(str(a.dtype).encode("utf-8"))
        h.update(str(a.shape).encode("utf-8"))
        h.update(a.tobytes())
    return h.hexdigest()


def _mesh_payload(mesh):
    arrays = {
        "vertices": np.asarray(mesh.vertices, dtype=np.float64),
        "triangles": np.asarray(mesh.triangles, dtype=np.uint32),
        "areas": np.asarray(mesh.areas, dtype=np.float64),
    }
    for name in _GEOMETRY_FIELDS:
        arrays["geom_" + name] = np.asarray(getattr(mesh.geometry, name),
                                            dtype=np.float64)
    meta = {"kind": "mesh", "level": float(mesh.level),
            "resolution": int(mesh.resolution)}
    return arrays, meta


def _field_payload(field):
    p = field.params
    arrays = {"values": np.asarray(field.values)}
    meta = {"kind": "field", "field_kind": field.kind,
            "alpha": float(p.alpha), "eta": float(p.eta), "n": int(p.n),
            "u": list(p.u), "lam": float(p.lam),
            "cutoff_lam": float(p.cutoff.lam),
            "cutoff_order": int(p.cutoff.order)}
    return arrays, meta


def store(obj, path, extra=None):
    """Write a SurfaceMesh or GridField container; returns its checksum."""
    if isinstance(obj, SurfaceMesh):
        arrays, meta = _mesh_payload(obj)
    elif isinstance(obj, GridField):
        arrays, meta = _field_payload(obj)
    else:
        raise TypeError("cannot store objects of type %s"
                        % type(obj).__name__)
    if extra:
        meta["extra"] = dict(extra)
    meta["format_version"] = FORMAT_VERSION
    digest = _checksum(arrays, meta)
    header = dict(meta)
    header["checksum"] = digest
    blob = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"),
                         dtype=np.uint8)
    np.savez_compressed(path, __meta__=blob, **arrays)
    return digest


def _rebuild_mesh(arrays, meta):
    geometry = CurvatureSample(**{
        name: arrays["geom_" + name] for name in _GEOMETRY_FIELDS})
    return SurfaceMesh(level=meta["level"], resolution=meta["resolution"],
                       vertices=arrays["vertices"],
                       triangles=arrays["triangles"].astype(np.int64),
                       geometry=geometry, areas=arrays["areas"])


def _rebuild_field(arrays, meta):
    params = ResolventParams(
        alpha=meta["alpha"], eta=meta["eta"], n=meta["n"],
        u=tuple(meta["u"]), lam=meta["lam"],
        cutoff=CutoffSpec(lam=meta["cutoff_lam"],
                          order=meta["cutoff_order"]))
    return GridField(values=arrays["values"], params=params,
                     kind=meta["field_kind"])


def load(path):
    """Read a container back into its object; verifies version and sum."""
    try:
        with np.load(path) as z:
            if "__meta__" not in z.files:
                raise CorruptFile("%s: missing metadata member" % path)
            header = json.loads(bytes(z["__meta__"].tobytes())
                                .decode("utf-8"))
            arrays = {k: z[k] for k in z.files if k != "__meta__"}
    except (zipfile.BadZipFile, zlib.error, ValueError) as exc:
        raise CorruptFile("%s: unreadable container (%s)" % (path, exc))
    digest = header.pop("checksum", None)
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            "%s: format version %r, this build reads %d"
            % (path, header.get("format_version"), FORMAT_VERSION))
    if digest != _checksum(arrays, header):
        raise CorruptFile("%s: checksum mismatch" % path)
    if header["kind"] == "mesh":
        return _rebuild_mesh(arrays, header)
    if header["kind"] == "field":
        return _rebuild_field(arrays, header)
    raise CorruptFile("%s: unknown artifact kind %r"
                      % (path, header["kind"]))
