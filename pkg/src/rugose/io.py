"""CSV and binary serialisation of series, fields and snapshots."""
from __future__ import annotations

import csv
import struct

import numpy as np

from .analysis import DiagnosticsRecord
from .geometry import ProfileKind

MAGIC = b"RGS1"
# magic, nx, nz, profile-kind code, number of fields, eps, t
DESCRIPTOR = struct.Struct("<4sIIHHdd")
KIND_CODES = {k: i for i, k in enumerate(ProfileKind)}
FIELD_HEADER = ("i", "k", "x", "z", "value")


def write_rows(path, header, rows):
    """RFC 4180 CSV; floats use the shortest round-trip representation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_series_csv(path, series):
    write_rows(path, DiagnosticsRecord.CSV_HEADER, (rec.csv_row() for rec in series))


def read_series_csv(path):
    """Columns of a diagnostics CSV as a dict of float arrays."""
    header, rows = read_rows(path)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def write_field_csv(path, grid, field):
    f = np.asarray(field, float)
    z = grid.z
    rows = (
        (i, k, float(grid.x[i]), float(z[i, k]), float(f[i, k]))
        for i in range(grid.nx) for k in range(grid.nz)
    )
    write_rows(path, FIELD_HEADER, rows)


def read_field_csv(path):
    header, rows = read_rows(path)
    if tuple(header) != FIELD_HEADER:
        raise ValueError(f"unexpected field header {header}")
    ik = np.array([(int(r[0]), int(r[1])) for r in rows])
    vals = np.array([float(r[4]) for r in rows])
    nx, nz = ik[:, 0].max() + 1, ik[:, 1].max() + 1
    out = np.empty((nx, nz))
    out[ik[:, 0], ik[:, 1]] = vals
    return out


def write_snapshot(path, grid, state):
    """32-byte descriptor then ``rho, m1, m2, m3`` as row-major little-endian float64."""
    fields = np.concatenate([state.rho[None], state.mom]).astype("<f8")
    head = DESCRIPTOR.pack(
        MAGIC, grid.nx, grid.nz, KIND_CODES[grid.spec.profile.kind], fields.shape[0],
        float(grid.spec.epsilon), float(state.t),
    )
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(fields).tobytes())


def read_snapshot(path):
    """Return ``(descriptor dict, fields)`` with ``fields`` of shape ``(nfields, nx, nz)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, nx, nz, kind, nf, eps, t = DESCRIPTOR.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a snapshot file")
    data = np.frombuffer(raw, dtype="<f8", offset=DESCRIPTOR.size)
    if data.size != nf * nx * nz:
        raise ValueError("truncated snapshot")
    desc = {"nx": nx, "nz": nz, "kind": list(ProfileKind)[kind], "nfields": nf, "epsilon": eps, "t": t}
    return desc, data.reshape(nf, nx, nz).copy()
