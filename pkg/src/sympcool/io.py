"""File formats: CSV tables, density-matrix checkpoints and run manifests.

Checkpoint layout (all little-endian):

========  =========  ===============================================
offset    type       content
========  =========  ===============================================
0         8 bytes    magic ``b"SYMPCKP1"``
8         int64      number of internal levels L
16        int64      number of Fock states N
24        float64    time in seconds
32        float64[]  (L*N)^2 complex entries, row-major, each stored
                     as (real, imag)
========  =========  ===============================================
"""
import csv
import hashlib
import json
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dynamics import DensityState
from .errors import ConfigError

CHECKPOINT_MAGIC = b"SYMPCKP1"
_HEADER = struct.Struct("<8sqqd")


def format_value(v):
    """Full-precision scientific notation for floats; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".16e")
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    """Header and columns of a CSV written by :func:`write_csv`.

    Numeric columns come back as float arrays, anything else as a list of strings.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError("empty CSV file", field=str(path))
    header, body = rows[0], rows[1:]
    if any(len(r) != len(header) for r in body):
        raise ConfigError("rows and header differ in length", field=str(path))
    cols = {}
    for i, h in enumerate(header):
        raw = [r[i] for r in body]
        try:
            cols[h] = np.array([float(v) for v in raw])
        except ValueError:
            cols[h] = raw
    return header, cols


def save_checkpoint(path, state):
    m = np.ascontiguousarray(state.matrix, dtype="<c16")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, state.n_levels, state.n_fock, float(state.time)))
        fh.write(m.tobytes(order="C"))
    return Path(path)


def load_checkpoint(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ConfigError("checkpoint too short", field=str(path))
    magic, n_levels, n_fock, t = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise ConfigError("not a density-matrix checkpoint", field=str(path))
    if n_levels < 1 or n_fock < 1:
        raise ConfigError("invalid checkpoint dimensions", field=str(path))
    d = n_levels * n_fock
    body = data[_HEADER.size:]
    if len(body) != d * d * 16:
        raise ConfigError(f"checkpoint body has {len(body)} bytes, expected {d * d * 16}",
                          field=str(path))
    m = np.frombuffer(body, dtype="<c16").reshape(d, d).astype(complex)
    return DensityState(m, int(n_levels), float(t))


def config_hash(doc):
    """SHA-256 of the canonical JSON form of a configuration document."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, *, command, config_digest, version, started, files, status="ok",
                   error=None):
    out_dir = Path(out_dir)
    doc = {
        "command": command,
        "config_sha256": config_digest,
        "version": version,
        "started": started,
        "finished": utc_now(),
        "status": status,
        "files": sorted(str(Path(f).relative_to(out_dir)) for f in files),
    }
    if error is not None:
        doc["error"] = error
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
