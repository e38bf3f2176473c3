"""Self-describing binary snapshots of states and extended fields.

Layout (all integers little-endian)::

    magic      8 bytes   b"GALEXTSN"
    version    uint16
    hdr_len    uint32
    header     hdr_len bytes of UTF-8 JSON
    payload    complex samples as interleaved float64 (real, imag) pairs
    checksum   32 bytes, SHA-256 of everything above

The header records ``kind`` ("superposition" or "extended"), the grid
descriptors, mass list, time stamp, byte order and payload shape, so a
file always carries its own grid and is never resampled on load.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .core import ExtendedField, SGrid, SpatialGrid, SuperpositionState
from .errors import CorruptSnapshotError, SnapshotVersionError

MAGIC = b"GALEXTSN"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")
_DTYPE = np.dtype("<c16")


def _encode(state) -> bytes:
    if isinstance(state, SuperpositionState):
        data = np.stack([ch.psi for ch in state.channels]) if state.channels else \
            np.zeros((0, state.grid.n), dtype=complex)
        header = {"kind": "superposition", "masses": list(state.masses), "sgrid": None}
    elif isinstance(state, ExtendedField):
        data = state.field
        sg = state.sgrid
        header = {"kind": "extended", "masses": None,
                  "sgrid": {"n_s": sg.n_s, "length_s": sg.length_s, "hbar": sg.hbar}}
    else:
        raise TypeError(f"cannot snapshot {type(state).__name__}")
    header.update({
        "grid": {"n": state.grid.n, "length": state.grid.length},
        "t": state.t,
        "endianness": "little",
        "dtype": "float64-pair",
        "shape": list(data.shape),
    })
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(hdr)) + hdr
    body += np.ascontiguousarray(data, dtype=_DTYPE).tobytes()
    return body + hashlib.sha256(body).digest()


def _decode(blob: bytes):
    if len(blob) < _PREFIX.size + 32:
        raise CorruptSnapshotError("file too short to be a snapshot")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptSnapshotError("checksum mismatch")
    magic, version, hlen = _PREFIX.unpack_from(body)
    if magic != MAGIC:
        raise CorruptSnapshotError("bad magic bytes")
    if version != FORMAT_VERSION:
        raise SnapshotVersionError(f"snapshot format {version}, reader supports {FORMAT_VERSION}")
    try:
        header = json.loads(body[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptSnapshotError(f"unreadable header: {exc}") from exc
    payload = body[_PREFIX.size + hlen:]
    shape = tuple(header["shape"])
    if len(payload) != int(np.prod(shape)) * _DTYPE.itemsize:
        raise CorruptSnapshotError("payload size does not match header shape")
    data = np.frombuffer(payload, dtype=_DTYPE).reshape(shape)
    grid = SpatialGrid(header["grid"]["n"], header["grid"]["length"])
    t = header["t"]
    if header["kind"] == "superposition":
        return SuperpositionState.from_arrays(grid, header["masses"], list(data), t)
    if header["kind"] == "extended":
        sg = header["sgrid"]
        return ExtendedField(data, grid, SGrid(sg["n_s"], sg["length_s"], sg["hbar"]), t)
    raise CorruptSnapshotError(f"unknown snapshot kind {header['kind']!r}")


def save_snapshot(state, path) -> Path:
    path = Path(path)
    path.write_bytes(_encode(state))
    return path


def load_snapshot(path):
    return _decode(Path(path).read_bytes())
