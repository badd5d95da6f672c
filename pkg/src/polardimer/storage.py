"""Binary container for eigenstates.

Layout::

    8 bytes   magic b"PDEIGEN1"
    8 bytes   header length, unsigned little-endian
    n bytes   UTF-8 JSON header (sorted keys)
    per state:
        N * n_J little-endian float64 coefficients, row-major over (radial i, J)
        8 bytes CRC-64/XZ of those coefficient bytes, unsigned little-endian

The header carries the grid and basis specs, F, M, labels, energies and the
format version.  Energies are written with repr precision, so a round trip is
bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np
from fastcrc import crc64

from polardimer.eigen import EigenState

MAGIC = b"PDEIGEN1"
FORMAT_VERSION = 1


class StorageError(ValueError):
    """Malformed or corrupted eigenstate container."""


def crc64_xz(data: bytes) -> int:
    return crc64.xz(data)


def write_states(path: str | Path, states: Sequence[EigenState], grid_spec: dict, extra: dict | None = None) -> None:
    if not states:
        raise ValueError("nothing to write")
    M, F = states[0].M, states[0].F
    shape = states[0].coefficients.shape
    if any(s.M != M or s.F != F or s.coefficients.shape != shape for s in states):
        raise ValueError("all states in one container must share M, F and coefficient shape")
    header = {
        "format": "polardimer-eigenstates",
        "version": FORMAT_VERSION,
        "byte_order": "little",
        "dtype": "float64",
        "checksum": "crc64-xz",
        "grid": grid_spec,
        "basis": {"M": int(M), "J_max": int(states[0].js[-1])},
        "F": float(F),
        "M": int(M),
        "shape": [int(shape[0]), int(shape[1])],
        "labels": [None if s.label is None else [int(x) for x in s.label] for s in states],
        "energies": [float(s.energy) for s in states],
        "bound": [bool(s.bound) for s in states],
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for s in states:
            data = np.ascontiguousarray(s.coefficients, dtype="<f8").tobytes()
            fh.write(data)
            fh.write(struct.pack("<Q", crc64_xz(data)))


def read_states(path: str | Path) -> tuple[dict, list[EigenState]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise StorageError(f"{path}: not an eigenstate container")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    try:
        header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise StorageError(f"{path}: unreadable header ({err})") from None
    if header.get("version") != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported format version {header.get('version')}")
    N, nJ = header["shape"]
    size = N * nJ * 8
    M, F = header["M"], header["F"]
    js = np.arange(abs(M), header["basis"]["J_max"] + 1)
    pos = 16 + hlen
    states = []
    for k, (label, energy, bound) in enumerate(zip(header["labels"], header["energies"], header["bound"])):
        block = raw[pos:pos + size]
        if len(block) != size or len(raw) < pos + size + 8:
            raise StorageError(f"{path}: truncated at state {k}")
        (crc,) = struct.unpack("<Q", raw[pos + size:pos + size + 8])
        if crc != crc64_xz(block):
            raise StorageError(f"{path}: checksum mismatch in state {k}")
        C = np.frombuffer(block, dtype="<f8").reshape(N, nJ).astype(float)
        states.append(EigenState(energy, M, F, js, None if label is None else tuple(label), bound, _coefficients=C))
        pos += size + 8
    if pos != len(raw):
        raise StorageError(f"{path}: {len(raw) - pos} trailing bytes")
    return header, states
