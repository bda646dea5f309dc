#!/usr/bin/env python
"""
Contains the Snapshot class definition, the binary field codec

A snapshot is a 32-byte little-endian header (magic "APHI", version u32,
M u32, L f64, time f64, 4 reserved bytes) followed by the M² field values
as little-endian f64 in row-major order.
"""
import struct
import pathlib
import logging
from dataclasses import dataclass

import numpy as np

from .constants import SNAPSHOT_MAGIC, SNAPSHOT_VERSION, SNAPSHOT_HEADER_FORMAT
from .utils import SnapshotFormatError
from .lattice import TorusGrid

__all__ = ['Snapshot', 'write_snapshot', 'read_snapshot']

logger = logging.getLogger(__name__)

HEADER_SIZE = struct.calcsize(SNAPSHOT_HEADER_FORMAT)


@dataclass(frozen=True, eq=False)
class Snapshot:
    grid: TorusGrid
    time: float
    field: np.ndarray

    def to_bytes(self) -> bytes:
        self.grid.check(self.field)
        _header = struct.pack(SNAPSHOT_HEADER_FORMAT, SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
                              self.grid.M, self.grid.L, float(self.time))
        return _header + np.ascontiguousarray(self.field, dtype='<f8').tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes):
        if len(payload) < HEADER_SIZE:
            raise SnapshotFormatError(f"Snapshot truncated: {len(payload)} bytes is shorter than the {HEADER_SIZE}-byte header")
        _magic, _version, _M, _L, _time = struct.unpack(SNAPSHOT_HEADER_FORMAT, payload[:HEADER_SIZE])
        if _magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"Bad snapshot magic {_magic!r}, expected {SNAPSHOT_MAGIC!r}")
        if _version != SNAPSHOT_VERSION:
            raise SnapshotFormatError(f"Unsupported snapshot version {_version}, expected {SNAPSHOT_VERSION}")
        _expected = HEADER_SIZE + 8*_M*_M
        if len(payload) != _expected:
            raise SnapshotFormatError(f"Snapshot of M={_M} must hold {_expected} bytes, got {len(payload)}")
        try:
            _grid = TorusGrid(_M, _L)
        except ValueError as _error:
            raise SnapshotFormatError(f"Snapshot header describes an invalid grid: {_error}")
        _field = np.frombuffer(payload, dtype='<f8', offset=HEADER_SIZE).reshape(_M, _M).astype(float)
        return cls(_grid, float(_time), _field)


def write_snapshot(path, field, grid, time=0.):
    path = pathlib.Path(path)
    path.write_bytes(Snapshot(grid, time, field).to_bytes())
    logger.debug("Wrote snapshot t=%g to %s", time, path)
    return path


def read_snapshot(path) -> Snapshot:
    return Snapshot.from_bytes(pathlib.Path(path).read_bytes())


if __name__ == '__main__':
    pass
