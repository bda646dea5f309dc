#!/usr/bin/env python
import pathlib

import numpy as np
import pytest

from ..Anderson_phi42.lattice import TorusGrid
from ..Anderson_phi42.utils import SnapshotFormatError
from ..Anderson_phi42.Snapshot import Snapshot, write_snapshot, read_snapshot
from .utils import in_tmp_wd


grid = TorusGrid(8, 3.)
field = np.random.default_rng(4).standard_normal(grid.shape)


@in_tmp_wd
def test_round_trip():
    path = write_snapshot('field.aphi', field, grid, 1.25)
    assert path.stat().st_size == 32 + 8*grid.size
    snapshot = read_snapshot(path)
    assert snapshot.grid == grid
    assert snapshot.time == 1.25
    assert np.array_equal(snapshot.field, field)
    assert snapshot.to_bytes() == pathlib.Path(path).read_bytes()


def test_truncated():
    payload = Snapshot(grid, 0., field).to_bytes()
    with pytest.raises(SnapshotFormatError):
        Snapshot.from_bytes(payload[:-8])
    with pytest.raises(SnapshotFormatError):
        Snapshot.from_bytes(payload[:10])


def test_bad_magic():
    payload = Snapshot(grid, 0., field).to_bytes()
    with pytest.raises(SnapshotFormatError):
        Snapshot.from_bytes(b'XPHI' + payload[4:])


def test_wrong_shape():
    with pytest.raises(ValueError):
        Snapshot(grid, 0., np.zeros((4, 4))).to_bytes()


if __name__ == '__main__':
    pass
