import struct

import numpy as np
import pytest

from tramor import fom, io, offline
from tramor.integrators import IntegratorSpec
from tramor.numerics import BOUNDED, VIRTUAL_SHIFT, Grid, TransformFamily, virtual_grid_for


def test_snapshot_round_trip_uniform(tmp_path, ade):
    snap = ade["truth"]
    p = tmp_path / "s.bin"
    io.write_snapshots(p, snap)
    back = io.read_snapshots(p)
    assert np.array_equal(back.data, snap.data)
    assert np.allclose(back.times, snap.times, atol=1e-15)
    assert back.grid == snap.grid and back.model_tag == snap.model_tag


def test_snapshot_round_trip_irregular_two_components(tmp_path, rng):
    g = Grid(16)
    t = np.array([0.0, 0.1, 0.35, 0.4])
    snap = fom.SnapshotSet(g, t, rng.standard_normal((2, 16, 4)), "w")
    p = tmp_path / "s.bin"
    io.write_snapshots(p, snap)
    back = io.read_snapshots(p)
    assert np.array_equal(back.times, t) and np.array_equal(back.data, snap.data)


def test_snapshot_header_layout(tmp_path, rng):
    g = Grid(16)
    snap = fom.SnapshotSet(g, [0.0, 0.5], rng.standard_normal((1, 16, 2)))
    p = tmp_path / "s.bin"
    io.write_snapshots(p, snap)
    raw = p.read_bytes()
    assert raw[:8] == io.SNAPSHOT_MAGIC
    version, c, n, m, dxi, tau, t0 = struct.unpack_from("<IQQQddd", raw, 8)
    assert (version, c, n, m, dxi, tau, t0) == (1, 1, 16, 2, 1 / 16, 0.5, 0.0)
    # column-major payload at the end: component index fastest, then space, then time
    tail = np.frombuffer(raw[-8 * 32 :], "<f8")
    assert tail[1] == snap.data[0, 1, 0] and tail[16] == snap.data[0, 0, 1]


def test_wrong_magic(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"garbage!" + bytes(64))
    with pytest.raises(io.FileFormatError):
        io.read_snapshots(p)
    with pytest.raises(io.FileFormatError):
        io.read_decomposition(p)


def test_truncated_file(tmp_path, ade):
    p = tmp_path / "s.bin"
    io.write_snapshots(p, ade["truth"])
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(io.FileFormatError):
        io.read_snapshots(p)


def test_decomposition_round_trip(tmp_path, ade):
    dec = ade["dec"]
    p = tmp_path / "d.bin"
    io.write_decomposition(p, dec)
    back = io.read_decomposition(p)
    assert back.offline_error == dec.offline_error
    f0, f1 = dec.frames[0], back.frames[0]
    for name in ("path", "modes", "coefficients", "singular_values"):
        assert np.array_equal(getattr(f0, name), getattr(f1, name))
    assert np.array_equal(back.reconstruct_states(), dec.reconstruct_states())


def test_virtual_decomposition_round_trip(tmp_path):
    g = Grid(101, topology=BOUNDED)
    t = np.linspace(0, 0.3, 7)
    fam = TransformFamily(VIRTUAL_SHIFT, g, virtual_grid_for(g, t), diff_order="D1_2nd")
    snap = fom.SnapshotSet.from_states(g, t, [fom.gaussian(g.nodes - tk, 0.3, 0.05) for tk in t])
    dec = offline.compute_spod_single_frame(snap, t, fam, 1)
    p = tmp_path / "d.bin"
    io.write_decomposition(p, dec)
    back = io.read_decomposition(p)
    assert back.frames[0].transform.virtual_grid == fam.virtual_grid
    assert np.array_equal(back.reconstruct_states(), dec.reconstruct_states())


def test_csv_outputs(tmp_path, ade):
    dec = ade["dec"]
    io.write_singular_values_csv(tmp_path / "sv.csv", dec)
    rows = io.read_table(tmp_path / "sv.csv")
    assert rows[0]["index"] == "1" and float(rows[0]["sigma_relative"]) == 1.0
    io.write_decomposition_csv(tmp_path / "d.csv", dec)
    rows = io.read_table(tmp_path / "d.csv")
    assert len(rows) == dec.times.size and set(rows[0]) == {"frame", "t", "p", "alpha_1", "alpha_2"}
    io.write_snapshots_csv(tmp_path / "s.csv", ade["truth"])
    assert len(io.read_table(tmp_path / "s.csv")) == ade["truth"].m


def test_table_and_gnuplot_twin(tmp_path):
    rows = [{"a": 1, "b": 0.1}, {"a": 2, "b": 1e-20}]
    files = io.write_table(tmp_path / "t.csv", rows, gnuplot=True)
    assert len(files) == 2
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.1\n2,1e-20\n"
    assert (tmp_path / "t.dat").read_text() == "# a b\n1 0.1\n2 1e-20\n"
    with pytest.raises(ValueError):
        io.write_table(tmp_path / "e.csv", [])


def test_path_csv(tmp_path):
    (tmp_path / "p.csv").write_text("t,p\n0,0\n0.5,0.25\n1,1\n")
    t, p = io.read_path_csv(tmp_path / "p.csv")
    assert np.array_equal(t, [0, 0.5, 1]) and p.shape == (1, 3)
