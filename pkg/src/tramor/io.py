"""Binary and CSV persistence for snapshots, decompositions, trajectories and tables.

All binary files are little-endian. Arrays are written column-major, so for
snapshot data of shape ``(c, n, m)`` the component index varies fastest.
"""

import csv
import struct

import numpy as np

from .fom import SnapshotSet
from .numerics import Grid, TransformFamily
from .offline import Decomposition, Frame

SNAPSHOT_MAGIC = b"TRMSNAP\x00"
DECOMP_MAGIC = b"TRMDECO\x00"
FORMAT_VERSION = 1

_TOPOLOGIES = ("periodic", "bounded")


class FileFormatError(ValueError):
    pass


# low-level helpers ---------------------------------------------------------------


def _pack_str(s):
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def _read(fh, fmt):
    size = struct.calcsize(fmt)
    buf = fh.read(size)
    if len(buf) != size:
        raise FileFormatError("truncated file")
    return struct.unpack(fmt, buf)


def _read_str(fh):
    (k,) = _read(fh, "<I")
    buf = fh.read(k)
    if len(buf) != k:
        raise FileFormatError("truncated string")
    return buf.decode("utf-8")


def _read_array(fh, shape):
    count = int(np.prod(shape))
    buf = fh.read(8 * count)
    if len(buf) != 8 * count:
        raise FileFormatError("truncated array")
    return np.frombuffer(buf, dtype="<f8").reshape(shape, order="F").astype(float)


def _write_array(fh, a):
    fh.write(np.asarray(a, dtype="<f8").ravel(order="F").tobytes())


def _pack_grid(g):
    return struct.pack("<QddB", g.n, g.xi0, g.length, _TOPOLOGIES.index(g.topology))


def _read_grid(fh):
    n, xi0, length, topo = _read(fh, "<QddB")
    return Grid(n=int(n), xi0=xi0, length=length, topology=_TOPOLOGIES[topo])


def _uniform(times):
    if times.size < 2:
        return True
    d = np.diff(times)
    return bool(np.all(np.abs(d - d[0]) <= 1e-12 * max(1.0, abs(times[-1]))))


# snapshots -------------------------------------------------------------------------


def write_snapshots(path, snap):
    """Header {magic, version, c, n, m, dxi, tau, t0, grid, tag}, then c*n*m doubles.

    ``tau`` is NaN when the sample times are not uniform; the m times then
    follow the header explicitly.
    """
    times = snap.times
    uniform = _uniform(times)
    tau = snap.tau if uniform else float("nan")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IQQQddd", FORMAT_VERSION, snap.components, snap.grid.n, snap.m, snap.grid.dxi, tau, times[0]))
        fh.write(_pack_grid(snap.grid))
        fh.write(_pack_str(snap.model_tag))
        if not uniform:
            _write_array(fh, times)
        _write_array(fh, snap.data)


def read_snapshots(path):
    with open(path, "rb") as fh:
        if fh.read(8) != SNAPSHOT_MAGIC:
            raise FileFormatError(f"{path}: not a snapshot file")
        version, c, n, m, dxi, tau, t0 = _read(fh, "<IQQQddd")
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported version {version}")
        grid = _read_grid(fh)
        if grid.n != n or abs(grid.dxi - dxi) > 1e-14 * max(1.0, dxi):
            raise FileFormatError(f"{path}: inconsistent grid header")
        tag = _read_str(fh)
        times = t0 + tau * np.arange(m) if np.isfinite(tau) else _read_array(fh, (m,))
        data = _read_array(fh, (c, n, m))
    return SnapshotSet(grid, times, data, tag)


def write_snapshots_csv(path, snap):
    """One row per time; columns ``t`` then one per (component, node)."""
    c, n = snap.components, snap.grid.n
    if c == 1:
        names = [f"x{i}" for i in range(n)]
    else:
        names = [f"c{k}_x{i}" for k in range(c) for i in range(n)]
    rows = np.column_stack([snap.times, snap.states.reshape(snap.m, c * n)])
    _write_matrix(path, ["t", *names], rows)


# decompositions ---------------------------------------------------------------------


def write_decomposition(path, dec):
    """Header {frame count; per frame: transform kind, r_f, m} followed by arrays.

    Per frame the file holds the kind, derivative order, mode grid,
    shape ``(r, c, n_mode)``, then path, modes, coefficients and singular
    values as column-major doubles.
    """
    m = dec.times.size
    with open(path, "wb") as fh:
        fh.write(DECOMP_MAGIC)
        fh.write(struct.pack("<IIQd", FORMAT_VERSION, len(dec.frames), m, dec.offline_error))
        fh.write(_pack_grid(dec.grid))
        _write_array(fh, dec.times)
        for fr in dec.frames:
            fam = fr.transform
            fh.write(_pack_str(fam.kind))
            fh.write(_pack_str(fam.diff_order))
            has_virtual = fam.virtual_grid is not None
            fh.write(struct.pack("<B", int(has_virtual)))
            if has_virtual:
                fh.write(_pack_grid(fam.virtual_grid))
            r, c, nm = fr.modes.shape
            sv = np.zeros(0) if fr.singular_values is None else np.asarray(fr.singular_values, dtype=float)
            fh.write(struct.pack("<QQQQQ", r, c, nm, m, sv.size))
            _write_array(fh, fr.path)
            _write_array(fh, fr.modes)
            _write_array(fh, fr.coefficients)
            _write_array(fh, sv)


def read_decomposition(path):
    with open(path, "rb") as fh:
        if fh.read(8) != DECOMP_MAGIC:
            raise FileFormatError(f"{path}: not a decomposition file")
        version, nframes, m, offline_error = _read(fh, "<IIQd")
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported version {version}")
        grid = _read_grid(fh)
        times = _read_array(fh, (m,))
        frames = []
        for _ in range(nframes):
            kind = _read_str(fh)
            order = _read_str(fh)
            (has_virtual,) = _read(fh, "<B")
            vg = _read_grid(fh) if has_virtual else None
            r, c, nm, mf, nsv = _read(fh, "<QQQQQ")
            if mf != m:
                raise FileFormatError(f"{path}: frame sample count {mf} != {m}")
            fam = TransformFamily(kind, grid, vg, diff_order=order)
            p = _read_array(fh, (m,))
            modes = _read_array(fh, (r, c, nm))
            coeffs = _read_array(fh, (r, m))
            sv = _read_array(fh, (nsv,))
            frames.append(Frame(fam, p, modes, coeffs, sv if nsv else None))
    dec = Decomposition(frames, grid, times, offline_error)
    dec.error_history = [offline_error]
    return dec


def write_singular_values_csv(path, dec):
    rows = []
    for f, fr in enumerate(dec.frames):
        if fr.singular_values is None:
            continue
        s = np.asarray(fr.singular_values, dtype=float)
        rel = s / s[0] if s.size and s[0] > 0 else s
        rows += [[f, i + 1, s[i], rel[i]] for i in range(s.size)]
    _write_matrix(path, ["frame", "index", "sigma", "sigma_relative"], rows, int_cols=2)


def write_decomposition_csv(path, dec):
    """Per frame and sample: path value and coefficients."""
    rmax = max(fr.rank for fr in dec.frames)
    rows = []
    for f, fr in enumerate(dec.frames):
        for k, t in enumerate(dec.times):
            coeffs = list(fr.coefficients[:, k]) + [float("nan")] * (rmax - fr.rank)
            rows.append([f, t, fr.path[k], *coeffs])
    _write_matrix(path, ["frame", "t", "p", *[f"alpha_{i + 1}" for i in range(rmax)]], rows, int_cols=1)


# trajectories and tables -------------------------------------------------------------


def write_trajectory_csv(path, traj):
    r, q = traj.alphas.shape[0], traj.paths.shape[0]
    header = ["t", *[f"alpha_{i + 1}" for i in range(r)], *[f"p_{j + 1}" for j in range(q)], "residual_norm"]
    rows = np.column_stack([traj.times, traj.alphas.T, traj.paths.T, traj.residual_norms])
    _write_matrix(path, header, rows)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_matrix(path, header, rows, int_cols=0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(int(v)) if j < int_cols else _fmt(v) for j, v in enumerate(row)])


def write_table(path, rows, gnuplot=False):
    """CSV with a header row from the keys of ``rows``; optional whitespace twin.

    Returns the list of files written.
    """
    if not rows:
        raise ValueError("empty table")
    header = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])
    written = [str(path)]
    if gnuplot:
        dat = str(path)[: -len(".csv")] + ".dat" if str(path).endswith(".csv") else str(path) + ".dat"
        with open(dat, "w") as fh:
            fh.write("# " + " ".join(header) + "\n")
            for row in rows:
                fh.write(" ".join(_fmt(row[k]) for k in header) + "\n")
        written.append(dat)
    return written


def read_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_path_csv(path):
    """Two-column ``t,p`` (or more columns ``t,p_1..p_q``) path file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:].T
