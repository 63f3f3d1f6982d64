"""Frame serialisation.

Binary layout (little-endian throughout)::

    offset  size  field
    0       4     magic b"SPLF"
    4       4     version (u32)
    8       8     step (u64)
    16      8     time (binary64)
    24      4     nx (u32)
    28      4     ny (u32)
    32            heights, nx*ny binary32, row-major (row = constant j)
                  mesh z, (nx-1)*(ny-1) binary32, same order
                  particle count (u32), then 7 binary32 each:
                      x y z vx vy vz volume
                  object count (u32), then 4 binary32 each:
                      s s_dot f_o contact_area

The text format carries the same values, one section per block::

    SPLF-TEXT 1
    step <n>
    time <t>
    grid <nx> <ny>
    heights
    <ny lines of nx values>
    mesh
    <ny-1 lines of nx-1 values>
    particles <count>
    <one line of 7 values per particle>
    objects <count>
    <one line of 4 values per object>

Values in the text form are binary32 printed with 9 significant digits, so
they read back to the same binary32 bits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SPLF"
VERSION = 1
HEADER = struct.Struct("<4sIQdII")
_F32 = np.dtype("<f4")
_U32 = struct.Struct("<I")


class FrameFormatError(ValueError):
    pass


@dataclass
class Frame:
    step: int
    time: float
    nx: int
    ny: int
    heights: np.ndarray      # (ny, nx)
    mesh_z: np.ndarray       # (ny-1, nx-1)
    particles: np.ndarray    # (n, 7)
    objects: np.ndarray      # (m, 4)

    @classmethod
    def from_state(cls, state) -> "Frame":
        pool = state.pool
        parts = np.empty((len(pool), 7))
        if len(pool):
            parts[:, 0:3] = pool.pos
            parts[:, 3:6] = pool.vel
            parts[:, 6] = pool.vol
        objs = np.array([[o.s, o.s_dot, o.f_o, o.contact_area] for o in state.objects]).reshape(-1, 4)
        return cls(
            step=state.step,
            time=state.time,
            nx=state.nx,
            ny=state.ny,
            heights=state.heights(),
            mesh_z=state.mesh.z.copy(),
            particles=parts,
            objects=objs,
        )

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            (self.step, self.time, self.nx, self.ny) == (other.step, other.time, other.nx, other.ny)
            and all(
                np.array_equal(np.asarray(a, dtype=_F32), np.asarray(b, dtype=_F32))
                for a, b in zip(
                    (self.heights, self.mesh_z, self.particles, self.objects),
                    (other.heights, other.mesh_z, other.particles, other.objects),
                )
            )
        )


def _encode_bin(frame: Frame) -> bytes:
    parts = [
        HEADER.pack(MAGIC, VERSION, frame.step, frame.time, frame.nx, frame.ny),
        np.ascontiguousarray(frame.heights, dtype=_F32).tobytes(),
        np.ascontiguousarray(frame.mesh_z, dtype=_F32).tobytes(),
        _U32.pack(len(frame.particles)),
        np.ascontiguousarray(frame.particles, dtype=_F32).tobytes(),
        _U32.pack(len(frame.objects)),
        np.ascontiguousarray(frame.objects, dtype=_F32).tobytes(),
    ]
    return b"".join(parts)


def _fmt(values) -> str:
    return " ".join(f"{v:.9g}" for v in np.asarray(values, dtype=_F32).tolist())


def _encode_text(frame: Frame) -> bytes:
    lines = ["SPLF-TEXT 1", f"step {frame.step}", f"time {frame.time!r}", f"grid {frame.nx} {frame.ny}",
             "heights"]
    lines += [_fmt(row) for row in frame.heights]
    lines.append("mesh")
    lines += [_fmt(row) for row in frame.mesh_z]
    lines.append(f"particles {len(frame.particles)}")
    lines += [_fmt(p) for p in frame.particles]
    lines.append(f"objects {len(frame.objects)}")
    lines += [_fmt(o) for o in frame.objects]
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_frame(frame: Frame, fmt: str = "bin") -> bytes:
    if fmt == "bin":
        return _encode_bin(frame)
    if fmt == "text":
        return _encode_text(frame)
    raise ValueError(f"unknown frame format {fmt!r}")


def _read_f32(buf, offset, count):
    end = offset + 4 * count
    if end > len(buf):
        raise FrameFormatError("truncated frame")
    return np.frombuffer(buf, dtype=_F32, count=count, offset=offset).astype(np.float32), end


def _read_u32(buf, offset):
    if offset + 4 > len(buf):
        raise FrameFormatError("truncated frame")
    return _U32.unpack_from(buf, offset)[0], offset + 4


def _decode_bin(buf: bytes) -> Frame:
    if len(buf) < HEADER.size:
        raise FrameFormatError("truncated header")
    magic, version, step, t, nx, ny = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FrameFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameFormatError(f"unsupported version {version}")
    off = HEADER.size
    heights, off = _read_f32(buf, off, nx * ny)
    mx, my = max(nx - 1, 0), max(ny - 1, 0)
    mesh, off = _read_f32(buf, off, mx * my)
    npart, off = _read_u32(buf, off)
    parts, off = _read_f32(buf, off, 7 * npart)
    nobj, off = _read_u32(buf, off)
    objs, off = _read_f32(buf, off, 4 * nobj)
    if off != len(buf):
        raise FrameFormatError(f"{len(buf) - off} trailing bytes")
    return Frame(step, t, nx, ny, heights.reshape(ny, nx), mesh.reshape(my, mx),
                 parts.reshape(npart, 7), objs.reshape(nobj, 4))


def _decode_text(buf: bytes) -> Frame:
    lines = buf.decode("utf-8").splitlines()
    it = iter(lines)

    def expect(prefix):
        line = next(it)
        if not line.startswith(prefix):
            raise FrameFormatError(f"expected {prefix!r}, got {line!r}")
        return line[len(prefix):].split()

    def rows(n, width):
        out = np.zeros((n, width), dtype=np.float32)
        for k in range(n):
            vals = next(it).split()
            if len(vals) != width:
                raise FrameFormatError(f"row has {len(vals)} values, expected {width}")
            out[k] = np.array(vals, dtype=np.float64).astype(np.float32)
        return out

    expect("SPLF-TEXT")
    step = int(expect("step ")[0])
    t = float(expect("time ")[0])
    nx, ny = (int(v) for v in expect("grid "))
    expect("heights")
    heights = rows(ny, nx)
    expect("mesh")
    mesh = rows(max(ny - 1, 0), max(nx - 1, 0))
    parts = rows(int(expect("particles ")[0]), 7)
    objs = rows(int(expect("objects ")[0]), 4)
    return Frame(step, t, nx, ny, heights, mesh, parts, objs)


def read_frame(buf: bytes) -> Frame:
    """Decode either frame format; binary32 values come back bit-exact."""
    # the text header shares the binary magic as a prefix, so test it first
    if buf.startswith(b"SPLF-TEXT"):
        return _decode_text(buf)
    if buf[:4] == MAGIC:
        return _decode_bin(buf)
    raise FrameFormatError("not a splash frame")
