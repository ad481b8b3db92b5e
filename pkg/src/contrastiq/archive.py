"""Neutral binary container for named float32 tensors ("CQWA" archives).

Byte layout (all integers little-endian):

    magic   4 bytes  b"CQWA"
    version u16      currently 1
    count   u32      number of tensor entries
    entry*  count times:
        name_len u16, name UTF-8 bytes
        rank     u8
        dims     rank * u32
        values   prod(dims) * f32 (little-endian)
    meta_count u32   number of metadata pairs
    meta*   meta_count times:
        key_len  u16, key UTF-8 bytes
        val_len  u32, value UTF-8 bytes
    crc     u32      zlib CRC32 of every preceding byte

Entry order is preserved; names must be unique.  Metadata is free-form text
(the tensor layout above has no room for it, so it rides in a dedicated block
between the entries and the checksum).  Backbone weights, trained heads, and
feature caches all use this one container.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ArchiveError, BadMagic, ChecksumMismatch, TruncatedFile

MAGIC = b"CQWA"
VERSION = 1


@dataclass
class WeightArchive:
    """Ordered name -> float32 tensor mapping plus free-form text metadata."""

    entries: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def add(self, name: str, values: np.ndarray) -> None:
        if name in self.entries:
            raise ArchiveError(f"duplicate entry name {name!r}")
        self.entries[name] = np.ascontiguousarray(values, dtype=np.float32)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += MAGIC
        out += struct.pack("<HI", VERSION, len(self.entries))
        for name, values in self.entries.items():
            nb = name.encode("utf-8")
            out += struct.pack("<H", len(nb))
            out += nb
            out += struct.pack("<B", values.ndim)
            out += struct.pack(f"<{values.ndim}I", *values.shape)
            out += values.astype("<f4", copy=False).tobytes()
        out += struct.pack("<I", len(self.metadata))
        for key, val in self.metadata.items():
            kb = key.encode("utf-8")
            vb = val.encode("utf-8")
            out += struct.pack("<H", len(kb))
            out += kb
            out += struct.pack("<I", len(vb))
            out += vb
        out += struct.pack("<I", zlib.crc32(bytes(out)))
        return bytes(out)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "WeightArchive":
        if len(blob) < 4 or blob[:4] != MAGIC:
            raise BadMagic("not a CQWA archive")
        if len(blob) < 14:
            raise TruncatedFile("archive shorter than minimal header")
        stored_crc = struct.unpack("<I", blob[-4:])[0]
        if zlib.crc32(blob[:-4]) != stored_crc:
            raise ChecksumMismatch("CRC32 mismatch")
        pos = 4
        version, count = struct.unpack_from("<HI", blob, pos)
        pos += 6
        if version != VERSION:
            raise ArchiveError(f"unsupported archive version {version}")
        arch = cls()
        try:
            for _ in range(count):
                (name_len,) = struct.unpack_from("<H", blob, pos)
                pos += 2
                name = blob[pos : pos + name_len].decode("utf-8")
                pos += name_len
                (rank,) = struct.unpack_from("<B", blob, pos)
                pos += 1
                dims = struct.unpack_from(f"<{rank}I", blob, pos)
                pos += 4 * rank
                n = int(np.prod(dims, dtype=np.int64)) if rank else 1
                values = np.frombuffer(blob, dtype="<f4", count=n, offset=pos)
                pos += 4 * n
                arch.add(name, values.reshape(dims).copy())
            (meta_count,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            for _ in range(meta_count):
                (key_len,) = struct.unpack_from("<H", blob, pos)
                pos += 2
                key = blob[pos : pos + key_len].decode("utf-8")
                pos += key_len
                (val_len,) = struct.unpack_from("<I", blob, pos)
                pos += 4
                arch.metadata[key] = blob[pos : pos + val_len].decode("utf-8")
                pos += val_len
        except (struct.error, ValueError) as exc:
            raise TruncatedFile(f"archive ends mid-record: {exc}") from exc
        if pos != len(blob) - 4:
            raise TruncatedFile("trailing bytes before checksum")
        return arch


def save_weight_archive(archive: WeightArchive, path) -> None:
    with open(path, "wb") as fh:
        fh.write(archive.to_bytes())


def load_weight_archive(path) -> WeightArchive:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ArchiveError(f"cannot read {path}: {exc}") from exc
    return WeightArchive.from_bytes(blob)
