"""Little-endian framing helpers shared by the dataset and model file formats.

Both formats are ``magic | version u32 | fields... | CRC-32 u32``, the checksum
covering every byte before it.
"""

import struct
import zlib

import numpy as np

from errors import BadMagicError, ChecksumError, FileFormatError, TruncatedFileError, VersionMismatchError

F64 = np.dtype("<f8")


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


class ByteWriter:
    """Accumulates fields; ``finish`` appends the checksum."""

    def __init__(self, magic: bytes, version: int):
        self._parts: list[bytes] = [magic]
        self.u32(version)

    def u32(self, value: int) -> None:
        self._parts.append(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._parts.append(struct.pack("<Q", value))

    def f64(self, value: float) -> None:
        self._parts.append(struct.pack("<d", value))

    def text(self, value: str) -> None:
        """Length-prefixed UTF-8."""
        encoded = value.encode("utf-8")
        self.u32(len(encoded))
        self._parts.append(encoded)

    def array(self, values: np.ndarray) -> None:
        """Row-major float64 little-endian."""
        self._parts.append(np.ascontiguousarray(values, dtype=F64).tobytes())

    def finish(self) -> bytes:
        body = b"".join(self._parts)
        return body + struct.pack("<I", crc32(body))


class ByteReader:
    """Sequential reader that checks magic and version up front and the checksum at the end."""

    def __init__(self, payload: bytes, magic: bytes, version: int):
        self._data = payload
        self._offset = 0
        if len(payload) < len(magic) or payload[: len(magic)] != magic:
            raise BadMagicError(f"expected magic {magic!r}, got {payload[: len(magic)]!r}")
        self._offset = len(magic)
        found = self.u32()
        if found != version:
            raise VersionMismatchError(f"unsupported format version {found} (expected {version})")

    def _take(self, size: int) -> bytes:
        end = self._offset + size
        if size < 0 or end > len(self._data):
            raise TruncatedFileError(f"payload ends at byte {len(self._data)}, needed {end}")
        chunk = self._data[self._offset : end]
        self._offset = end
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def text(self) -> str:
        raw = self._take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FileFormatError(f"invalid UTF-8 string field: {e}") from e

    def array(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        raw = self._take(count * F64.itemsize)
        return np.frombuffer(raw, dtype=F64).astype(np.float64).reshape(shape)

    def finish(self) -> None:
        """Verify the trailing checksum and that nothing follows it."""
        body_end = self._offset
        stored = self.u32()
        if stored != crc32(self._data[:body_end]):
            raise ChecksumError(f"checksum mismatch: stored {stored:08x}, computed {crc32(self._data[:body_end]):08x}")
        if self._offset != len(self._data):
            raise FileFormatError(f"{len(self._data) - self._offset} unexpected trailing bytes")
