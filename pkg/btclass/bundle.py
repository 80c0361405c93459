"""
The ``.txm`` model container.

Layout, all integers big-endian::

    magic       4 bytes   b"BTCM"
    version     uint16
    sections    uint32
    then per section:
        name length   uint16
        name          UTF-8
        payload size  uint64
        payload
    checksum    32 bytes  SHA-256 of everything before it

Payloads are JSON documents or arrays in NumPy ``.npy`` format. The version is checked before the checksum so a
file from a newer writer is reported as such, and nothing is decoded unless the checksum matches.
"""
import hashlib
import io
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["MAGIC", "FORMAT_VERSION", "BundleError", "CorruptBundleError", "BundleVersionError", "write_container",
           "read_container", "encode_json", "decode_json", "encode_array", "decode_array"]

MAGIC = b"BTCM"
FORMAT_VERSION = 1

_HEADER = struct.Struct(">4sHI")
_NAME_LEN = struct.Struct(">H")
_PAYLOAD_LEN = struct.Struct(">Q")
_DIGEST_SIZE = hashlib.sha256().digest_size


class BundleError(ValueError):
    pass


class CorruptBundleError(BundleError):
    """
    The file is truncated, fails its checksum or is not a model bundle.
    """
    pass


class BundleVersionError(BundleError):
    def __init__(self, found: int, expected: int = FORMAT_VERSION):
        super().__init__("Unsupported bundle format version {} (this version reads {})".format(found, expected))
        self.found = found


def write_container(path: Union[str, Path], sections: Iterable[Tuple[str, bytes]],
                    version: int = FORMAT_VERSION) -> None:
    sections = list(sections)
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, version, len(sections)))
    for name, payload in sections:
        encoded = name.encode("utf-8")
        buf.write(_NAME_LEN.pack(len(encoded)))
        buf.write(encoded)
        buf.write(_PAYLOAD_LEN.pack(len(payload)))
        buf.write(payload)
    body = buf.getvalue()
    with open(path, "wb") as f:
        f.write(body)
        f.write(hashlib.sha256(body).digest())
    logger.debug("Wrote %d sections (%d bytes) to %s", len(sections), len(body) + _DIGEST_SIZE, path)


def read_container(path: Union[str, Path]) -> Dict[str, bytes]:
    """
    :return: The section payloads by name, in file order.
    :raises CorruptBundleError: if the file is not a complete, intact bundle.
    :raises BundleVersionError: if the file was written in another format version.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size + _DIGEST_SIZE:
        raise CorruptBundleError("{}: file is too short to be a model bundle".format(path))
    magic, version, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptBundleError("{}: not a model bundle".format(path))
    if version != FORMAT_VERSION:
        raise BundleVersionError(version)
    body, digest = raw[:-_DIGEST_SIZE], raw[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptBundleError("{}: checksum mismatch (truncated or modified file)".format(path))
    sections = {}
    offset = _HEADER.size
    try:
        for _ in range(count):
            (name_len,) = _NAME_LEN.unpack_from(body, offset)
            offset += _NAME_LEN.size
            name = body[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (size,) = _PAYLOAD_LEN.unpack_from(body, offset)
            offset += _PAYLOAD_LEN.size
            if offset + size > len(body):
                raise CorruptBundleError("{}: section {} overruns the file".format(path, name))
            sections[name] = body[offset:offset + size]
            offset += size
    except (struct.error, UnicodeDecodeError) as e:
        raise CorruptBundleError("{}: malformed section table: {}".format(path, e))
    if offset != len(body):
        raise CorruptBundleError("{}: trailing bytes after the last section".format(path))
    return sections


def encode_json(value: Any) -> bytes:
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_json(payload: bytes) -> Any:
    return json.loads(payload.decode("utf-8"))


def encode_array(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(array), allow_pickle=False)
    return buf.getvalue()


def decode_array(payload: bytes) -> np.ndarray:
    return np.load(io.BytesIO(payload), allow_pickle=False)
