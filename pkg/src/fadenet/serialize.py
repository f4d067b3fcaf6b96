"""Deterministic on-disk container shared by dataset and checkpoint files.

Layout (all header/footer lines are UTF-8, payload arrays are raw bytes):

    #fadenet-bin kind=<kind> version=<int>
    <one-line JSON: {"meta": ..., "arrays": [{"name", "dtype", "shape"}, ...]}>
    <raw little-endian C-order bytes of each array, in header order>
    #sha256 <hex digest of every byte above>

The format is byte-deterministic for identical inputs (sorted JSON keys,
fixed float repr), so identical seeds produce identical files. Truncation,
checksum corruption, and unknown versions raise distinct errors.
"""

import hashlib
import json

import numpy as np

from .errors import ChecksumError, DataFormatError, TruncationError, VersionError

FORMAT_VERSION = 1
_MAGIC_PREFIX = "#fadenet-bin"
_FOOTER_PREFIX = b"#sha256 "


def canonical_json(obj) -> str:
    """JSON with sorted keys and no whitespace; floats keep full repr."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_fingerprint(config: dict) -> str:
    """Stable fingerprint of a configuration mapping."""
    return sha256_hex(canonical_json(config).encode("utf-8"))


def write_container(path, kind: str, meta: dict, arrays):
    """Write a container file. arrays is an ordered list of (name, ndarray)."""
    header_arrays = []
    blobs = []
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        header_arrays.append({"name": name,
                              "dtype": arr.dtype.str,
                              "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    head = (f"{_MAGIC_PREFIX} kind={kind} version={FORMAT_VERSION}\n").encode()
    head += canonical_json({"meta": meta, "arrays": header_arrays}).encode() + b"\n"
    payload = head + b"".join(blobs)
    digest = sha256_hex(payload)
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(_FOOTER_PREFIX + digest.encode() + b"\n")


def read_container(path, kind: str):
    """Read and verify a container file; returns (meta, {name: array})."""
    with open(path, "rb") as fh:
        data = fh.read()

    nl1 = data.find(b"\n")
    if nl1 < 0:
        raise TruncationError(f"{path}: missing magic line")
    magic = data[:nl1].decode("utf-8", errors="replace")
    if not magic.startswith(_MAGIC_PREFIX):
        raise DataFormatError(f"{path}: not a fadenet container")
    fields = dict(part.split("=", 1) for part in magic.split()[1:])
    if fields.get("kind") != kind:
        raise DataFormatError(
            f"{path}: expected kind={kind}, found kind={fields.get('kind')}")
    version = int(fields.get("version", "-1"))
    if not (1 <= version <= FORMAT_VERSION):
        raise VersionError(
            f"{path}: format version {version} not supported "
            f"(this build reads <= {FORMAT_VERSION})")

    nl2 = data.find(b"\n", nl1 + 1)
    if nl2 < 0:
        raise TruncationError(f"{path}: missing header line")
    try:
        header = json.loads(data[nl1 + 1:nl2].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: unreadable header: {exc}") from exc

    offset = nl2 + 1
    arrays = {}
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) \
            if shape else dtype.itemsize
        end = offset + nbytes
        if end > len(data):
            raise TruncationError(
                f"{path}: array {spec['name']!r} truncated "
                f"(need {nbytes} bytes at offset {offset})")
        arrays[spec["name"]] = np.frombuffer(
            data[offset:end], dtype=dtype).reshape(shape).copy()
        offset = end

    footer = data[offset:]
    if not footer.startswith(_FOOTER_PREFIX) or not footer.endswith(b"\n"):
        raise TruncationError(f"{path}: missing checksum footer")
    stored = footer[len(_FOOTER_PREFIX):-1].decode("ascii", errors="replace")
    actual = sha256_hex(data[:offset])
    if stored != actual:
        raise ChecksumError(f"{path}: checksum mismatch "
                            f"(stored {stored[:12]}.., actual {actual[:12]}..)")
    return header["meta"], arrays
