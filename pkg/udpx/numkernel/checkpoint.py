"""
Binary checkpoint format.

Layout::

    UDPX-CKPT-1\\n
    <8-byte little-endian manifest length>
    <manifest: UTF-8 JSON {"meta": {...}, "arrays": [{name, shape, dtype, offset, nbytes}]}>
    <raw little-endian array bytes, offsets relative to the end of the manifest>
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from udpx.core.exceptions import ModelError
from udpx.core.logger import get_logger

CHECKPOINT_HEADER = b"UDPX-CKPT-1\n"

logger = get_logger("checkpoint")


def save_checkpoint(
    path: Union[str, Path],
    arrays: Mapping[str, np.ndarray],
    meta: Mapping[str, Any] = None,
) -> Path:
    """Write named arrays plus JSON-serializable metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        array = np.asarray(arrays[name])
        little = array.astype(array.dtype.newbyteorder("<"), copy=False)
        blob = np.ascontiguousarray(little).tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(array.shape),
                "dtype": little.dtype.str,
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
        offset += len(blob)

    manifest = json.dumps({"meta": dict(meta or {}), "arrays": entries}, sort_keys=True).encode(
        "utf-8"
    )
    with open(path, "wb") as f:
        f.write(CHECKPOINT_HEADER)
        f.write(struct.pack("<Q", len(manifest)))
        f.write(manifest)
        for blob in blobs:
            f.write(blob)

    logger.debug(f"Saved {len(entries)} arrays ({offset} bytes) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        FileNotFoundError: path does not exist
        ModelError: wrong header, truncated file or corrupt manifest
    """
    path = Path(path)
    raw = path.read_bytes()

    if not raw.startswith(CHECKPOINT_HEADER):
        raise ModelError(f"{path}: not a udpx checkpoint (expected header {CHECKPOINT_HEADER!r})")
    cursor = len(CHECKPOINT_HEADER)
    if len(raw) < cursor + 8:
        raise ModelError(f"{path}: truncated checkpoint")
    (manifest_length,) = struct.unpack("<Q", raw[cursor : cursor + 8])
    cursor += 8

    try:
        manifest = json.loads(raw[cursor : cursor + manifest_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelError(f"{path}: corrupt checkpoint manifest: {e}") from e
    data_start = cursor + manifest_length

    arrays: Dict[str, np.ndarray] = {}
    for entry in manifest.get("arrays", []):
        start = data_start + entry["offset"]
        end = start + entry["nbytes"]
        if end > len(raw):
            raise ModelError(f"{path}: truncated data for array '{entry['name']}'")
        array = np.frombuffer(raw[start:end], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = array.reshape(entry["shape"]).astype(
            array.dtype.newbyteorder("="), copy=True
        )

    return arrays, manifest.get("meta", {})
