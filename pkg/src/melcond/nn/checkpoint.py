"""Single-file checkpoint container.

Layout: an 8-byte magic, a little-endian uint64 manifest length, the
manifest JSON (UTF-8, sorted keys), then the raw little-endian float32
tensor blobs concatenated in manifest order. The manifest records every
tensor's path, shape and byte offset plus free-form metadata (config
fingerprint, epoch, metrics), so files are self-describing and byte
deterministic for identical contents.
"""

import json

import numpy as np

MAGIC = b"MELCKPT1"


def save_checkpoint(path, arrays, meta):
    """Write ``arrays`` (ordered mapping path -> ndarray) with metadata."""
    tensors = []
    offset = 0
    blobs = []
    for name, arr in arrays.items():
        blob = np.ascontiguousarray(arr, dtype=np.float32).astype("<f4", copy=False).tobytes()
        tensors.append({
            "path": name,
            "shape": list(arr.shape),
            "dtype": "float32",
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    manifest = json.dumps({"format": 1, "meta": meta, "tensors": tensors},
                          sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(manifest).to_bytes(8, "little"))
        fh.write(manifest)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Read a checkpoint back as (arrays dict, meta dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        size = int.from_bytes(fh.read(8), "little")
        manifest = json.loads(fh.read(size).decode("utf-8"))
        data = fh.read()
    arrays = {}
    for entry in manifest["tensors"]:
        start = entry["offset"]
        blob = data[start:start + entry["nbytes"]]
        arrays[entry["path"]] = np.frombuffer(blob, dtype="<f4").reshape(entry["shape"]).copy()
    return arrays, manifest["meta"]
