"""Checkpoint container: one JSON header line, then raw little-endian floats.

Layout: ``header_json + b"\\n" + payload``. The header is
``{"format_version": 1, "config": {...}, "tensors": [{"name", "shape",
"offset"}]}`` with offsets in bytes from the start of the payload. Tensors
are float64, C-order, little-endian, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

FORMAT_VERSION = 1


def save_checkpoint(path, config: dict, tensors: list[tuple[str, np.ndarray]]) -> None:
    entries = []
    offset = 0
    blobs = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes(order="C")
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "tensors": entries,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.index(b"\n")
    header = json.loads(raw[:sep].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {header.get('format_version')}")
    payload = raw[sep + 1 :]
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return header["config"], tensors
