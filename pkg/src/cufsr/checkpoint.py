"""CUF1 checkpoint format.

Layout: 4-byte magic "CUF1", little-endian uint32 header length, UTF-8 JSON
header, then concatenated raw little-endian float32 row-major tensor blobs
at the byte offsets stated in the header's tensor table (offsets relative
to the payload start).  Round trips are bit-exact.
"""

import json
import struct

import numpy as np

MAGIC = b"CUF1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model_config, tensors, optimizer_state=None, extra=None):
    """Write named float32 tensors plus config to a CUF1 file.

    ``tensors`` maps name -> numpy array; ``optimizer_state`` (optional)
    maps name -> numpy array and is stored under an ``opt.`` name prefix.
    """
    table = []
    blobs = []
    offset = 0
    items = list(tensors.items())
    if optimizer_state:
        items += [("opt." + k, v) for k, v in optimizer_state.items()]
    for name, arr in items:
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        table.append({"name": name, "shape": list(arr.shape), "byte_offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "model_config": model_config,
        "tensor_table": table,
        "optimizer_state_present": bool(optimizer_state),
    }
    if extra:
        header["extra"] = extra
    hdr = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hdr)))
        f.write(hdr)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path):
    """Read a CUF1 file -> (model_config, tensors, optimizer_state, extra)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a CUF1 checkpoint")
    (hlen,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version")
    payload = raw[8 + hlen:]
    table = header["tensor_table"]
    prev_end = 0
    tensors = {}
    opt = {}
    for i, entry in enumerate(table):
        shape = tuple(entry["shape"])
        off = entry["byte_offset"]
        if off != prev_end:
            raise CheckpointError(f"{path}: non-contiguous tensor table at {entry['name']}")
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        end = off + 4 * n
        if end > len(payload):
            raise CheckpointError(f"{path}: payload truncated at {entry['name']}")
        arr = np.frombuffer(payload[off:end], dtype="<f4").reshape(shape).copy()
        if entry["name"].startswith("opt."):
            opt[entry["name"][4:]] = arr
        else:
            tensors[entry["name"]] = arr
        prev_end = end
    if prev_end != len(payload):
        raise CheckpointError(f"{path}: payload length inconsistent with table")
    if header["optimizer_state_present"] != bool(opt):
        raise CheckpointError(f"{path}: optimizer_state_present flag inconsistent")
    return header["model_config"], tensors, (opt or None), header.get("extra")


def save_model(path, model, optimizer_state=None, extra=None):
    tensors = {p.name: p.value.data for p in model.params}
    save_checkpoint(path, model.config_dict(), tensors, optimizer_state, extra)


def load_model(path):
    """Rebuild an SRModel from a checkpoint (ignores optimizer state)."""
    from . import tensor as T
    from .model import model_from_config

    cfg, tensors, _opt, _extra = load_checkpoint(path)
    params = T.ParameterSet()
    for name, arr in tensors.items():
        params.add(name, T.Tensor(arr))
    return model_from_config(cfg, params=params)
