"""Model checkpoints: versioned header plus a raw little-endian parameter dump.

Layout, in file order:
  bytes 0..7    magic "JLCKPT01"
  u32           checkpoint format version
  u32           JSON header length in bytes
  header        UTF-8 JSON: architecture, input shape, dtype, parameter and
                BN-state names with shapes, optimizer presence and step
                count, plus a free-form "extra" dict
  arrays        raw little-endian arrays, parameters first (fixed order),
                then BN running stats, then optionally the Adam first and
                second moments in parameter order

Every array is written in the model's dtype, so a save/load round trip is
bit exact.
"""

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import BN_STATE_KEYS, PARAM_KEYS, CnnArchitecture, DetectorModel
from .optim import AdamState

_MAGIC = b"JLCKPT01"
_VERSION = 1
_PREFIX = struct.Struct("<8sII")


def save_checkpoint(path, model: DetectorModel, opt_state: AdamState | None = None,
                    extra: dict | None = None) -> None:
    dtype = model.dtype.newbyteorder("<")
    header = {
        "arch": dataclasses.asdict(model.arch),
        "input_shape": list(model.input_shape),
        "dtype": dtype.str,
        "params": [[k, list(model.params[k].shape)] for k in PARAM_KEYS],
        "bn_state": [[k, list(model.bn_state[k].shape)] for k in BN_STATE_KEYS],
        "optimizer": opt_state is not None,
        "opt_step": opt_state.t if opt_state is not None else 0,
        "extra": extra or {},
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(_MAGIC, _VERSION, len(blob)))
        fh.write(blob)
        for k in PARAM_KEYS:
            fh.write(np.ascontiguousarray(model.params[k], dtype=dtype).tobytes())
        for k in BN_STATE_KEYS:
            fh.write(np.ascontiguousarray(model.bn_state[k], dtype=dtype).tobytes())
        if opt_state is not None:
            for bank in (opt_state.m, opt_state.v):
                for k in PARAM_KEYS:
                    fh.write(np.ascontiguousarray(bank[k], dtype=dtype).tobytes())


def load_checkpoint(path):
    """Rebuild (model, optimizer state or None, extra dict) from a checkpoint."""
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise FormatError(f"{path} is too short to be a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != _MAGIC:
        raise FormatError(f"{path} is not a checkpoint file")
    if version != _VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen])
    dtype = np.dtype(header["dtype"])

    model = DetectorModel(
        tuple(header["input_shape"]),
        arch=CnnArchitecture(**header["arch"]),
        dtype=dtype,
    )
    offset = _PREFIX.size + hlen

    def read_into(target: dict, name: str, shape) -> None:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * dtype.itemsize
        if end > len(raw):
            raise FormatError(f"{path} is truncated")
        arr = np.frombuffer(raw[offset:end], dtype=dtype).reshape(shape).copy()
        if target[name].shape != arr.shape:
            raise FormatError(f"array {name} has shape {arr.shape}, expected {target[name].shape}")
        target[name] = arr
        offset = end

    for name, shape in header["params"]:
        read_into(model.params, name, tuple(shape))
    for name, shape in header["bn_state"]:
        read_into(model.bn_state, name, tuple(shape))

    opt_state = None
    if header["optimizer"]:
        opt_state = AdamState(model)
        opt_state.t = int(header["opt_step"])
        for bank in (opt_state.m, opt_state.v):
            for name, shape in header["params"]:
                read_into(bank, name, tuple(shape))
    if offset != len(raw):
        raise FormatError(f"{path} has {len(raw) - offset} trailing bytes")
    return model, opt_state, header["extra"]
