"""SGKT model files.

Layout (all integers little-endian uint32, all floats little-endian float64)::

    b"SGKT" | version (1 byte) | num_joints | embed_dim | hidden_dim | max_frames
    | vocab_size | vocab_size x (byte length, UTF-8 token) | parameters in PARAM_NAMES order

Parameter shapes follow from the header, so they are not stored.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .network import PARAM_NAMES, ToyModel, param_shapes

MAGIC = b"SGKT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<5I")
_LENGTH = struct.Struct("<I")
_FLOAT = np.dtype("<f8")


def model_to_bytes(model: ToyModel) -> bytes:
    parts = [
        MAGIC,
        bytes([FORMAT_VERSION]),
        _HEADER.pack(
            model.num_joints,
            model.embed_dim,
            model.hidden_dim,
            model.max_frames,
            len(model.vocabulary),
        ),
    ]
    for token in model.vocabulary:
        encoded = token.encode("utf-8")
        parts += [_LENGTH.pack(len(encoded)), encoded]
    for name in PARAM_NAMES:
        parts.append(np.ascontiguousarray(model.params[name], dtype=_FLOAT).tobytes())
    return b"".join(parts)


def model_from_bytes(data: bytes, source: str = "<bytes>") -> ToyModel:
    if data[:4] != MAGIC:
        raise ModelFormatError(f"{source}: not a model file (bad magic {data[:4]!r})")
    if len(data) < 5 or data[4] != FORMAT_VERSION:
        version = data[4] if len(data) > 4 else None
        raise ModelFormatError(f"{source}: unsupported format version {version}")
    offset = 5
    try:
        num_joints, d, h, max_frames, vocab_size = _HEADER.unpack_from(data, offset)
        offset += _HEADER.size
        vocabulary = []
        for _ in range(vocab_size):
            (length,) = _LENGTH.unpack_from(data, offset)
            offset += _LENGTH.size
            vocabulary.append(data[offset : offset + length].decode("utf-8"))
            offset += length
    except (struct.error, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{source}: truncated or corrupt header") from exc

    params = {}
    for name, shape in param_shapes(vocab_size, num_joints, d, h).items():
        count = int(np.prod(shape))
        end = offset + count * _FLOAT.itemsize
        if end > len(data):
            raise ModelFormatError(f"{source}: truncated parameter {name!r}")
        params[name] = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset)
        params[name] = params[name].astype(float).reshape(shape)
        offset = end
    if offset != len(data):
        raise ModelFormatError(f"{source}: {len(data) - offset} trailing bytes")
    return ToyModel(tuple(vocabulary), num_joints, d, h, max_frames, params)


def save_model(model: ToyModel, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))


def load_model(path: Path | str) -> ToyModel:
    path = Path(path)
    return model_from_bytes(path.read_bytes(), str(path))
