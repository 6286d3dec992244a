"""
Binary checkpoints of band-limited fields ("KLL1")

Layout (little-endian):
    magic       4 bytes  b"KLL1"
    N_x         u32
    N_v         u32      0 for an XField
    kind        u8       0 SpectralField, 1 XField
    payload     (re, im) f64 pairs, row-major over the dense centered index cube
"""
import logging
from pathlib import Path

import numpy as np

from config.settings import CHECKPOINT_KIND_SPECTRAL, CHECKPOINT_KIND_X, CHECKPOINT_MAGIC
from core.errors import CheckpointError
from core.spectral_core import Band, SpectralField, XField

logger = logging.getLogger(__name__)

_HEADER = np.dtype([("n_x", "<u4"), ("n_v", "<u4"), ("kind", "u1")])
_PAYLOAD = np.dtype("<c16")


def encode_field(field):
    """Bytes of a SpectralField or XField in the KLL1 layout"""
    header = np.zeros(1, dtype=_HEADER)
    if isinstance(field, SpectralField):
        header[0] = (field.band.x_radius, field.band.v_halfwidth, CHECKPOINT_KIND_SPECTRAL)
        coeffs = field.coeffs * field.band.x_mask[..., None, None, None]
    elif isinstance(field, XField):
        header[0] = (field.x_radius, 0, CHECKPOINT_KIND_X)
        coeffs = field.coeffs
    else:
        raise TypeError(f"cannot checkpoint {type(field).__name__}")
    return CHECKPOINT_MAGIC + header.tobytes() + np.ascontiguousarray(coeffs, dtype=_PAYLOAD).tobytes()


def decode_field(data):
    """
    Field from KLL1 bytes

    Raises:
        CheckpointError: bad magic, unknown kind or payload length mismatch
    """
    magic_len = len(CHECKPOINT_MAGIC)
    if data[:magic_len] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic {data[:magic_len]!r}")
    offset = magic_len + _HEADER.itemsize
    if len(data) < offset:
        raise CheckpointError("truncated header")
    header = np.frombuffer(data[magic_len:offset], dtype=_HEADER)[0]
    n_x, n_v, kind = int(header["n_x"]), int(header["n_v"]), int(header["kind"])

    if kind == CHECKPOINT_KIND_SPECTRAL:
        band = Band(n_x, n_v)
        shape = band.shape
    elif kind == CHECKPOINT_KIND_X:
        shape = Band(n_x, 1).x_shape
    else:
        raise CheckpointError(f"unknown field kind {kind}")

    expected = int(np.prod(shape)) * _PAYLOAD.itemsize
    if len(data) - offset != expected:
        raise CheckpointError(f"payload has {len(data) - offset} bytes, expected {expected}")
    coeffs = np.frombuffer(data[offset:], dtype=_PAYLOAD).reshape(shape).astype(complex)
    if kind == CHECKPOINT_KIND_SPECTRAL:
        return SpectralField(band, coeffs)
    return XField(n_x, coeffs)


def save_checkpoint(field, path):
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(encode_field(field))
    logger.debug(f"Checkpoint written: {path}")
    return path


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_field(fh.read())
