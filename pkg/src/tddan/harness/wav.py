"""Mono WAV I/O for 32-bit float and 16-bit PCM files.

Only the RIFF/WAVE ``fmt `` and ``data`` chunks are interpreted; other chunks
are skipped.  Every structural problem raises :class:`WavParseError` carrying
the byte offset where parsing failed.
"""

from __future__ import annotations

import struct

import numpy as np

from ..autodiff.checkpoint import atomic_write_bytes
from ..errors import InvalidArgument, WavParseError

FORMAT_PCM = 1
FORMAT_FLOAT = 3
FORMAT_EXTENSIBLE = 0xFFFE


def encode_wav(samples, sample_rate, subtype="float32"):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgument("only mono waveforms are supported")
    if subtype == "float32":
        fmt, bits = FORMAT_FLOAT, 32
        payload = x.astype("<f4").tobytes()
    elif subtype == "pcm16":
        fmt, bits = FORMAT_PCM, 16
        payload = np.round(np.clip(x, -1.0, 1.0 - 2.0 ** -15) * 32768.0).astype("<i2").tobytes()
    else:
        raise InvalidArgument(f"unknown WAV subtype {subtype!r}")
    block = bits // 8
    fmt_chunk = struct.pack("<4sIHHIIHH", b"fmt ", 16, fmt, 1, int(sample_rate),
                            int(sample_rate) * block, block, bits)
    data_chunk = struct.pack("<4sI", b"data", len(payload)) + payload
    body = b"WAVE" + fmt_chunk + data_chunk
    return struct.pack("<4sI", b"RIFF", len(body)) + body


def write_wav(path, samples, sample_rate, subtype="float32"):
    atomic_write_bytes(path, encode_wav(samples, sample_rate, subtype))


def _unpack(fmt, blob, offset, what):
    size = struct.calcsize(fmt)
    if offset + size > len(blob):
        raise WavParseError(f"truncated {what}", offset)
    return struct.unpack_from(fmt, blob, offset)


def decode_wav(blob):
    """Return ``(samples float64, sample_rate)`` from WAV bytes."""
    riff, _, wave = _unpack("<4sI4s", blob, 0, "RIFF header")
    if riff != b"RIFF":
        raise WavParseError("missing RIFF tag", 0)
    if wave != b"WAVE":
        raise WavParseError("missing WAVE tag", 8)
    offset = 12
    fmt = None
    while True:
        if offset >= len(blob):
            raise WavParseError("no data chunk", offset)
        tag, size = _unpack("<4sI", blob, offset, "chunk header")
        body = offset + 8
        if tag == b"fmt ":
            if size < 16:
                raise WavParseError("fmt chunk too small", offset)
            fmt = _unpack("<HHIIHH", blob, body, "fmt chunk")
            if fmt[0] == FORMAT_EXTENSIBLE:
                if size < 40:
                    raise WavParseError("extensible fmt chunk too small", offset)
                (sub,) = _unpack("<H", blob, body + 24, "extensible subformat")
                fmt = (sub,) + fmt[1:]
        elif tag == b"data":
            if fmt is None:
                raise WavParseError("data chunk before fmt chunk", offset)
            if body + size > len(blob):
                raise WavParseError(f"data chunk declares {size} bytes, "
                                    f"only {len(blob) - body} present", body)
            return _decode_samples(fmt, blob[body:body + size], offset), int(fmt[2])
        offset = body + size + (size & 1)


def _decode_samples(fmt, raw, offset):
    code, channels, _, _, block, bits = fmt
    if channels != 1:
        raise WavParseError(f"expected mono, found {channels} channels", offset)
    if code == FORMAT_FLOAT and bits == 32:
        dtype, scale = "<f4", 1.0
    elif code == FORMAT_PCM and bits == 16:
        dtype, scale = "<i2", 1.0 / 32768.0
    else:
        raise WavParseError(f"unsupported format code {code} with {bits} bits", offset)
    if len(raw) % block:
        raise WavParseError("data size is not a whole number of frames", offset)
    return np.frombuffer(raw, dtype=dtype).astype(np.float64) * scale


def read_wav(path):
    with open(path, "rb") as fh:
        return decode_wav(fh.read())
