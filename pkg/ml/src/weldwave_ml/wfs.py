"""Reader/writer for the WFS v1 sample container.

Implemented against the published format: little-endian magic "WFS1",
header {format_version u32, nx u32, ny u32, dx f64, dy f64, freq_hz f64,
channel_count u32, provenance u8, params_json_len u32}, params JSON,
float32 channels (row-major), float32 stiffness label, u8 crack label,
trailing CRC32.  This package consumes the simulator only through these
files and their manifests.
"""

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"WFS1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IIIdddIBI")
PROVENANCE = {0: "EM", 1: "NL", 2: "Scan", 3: "Generated"}
PROVENANCE_CODE = {v: k for k, v in PROVENANCE.items()}


class BadSampleFile(ValueError):
    pass


@dataclass
class Sample:
    channels: np.ndarray        # (C, ny, nx) float32
    label_stiffness: np.ndarray
    label_crack: np.ndarray
    params: dict
    dx: float
    dy: float
    freq_hz: float
    provenance: str


def read_sample(path) -> Sample:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise BadSampleFile(f"{path}: bad magic")
    (crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != crc:
        raise BadSampleFile(f"{path}: checksum mismatch")
    version, nx, ny, dx, dy, freq, c, prov, jlen = _HEADER.unpack(blob[4:4 + _HEADER.size])
    if version != FORMAT_VERSION:
        raise BadSampleFile(f"{path}: unsupported version {version}")
    off = 4 + _HEADER.size
    params = json.loads(blob[off:off + jlen])
    off += jlen
    chan = np.frombuffer(blob[off:off + 4 * c * ny * nx], dtype="<f4").reshape(c, ny, nx)
    off += 4 * c * ny * nx
    stiff = np.frombuffer(blob[off:off + 4 * ny * nx], dtype="<f4").reshape(ny, nx)
    off += 4 * ny * nx
    crack = np.frombuffer(blob[off:off + ny * nx], dtype=np.uint8).reshape(ny, nx)
    return Sample(channels=chan.copy(), label_stiffness=stiff.copy(),
                  label_crack=crack.copy(), params=params, dx=dx, dy=dy,
                  freq_hz=freq, provenance=PROVENANCE.get(prov, "Generated"))


def write_sample(path, sample: Sample):
    c, ny, nx = sample.channels.shape
    params_bytes = json.dumps(sample.params, sort_keys=True).encode()
    header = _HEADER.pack(FORMAT_VERSION, nx, ny, sample.dx, sample.dy,
                          sample.freq_hz, c, PROVENANCE_CODE[sample.provenance],
                          len(params_bytes))
    body = b"".join([
        MAGIC, header, params_bytes,
        np.ascontiguousarray(sample.channels, dtype="<f4").tobytes(),
        np.ascontiguousarray(sample.label_stiffness, dtype="<f4").tobytes(),
        np.ascontiguousarray(sample.label_crack, dtype=np.uint8).tobytes(),
    ])
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def manifest_files(dataset_dir, split=None):
    """Sample paths listed by a dataset manifest, optionally one split."""
    d = Path(dataset_dir)
    manifest = read_manifest(d / "manifest.json")
    out = []
    for entry in manifest["samples"]:
        if split is None or entry["split"] == split:
            out.append(d / entry["file"])
    return out
