"""The WFS sample container (version 1) and dataset manifests.

Layout, all little-endian:
    magic "WFS1"
    header: format_version u32, nx u32, ny u32, dx f64, dy f64, freq_hz f64,
            channel_count u32, provenance u8, params_json_len u32
    params JSON (UTF-8)
    channels      float32, row-major, channel_count * ny * nx
    label_stiffness float32, ny * nx
    label_crack   u8, ny * nx
    crc32 of every preceding byte, u32
"""

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile
from .wavefield import PROVENANCE_CODE, PROVENANCE_FROM_CODE, Provenance

MAGIC = b"WFS1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IIIdddIBI")


@dataclass
class SampleRecord:
    channels: np.ndarray          # (C, ny, nx) float32
    label_stiffness: np.ndarray   # (ny, nx) float32
    label_crack: np.ndarray       # (ny, nx) uint8
    params: dict
    dx: float
    dy: float
    freq_hz: float
    provenance: Provenance
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.channels = np.ascontiguousarray(self.channels, dtype=np.float32)
        self.label_stiffness = np.ascontiguousarray(self.label_stiffness, dtype=np.float32)
        self.label_crack = np.ascontiguousarray(self.label_crack, dtype=np.uint8)
        if self.channels.ndim != 3:
            raise ValueError("channels must be (C, ny, nx)")
        if self.label_stiffness.shape != self.channels.shape[1:]:
            raise ValueError("stiffness label must match the channel grid")
        if self.label_crack.shape != self.channels.shape[1:]:
            raise ValueError("crack label must match the channel grid")
        if not set(np.unique(self.label_crack)) <= {0, 1}:
            raise ValueError("crack label must be binary")

    @property
    def shape(self):
        return self.channels.shape


def encode_sample(record: SampleRecord) -> bytes:
    c, ny, nx = record.shape
    params_bytes = json.dumps(record.params, sort_keys=True).encode("utf-8")
    header = _HEADER.pack(record.format_version, nx, ny, record.dx, record.dy,
                          record.freq_hz, c, PROVENANCE_CODE[record.provenance],
                          len(params_bytes))
    body = b"".join([
        MAGIC, header, params_bytes,
        record.channels.astype("<f4").tobytes(),
        record.label_stiffness.astype("<f4").tobytes(),
        record.label_crack.tobytes(),
    ])
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return body + struct.pack("<I", crc)


def write_sample(path, record: SampleRecord) -> str:
    blob = encode_sample(record)
    with open(path, "wb") as fh:
        fh.write(blob)
    return hashlib.sha256(blob).hexdigest()


def decode_sample(blob: bytes) -> SampleRecord:
    if len(blob) < len(MAGIC) + _HEADER.size + 4:
        raise CorruptFile("file shorter than the fixed header")
    if blob[:4] != MAGIC:
        raise CorruptFile(f"bad magic {blob[:4]!r}")
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptFile("CRC32 mismatch")
    version, nx, ny, dx, dy, freq_hz, c, prov, jlen = _HEADER.unpack(
        blob[4:4 + _HEADER.size])
    if version != FORMAT_VERSION:
        raise CorruptFile(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    off = 4 + _HEADER.size
    params = json.loads(blob[off:off + jlen].decode("utf-8"))
    off += jlen
    n_chan = c * ny * nx * 4
    n_stiff = ny * nx * 4
    n_crack = ny * nx
    expected = off + n_chan + n_stiff + n_crack + 4
    if len(blob) != expected:
        raise CorruptFile(f"payload length {len(blob)} != expected {expected}")
    channels = np.frombuffer(blob[off:off + n_chan], dtype="<f4").reshape(c, ny, nx)
    off += n_chan
    stiff = np.frombuffer(blob[off:off + n_stiff], dtype="<f4").reshape(ny, nx)
    off += n_stiff
    crack = np.frombuffer(blob[off:off + n_crack], dtype=np.uint8).reshape(ny, nx)
    return SampleRecord(channels=channels.copy(), label_stiffness=stiff.copy(),
                        label_crack=crack.copy(), params=params, dx=dx, dy=dy,
                        freq_hz=freq_hz, provenance=PROVENANCE_FROM_CODE[prov],
                        format_version=version)


def read_sample(path) -> SampleRecord:
    with open(path, "rb") as fh:
        return decode_sample(fh.read())


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class DatasetManifest:
    dataset_seed: int
    bc_class: str
    model: str
    grid: int
    freq_hz: float
    generator_version: str
    samples: list = field(default_factory=list)   # {index, file, sha256, split}
    failures: list = field(default_factory=list)  # {index, error}

    @property
    def counts(self):
        n = len(self.samples)
        return {"ok": n, "failed": len(self.failures),
                "train": sum(1 for s in self.samples if s["split"] == "train"),
                "test": sum(1 for s in self.samples if s["split"] == "test")}

    def to_json(self) -> str:
        return json.dumps({
            "dataset_seed": self.dataset_seed,
            "bc_class": self.bc_class,
            "model": self.model,
            "grid": self.grid,
            "freq_hz": self.freq_hz,
            "generator_version": self.generator_version,
            "counts": self.counts,
            "samples": self.samples,
            "failures": self.failures,
        }, sort_keys=True, indent=1)

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        d = json.loads(text)
        return DatasetManifest(dataset_seed=d["dataset_seed"], bc_class=d["bc_class"],
                               model=d["model"], grid=d["grid"], freq_hz=d["freq_hz"],
                               generator_version=d["generator_version"],
                               samples=d["samples"], failures=d["failures"])


def verify_dataset(manifest: DatasetManifest, directory) -> bool:
    """Recompute sample hashes against the manifest."""
    from pathlib import Path
    base = Path(directory)
    for s in manifest.samples:
        if file_sha256(base / s["file"]) != s["sha256"]:
            raise CorruptFile(f"hash mismatch for {s['file']}")
    return True
