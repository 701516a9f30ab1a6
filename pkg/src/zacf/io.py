"""File formats: MCS1 signals, CFT1 templates, PGM images, CFMAN1 manifests.

``MCS1``
    ASCII header line ``MCS1 K N M`` followed by ``K*N*M`` little-endian
    float64 samples, channel-major and row-major.
``CFT1``
    ASCII header line ``CFT1 kind K N M N_F M_F b`` (``N x M`` is the
    support, ``N_F x M_F`` the stored grid, ``b`` the bias written with
    ``repr``) followed by the full-grid spatial template laid out as an MCS1
    payload.
``CFMAN1``
    Line-delimited manifest: the header line ``CFMAN1``, one JSON object with
    dataset-level fields, then one JSON record per line.

All writers are atomic (temporary file plus rename).
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .designs import FilterTemplate
from .errors import FormatError, ShapeMismatch
from .spectral import MultiChannelSignal, Spectrum, SupportRegion

__all__ = [
    "atomic_write",
    "write_mcs1",
    "read_mcs1",
    "encode_mcs1",
    "decode_mcs1",
    "write_template",
    "read_template",
    "encode_template",
    "decode_template",
    "read_pgm",
    "write_pgm",
    "load_image",
    "ManifestRecord",
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "write_csv",
    "format_value",
]

_LE_F64 = np.dtype("<f8")
_VALID_SPLITS = ("train", "test", "mine")


def atomic_write(path, data: bytes | str):
    """Write ``data`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_header(buf: bytes, magic: str):
    end = buf.find(b"\n")
    if end < 0:
        raise FormatError("missing header line", offset=len(buf))
    try:
        fields = buf[:end].decode("ascii").split()
    except UnicodeDecodeError:
        raise FormatError("header is not ASCII", offset=0) from None
    if not fields or fields[0] != magic:
        raise FormatError(f"expected {magic} header", offset=0)
    return fields[1:], end + 1


def _parse_ints(values, offset, names):
    try:
        out = [int(v) for v in values]
    except ValueError:
        raise FormatError(f"malformed {'/'.join(names)} in header", offset=offset) from None
    if len(out) != len(names) or min(out) < 1:
        raise FormatError(f"header needs positive {' '.join(names)}", offset=offset)
    return out


def _read_payload(buf, start, shape):
    count = int(np.prod(shape))
    need = start + 8 * count
    if len(buf) < need:
        raise FormatError(f"payload truncated: expected {8 * count} bytes", offset=len(buf))
    if len(buf) > need:
        raise FormatError("trailing bytes after payload", offset=need)
    data = np.frombuffer(buf, dtype=_LE_F64, count=count, offset=start).astype(np.float64)
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.isfinite(data))[0])
        raise FormatError("non-finite sample", offset=start + 8 * bad)
    return data.reshape(shape)


def encode_mcs1(signal: MultiChannelSignal) -> bytes:
    K, N, M = signal.data.shape
    return f"MCS1 {K} {N} {M}\n".encode("ascii") + signal.data.astype(_LE_F64).tobytes()


def decode_mcs1(buf: bytes) -> MultiChannelSignal:
    fields, start = _read_header(buf, "MCS1")
    K, N, M = _parse_ints(fields, 5, ("K", "N", "M"))
    return MultiChannelSignal(_read_payload(buf, start, (K, N, M)))


def write_mcs1(path, signal: MultiChannelSignal):
    atomic_write(path, encode_mcs1(signal))


def read_mcs1(path) -> MultiChannelSignal:
    return decode_mcs1(Path(path).read_bytes())


def encode_template(template: FilterTemplate) -> bytes:
    K, NF, MF = template.template.data.shape
    N, M = template.support.size
    header = f"CFT1 {template.kind} {K} {N} {M} {NF} {MF} {float(template.bias)!r}\n"
    return header.encode("ascii") + template.template.data.astype(_LE_F64).tobytes()


def decode_template(buf: bytes) -> FilterTemplate:
    fields, start = _read_header(buf, "CFT1")
    if len(fields) != 7:
        raise FormatError("CFT1 header needs kind K N M N_F M_F b", offset=0)
    kind = fields[0]
    K, N, M, NF, MF = _parse_ints(fields[1:6], 5, ("K", "N", "M", "N_F", "M_F"))
    try:
        bias = float(fields[6])
    except ValueError:
        raise FormatError("malformed bias", offset=0) from None
    if N > NF or M > MF:
        raise FormatError("support exceeds stored grid", offset=0)
    data = _read_payload(buf, start, (K, NF, MF))
    return FilterTemplate(
        kind=kind,
        template=MultiChannelSignal(data),
        spectrum=Spectrum(np.fft.fft2(data, axes=(1, 2))),
        support=SupportRegion(N, M),
        bias=bias,
        pad=NF - N,
        solver="file",
    )


def write_template(path, template: FilterTemplate):
    atomic_write(path, encode_template(template))


def read_template(path) -> FilterTemplate:
    return decode_template(Path(path).read_bytes())


def read_pgm(buf: bytes) -> MultiChannelSignal:
    """Binary (P5) PGM to a single-channel signal scaled to [0, 1]."""
    if not buf.startswith(b"P5"):
        raise FormatError("not a binary PGM (P5)", offset=0)
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header", offset=pos)
        try:
            tokens.append(int(buf[start:pos]))
        except ValueError:
            raise FormatError("malformed PGM header field", offset=start) from None
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after PGM header", offset=pos)
    pos += 1
    width, height, maxval = tokens
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError("invalid PGM dimensions or maxval", offset=pos)
    depth = 1 if maxval < 256 else 2
    need = width * height * depth
    if len(buf) - pos < need:
        raise FormatError(f"PGM pixel data truncated: expected {need} bytes", offset=len(buf))
    dtype = np.uint8 if depth == 1 else np.dtype(">u2")
    pixels = np.frombuffer(buf, dtype=dtype, count=width * height, offset=pos).astype(np.float64)
    return MultiChannelSignal((pixels / maxval).reshape(1, height, width))


def write_pgm(path, image: np.ndarray, maxval: int = 255):
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ShapeMismatch("PGM images are 2-D")
    pixels = np.clip(np.round(img * maxval), 0, maxval).astype(np.uint8 if maxval < 256 else ">u2")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii")
    atomic_write(path, header + pixels.tobytes())


def load_image(path) -> MultiChannelSignal:
    """Load an MCS1 signal or a P5 PGM image, chosen by the file's magic bytes."""
    buf = Path(path).read_bytes()
    if buf.startswith(b"MCS1"):
        return decode_mcs1(buf)
    if buf.startswith(b"P5"):
        return read_pgm(buf)
    raise FormatError("unrecognized file type (expected MCS1 or P5 PGM)", offset=0)


# ---------------------------------------------------------------------------
# manifests


@dataclass
class ManifestRecord:
    """One data file.  ``class_id`` -1 marks background (negative-only) data.

    ``split`` is ``train`` or ``test`` (``mine`` marks target-free frames for
    hard-negative mining).
    """

    path: str
    class_id: int
    split: str
    location: tuple | None = None
    eyes: tuple | None = None

    def to_json(self) -> str:
        obj = {"path": self.path, "class": self.class_id, "split": self.split}
        if self.location is not None:
            obj["location"] = list(self.location)
        if self.eyes is not None:
            obj["eyes"] = [list(e) for e in self.eyes]
        return json.dumps(obj, sort_keys=True)


@dataclass
class DatasetManifest:
    records: list = field(default_factory=list)
    grid: tuple = (1, 1)
    channels: int = 1
    info: dict = field(default_factory=dict)
    root: Path = Path(".")

    def select(self, split=None, class_id=None):
        return [
            r for r in self.records
            if (split is None or r.split == split) and (class_id is None or r.class_id == class_id)
        ]

    @property
    def classes(self) -> list[int]:
        return sorted({r.class_id for r in self.records if r.class_id >= 0})

    def load(self, record: ManifestRecord) -> MultiChannelSignal:
        return load_image(self.root / record.path)

    def validate(self):
        classes = self.classes
        if classes and classes != list(range(len(classes))):
            raise FormatError(f"class ids must be contiguous from 0, got {classes}")
        for r in self.records:
            if r.split not in _VALID_SPLITS:
                raise FormatError(f"unknown split {r.split!r} for {r.path}")


def write_manifest(path, manifest: DatasetManifest):
    head = dict(manifest.info)
    head.update({"grid": list(manifest.grid), "channels": manifest.channels})
    lines = ["CFMAN1", json.dumps(head, sort_keys=True)]
    lines += [r.to_json() for r in manifest.records]
    atomic_write(path, "\n".join(lines) + "\n")


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != "CFMAN1":
        raise FormatError("missing CFMAN1 header", offset=0)
    offset = len(lines[0]) + 1
    if len(lines) < 2:
        raise FormatError("missing dataset line", offset=offset)
    try:
        head = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad dataset line: {exc.msg}", offset=offset + exc.pos) from None
    offset += len(lines[1]) + 1
    records = []
    for line in lines[2:]:
        if line.strip():
            try:
                obj = json.loads(line)
                loc = obj.get("location")
                eyes = obj.get("eyes")
                records.append(ManifestRecord(
                    path=obj["path"],
                    class_id=int(obj["class"]),
                    split=obj["split"],
                    location=tuple(loc) if loc is not None else None,
                    eyes=tuple(tuple(e) for e in eyes) if eyes is not None else None,
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise FormatError("malformed manifest record", offset=offset) from None
        offset += len(line) + 1
    grid = tuple(head.pop("grid", (1, 1)))
    channels = int(head.pop("channels", 1))
    manifest = DatasetManifest(records, grid, channels, head, path.parent)
    manifest.validate()
    return manifest


# ---------------------------------------------------------------------------
# CSV


def format_value(v) -> str:
    """Deterministic text for CSV cells; floats use ``repr`` (shortest round trip)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        atomic_write(path, text)
    return text
