"""File formats: binary PGM (P5), headed CSV and a small binary matrix container.

The container layout is the 8-byte magic ``ACLSMAT1``, then the row and
column counts as little-endian uint64, then the entries as little-endian
float64 in row-major order.
"""

import csv
import struct

import numpy as np

from .errors import InvalidArgumentError

MAGIC = b"ACLSMAT1"


def _tokens(buf, count, pos):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out = []
    n = len(buf)
    while len(out) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise InvalidArgumentError("truncated PGM header")
        out.append(buf[start:pos])
    return out, pos


def read_pgm(path):
    """Binary 8- or 16-bit PGM as floats in [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P5":
        raise InvalidArgumentError(f"{path}: not a binary PGM (P5) file")
    try:
        (w, h, maxval), pos = _tokens(buf, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: malformed PGM header") from exc
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise InvalidArgumentError(f"{path}: bad PGM dimensions or maxval")
    pos += 1  # single whitespace byte before the raster
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    size = w * h * np.dtype(dtype).itemsize
    raster = buf[pos:pos + size]
    if len(raster) != size:
        raise InvalidArgumentError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=dtype).reshape(h, w).astype(float) / maxval


def to_uint8(image):
    return np.clip(np.rint(np.asarray(image, dtype=float) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, image):
    """Write an image in [0, 1] as 8-bit binary PGM; values outside are clipped."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise InvalidArgumentError("PGM images must be 2-d")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(to_uint8(image).tobytes())


def read_csv(path):
    """Headed numeric CSV; returns ``(header, matrix)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise InvalidArgumentError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    if len(rows) < 2:
        raise InvalidArgumentError(f"{path}: CSV has a header but no data rows")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InvalidArgumentError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(cell) for cell in row])
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: non-numeric field") from exc
    return header, np.array(data, dtype=float)


def read_matrix_csv(path):
    """Headed CSV read as a plain matrix (header ignored)."""
    return read_csv(path)[1]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_matrix(path, A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError("container holds 2-d matrices only")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", *A.shape))
        fh.write(np.ascontiguousarray(A, dtype="<f8").tobytes())


def read_matrix(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != MAGIC or len(buf) < 24:
        raise InvalidArgumentError(f"{path}: not a matrix container")
    rows, cols = struct.unpack("<QQ", buf[8:24])
    body = buf[24:]
    if len(body) != 8 * rows * cols:
        raise InvalidArgumentError(f"{path}: container size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)


def load_matrix(path):
    """Container or headed CSV, chosen by the file's leading bytes."""
    with open(path, "rb") as fh:
        head = fh.read(8)
    return read_matrix(path) if head == MAGIC else read_matrix_csv(path)
