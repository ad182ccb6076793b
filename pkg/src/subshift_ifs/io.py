"""Deterministic artifact writers: CSV, JSON, PPM, SVG and the run manifest.

Floats are printed with 17 significant digits so the same inputs give the
same bytes.  Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .attractor import PointCloud
from .maps import Box

__all__ = [
    "fmt",
    "cloud_csv",
    "json_bytes",
    "ppm_bytes",
    "svg_text",
    "write_atomic",
    "manifest_dict",
]


def fmt(v: float) -> str:
    """17 significant digits, fixed exponent form."""
    return f"{float(v):.16e}"


def cloud_csv(points: np.ndarray, comments: Sequence[str] = ()) -> bytes:
    """One point per row; ``comments`` become leading ``#`` lines."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lines = [f"# {c}" for c in comments]
    lines += [",".join(fmt(v) for v in row) for row in pts]
    return ("\n".join(lines) + "\n").encode("ascii")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def json_bytes(obj) -> bytes:
    return (json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _pixels(points: np.ndarray, box: Box, size: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(box.lo, dtype=float)
    span = np.asarray(box.hi, dtype=float) - lo
    uv = (points[:, :2] - lo[:2]) / span[:2] * (size - 1)
    col = np.clip(np.rint(uv[:, 0]).astype(np.int64), 0, size - 1)
    row = np.clip(size - 1 - np.rint(uv[:, 1]).astype(np.int64), 0, size - 1)
    return row, col


def ppm_bytes(cloud: PointCloud, box: Box, size: int = 1024) -> bytes:
    """Binary P6 raster of a 2D cloud: black 3x3 splats on white."""
    if cloud.dim != 2:
        raise ValueError("PPM rendering needs a 2-dimensional cloud")
    img = np.full((size, size), 255, dtype=np.uint8)
    row, col = _pixels(cloud.points, box, size)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            img[np.clip(row + dr, 0, size - 1), np.clip(col + dc, 0, size - 1)] = 0
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    return f"P6\n{size} {size}\n255\n".encode("ascii") + rgb.tobytes()


def svg_text(cloud: PointCloud, box: Box) -> bytes:
    """Circles of radius eps in box coordinates (y axis flipped)."""
    if cloud.dim != 2:
        raise ValueError("SVG rendering needs a 2-dimensional cloud")
    lo, hi = box.lo, box.hi
    w, h = hi[0] - lo[0], hi[1] - lo[1]
    r = fmt(cloud.eps)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{fmt(lo[0])} {fmt(-hi[1])} {fmt(w)} {fmt(h)}">',
        '<g transform="scale(1,-1)" fill="black">',
    ]
    for x, y in cloud.points:
        out.append(f'<circle cx="{fmt(x)}" cy="{fmt(y)}" r="{r}"/>')
    out += ["</g>", "</svg>"]
    return ("\n".join(out) + "\n").encode("utf-8")


def _umask() -> int:
    old = os.umask(0)
    os.umask(old)
    return old


def write_atomic(path: str | Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def manifest_dict(
    config_hash: str,
    version: str,
    command: Sequence[str],
    wall_seconds: float,
    files: Iterable[tuple[str, bytes]],
    exit_code: int,
) -> dict:
    return {
        "config_hash": config_hash,
        "version": version,
        "command": list(command),
        "wall_seconds": wall_seconds,
        "exit_code": exit_code,
        "files": [
            {"name": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
            for name, data in files
        ],
    }
