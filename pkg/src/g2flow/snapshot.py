"""Snapshot files: a ``key = value`` text header, a ``==binary==`` marker line,
then little-endian float64 values in site-major, component-minor order."""
from __future__ import annotations

from pathlib import Path

import numpy as np

MARKER = b"==binary=="


def write_snapshot(path, data: np.ndarray, header: dict) -> Path:
    """Write ``data`` (sites..., components...) with the given header fields.

    ``components`` is filled in from the trailing shape if absent.
    """
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f8")
    header = dict(header)
    if "components" not in header:
        site_ndim = 3 if str(header.get("kind", "")).endswith("3") else 1
        comps = data.shape[site_ndim:]
        header["components"] = "x".join(str(c) for c in comps) if comps else "1"
    lines = [f"{k} = {v}" for k, v in header.items()]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode())
        fh.write(MARKER + b"\n")
        fh.write(data.tobytes(order="C"))
    return path


def read_snapshot(path) -> tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n" + MARKER + b"\n")
    if cut < 0:
        raise ValueError(f"{path}: missing {MARKER.decode()} marker")
    header = {}
    for lineno, line in enumerate(raw[:cut].decode().splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        header[k.strip()] = v.strip()
    payload = raw[cut + len(MARKER) + 2:]
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    shape = _shape_from_header(header)
    if shape is not None:
        values = values.reshape(shape)
    return header, values


def _shape_from_header(header: dict):
    comps = [int(c) for c in header.get("components", "1").split("x")]
    kind = header.get("kind", "")
    if "shape" in header:
        sites = tuple(int(c) for c in header["shape"].split("x"))
    elif kind.endswith("3") and "n" in header:
        n = int(header["n"])
        sites = (n, n, n)
    elif "m" in header:
        sites = (int(header["m"]),)
    else:
        return None
    comps = () if comps == [1] else tuple(comps)
    return sites + comps
