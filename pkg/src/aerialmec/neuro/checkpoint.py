"""Plain-text tensor checkpoints.

Format, one record per tensor::

    # aerialmec-checkpoint 1
    meta <json object>
    tensor <name> <ndim> <dim_1> ... <dim_n>
    <row-major values, space separated, %.17g>

Values round-trip exactly through ``%.17g``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

HEADER = "# aerialmec-checkpoint 1"


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> None:
    lines = [HEADER, "meta " + json.dumps(meta or {}, sort_keys=True)]
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=float)
        if " " in name:
            raise ValueError(f"tensor names may not contain spaces: {name!r}")
        lines.append(f"tensor {name} {arr.ndim} " + " ".join(str(d) for d in arr.shape))
        lines.append(" ".join("%.17g" % v for v in arr.reshape(-1)))
    tmp = Path(str(path) + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{path}: not an aerialmec checkpoint")
    meta: dict[str, Any] = {}
    tensors: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith("meta "):
            meta = json.loads(line[5:])
            i += 1
        elif line.startswith("tensor "):
            parts = line.split()
            name, ndim = parts[1], int(parts[2])
            shape = tuple(int(d) for d in parts[3:3 + ndim])
            body = lines[i + 1].split() if i + 1 < len(lines) else []
            values = np.array([float(v) for v in body], dtype=float)
            if values.size != int(np.prod(shape)):
                raise ValueError(f"{path}: tensor {name} expects {int(np.prod(shape))} values")
            tensors[name] = values.reshape(shape)
            i += 2
        elif not line.strip():
            i += 1
        else:
            raise ValueError(f"{path}: unexpected line {i + 1}: {line[:40]!r}")
    return tensors, meta
