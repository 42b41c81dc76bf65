"""File formats: polygon/mesh JSON, spectrum CSV.

Floats are written with 17 significant digits so files round-trip exactly
and identical inputs give byte-identical outputs.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .geometry import Polygon, TriMesh, validate_polygon


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def read_polygon(path) -> Polygon:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InvalidInput(f"polygon file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"polygon file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "vertices" not in data:
        raise InvalidInput('polygon JSON must look like {"vertices": [[x, y], ...]}')
    return validate_polygon(data["vertices"])


def polygon_json(P: Polygon) -> str:
    return dumps(P.to_json())


def mesh_json(M: TriMesh) -> str:
    return dumps(M.to_json())


def spectrum_csv(S) -> str:
    lines = ["index,eigenvalue,residual"]
    for i, (lam, r) in enumerate(zip(S.eigenvalues, S.residuals)):
        lines.append(f"{i},{fmt(lam)},{fmt(r)}")
    return "\n".join(lines) + "\n"
