"""JSON model files for piecewise-constant patch models.

Layout::

    {
      "name": "optional",
      "description": "optional",
      "n": 2,
      "breakpoints": ["0", "1/2"],
      "segments": [
        {"r": [1, -1], "L": [[-1, 0], [1, 0]]},
        {"r": [-2, 2], "L": [[0, 1], [0, -1]]}
      ]
    }

Breakpoints are segment start points in ``[0, 1)``, the first being 0.
They may be numbers or strings holding a decimal or a ratio ``"p/q"``;
strings and integers are kept as exact fractions. Entries of ``r`` and
``L`` may also be given as such strings. A growth-only file omits every
``L``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ModelError, ModelFileError
from .pathmodel import Constant, PatchModel, PiecewiseMatrixPath

__all__ = ["parse_model", "loads", "load", "dumps", "dump", "model_to_dict"]

COLUMN_TOL = 1e-12


def _number(value, path: str, *, exact: bool = False):
    if isinstance(value, bool):
        raise ModelFileError("expected a number, got a boolean", path)
    if isinstance(value, int):
        return Fraction(value) if exact else float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ModelFileError("number must be finite", path)
        return value
    if isinstance(value, str):
        try:
            frac = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelFileError(f"cannot parse {value!r} as a decimal or p/q ratio", path) from None
        return frac if exact else float(frac)
    raise ModelFileError(f"expected a number, got {type(value).__name__}", path)


def _vector(value, n: int, path: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ModelFileError("expected an array", path)
    if len(value) != n:
        raise ModelFileError(f"expected {n} entries, got {len(value)}", path)
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, n: int, path: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ModelFileError(f"expected an array of {n} rows", path)
    return np.array([_vector(row, n, f"{path}[{i}]") for i, row in enumerate(value)])


def _check_migration(L: np.ndarray, path: str) -> None:
    n = L.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and L[i, j] < 0:
                raise ModelFileError(f"off-diagonal entry must be >= 0, got {L[i, j]}", f"{path}[{i}][{j}]")
    sums = L.sum(axis=0)
    for j in range(n):
        if abs(sums[j]) > COLUMN_TOL * (1.0 + np.abs(L).max()):
            raise ModelFileError(f"column {j} sums to {sums[j]:.6g}, expected 0", path)


def parse_model(doc, *, growth_only: bool = False):
    """Build a model from a decoded JSON document.

    Parameters
    ----------
    doc : dict
        Decoded document.
    growth_only : bool
        Accept documents without ``L`` and return only the growth path.

    Returns
    -------
    PatchModel or PiecewiseMatrixPath

    Raises
    ------
    ModelFileError
        At the first violated invariant, with its location in the document.
    """
    if not isinstance(doc, dict):
        raise ModelFileError("expected a JSON object", "<root>")
    if "n" not in doc:
        raise ModelFileError("missing key", "n")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelFileError("must be a positive integer", "n")
    for key in ("breakpoints", "segments"):
        if key not in doc:
            raise ModelFileError("missing key", key)
        if not isinstance(doc[key], list) or not doc[key]:
            raise ModelFileError("expected a nonempty array", key)
    bps = [_number(b, f"breakpoints[{k}]", exact=True) for k, b in enumerate(doc["breakpoints"])]
    if bps[0] != 0:
        raise ModelFileError("first breakpoint must be 0", "breakpoints[0]")
    for k in range(1, len(bps)):
        if not bps[k] > bps[k - 1]:
            raise ModelFileError("breakpoints must be strictly increasing", f"breakpoints[{k}]")
        if not bps[k] < 1:
            raise ModelFileError("breakpoints must lie in [0, 1)", f"breakpoints[{k}]")
    segs = doc["segments"]
    if len(segs) != len(bps):
        raise ModelFileError(f"expected {len(bps)} segments (one per breakpoint), got {len(segs)}",
                             "segments")
    rates, migs = [], []
    for k, seg in enumerate(segs):
        where = f"segments[{k}]"
        if not isinstance(seg, dict):
            raise ModelFileError("expected an object", where)
        if "r" not in seg:
            raise ModelFileError("missing key", f"{where}.r")
        rates.append(_vector(seg["r"], n, f"{where}.r"))
        if "L" in seg:
            L = _matrix(seg["L"], n, f"{where}.L")
            _check_migration(L, f"{where}.L")
            migs.append(L)
        elif not growth_only:
            raise ModelFileError("missing key", f"{where}.L")
    growth = PiecewiseMatrixPath(bps, [np.diag(r) for r in rates])
    if growth_only and not migs:
        return growth
    if len(migs) != len(segs):
        raise ModelFileError("either every segment or none must have L", "segments")
    try:
        return PatchModel(growth, PiecewiseMatrixPath(bps, migs),
                          name=doc.get("name"), description=doc.get("description"))
    except ModelError as exc:
        raise ModelFileError(str(exc), "segments") from exc


def loads(text: str, *, growth_only: bool = False):
    """Parse a model from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"invalid JSON: {exc}", "<root>") from exc
    return parse_model(doc, growth_only=growth_only)


def load(path, *, growth_only: bool = False):
    """Parse a model file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read file: {exc}", str(path)) from exc
    return loads(text, growth_only=growth_only)


def _bp_out(b):
    if isinstance(b, Fraction):
        return str(b.numerator) if b.denominator == 1 else f"{b.numerator}/{b.denominator}"
    return float(b)


def _num_out(x: float):
    x = float(x)
    if x == 0.0:
        return 0
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def model_to_dict(model) -> dict:
    """Document for a piecewise-constant model or growth path."""
    if isinstance(model, PiecewiseMatrixPath):
        growth, combined = model, None
        bps = model.breakpoints
        pairs = [(s, None) for s in model.segments]
    else:
        combined = model.combined()
        bps = combined.breakpoints
        pairs = combined.pairs
        growth = model.growth
    for g, l in pairs:
        if not isinstance(g, Constant) or (l is not None and not isinstance(l, Constant)):
            raise ModelError("only piecewise-constant models can be written to a file")
    doc: dict = {}
    if combined is not None:
        if model.name:
            doc["name"] = model.name
        if model.description:
            doc["description"] = model.description
    doc["n"] = growth.n
    doc["breakpoints"] = [_bp_out(b) for b in bps]
    segments = []
    for g, l in pairs:
        seg = {"r": [_num_out(x) for x in np.diag(g.matrix)]}
        if l is not None:
            seg["L"] = [[_num_out(x) for x in row] for row in l.matrix]
        segments.append(seg)
    doc["segments"] = segments
    return doc


def dumps(model) -> str:
    """Serialize to JSON text (one segment per line)."""
    doc = model_to_dict(model)
    head = {k: v for k, v in doc.items() if k != "segments"}
    lines = ["{"]
    for k, v in head.items():
        lines.append(f"  {json.dumps(k)}: {json.dumps(v)},")
    lines.append('  "segments": [')
    segs = [f"    {json.dumps(s)}" for s in doc["segments"]]
    lines.append(",\n".join(segs))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(model, path) -> None:
    """Write a model file."""
    Path(path).write_text(dumps(model))
