"""Reading quadrant-walk models from TOML files.

A model file declares ``k0`` and one ``steps`` table per family; each step
is a ``[di, dj, p]`` triple where ``p`` is a float or an exact rational
written as a string such as ``"1/6"``::

    k0 = 1

    [interior]
    steps = [[1, 0, "1/6"], [0, -1, "3/8"], [-1, 0, "1/3"], [0, 1, "1/8"]]

    [[horizontal]]          # rows j = 0 .. k0-1, in order
    steps = [[1, 1, 0.5], [1, 0, 0.5]]

    [[vertical]]            # rows i = 0 .. k0-1, in order
    steps = [[1, 1, 0.5], [0, 1, 0.5]]

    [[corner]]              # one table per corner cell
    i = 0
    j = 0
    steps = [[1, 1, 0.5], [1, 0, 0.25], [0, 1, 0.25]]

Unknown keys are rejected.  A catalog of bundled models ships with the
package and can be addressed by bare name (``reference``, ``nonsym``,
``symmetric``).
"""

from __future__ import annotations

import os
import re
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Union

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .errors import ParseError, ValidationError
from .model import QuadrantModel, StepDistribution, validate_model

_TOP_KEYS = {"k0", "interior", "horizontal", "vertical", "corner", "name"}
_LINECOL = re.compile(r"line (\d+), column (\d+)")


def _parse_probability(raw: Union[int, float, str], where: str):
    if isinstance(raw, bool):
        raise ParseError(f"{where}: probability must be a number, got {raw!r}")
    if isinstance(raw, (int, float)):
        return Fraction(raw) if isinstance(raw, int) else float(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: bad rational {raw!r}: {exc}") from None
    raise ParseError(f"{where}: probability must be a number or 'p/q' string, got {raw!r}")


def _parse_steps(table: dict, where: str) -> Dict[tuple, Union[float, Fraction]]:
    unknown = set(table) - {"steps", "i", "j"}
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")
    steps = table.get("steps")
    if not isinstance(steps, list) or not steps:
        raise ParseError(f"{where}: 'steps' must be a non-empty list of [di, dj, p]")
    entries = {}
    for n, triple in enumerate(steps):
        if not (isinstance(triple, list) and len(triple) == 3):
            raise ParseError(f"{where}: step #{n} must be a [di, dj, p] triple")
        di, dj, p = triple
        if not isinstance(di, int) or not isinstance(dj, int) or isinstance(di, bool) or isinstance(dj, bool):
            raise ParseError(f"{where}: step #{n} offsets must be integers")
        entries[(di, dj)] = _parse_probability(p, f"{where} step #{n}")
    return entries


def parse_model_text(text: str, name: str = "") -> QuadrantModel:
    """Parse model TOML text into an (unvalidated) :class:`QuadrantModel`."""
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        m = _LINECOL.search(str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ParseError(str(exc), line, col) from None

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ParseError(f"unknown top-level keys {sorted(unknown)}")
    if "k0" not in doc or not isinstance(doc["k0"], int) or isinstance(doc["k0"], bool):
        raise ParseError("'k0' must be a positive integer")
    k0 = doc["k0"]
    if k0 < 1:
        raise ParseError("'k0' must be a positive integer")
    if "interior" not in doc:
        raise ParseError("missing [interior] table")

    interior = StepDistribution(_parse_steps(doc["interior"], "interior"), floor=(-k0, -k0))

    horiz_tables = doc.get("horizontal", [])
    vert_tables = doc.get("vertical", [])
    if len(horiz_tables) != k0:
        raise ParseError(f"need exactly k0={k0} [[horizontal]] tables, got {len(horiz_tables)}")
    if len(vert_tables) != k0:
        raise ParseError(f"need exactly k0={k0} [[vertical]] tables, got {len(vert_tables)}")
    horiz = [
        StepDistribution(_parse_steps(t, f"horizontal[{j}]"), floor=(-k0, -j))
        for j, t in enumerate(horiz_tables)
    ]
    vert = [
        StepDistribution(_parse_steps(t, f"vertical[{i}]"), floor=(-i, -k0))
        for i, t in enumerate(vert_tables)
    ]

    corner_tables = doc.get("corner", [])
    if len(corner_tables) != k0 * k0:
        raise ParseError(f"need exactly k0*k0={k0 * k0} [[corner]] tables, got {len(corner_tables)}")
    grid: List[List] = [[None] * k0 for _ in range(k0)]
    for t in corner_tables:
        if "i" not in t or "j" not in t:
            raise ParseError("each [[corner]] table needs integer keys 'i' and 'j'")
        i, j = t["i"], t["j"]
        if not (0 <= i < k0 and 0 <= j < k0):
            raise ParseError(f"corner cell ({i}, {j}) outside 0..k0-1")
        if grid[i][j] is not None:
            raise ParseError(f"corner cell ({i}, {j}) declared twice")
        grid[i][j] = StepDistribution(_parse_steps(t, f"corner[{i},{j}]"), floor=(-i, -j))

    return QuadrantModel(k0, interior, horiz, vert, grid,
                         name=doc.get("name", name))


def catalog_names() -> List[str]:
    """Names of the bundled models."""
    out = []
    for entry in resources.files("quadwalk.models").iterdir():
        if entry.name.endswith(".model"):
            out.append(entry.name[: -len(".model")])
    return sorted(out)


def _resolve(path: str) -> str:
    """Return file text for a path or a bundled catalog name."""
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    stem = path[: -len(".model")] if path.endswith(".model") else path
    if re.fullmatch(r"[A-Za-z0-9_\-]+", stem):
        ref = resources.files("quadwalk.models").joinpath(stem + ".model")
        if ref.is_file():
            return ref.read_text(encoding="utf-8")
    raise ParseError(
        f"no such model file or catalog entry: {path!r} "
        f"(bundled: {', '.join(catalog_names())})"
    )


def load_model(path: str, validate: bool = True) -> QuadrantModel:
    """Load and (by default) validate a model from a file or catalog name.

    Raises :class:`ParseError` for unreadable input and
    :class:`ValidationError` carrying the full report when validation fails.
    """
    text = _resolve(path)
    if not text.strip():
        raise ParseError(f"{path}: empty model file")
    model = parse_model_text(text, name=os.path.basename(path))
    if validate:
        report = validate_model(model)
        if not report.ok:
            raise ValidationError(report)
    return model
