"""CSV and JSON result files with the resolved configuration embedded.

CSV files start with ``#``-prefixed lines holding the artifact version, the
configuration as canonical JSON and (optionally) scalar results, then a
mandatory header row.  Floats are written with 17 significant digits so
they round-trip exactly.
"""

from __future__ import annotations

import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__

CONFIG_PREFIX = "# config: "
VERSION_PREFIX = "# version: "
RESULTS_PREFIX = "# results: "


def plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def canonical_json(obj: Any, indent: int | None = None) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=indent, allow_nan=False)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], config: dict,
               results: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"{VERSION_PREFIX}{__version__}\n")
    buf.write(f"{CONFIG_PREFIX}{canonical_json(config)}\n")
    if results:
        buf.write(f"{RESULTS_PREFIX}{canonical_json(results)}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def render_json(config: dict, results: Any) -> str:
    doc = {"config": config, "results": results, "version": __version__}
    return canonical_json(doc, indent=2) + "\n"


def write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" stops platform newline translation
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_config(path: str) -> dict:
    """The configuration embedded in a result file (CSV or JSON)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)["config"]
    for line in text.splitlines():
        if line.startswith(CONFIG_PREFIX):
            return json.loads(line[len(CONFIG_PREFIX):])
    raise ValueError(f"{path} holds no embedded configuration")


def read_csv(path: str):
    """``(header, rows)`` of a result CSV, numbers parsed as floats."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if not ln.startswith("#")]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        cells = []
        for c in ln.split(","):
            try:
                cells.append(float(c))
            except ValueError:
                cells.append(c)
        rows.append(cells)
    return header, rows
