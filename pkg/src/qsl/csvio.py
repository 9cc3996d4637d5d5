"""CSV writers for tabular output and lattice functions.

All floats are written with 17 significant digits so values round-trip
exactly; complex numbers take two columns.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import QslError
from .lattice import GridFunction

__all__ = ["fmt", "write_csv", "write_lattice_function", "write_json"]


class OutputError(QslError, OSError):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if hasattr(v, "dtype") and v.dtype.kind in "iu":
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(header, rows, path) -> None:
    """Write ``rows`` under ``header``; complex cells must be pre-split by the caller."""
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror}") from exc


def write_lattice_function(f: GridFunction, path, with_logscale: bool = True) -> None:
    lat = f.lattice
    header = ["n", "x", "re", "im"] + (["logscale"] if with_logscale else [])
    rows = []
    for i, n in enumerate(lat.indices):
        m = complex(f.mantissa[i])
        row = [int(n), lat.points[i], m.real, m.imag]
        if with_logscale:
            row.append(f.logscale[i])
        elif f.logscale[i] != 0.0:
            raise ValueError("scaled function written without a logscale column")
        rows.append(row)
    write_csv(header, rows, path)


def write_json(obj, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"{path}: {exc.strerror}") from exc
