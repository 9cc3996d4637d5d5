"""Potentials u(x) on the lattice: zero, constant, power law, or an explicit table."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import IngestionError, ValidationError
from .lattice import GridFunction, LatticeSpec

__all__ = ["PotentialSpec", "materialize", "load_table", "write_table"]

KINDS = ("zero", "constant", "power", "table")


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    c: float = 0.0
    p: float = 0.0
    table: MappingProxyType = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        for name in ("c", "p"):
            v = getattr(self, name)
            if isinstance(v, complex) or not math.isfinite(float(v)):
                raise ValidationError(f"potential parameter {name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.kind == "power" and self.p <= -2.0:
            raise ValidationError(f"power potential needs p > -2 so that x^2 u(x) -> 0 at 0, got p={self.p}")
        if self.kind == "table":
            if self.table is None:
                raise ValidationError("table potential without values")
            clean = {}
            for k, v in dict(self.table).items():
                if isinstance(v, complex) or not math.isfinite(float(v)):
                    raise ValidationError(f"table value at index {k} must be a finite real, got {v!r}")
                clean[int(k)] = float(v)
            object.__setattr__(self, "table", MappingProxyType(clean))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c):
        return cls("constant", c=c)

    @classmethod
    def power(cls, c, p):
        return cls("power", c=c, p=p)

    @classmethod
    def from_table(cls, values):
        return cls("table", table=values)

    def to_dict(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "power":
            return {"kind": "power", "c": self.c, "p": self.p}
        return {"kind": "table", "values": {str(k): v for k, v in sorted(self.table.items())}}


def materialize(spec: PotentialSpec, lattice: LatticeSpec) -> GridFunction:
    """Tabulate u(q^n) over the window (real, unscaled)."""
    x = lattice.points
    if spec.kind == "zero":
        v = np.zeros(lattice.size)
    elif spec.kind == "constant":
        v = np.full(lattice.size, spec.c)
    elif spec.kind == "power":
        v = spec.c * np.power(x, spec.p)
    else:
        missing = [int(n) for n in lattice.indices if int(n) not in spec.table]
        if missing:
            raise ValidationError(f"potential table misses lattice index {missing[0]}"
                                  + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
        v = np.array([spec.table[int(n)] for n in lattice.indices], dtype=float)
    if not np.all(np.isfinite(v)):
        bad = int(lattice.indices[np.flatnonzero(~np.isfinite(v))[0]])
        raise ValidationError(f"potential is not finite at index {bad}")
    return GridFunction(lattice, v)


def write_table(u: GridFunction, path) -> None:
    """Write a real lattice function as ``n,x,re,im`` with round-trip precision."""
    from .csvio import write_lattice_function

    write_lattice_function(u, path, with_logscale=False)


def load_table(path, lattice: LatticeSpec) -> PotentialSpec:
    """Read a potential table in the lattice-function CSV format.

    Columns ``n,x,re,im`` (an optional trailing ``logscale`` column must be 0).
    Every window index must be present and ``im`` must be zero.
    """
    values = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open potential table: {exc.strerror}", path) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestionError("empty file, header row expected", path, 1)
        header = [h.strip() for h in header]
        if header[:4] != ["n", "x", "re", "im"] or len(header) > 5 or (
                len(header) == 5 and header[4] != "logscale"):
            raise IngestionError(f"bad header {','.join(header)!r}; expected n,x,re,im[,logscale]", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(f"expected {len(header)} columns, got {len(row)}", path, lineno)
            try:
                n = int(row[0])
                re_v, im_v = float(row[2]), float(row[3])
                ls = float(row[4]) if len(row) == 5 else 0.0
            except ValueError as exc:
                raise IngestionError(f"parse failure: {exc}", path, lineno) from exc
            if im_v != 0.0:
                raise IngestionError(f"potential value at index {n} is not real (im={im_v!r})", path, lineno)
            if not math.isfinite(re_v) or not math.isfinite(ls):
                raise IngestionError(f"non-finite value at index {n}", path, lineno)
            if n in values:
                raise IngestionError(f"duplicate index {n}", path, lineno)
            values[n] = re_v * math.exp(ls) if ls else re_v
    missing = [int(n) for n in lattice.indices if int(n) not in values]
    if missing:
        raise IngestionError(f"missing index {missing[0]}", path)
    return PotentialSpec.from_table(values)
