"""Run configuration: JSON ingestion with strict keys, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import IngestionError, ValidationError
from .lattice import GridFunction, LatticeSpec
from .potential import PotentialSpec, load_table, materialize

__all__ = ["RunConfig", "parse_config"]

_TOP_KEYS = {"q", "alpha", "n_outer", "n_inner", "potential", "scan", "tol", "out_dir"}
_SCAN_KEYS = {"grid", "lambda_min", "lambda_max"}
_TOL_KEYS = {"bisection", "report"}
_POTENTIAL_KEYS = {
    "zero": {"kind"},
    "constant": {"kind", "c"},
    "power": {"kind", "c", "p"},
    "table": {"kind", "path"},
}


@dataclass(frozen=True)
class RunConfig:
    q: float = 0.8
    alpha: float = 0.0
    n_outer: int = -30
    n_inner: int = 50
    potential: PotentialSpec = field(default_factory=lambda: PotentialSpec.power(1.0, 2.0))
    grid: int = 512
    lambda_min: float = 0.1
    lambda_max: float = 20.0
    bisection_tol: float = 1e-10
    report_tol: float = 1e-6
    out_dir: str = "."
    potential_path: str = None

    def __post_init__(self):
        self.lattice  # validates q and the window
        if not math.isfinite(self.alpha):
            raise ValidationError("alpha must be finite")
        if isinstance(self.grid, bool) or not isinstance(self.grid, int) or self.grid < 16:
            raise ValidationError("scan.grid must be an integer >= 16")
        if not self.lambda_min < self.lambda_max:
            raise ValidationError("scan.lambda_min must be smaller than scan.lambda_max")
        for name in ("bisection_tol", "report_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"tol.{name.split('_')[0]} must be positive")

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.q, self.n_outer, self.n_inner)

    def potential_on_lattice(self) -> GridFunction:
        return materialize(self.potential, self.lattice)

    def to_dict(self) -> dict:
        pot = self.potential.to_dict()
        if self.potential.kind == "table" and self.potential_path is not None:
            pot = {"kind": "table", "path": self.potential_path}
        return {
            "q": self.q,
            "alpha": self.alpha,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "potential": pot,
            "scan": {"grid": self.grid, "lambda_min": self.lambda_min, "lambda_max": self.lambda_max},
            "tol": {"bisection": self.bisection_tol, "report": self.report_tol},
            "out_dir": self.out_dir,
        }


def _reject_unknown(obj: dict, allowed: set, where: str, path):
    for key in obj:
        if key not in allowed:
            name = f"{where}.{key}" if where else key
            raise IngestionError(f"unknown configuration key {name!r}", path)


def _number(v, name, path, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise IngestionError(f"{name} must be a number, got {v!r}", path)
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise IngestionError(f"{name} must be an integer, got {v!r}", path)
        return int(v)
    return float(v)


def _section(doc, key, allowed, path):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise IngestionError(f"{key} must be an object", path)
    _reject_unknown(sec, allowed, key, path)
    return sec


def _potential(doc, base_dir: Path, path):
    pot = doc.get("potential")
    if pot is None:
        return None, None
    if not isinstance(pot, dict):
        raise IngestionError("potential must be an object", path)
    kind = pot.get("kind")
    if kind not in _POTENTIAL_KEYS:
        raise IngestionError(f"potential.kind must be one of {sorted(_POTENTIAL_KEYS)}, got {kind!r}", path)
    _reject_unknown(pot, _POTENTIAL_KEYS[kind], "potential", path)
    if kind == "zero":
        return PotentialSpec.zero(), None
    if kind == "constant":
        return PotentialSpec.constant(_number(pot.get("c", 0.0), "potential.c", path)), None
    if kind == "power":
        return PotentialSpec.power(_number(pot.get("c", 1.0), "potential.c", path),
                                   _number(pot.get("p", 2.0), "potential.p", path)), None
    table = pot.get("path")
    if not isinstance(table, str):
        raise IngestionError("potential.path must be a string", path)
    return ("table", table), table


def parse_config(path=None, overrides: dict = None) -> RunConfig:
    """Read a JSON config (or start from defaults) and apply flat ``overrides``.

    Override keys are RunConfig field names; None values are ignored.
    """
    doc = {}
    base_dir = Path(".")
    if path is not None:
        base_dir = Path(path).parent
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestionError(f"cannot read config: {exc.strerror}", path) from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
        if not isinstance(doc, dict):
            raise IngestionError("top level must be a JSON object", path)
    _reject_unknown(doc, _TOP_KEYS, "", path)
    scan = _section(doc, "scan", _SCAN_KEYS, path)
    tol = _section(doc, "tol", _TOL_KEYS, path)

    kw = {}
    for key in ("q", "alpha"):
        if key in doc:
            kw[key] = _number(doc[key], key, path)
    for key in ("n_outer", "n_inner"):
        if key in doc:
            kw[key] = _number(doc[key], key, path, integer=True)
    if "grid" in scan:
        kw["grid"] = _number(scan["grid"], "scan.grid", path, integer=True)
    for key in ("lambda_min", "lambda_max"):
        if key in scan:
            kw[key] = _number(scan[key], f"scan.{key}", path)
    if "bisection" in tol:
        kw["bisection_tol"] = _number(tol["bisection"], "tol.bisection", path)
    if "report" in tol:
        kw["report_tol"] = _number(tol["report"], "tol.report", path)
    if "out_dir" in doc:
        if not isinstance(doc["out_dir"], str):
            raise IngestionError("out_dir must be a string", path)
        kw["out_dir"] = doc["out_dir"]

    pot, table_path = _potential(doc, base_dir, path)
    for key, value in (overrides or {}).items():
        if value is not None:
            kw[key] = value
    if pot is not None and not isinstance(pot, tuple):
        kw["potential"] = pot
    try:
        cfg = RunConfig(**kw)
    except ValidationError as exc:
        if path is not None and not isinstance(exc, IngestionError):
            raise IngestionError(str(exc), path) from exc
        raise
    if isinstance(pot, tuple):
        table_file = Path(table_path)
        if not table_file.is_absolute():
            table_file = base_dir / table_file
        spec = load_table(table_file, cfg.lattice)
        cfg = replace(cfg, potential=spec, potential_path=table_path)
    return cfg
