"""Geometric lattice {q^n} and the q-calculus primitives on it.

Functions on the lattice are stored as a mantissa array plus a per-index
natural-log scale, so that solutions growing far beyond double range can be
carried around.  Index ``n`` always refers to the lattice point ``x = q**n``;
indices grow towards 0, so ``n_outer`` is the largest point and ``n_inner``
the smallest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, LatticeRangeError, NumericFailure, ValidationError

__all__ = [
    "LatticeSpec",
    "Scaled",
    "GridFunction",
    "point",
    "q_derivative",
    "lambda_inv_dq",
    "delta_q",
    "jackson_integral",
    "bilinear_pairing",
    "interior_pairing",
    "wronskian",
    "wronskian_profile",
]

MIN_WINDOW = 8
# renormalisation band for mantissas
BIG = 1e100
SMALL = 1e-100
# exponent range in which a scaled value is collapsed to a plain complex
_LOG_MAX = 708.0
_LOG_MIN = -708.0


@dataclass(frozen=True)
class LatticeSpec:
    """Finite window ``n_outer <= n <= n_inner`` of the lattice ``{q**n}``."""

    q: float
    n_outer: int
    n_inner: int

    def __post_init__(self):
        if not (isinstance(self.q, (int, float)) and 0.0 < self.q < 1.0):
            raise ValidationError(f"q must lie in (0,1), got {self.q!r}")
        for name in ("n_outer", "n_inner"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValidationError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_outer >= self.n_inner:
            raise ValidationError("n_outer must be smaller than n_inner")
        if self.size < MIN_WINDOW:
            raise ValidationError(f"window must hold at least {MIN_WINDOW} points, got {self.size}")

    @property
    def size(self) -> int:
        return self.n_inner - self.n_outer + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_outer, self.n_inner + 1)

    @property
    def points(self) -> np.ndarray:
        return np.power(float(self.q), self.indices.astype(float))

    @property
    def weights(self) -> np.ndarray:
        """Jackson weights (1-q) q^n."""
        return (1.0 - self.q) * self.points

    @property
    def mid(self) -> int:
        return (self.n_outer + self.n_inner) // 2

    def pos(self, n: int) -> int:
        """Array position of lattice index ``n``."""
        if not self.n_outer <= n <= self.n_inner:
            raise LatticeRangeError(f"index {n} outside window [{self.n_outer}, {self.n_inner}]")
        return int(n) - self.n_outer

    def contains(self, n: int) -> bool:
        return self.n_outer <= n <= self.n_inner


def point(lattice: LatticeSpec, n: int) -> float:
    """The lattice point q**n."""
    return float(lattice.points[lattice.pos(n)])


@dataclass(frozen=True)
class Scaled:
    """A complex number ``mantissa * exp(log)``."""

    mantissa: complex
    log: float = 0.0

    @classmethod
    def of(cls, value) -> "Scaled":
        if isinstance(value, Scaled):
            return value
        return cls(complex(value), 0.0).normalized()

    def normalized(self) -> "Scaled":
        a = abs(self.mantissa)
        if a == 0.0 or not math.isfinite(a):
            return Scaled(complex(self.mantissa), 0.0 if a == 0.0 else self.log)
        s = math.log(a)
        return Scaled(complex(self.mantissa) / a, self.log + s)

    def log_abs(self) -> float:
        a = abs(self.mantissa)
        if a == 0.0:
            return -math.inf
        return math.log(a) + self.log

    def fits(self) -> bool:
        la = self.log_abs()
        return la == -math.inf or _LOG_MIN < la < _LOG_MAX

    def collapse(self):
        """Plain complex when the magnitude fits double range, otherwise self."""
        return complex(self) if self.fits() else self

    def __complex__(self) -> complex:
        if self.mantissa == 0:
            return 0j
        la = self.log_abs()
        if la > _LOG_MAX + 1:
            phase = self.mantissa / abs(self.mantissa)
            return complex(math.copysign(math.inf, phase.real) if phase.real else 0.0,
                           math.copysign(math.inf, phase.imag) if phase.imag else 0.0)
        if la < -745.0:
            return 0j
        n = self.normalized()
        return n.mantissa * math.exp(n.log)

    def __abs__(self) -> float:
        la = self.log_abs()
        return 0.0 if la < -745.0 else (math.inf if la > 709.7 else math.exp(la))

    def conjugate(self) -> "Scaled":
        return Scaled(self.mantissa.conjugate(), self.log)

    def __neg__(self):
        return Scaled(-self.mantissa, self.log)

    def __mul__(self, other):
        o = Scaled.of(other)
        return Scaled(self.mantissa * o.mantissa, self.log + o.log).normalized()

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Scaled.of(other)
        if o.mantissa == 0:
            raise ZeroDivisionError("division by a zero scaled value")
        return Scaled(self.mantissa / o.mantissa, self.log - o.log).normalized()

    def __rtruediv__(self, other):
        return Scaled.of(other) / self

    def __add__(self, other):
        o = Scaled.of(other)
        if o.mantissa == 0:
            return self
        if self.mantissa == 0:
            return o
        top = max(self.log, o.log)
        m = self.mantissa * math.exp(self.log - top) + o.mantissa * math.exp(o.log - top)
        return Scaled(m, top).normalized()

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-Scaled.of(other))

    def __rsub__(self, other):
        return Scaled.of(other) - self


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``mantissa[i] * exp(logscale[i])`` at lattice index ``n_outer + i``.

    ``defined`` optionally masks indices where the function is absent (e.g. the
    end points of ``L f``); absent entries carry mantissa 0.
    """

    lattice: LatticeSpec
    mantissa: np.ndarray
    logscale: np.ndarray = None
    defined: np.ndarray = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.mantissa)
        if not np.iscomplexobj(m):
            m = m.astype(float)
        m = np.array(m, copy=True)
        if m.shape != (self.lattice.size,):
            raise ContractError(f"expected {self.lattice.size} samples, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            bad = int(np.flatnonzero(~np.isfinite(m))[0]) + self.lattice.n_outer
            raise NumericFailure(f"non-finite mantissa at index {bad}")
        ls = np.zeros(m.shape) if self.logscale is None else np.array(self.logscale, dtype=float)
        if ls.shape != m.shape:
            raise ContractError("logscale length differs from mantissa length")
        if not np.all(np.isfinite(ls)):
            raise NumericFailure("non-finite logscale")
        d = None
        if self.defined is not None:
            d = np.array(self.defined, dtype=bool)
            if d.shape != m.shape:
                raise ContractError("mask length differs from mantissa length")
            m[~d] = 0
        for a in (m, ls) + ((d,) if d is not None else ()):
            a.setflags(write=False)
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "logscale", ls)
        object.__setattr__(self, "defined", d)

    # construction -------------------------------------------------------
    @classmethod
    def from_values(cls, lattice: LatticeSpec, values) -> "GridFunction":
        return cls(lattice, np.asarray(values))

    @classmethod
    def from_callable(cls, lattice: LatticeSpec, fn) -> "GridFunction":
        return cls(lattice, np.asarray(fn(lattice.points)) * np.ones(lattice.size))

    @classmethod
    def delta(cls, lattice: LatticeSpec, n: int, value=1.0) -> "GridFunction":
        v = np.zeros(lattice.size, dtype=complex if isinstance(value, complex) else float)
        v[lattice.pos(n)] = value
        return cls(lattice, v)

    # access ---------------------------------------------------------------
    @property
    def is_scaled(self) -> bool:
        return bool(np.any(self.logscale != 0.0))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.mantissa) or not np.any(self.mantissa.imag)

    def scaled(self, n: int) -> Scaled:
        i = self.lattice.pos(n)
        return Scaled(complex(self.mantissa[i]), float(self.logscale[i]))

    def __getitem__(self, n: int) -> complex:
        return complex(self.scaled(n))

    @property
    def values(self) -> np.ndarray:
        """Resolved samples; entries beyond double range become inf (or 0)."""
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            v = self.mantissa * np.exp(self.logscale)
        return np.where(self.mantissa == 0, 0, v)

    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mantissa)) + self.logscale

    def conj(self) -> "GridFunction":
        return GridFunction(self.lattice, np.conj(self.mantissa), self.logscale, self.defined)

    def resolved(self) -> "GridFunction":
        """Same function with logscale folded in; raises if it does not fit."""
        v = self.values
        if not np.all(np.isfinite(v)):
            raise NumericFailure("function exceeds double range and cannot be resolved")
        return GridFunction(self.lattice, v, None, self.defined)

    def renormalized(self) -> "GridFunction":
        a = np.abs(self.mantissa)
        with np.errstate(divide="ignore"):
            s = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)
        return GridFunction(self.lattice, self.mantissa / np.exp(s), self.logscale + s, self.defined)

    def _check_same(self, other: "GridFunction"):
        if self.lattice != other.lattice:
            raise ContractError("grid functions live on different lattices")

    def __add__(self, other):
        if not isinstance(other, GridFunction):
            return self + GridFunction(self.lattice, np.full(self.lattice.size, other))
        self._check_same(other)
        # zero samples must not set the common scale
        la = np.where(self.mantissa != 0, self.logscale, -np.inf)
        lb = np.where(other.mantissa != 0, other.logscale, -np.inf)
        top = np.maximum(la, lb)
        top = np.where(np.isfinite(top), top, 0.0)
        with np.errstate(under="ignore"):
            m = self.mantissa * np.exp(la - top) + other.mantissa * np.exp(lb - top)
        d = _merge_mask(self.defined, other.defined)
        return GridFunction(self.lattice, m, top, d)

    __radd__ = __add__

    def __neg__(self):
        return GridFunction(self.lattice, -self.mantissa, self.logscale, self.defined)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check_same(other)
            out = GridFunction(self.lattice, self.mantissa * other.mantissa,
                               self.logscale + other.logscale,
                               _merge_mask(self.defined, other.defined))
            return out.renormalized() if out.is_scaled else out
        if isinstance(other, Scaled):
            return GridFunction(self.lattice, self.mantissa * other.mantissa,
                                self.logscale + other.log, self.defined)
        return GridFunction(self.lattice, self.mantissa * other, self.logscale, self.defined)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Scaled):
            return self * (1.0 / other)
        return self * (1.0 / other)


def _merge_mask(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a & b


def _combine(f: GridFunction, ns, coeffs) -> Scaled:
    """sum_k coeffs[k] * f(q^ns[k]) evaluated with aligned log scales."""
    lat = f.lattice
    idx = [lat.pos(n) for n in ns]
    logs = [float(f.logscale[i]) for i in idx]
    mant = [complex(f.mantissa[i]) for i in idx]
    live = [l for l, m in zip(logs, mant) if m != 0]
    if not live:
        return Scaled(0j, 0.0)
    top = max(live)
    s = 0j
    for c, m, l in zip(coeffs, mant, logs):
        if m != 0:
            s += c * m * math.exp(l - top)
    return Scaled(s, top).normalized()


def _need(lat: LatticeSpec, n: int, lo: int, hi: int, what: str):
    if not (lo <= n <= hi):
        raise LatticeRangeError(f"{what} at index {n} needs neighbours inside [{lat.n_outer}, {lat.n_inner}]")


def q_derivative(f: GridFunction, n: int) -> complex:
    """D_q f(x) = (f(x) - f(qx)) / ((1-q) x) at x = q^n."""
    lat = f.lattice
    _need(lat, n, lat.n_outer, lat.n_inner - 1, "q_derivative")
    x = point(lat, n)
    return complex(_combine(f, (n, n + 1), (1.0, -1.0)) / ((1.0 - lat.q) * x))


def lambda_inv_dq(f: GridFunction, n: int, scaled: bool = False):
    """D_q f evaluated at x/q, i.e. q (f(x/q) - f(x)) / ((1-q) x), at x = q^n."""
    lat = f.lattice
    _need(lat, n, lat.n_outer + 1, lat.n_inner, "lambda_inv_dq")
    x = point(lat, n)
    v = _combine(f, (n - 1, n), (1.0, -1.0)) * (lat.q / ((1.0 - lat.q) * x))
    return v if scaled else complex(v)


def delta_q(f: GridFunction, n: int) -> complex:
    """The q-Laplacian (1/x^2)[f(x/q) - (1+q)/q f(x) + f(qx)/q] at x = q^n."""
    lat = f.lattice
    _need(lat, n, lat.n_outer + 1, lat.n_inner - 1, "delta_q")
    q = lat.q
    x = point(lat, n)
    v = _combine(f, (n - 1, n, n + 1), (1.0, -(1.0 + q) / q, 1.0 / q))
    return complex(v / (x * x))


def _bounds(lat: LatticeSpec, n_from, n_to):
    n_from = lat.n_outer if n_from is None else int(n_from)
    n_to = lat.n_inner if n_to is None else int(n_to)
    if not (lat.n_outer <= n_from <= n_to <= lat.n_inner):
        raise LatticeRangeError(
            f"integration bounds [{n_from}, {n_to}] must satisfy "
            f"{lat.n_outer} <= n_from <= n_to <= {lat.n_inner}")
    return n_from, n_to


def _weighted_sum(lat, mant, logs, n_from, n_to) -> Scaled:
    i0, i1 = n_from - lat.n_outer, n_to - lat.n_outer + 1
    m = np.asarray(mant[i0:i1]) * lat.weights[i0:i1]
    ls = np.asarray(logs[i0:i1], dtype=float)
    live = m != 0
    if not np.any(live):
        return Scaled(0j, 0.0)
    top = float(np.max(ls[live]))
    with np.errstate(under="ignore"):
        s = complex(np.sum(np.where(live, m * np.exp(ls - top), 0)))
    return Scaled(s, top).normalized()


def jackson_integral(f: GridFunction, n_from: int = None, n_to: int = None, scaled: bool = False):
    """(1-q) sum_{n=n_from}^{n_to} q^n f(q^n), i.e. the integral from q^n_to up to q^n_from.

    Bounds default to the whole window.  Returns a plain complex unless the
    result leaves double range (or ``scaled`` is set), then a ``Scaled``.
    """
    lat = f.lattice
    n_from, n_to = _bounds(lat, n_from, n_to)
    v = _weighted_sum(lat, f.mantissa, f.logscale, n_from, n_to)
    return v if scaled else v.collapse()


def bilinear_pairing(f: GridFunction, g: GridFunction, n_from: int = None, n_to: int = None,
                     scaled: bool = False):
    """Jackson integral of the pointwise product f*g (no conjugation)."""
    if f.lattice != g.lattice:
        raise ContractError("bilinear_pairing of functions on different lattices")
    lat = f.lattice
    n_from, n_to = _bounds(lat, n_from, n_to)
    v = _weighted_sum(lat, f.mantissa * g.mantissa, f.logscale + g.logscale, n_from, n_to)
    return v if scaled else v.collapse()


def interior_pairing(f: GridFunction, g: GridFunction, scaled: bool = False):
    """Pairing over n_outer+1 .. n_inner-1.

    This is the inner product under which the truncated operator is symmetric:
    the innermost point only carries the boundary data at 0 and the outermost
    one the truncation at infinity, so sums over "(0, infinity)" of solution
    quantities run over the interior.
    """
    lat = f.lattice
    return bilinear_pairing(f, g, lat.n_outer + 1, lat.n_inner - 1, scaled=scaled)


def wronskian(f: GridFunction, g: GridFunction, n: int, scaled: bool = False):
    """q-Wronskian W_x(f, g) = ((1-q)/x) (f(x) g(x/q) - g(x) f(x/q)) at x = q^n."""
    if f.lattice != g.lattice:
        raise ContractError("wronskian of functions on different lattices")
    lat = f.lattice
    _need(lat, n, lat.n_outer + 1, lat.n_inner, "wronskian")
    i = lat.pos(n)
    terms = (
        (f.mantissa[i] * g.mantissa[i - 1], f.logscale[i] + g.logscale[i - 1]),
        (-g.mantissa[i] * f.mantissa[i - 1], g.logscale[i] + f.logscale[i - 1]),
    )
    v = Scaled(0j, 0.0)
    for m, l in terms:
        v = v + Scaled(complex(m), float(l))
    v = v * ((1.0 - lat.q) / point(lat, n))
    return v if scaled else v.collapse()


def wronskian_profile(f: GridFunction, g: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """W_x(f, g) for every n in n_outer+1 .. n_inner as (mantissa, log) arrays."""
    if f.lattice != g.lattice:
        raise ContractError("wronskian of functions on different lattices")
    lat = f.lattice
    a_m = f.mantissa[1:] * g.mantissa[:-1]
    a_l = f.logscale[1:] + g.logscale[:-1]
    b_m = -g.mantissa[1:] * f.mantissa[:-1]
    b_l = g.logscale[1:] + f.logscale[:-1]
    top = np.maximum(a_l, b_l)
    with np.errstate(under="ignore"):
        m = a_m * np.exp(a_l - top) + b_m * np.exp(b_l - top)
    m = m * ((1.0 - lat.q) / lat.points[1:])
    return m, top


def wronskian_condition(f: GridFunction, g: GridFunction) -> np.ndarray:
    """Log of the term magnitude ((1-q)/x)(|f g(x/q)| + |g f(x/q)|) for n_outer+1 .. n_inner.

    Rounding in the stored samples perturbs W by about eps times this scale,
    so it bounds the attainable absolute accuracy of ``wronskian``.
    """
    lat = f.lattice
    la = f.log_abs()
    lb = g.log_abs()
    t1 = la[1:] + lb[:-1]
    t2 = lb[1:] + la[:-1]
    top = np.maximum(t1, t2)
    with np.errstate(invalid="ignore"):
        s = top + np.log1p(np.exp(np.minimum(t1, t2) - top))
    return s + np.log((1.0 - lat.q) / lat.points[1:])


def resolve(m: np.ndarray, log: np.ndarray) -> np.ndarray:
    """mantissa * exp(log) with overflow mapped to inf and 0 * inf to 0."""
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        v = m * np.exp(log)
    return np.where(m == 0, 0, v)


def scaled_cumsum(mant: np.ndarray, logs: np.ndarray, reverse: bool = False):
    """Cumulative sum of ``mant * exp(logs)`` kept in scaled form.

    Returns (mantissa, log) arrays whose i-th entry is the sum over entries
    0..i (or i..end when ``reverse``).
    """
    n = len(mant)
    out_m = np.zeros(n, dtype=complex)
    out_l = np.zeros(n)
    acc_m, acc_l = 0j, -math.inf
    order = range(n - 1, -1, -1) if reverse else range(n)
    for i in order:
        m, l = complex(mant[i]), float(logs[i])
        if m != 0:
            if acc_m == 0:
                acc_m, acc_l = m, l
            elif l > acc_l:
                acc_m = acc_m * math.exp(acc_l - l) + m
                acc_l = l
            else:
                acc_m = acc_m + m * math.exp(l - acc_l)
            a = abs(acc_m)
            if a > BIG or (0 < a < SMALL):
                acc_l += math.log(a)
                acc_m /= a
        out_m[i] = acc_m
        out_l[i] = acc_l if acc_m != 0 else 0.0
    return out_m, out_l
