"""Solutions of  Delta_q f + (lambda - u) f = 0  on a lattice window.

Outward propagation starts from data at 0 (the two innermost points) and
marches towards larger x; inward propagation starts at the outer edge and
produces the solution that is small at infinity.  Both renormalise the
running pair into [1e-100, 1e100] and record the scale per index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericFailure
from .lattice import (BIG, SMALL, GridFunction, LatticeSpec, Scaled, bilinear_pairing,
                      wronskian, wronskian_condition)

__all__ = [
    "BoundaryData",
    "SolutionPair",
    "fundamental_data",
    "init_fundamental",
    "propagate_outward",
    "propagate_inward",
    "solution_pair",
    "boundary_data",
    "apply_L",
    "stencil_residual",
    "green_formula_check",
]


@dataclass(frozen=True)
class BoundaryData:
    """Value f(0) and derivative f'(0) of a lattice function at the origin."""

    f0: complex
    f1: complex

    def __post_init__(self):
        for v in (self.f0, self.f1):
            if not math.isfinite(abs(complex(v))):
                raise NumericFailure("boundary data must be finite")

    def seeds(self, lattice: LatticeSpec):
        """Samples at (n_inner, n_inner - 1) of the linear model f0 + x f1."""
        x_in = lattice.points[-1]
        x_next = lattice.points[-2]
        return self.f0 + x_in * self.f1, self.f0 + x_next * self.f1


@dataclass(frozen=True, eq=False)
class SolutionPair:
    phi: GridFunction
    theta: GridFunction
    lam: complex
    alpha: float


def fundamental_data(alpha: float, q: float) -> tuple[BoundaryData, BoundaryData]:
    """Data at 0 for phi and theta, scaled by sqrt(q)/(1-q) so that W(phi, theta) = 1."""
    s = math.sqrt(q) / (1.0 - q)
    sa, ca = math.sin(alpha), math.cos(alpha)
    return BoundaryData(s * sa, -s * ca), BoundaryData(s * ca, s * sa)


def init_fundamental(lam, alpha: float, lattice: LatticeSpec):
    """Seeds of phi and theta at indices (n_inner, n_inner - 1).

    Returns ``(phi_seeds, theta_seeds)``.  The seeds do not depend on lambda:
    the data are imposed through a first-order Taylor model at 0.
    """
    dphi, dtheta = fundamental_data(alpha, lattice.q)
    return dphi.seeds(lattice), dtheta.seeds(lattice)


def _lattice_of(u: GridFunction, lattice):
    if lattice is not None and lattice != u.lattice:
        raise ContractError("potential is tabulated on a different lattice")
    return u.lattice


def _use_real(lam, u: GridFunction, seeds) -> bool:
    return (complex(lam).imag == 0.0 and u.is_real
            and all(complex(s).imag == 0.0 for s in seeds))


def _potential_term(lam, u: GridFunction, real: bool) -> np.ndarray:
    x = u.lattice.points
    uv = u.values.real if real else u.values
    lam = complex(lam).real if real else complex(lam)
    return x * x * (lam - uv)


def propagate_outward(seeds, lam, u: GridFunction, lattice: LatticeSpec = None) -> GridFunction:
    """March f(x/q) = ((1+q)/q) f(x) - f(qx)/q - x^2 (lam - u) f(x) from the inner seeds.

    ``seeds`` are the values at (n_inner, n_inner - 1).
    """
    lat = _lattice_of(u, lattice)
    q = lat.q
    real = _use_real(lam, u, seeds)
    a = (1.0 + q) / q - _potential_term(lam, u, real)
    conv = float if real else complex
    N = lat.size
    mant = np.zeros(N, dtype=float if real else complex)
    logs = np.zeros(N)
    prev, cur = conv(seeds[0]), conv(seeds[1])
    mant[N - 1], mant[N - 2] = prev, cur
    L = 0.0
    inv_q = 1.0 / q
    for i in range(N - 2, 0, -1):
        nxt = a[i] * cur - prev * inv_q
        mag = max(abs(nxt), abs(cur))
        if not math.isfinite(mag):
            raise NumericFailure(f"outward propagation overflowed at index {lat.n_outer + i - 1}")
        if mag > BIG or 0.0 < mag < SMALL:
            nxt /= mag
            cur /= mag
            L += math.log(mag)
        mant[i - 1] = nxt
        logs[i - 1] = L
        prev, cur = cur, nxt
    return GridFunction(lat, mant, logs)


def propagate_inward(lam, u: GridFunction, lattice: LatticeSpec = None, seeds=(0.0, 1.0)) -> GridFunction:
    """Backward (Miller) recursion from the outer edge.

    ``seeds`` are the values at (n_outer, n_outer + 1); recursing
    f(qx) = (1+q) f(x) - q f(x/q) - q x^2 (lam - u) f(x) picks up the solution
    that is small at infinity, which dominates in the inward direction.
    """
    lat = _lattice_of(u, lattice)
    q = lat.q
    real = _use_real(lam, u, seeds)
    b = (1.0 + q) - q * _potential_term(lam, u, real)
    conv = float if real else complex
    N = lat.size
    mant = np.zeros(N, dtype=float if real else complex)
    logs = np.zeros(N)
    prev, cur = conv(seeds[0]), conv(seeds[1])
    mant[0], mant[1] = prev, cur
    L = 0.0
    for i in range(1, N - 1):
        nxt = b[i] * cur - q * prev
        mag = max(abs(nxt), abs(cur))
        if not math.isfinite(mag):
            raise NumericFailure(f"inward propagation overflowed at index {lat.n_outer + i + 1}")
        if mag > BIG or 0.0 < mag < SMALL:
            nxt /= mag
            cur /= mag
            L += math.log(mag)
        mant[i + 1] = nxt
        logs[i + 1] = L
        prev, cur = cur, nxt
    return GridFunction(lat, mant, logs)


def solution_pair(lam, u: GridFunction, alpha: float = 0.0, lattice: LatticeSpec = None) -> SolutionPair:
    lat = _lattice_of(u, lattice)
    sp, st = init_fundamental(lam, alpha, lat)
    return SolutionPair(propagate_outward(sp, lam, u), propagate_outward(st, lam, u), complex(lam), float(alpha))


def boundary_data(f: GridFunction) -> BoundaryData:
    """Fit f(q^n) = f0 + q^n f1 through the two innermost samples."""
    lat = f.lattice
    y_in, y_next = f[lat.n_inner], f[lat.n_inner - 1]
    if not (math.isfinite(abs(y_in)) and math.isfinite(abs(y_next))):
        raise NumericFailure("innermost samples are not finite")
    x_in, x_next = lat.points[-1], lat.points[-2]
    det = x_next - x_in
    if det == 0.0:
        raise NumericFailure("degenerate abscissae in boundary_data")
    f1 = (y_next - y_in) / det
    f0 = y_in - x_in * f1
    return BoundaryData(f0, f1)


def _stencil_parts(f: GridFunction):
    """Aligned mantissas (outer, centre, inner neighbours) and their common log."""
    m, ls = f.mantissa, f.logscale
    top = np.maximum(np.maximum(ls[:-2], ls[1:-1]), ls[2:])
    with np.errstate(under="ignore"):
        mo = m[:-2] * np.exp(ls[:-2] - top)
        mc = m[1:-1] * np.exp(ls[1:-1] - top)
        mi = m[2:] * np.exp(ls[2:] - top)
    return mo, mc, mi, top


def apply_L(f: GridFunction, u: GridFunction) -> GridFunction:
    """(L f)(x) = u(x) f(x) - Delta_q f(x) at interior indices; end points are absent."""
    if f.lattice != u.lattice:
        raise ContractError("f and u live on different lattices")
    lat = f.lattice
    q = lat.q
    x = lat.points[1:-1]
    mo, mc, mi, top = _stencil_parts(f)
    lap = (mo - (1.0 + q) / q * mc + mi / q) / (x * x)
    inner = u.values[1:-1] * mc - lap
    dtype = complex if (np.iscomplexobj(inner)) else float
    mant = np.zeros(lat.size, dtype=dtype)
    logs = np.zeros(lat.size)
    mant[1:-1] = inner
    logs[1:-1] = top
    defined = np.ones(lat.size, dtype=bool)
    defined[[0, -1]] = False
    out = GridFunction(lat, mant, logs, defined)
    return out.renormalized() if out.is_scaled else out


def stencil_residual(f: GridFunction, lam, u: GridFunction) -> float:
    """max_n |Delta_q f + (lam - u) f| / max(|individual stencil terms|) over interior n."""
    lat = f.lattice
    q = lat.q
    x2 = lat.points[1:-1] ** 2
    mo, mc, mi, _ = _stencil_parts(f)
    t = np.stack([mo / x2, -(1.0 + q) / q * mc / x2, mi / (q * x2),
                  (complex(lam) - u.values[1:-1]) * mc])
    res = np.abs(t.sum(axis=0))
    scale = np.abs(t).max(axis=0)
    ok = scale > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(res[ok] / scale[ok]))


def green_formula_check(F: GridFunction, G: GridFunction, lam, lam2, n_from: int, n_to: int) -> dict:
    """Discrete Green formula over the points n_from..n_to (n_from < n_to, larger x first).

    For solutions F at ``lam`` and G at ``lam2``:
        (lam2 - lam) * sum_{n=n_from}^{n_to} (1-q) q^n F G = W_{n_to + 1}(F, G) - W_{n_from}(F, G)
    i.e. W at the inner end ("0") minus W at the outer end ("b").  The residual
    is relative to the largest magnitude entering the identity, including the
    individual products inside each Wronskian.
    """
    lat = F.lattice
    lhs = Scaled.of(complex(lam2) - complex(lam)) * bilinear_pairing(F, G, n_from, n_to, scaled=True)
    w_in = wronskian(F, G, n_to + 1, scaled=True)
    w_out = wronskian(F, G, n_from, scaled=True)
    rhs = w_in - w_out
    cond = wronskian_condition(F, G)
    scale_log = max(lhs.log_abs(), float(cond[lat.pos(n_to + 1) - 1]), float(cond[lat.pos(n_from) - 1]))
    diff = (lhs - rhs).log_abs()
    rel = 0.0 if diff == -math.inf else math.exp(diff - scale_log)
    return {"lhs": lhs, "rhs": rhs, "w_inner": w_in, "w_outer": w_out, "relative_residual": rel}
