"""Eigenfunction expansions and the Green's function.

Fourier coefficients c_n = sum w psi_n f, Parseval and pointwise
reconstruction, the kernel G(x, y) = -psi(x) phi(y) for y <= x, and the
transform Phi = -sum G f which inverts L - lambda on the truncated lattice.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, PreconditionError
from .lattice import (GridFunction, LatticeSpec, Scaled, bilinear_pairing, interior_pairing,
                      scaled_cumsum, wronskian, wronskian_profile)
from .solve import _lattice_of, _stencil_parts, apply_L, boundary_data, propagate_inward, solution_pair
from .spectrum import SpectrumResult
from .weyl import psi as psi_solution

__all__ = [
    "ExpansionReport",
    "TestFunctionClass",
    "ResolventReport",
    "GreenKernel",
    "fourier_coefficients",
    "parseval_report",
    "reconstruct",
    "greens_function",
    "phi_transform",
    "phi_transform_kernel",
    "resolvent_suite",
    "membership_check",
    "bessel_bound",
    "support_band",
]

MEMBERSHIP_TOL = 1e-8
DECAY_TOL = 1e-6


def _pairs(spectrum: SpectrumResult, K):
    K = len(spectrum.pairs) if K is None else int(K)
    if not 0 <= K <= len(spectrum.pairs):
        raise PreconditionError(f"K={K} exceeds the {len(spectrum.pairs)} available eigenpairs")
    return spectrum.pairs[:K]


def _same(f: GridFunction, lattice: LatticeSpec):
    if f.lattice != lattice:
        raise ContractError("function and spectrum live on different lattices")


def _real_if_possible(a: np.ndarray) -> np.ndarray:
    return a.real.copy() if not np.any(a.imag) else a


def support_band(f: GridFunction):
    """(first, last) lattice index where f is non-zero, or None for f = 0."""
    nz = np.flatnonzero(f.mantissa != 0)
    if len(nz) == 0:
        return None
    n0 = f.lattice.n_outer
    return int(nz[0]) + n0, int(nz[-1]) + n0


def fourier_coefficients(f: GridFunction, spectrum: SpectrumResult, K: int = None) -> np.ndarray:
    """c_n = sum over the window of w psi_n f, for the first K eigenpairs."""
    _same(f, spectrum.lattice)
    c = np.array([complex(bilinear_pairing(p.psi_n, f)) for p in _pairs(spectrum, K)], dtype=complex)
    return _real_if_possible(c)


# membership ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunctionClass:
    """Flags for the admissible class: L f square summable, a boundary condition
    at 0 (both sign conventions reported), Wronskian decay at the outer edge."""

    __test__ = False

    f: GridFunction
    lf_in_l2: bool
    bc_derivative: bool
    bc_phi: bool
    wronskian_decay: bool

    @property
    def boundary_ok(self) -> bool:
        return self.bc_derivative or self.bc_phi

    @property
    def member(self) -> bool:
        return self.lf_in_l2 and self.boundary_ok and self.wronskian_decay


def _logsumexp(a: np.ndarray) -> float:
    a = a[np.isfinite(a)]
    if len(a) == 0:
        return -math.inf
    top = float(np.max(a))
    return top + math.log(float(np.sum(np.exp(a - top))))


def membership_check(f: GridFunction, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                     lambda_probe=1j, tail: int = 4) -> TestFunctionClass:
    """Evaluate the class conditions on the truncated lattice.

    On a finite window every sum is finite, so square summability is judged by
    the share of sum w |L f|^2 carried by the ``tail`` outermost interior
    points (at most 1e-8).  The boundary condition uses the two-point data of
    ``boundary_data`` under both conventions: f'(0) cos a - f(0) sin a = 0 and
    f(0) cos a + f'(0) sin a = 0.  Wronskian decay compares |W(psi, f)| at the
    outer edge with its largest value over the window (ratio at most 1e-6).
    """
    lat = _lattice_of(u, lattice)
    _same(f, lat)
    lf = apply_L(f, u)
    dens = 2.0 * lf.log_abs()[1:-1] + np.log(lat.weights[1:-1])
    total = _logsumexp(dens)
    tail_part = _logsumexp(dens[:tail])
    lf_ok = bool(np.all(np.isfinite(lf.mantissa))) and (
        total == -math.inf or tail_part - total <= math.log(MEMBERSHIP_TOL))

    bd = boundary_data(f)
    sa, ca = math.sin(alpha), math.cos(alpha)
    scale = max(abs(bd.f0), abs(bd.f1))
    bc_derivative = abs(bd.f1 * ca - bd.f0 * sa) <= MEMBERSHIP_TOL * scale
    bc_phi = abs(bd.f0 * ca + bd.f1 * sa) <= MEMBERSHIP_TOL * scale

    p = psi_solution(lambda_probe, u, alpha=alpha)
    wm, wl = wronskian_profile(p, f)
    with np.errstate(divide="ignore"):
        wlog = np.log(np.abs(wm)) + wl
    peak = float(np.max(wlog))
    outer = float(np.max(wlog[:tail]))
    decay = peak == -math.inf or outer - peak <= math.log(DECAY_TOL)
    return TestFunctionClass(f, lf_ok, bool(bc_derivative), bool(bc_phi), bool(decay))


# Parseval and reconstruction ------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExpansionReport:
    coefficients: np.ndarray
    lhs: float
    rhs: float
    K: int
    bessel_sums: np.ndarray
    pointwise_max_residual: float
    shift_lambda: complex
    shift_law_residual: float
    convergence_sums: np.ndarray
    convergence_bound: float
    bilinear_lhs: complex = None
    bilinear_rhs: complex = None

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @property
    def bessel_monotone(self) -> bool:
        return bool(np.all(np.diff(self.bessel_sums) >= 0))

    @property
    def convergence_bounded(self) -> bool:
        s = self.convergence_sums
        return bool(np.all(np.diff(s) >= 0) and (len(s) == 0 or s[-1] <= self.convergence_bound * (1 + 1e-9)))

    def to_dict(self) -> dict:
        out = {
            "K": self.K,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "relative_gap": self.gap / self.lhs if self.lhs else 0.0,
            "pointwise_max_residual": self.pointwise_max_residual,
            "bessel_monotone": self.bessel_monotone,
            "shift_lambda": [self.shift_lambda.real, self.shift_lambda.imag],
            "shift_law_residual": self.shift_law_residual,
            "convergence_bounded": self.convergence_bounded,
            "coefficients": [float(c) for c in np.real(self.coefficients)],
        }
        if self.bilinear_lhs is not None:
            out["bilinear_lhs"] = [self.bilinear_lhs.real, self.bilinear_lhs.imag]
            out["bilinear_rhs"] = [self.bilinear_rhs.real, self.bilinear_rhs.imag]
        return out


def _require_member(f, u, alpha):
    cls = membership_check(f, u, alpha=alpha)
    if not cls.member:
        raise PreconditionError(
            f"f is not in the admissible class (Lf in L2: {cls.lf_in_l2}, boundary condition: "
            f"{cls.boundary_ok}, Wronskian decay: {cls.wronskian_decay})")


def reconstruct(f: GridFunction, spectrum: SpectrumResult, K: int = None, coefficients=None):
    """Partial sum sum_{n<K} c_n psi_n and its max deviation from f on f's support band."""
    _same(f, spectrum.lattice)
    pairs = _pairs(spectrum, K)
    c = fourier_coefficients(f, spectrum, len(pairs)) if coefficients is None else coefficients
    total = np.zeros(f.lattice.size, dtype=complex)
    for cn, p in zip(c, pairs):
        total += cn * p.psi_n.values
    total = _real_if_possible(total)
    band = support_band(f)
    fv = f.values
    if band is None:
        sl = slice(None)
    else:
        sl = slice(f.lattice.pos(band[0]), f.lattice.pos(band[1]) + 1)
    resid = float(np.max(np.abs(total[sl] - fv[sl]))) if f.lattice.size else 0.0
    return GridFunction(f.lattice, total), resid


def parseval_report(f: GridFunction, spectrum: SpectrumResult, K: int = None, g: GridFunction = None,
                    lam=1j, check_membership: bool = True) -> ExpansionReport:
    """Parseval sums, the bilinear Parseval form and the coefficient shift law.

    The shift law compares d_n, the coefficients of L f - lam f, with
    (lambda_n - lam) c_n.
    """
    u = spectrum.u
    if u is None:
        raise PreconditionError("spectrum carries no potential")
    _same(f, spectrum.lattice)
    if check_membership:
        _require_member(f, u, spectrum.alpha)
    pairs = _pairs(spectrum, K)
    K = len(pairs)
    c = fourier_coefficients(f, spectrum, K)
    lhs = float(complex(bilinear_pairing(f, f)).real)
    sums = np.cumsum(np.abs(c) ** 2)
    _, resid = reconstruct(f, spectrum, K, c)

    lam = complex(lam)
    h = apply_L(f, u) - f * lam
    d = fourier_coefficients(h, spectrum, K)
    lams = np.array([p.lambda_n for p in pairs])
    shift = float(np.max(np.abs(d - (lams - lam) * c))) if K else 0.0
    conv = np.cumsum(np.abs(lams - lam) ** 2 * np.abs(c) ** 2)
    bound = float(complex(bilinear_pairing(h, h.conj())).real)

    b_lhs = b_rhs = None
    if g is not None:
        _same(g, spectrum.lattice)
        dg = fourier_coefficients(g, spectrum, K)
        b_lhs = complex(bilinear_pairing(f, g))
        b_rhs = complex(np.sum(c * dg))
    return ExpansionReport(c, lhs, float(sums[-1]) if K else 0.0, K, sums, resid, lam, shift,
                           conv, bound, b_lhs, b_rhs)


# Green's function -------------------------------------------------------------

class GreenKernel:
    """G(x, y, lam) = -psi(x) phi(y) for y <= x and -psi(y) phi(x) otherwise.

    psi = -chi / W(chi, phi) from the decaying solution, so psi vanishes at the
    outer edge and G is exactly the inverse of L - lam on the truncated window.
    Real lam is allowed away from the spectrum; a near-singular lam warns.
    """

    def __init__(self, lam, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                 near_tol: float = 1e-8):
        self.lattice = _lattice_of(u, lattice)
        self.lam = complex(lam)
        self.alpha = float(alpha)
        pair = solution_pair(self.lam, u, alpha)
        chi = propagate_inward(self.lam, u)
        mid = self.lattice.mid
        w = wronskian(chi, pair.phi, mid, scaled=True)
        i = self.lattice.pos(mid)
        size = (math.log((1.0 - self.lattice.q) / self.lattice.points[i])
                + chi.log_abs()[i - 1:i + 1].max() + pair.phi.log_abs()[i - 1:i + 1].max())
        if w.mantissa == 0 or w.log_abs() - size < math.log(near_tol):
            warnings.warn(f"lambda={self.lam} is close to an eigenvalue; the Green's function is near-singular",
                          RuntimeWarning, stacklevel=2)
        self.phi = pair.phi
        self.psi = (chi * (-1.0 / w)).renormalized()

    def value(self, x_index: int, y_index: int) -> complex:
        n, k = int(x_index), int(y_index)
        if k >= n:  # y <= x
            v = -(self.psi.scaled(n) * self.phi.scaled(k))
        else:
            v = -(self.psi.scaled(k) * self.phi.scaled(n))
        return complex(v)

    def row(self, x_index: int) -> GridFunction:
        """y -> G(x, y) over the window."""
        lat = self.lattice
        i = lat.pos(x_index)
        mant = np.empty(lat.size, dtype=complex)
        logs = np.empty(lat.size)
        mant[i:] = -self.psi.mantissa[i] * self.phi.mantissa[i:]
        logs[i:] = self.psi.logscale[i] + self.phi.logscale[i:]
        mant[:i] = -self.psi.mantissa[:i] * self.phi.mantissa[i]
        logs[:i] = self.psi.logscale[:i] + self.phi.logscale[i]
        return GridFunction(lat, mant, logs).renormalized()

    def apply(self, h: GridFunction) -> GridFunction:
        """x -> sum_y w(y) G(x, y) h(y), row by row (quadratic cost)."""
        _same(h, self.lattice)
        vals = [bilinear_pairing(self.row(n), h, scaled=True) for n in self.lattice.indices]
        return GridFunction(self.lattice, np.array([v.mantissa for v in vals]),
                            np.array([v.log for v in vals]))

    def row_norm(self, x_index: int) -> float:
        """sum over the interior of w |G(x, .)|^2."""
        r = self.row(x_index)
        return float(complex(interior_pairing(r, r.conj())).real)


def greens_function(x_index: int, y_index: int, lam, u: GridFunction, lattice: LatticeSpec = None,
                    alpha: float = 0.0) -> complex:
    return GreenKernel(lam, u, lattice, alpha).value(x_index, y_index)


def _weighted_product(a: GridFunction, b: GridFunction):
    return a.mantissa * b.mantissa * a.lattice.weights, a.logscale + b.logscale


def _scaled_add(m1, l1, m2, l2):
    l1 = np.where(m1 != 0, l1, -np.inf)
    l2 = np.where(m2 != 0, l2, -np.inf)
    top = np.maximum(l1, l2)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(under="ignore"):
        return m1 * np.exp(l1 - top) + m2 * np.exp(l2 - top), top


def phi_transform(f: GridFunction, lam, u: GridFunction, lattice: LatticeSpec = None,
                  alpha: float = 0.0, kernel: GreenKernel = None) -> GridFunction:
    """Phi(x) = psi(x) sum_{y<=x} w phi f + phi(x) sum_{y>x} w psi f by prefix sums.

    "y <= x" includes the point x itself; the sum over y > x starts at x/q.
    """
    lat = _lattice_of(u, lattice)
    _same(f, lat)
    k = kernel if kernel is not None else GreenKernel(lam, u, lat, alpha)
    am, al = _weighted_product(k.phi, f)
    A_m, A_l = scaled_cumsum(am, al, reverse=True)            # k >= n
    bm, bl = _weighted_product(k.psi, f)
    B_m, B_l = scaled_cumsum(bm, bl)                          # k <= n
    B_m = np.concatenate(([0j], B_m[:-1]))                    # k < n
    B_l = np.concatenate(([0.0], B_l[:-1]))
    m, l = _scaled_add(k.psi.mantissa * A_m, k.psi.logscale + A_l,
                       k.phi.mantissa * B_m, k.phi.logscale + B_l)
    return GridFunction(lat, m, l).renormalized()


def phi_transform_kernel(f: GridFunction, lam, u: GridFunction, lattice: LatticeSpec = None,
                         alpha: float = 0.0, kernel: GreenKernel = None) -> GridFunction:
    """Phi = -sum_y w G(., y) f(y) evaluated row by row."""
    lat = _lattice_of(u, lattice)
    k = kernel if kernel is not None else GreenKernel(lam, u, lat, alpha)
    return -k.apply(f)


# resolvent identities ----------------------------------------------------------

@dataclass(frozen=True)
class ResolventReport:
    stencil: float
    representation: float
    kernel_form: float
    phi_norm: float
    bound: float

    @property
    def bound_strict(self) -> bool:
        return self.phi_norm < self.bound


def _max_abs(g: GridFunction) -> float:
    return float(np.max(np.abs(g.values)))


def _stencil_identity(Phi: GridFunction, f: GridFunction, lam, u: GridFunction) -> float:
    """max_n |Delta_q Phi - (u - lam) Phi - f| relative to the largest term at n."""
    lat = Phi.lattice
    q = lat.q
    x2 = lat.points[1:-1] ** 2
    mo, mc, mi, top = _stencil_parts(Phi)
    fv = f.values[1:-1]
    with np.errstate(over="ignore", under="ignore"):
        fm = np.where(fv == 0, 0, fv * np.exp(-top))
    t = np.stack([mo / x2, -(1.0 + q) / q * mc / x2, mi / (q * x2),
                  -(u.values[1:-1] - complex(lam)) * mc, -fm])
    res = np.abs(t.sum(axis=0))
    scale = np.abs(t).max(axis=0)
    ok = scale > 0
    return float(np.max(res[ok] / scale[ok])) if np.any(ok) else 0.0


def resolvent_suite(f: GridFunction, lam, u: GridFunction, lattice: LatticeSpec = None,
                    alpha: float = 0.0) -> ResolventReport:
    """(a) stencil identity for Phi, (b) Phi(f) = (f + Phi(Lf)) / lam,
    (c) f = sum G (Lf - lam f) through the kernel, (d) sum |Phi|^2 against sum |f|^2 / nu^2.

    (a) is relative per index to the largest stencil term, (b) to the largest
    of max |Phi|, max |f|/|lam| and max |Phi(Lf)|/|lam|, (c) to max |f|.
    """
    lat = _lattice_of(u, lattice)
    _same(f, lat)
    lam = complex(lam)
    if lam.imag == 0.0:
        raise PreconditionError("lambda must have a non-zero imaginary part")
    band = support_band(f)
    if band is not None and not (lat.n_outer + 2 <= band[0] and band[1] <= lat.n_inner - 2):
        raise PreconditionError("f must vanish on the two outermost and two innermost points")
    k = GreenKernel(lam, u, lat, alpha)
    Phi = phi_transform(f, lam, u, lat, alpha, kernel=k)
    lf = apply_L(f, u)
    a = _stencil_identity(Phi, f, lam, u)

    if band is None:
        return ResolventReport(a, 0.0, 0.0, 0.0, 0.0)
    phi_lf = phi_transform(lf, lam, u, lat, alpha, kernel=k)
    rhs5 = (f + phi_lf) * (1.0 / lam)
    # f/lam and Phi(Lf)/lam nearly cancel when f sits close to 0, so the
    # residual is measured against the largest term rather than against Phi
    scale5 = max(_max_abs(Phi), (_max_abs(f) + _max_abs(phi_lf)) / abs(lam))
    b = _max_abs(Phi - rhs5) / scale5
    h = lf - f * lam
    c = _max_abs(f - k.apply(h)) / _max_abs(f)
    norm_phi = float(complex(interior_pairing(Phi, Phi.conj())).real)
    norm_f = float(complex(interior_pairing(f, f.conj())).real)
    return ResolventReport(a, b, c, norm_phi, norm_f / lam.imag ** 2)


def bessel_bound(x_index: int, lam, spectrum: SpectrumResult, K: int = None):
    """(sum_{n<K} |psi_n(x) / (lambda_n - lam)|^2, sum over the interior of w |G(x, .)|^2)."""
    u = spectrum.u
    if u is None:
        raise PreconditionError("spectrum carries no potential")
    lam = complex(lam)
    lhs = 0.0
    for p in _pairs(spectrum, K):
        lhs += abs(p.psi_n[x_index] / (p.lambda_n - lam)) ** 2
    k = GreenKernel(lam, u, spectrum.lattice, spectrum.alpha)
    return lhs, k.row_norm(x_index)
