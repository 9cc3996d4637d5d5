"""Weyl disks, limit-point/limit-circle classification and the m-function.

For non-real lambda the solutions theta + l*phi that satisfy a real boundary
condition at b = q^b_index trace a circle C_b in the l-plane.  The circles
shrink as b grows; their limit m(lambda) makes psi = theta + m*phi square
summable.  m is computed two ways: as the centre of the outermost reliable
disk, and from the decaying solution obtained by backward recursion.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import LatticeRangeError, NumericFailure, PreconditionError
from .lattice import (GridFunction, LatticeSpec, Scaled, interior_pairing, lambda_inv_dq,
                      scaled_cumsum, wronskian, wronskian_profile)
from .solve import SolutionPair, green_formula_check, propagate_inward, solution_pair

__all__ = [
    "WeylDisk",
    "Verdict",
    "Classification",
    "Method",
    "MFunctionValue",
    "IdentityReport",
    "l_map",
    "weyl_disk",
    "disk_ladder",
    "b_ladder",
    "classify",
    "m_function",
    "compare_methods",
    "psi",
    "weyl_identity_suite",
]

RADIUS_RTOL = 1e-8
MIN_RUNGS = 8
POLE = complex(math.inf, 0.0)


@dataclass(frozen=True)
class WeylDisk:
    """Disk C_b.  ``radius`` comes from the integral formula and may underflow
    to 0 for large b; ``log_radius`` is always usable."""

    center: complex
    radius: float
    b_index: int
    log_radius: float
    log_radius_wronskian: float

    @property
    def radius_mismatch(self) -> float:
        """|log r_wronskian - log r_integral|, i.e. the relative disagreement."""
        return abs(self.log_radius_wronskian - self.log_radius)


class Verdict(str, enum.Enum):
    LIMIT_POINT = "LimitPoint"
    LIMIT_CIRCLE = "LimitCircle"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    radii: tuple
    log_radii: tuple


class Method(str, enum.Enum):
    DISK_CENTER = "DiskCenter"
    DECAYING_SOLUTION = "DecayingSolution"


@dataclass(frozen=True)
class MFunctionValue:
    m: complex
    uncertainty: float
    method: Method
    b_index: int = None


def _nu(lam) -> float:
    nu = complex(lam).imag
    if nu == 0.0:
        raise PreconditionError("lambda must have a non-zero imaginary part")
    return nu


def l_map(pair: SolutionPair, b_index: int, z) -> complex:
    """l(z) = -(theta(b) z + D theta(b)) / (phi(b) z + D phi(b)), D = Lambda^-1 D_q.

    ``z = inf`` gives the asymptote -theta(b)/phi(b).  A vanishing
    denominator returns ``POLE`` instead of raising.
    """
    _nu(pair.lam)
    lat = pair.phi.lattice
    if not lat.n_outer + 1 <= b_index <= lat.n_inner - 1:
        raise LatticeRangeError(f"b_index {b_index} must be interior")
    th, ph = pair.theta.scaled(b_index), pair.phi.scaled(b_index)
    if isinstance(z, (int, float)) and math.isinf(z):
        num, den = th, ph
    else:
        z = complex(z)
        num = th * z + lambda_inv_dq(pair.theta, b_index, scaled=True)
        den = ph * z + lambda_inv_dq(pair.phi, b_index, scaled=True)
    if den.mantissa == 0:
        return POLE
    return complex(-(num / den))


def b_ladder(lattice: LatticeSpec, max_rungs: int = 40) -> list[int]:
    """Truncation indices from near 0 out to n_outer + 1 (b increasing)."""
    hi, lo = lattice.n_inner - 2, lattice.n_outer + 1
    if hi < lo:
        return []
    stride = max(1, math.ceil((hi - lo + 1) / max_rungs))
    rungs = list(range(hi, lo - 1, -stride))
    if rungs[-1] != lo:
        rungs.append(lo)
    return rungs


def disk_ladder(pair: SolutionPair, b_indices=None) -> list[WeylDisk]:
    """Weyl disks at every requested b (default: all interior indices, inner to outer)."""
    nu = _nu(pair.lam)
    phi, theta = pair.phi, pair.theta
    lat = phi.lattice
    if b_indices is None:
        b_indices = range(lat.n_inner - 1, lat.n_outer, -1)
    phib = phi.conj()
    w_pp_m, w_pp_l = wronskian_profile(phi, phib)
    w_tpb_m, w_tpb_l = wronskian_profile(theta, phib)
    w_tp_m, w_tp_l = wronskian_profile(theta, phi)
    # sum_{k=b}^{n_inner-1} w |phi|^2 for every b
    dens = np.abs(phi.mantissa[:-1]) ** 2 * lat.weights[:-1]
    cs_m, cs_l = scaled_cumsum(dens, 2.0 * phi.logscale[:-1], reverse=True)
    out = []
    for b in b_indices:
        if not lat.n_outer + 1 <= b <= lat.n_inner - 1:
            raise LatticeRangeError(f"b_index {b} must be interior")
        i = lat.pos(b)
        w_pp = Scaled(complex(w_pp_m[i - 1]), float(w_pp_l[i - 1]))
        w_tpb = Scaled(complex(w_tpb_m[i - 1]), float(w_tpb_l[i - 1]))
        w_tp = Scaled(complex(w_tp_m[i - 1]), float(w_tp_l[i - 1]))
        if w_pp.mantissa == 0:
            raise NumericFailure(f"W_b(phi, conj phi) vanishes at b_index {b}")
        center = complex(-(w_tpb / w_pp))
        integral = Scaled(complex(cs_m[i]), float(cs_l[i]))
        log_r = -math.log(2.0 * abs(nu)) - integral.log_abs()
        log_rw = w_tp.log_abs() - w_pp.log_abs()
        r = math.exp(log_r) if log_r > -745.0 else 0.0
        out.append(WeylDisk(center, r, int(b), log_r, log_rw))
    return out


def weyl_disk(pair: SolutionPair, b_index: int, check: bool = True) -> WeylDisk:
    """Centre -W_b(theta, conj phi)/W_b(phi, conj phi); radius from both
    |W_b(theta, phi)/W_b(phi, conj phi)| and 1/(2|nu| sum |phi|^2).

    With ``check`` the two radii must agree to 1e-8 relative.
    """
    (disk,) = disk_ladder(pair, [b_index])
    if check and not disk.radius_mismatch <= RADIUS_RTOL:
        raise NumericFailure(
            f"radius formulas disagree at b_index {b_index}: relative mismatch "
            f"{math.expm1(disk.radius_mismatch):.3e}")
    return disk


def classify(lam, u: GridFunction, lattice: LatticeSpec = None, tol: float = 1e-6,
             alpha: float = 0.0) -> Classification:
    """Limit-point / limit-circle verdict from the radius ladder.

    LimitPoint when the last radius falls below tol times the first; LimitCircle
    when the last three rungs change by less than tol while staying above that
    floor; Undetermined otherwise or when the window yields fewer than 8 rungs.
    """
    _nu(lam)
    pair = solution_pair(lam, u, alpha, lattice)
    rungs = b_ladder(pair.phi.lattice)
    disks = disk_ladder(pair, rungs) if rungs else []
    radii = tuple((d.b_index, d.radius) for d in disks)
    logs = tuple(d.log_radius for d in disks)
    if len(disks) < MIN_RUNGS:
        return Classification(Verdict.UNDETERMINED, radii, logs)
    floor = math.log(tol) + logs[0]
    if logs[-1] < floor:
        verdict = Verdict.LIMIT_POINT
    elif all(abs(math.expm1(logs[k] - logs[k - 1])) < tol for k in (-1, -2)):
        verdict = Verdict.LIMIT_CIRCLE
    else:
        verdict = Verdict.UNDETERMINED
    return Classification(verdict, radii, logs)


def _decaying(lam, u, lattice, alpha, spread_halfwidth=2):
    pair = solution_pair(lam, u, alpha, lattice)
    lat = pair.phi.lattice
    chi = propagate_inward(lam, u)
    mid = lat.mid
    ms = []
    for k in range(max(lat.n_outer + 1, mid - spread_halfwidth), min(lat.n_inner, mid + spread_halfwidth) + 1):
        w_cp = wronskian(chi, pair.phi, k, scaled=True)
        if w_cp.mantissa == 0:
            raise NumericFailure(f"W(chi, phi) vanishes at index {k}; lambda is an eigenvalue")
        ms.append((k, complex(-(wronskian(chi, pair.theta, k, scaled=True) / w_cp))))
    m = dict(ms)[mid]
    spread = max(abs(v - m) for _, v in ms)
    c = wronskian(chi, pair.phi, mid, scaled=True)
    psi_fn = (chi * (-1.0 / c)).renormalized()
    return pair, chi, m, spread, psi_fn


def m_function(lam, u: GridFunction, lattice: LatticeSpec = None, method: Method = Method.DECAYING_SOLUTION,
               alpha: float = 0.0) -> MFunctionValue:
    """m(lambda) by the requested method.

    DiskCenter uses the outermost b up to which the disks are numerically
    consistent (both radius formulas agree); beyond that point the forward
    solutions phi and theta have lost their mutual Wronskian to rounding.
    DecayingSolution uses m = -W(chi, theta)/W(chi, phi) at the window midpoint.
    """
    _nu(lam)
    method = Method(method)
    if method is Method.DECAYING_SOLUTION:
        _, _, m, spread, _ = _decaying(lam, u, lattice, alpha)
        return MFunctionValue(m, spread, method, None)
    pair = solution_pair(lam, u, alpha, lattice)
    best = None
    for disk in disk_ladder(pair):
        if not disk.radius_mismatch <= RADIUS_RTOL:
            break
        best = disk
    if best is None:
        raise NumericFailure("no numerically consistent Weyl disk in the window")
    return MFunctionValue(best.center, best.radius, method, best.b_index)


def compare_methods(lam, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                    floor: float = 1e-6):
    """Both m estimates; raises NumericFailure when they differ by more than
    max(2 * disk radius, floor)."""
    disk = m_function(lam, u, lattice, Method.DISK_CENTER, alpha)
    decay = m_function(lam, u, lattice, Method.DECAYING_SOLUTION, alpha)
    bound = max(2.0 * disk.uncertainty, floor)
    if abs(disk.m - decay.m) > bound:
        raise NumericFailure(f"m-function methods disagree: |{disk.m} - {decay.m}| > {bound:.3e}")
    return disk, decay


def psi(lam, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0) -> GridFunction:
    """The square-summable solution psi = theta + m phi.

    Built as -chi / W(chi, phi) from the backward solution chi, which equals
    theta + m phi on the lattice but does not suffer the cancellation of
    forming theta + m phi where both are huge.
    """
    _nu(lam)
    return _decaying(lam, u, lattice, alpha)[4]


@dataclass(frozen=True)
class IdentityReport:
    pairing_residual: float
    pairing_integral: complex
    pairing_target: complex
    tail_profile: tuple
    mid_wronskian: float
    tail_ratio: float
    imag_part_residual: float
    norm_residual: float


def weyl_identity_suite(lam, lam2, u: GridFunction, lattice: LatticeSpec = None,
                        alpha: float = 0.0, tail_points: int = 4) -> IdentityReport:
    """Residuals of the psi-pairing identity, the Wronskian tail and the imaginary-part identity.

    (a) |sum psi(lam) psi(lam2) - (m(lam) - m(lam2))/(lam2 - lam)| relative to the target;
    (b) |W_x(psi(lam), psi(lam2))| at the outermost indices and at the midpoint;
    (c) the imaginary-part identity for psi(lam) over the interior, plus
        |sum |psi|^2 + Im m / nu| relative.
    """
    nu = _nu(lam)
    _nu(lam2)
    if complex(lam) == complex(lam2):
        raise PreconditionError("lam and lam2 must differ")
    _, _, m1, _, p1 = _decaying(lam, u, lattice, alpha)
    _, _, m2, _, p2 = _decaying(lam2, u, lattice, alpha)
    lat = p1.lattice
    integral = complex(interior_pairing(p1, p2, scaled=True))
    target = (m1 - m2) / (complex(lam2) - complex(lam))
    pairing = abs(integral - target) / abs(target)
    tail = tuple((n, abs(wronskian(p1, p2, n, scaled=True)))
                 for n in range(lat.n_outer + 1, lat.n_outer + 1 + tail_points))
    w_mid = abs(wronskian(p1, p2, lat.mid, scaled=True))
    tail_max = max(t for _, t in tail)
    ratio = math.inf if tail_max == 0 else w_mid / tail_max
    g = green_formula_check(p1, p1.conj(), lam, complex(lam).conjugate(), lat.n_outer + 1, lat.n_inner - 1)
    norm = complex(interior_pairing(p1, p1.conj(), scaled=True)).real
    norm_target = -m1.imag / nu
    return IdentityReport(pairing, integral, target, tail, w_mid, ratio, g["relative_residual"],
                          abs(norm - norm_target) / abs(norm_target))
