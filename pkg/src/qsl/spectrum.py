"""Eigenvalues, residues and normalised eigenfunctions.

Eigenvalues are the real lambda at which the forward solution phi (boundary
condition at 0) is proportional to the decaying solution chi from the outer
edge, i.e. the zeros of W(chi, phi).  A dense symmetric tridiagonal matrix for
the same truncated problem, diagonalised by Sturm-sequence bisection, serves as
an independent check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericFailure, PreconditionError, StaleEigenvalueError, ValidationError
from .lattice import GridFunction, LatticeSpec, Scaled, interior_pairing, wronskian, wronskian_profile
from .solve import _lattice_of, init_fundamental, propagate_inward, propagate_outward
from .weyl import Method, m_function, psi as decaying_psi

__all__ = [
    "EigenPair",
    "SpectrumResult",
    "shooting_function",
    "eigencount",
    "find_eigenvalues",
    "residue",
    "eigenfunction",
    "residue_from_m",
    "gram_matrix",
    "oracle_matrix",
    "sturm_count",
    "dense_oracle",
    "match_index",
    "pole_pairing",
]

STALE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EigenPair:
    lambda_n: float
    residue_n: float
    psi_n: GridFunction
    bracket: tuple

    @property
    def norm(self) -> float:
        return float(np.real(interior_pairing(self.psi_n, self.psi_n)))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    pairs: tuple
    lattice: LatticeSpec
    alpha: float
    lambda_min: float
    lambda_max: float
    grid_points: int
    tol: float
    method: str = "decay-shooting"
    warnings: tuple = field(default=())
    u: GridFunction = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lambda_n for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


def _real_lambda(lam) -> float:
    z = complex(lam)
    if z.imag != 0.0:
        raise PreconditionError(f"lambda must be real, got {lam!r}")
    return z.real


def _pair_norm(f: GridFunction, n: int) -> Scaled:
    """sqrt(|f(n)|^2 + |f(n-1)|^2) as a scaled number."""
    a, b = f.scaled(n), f.scaled(n - 1)
    top = max(a.log, b.log)
    return Scaled(complex(math.hypot(abs(a.mantissa) * math.exp(a.log - top),
                                     abs(b.mantissa) * math.exp(b.log - top))), top)


def _phi(lam: float, u: GridFunction, alpha: float) -> GridFunction:
    seeds, _ = init_fundamental(lam, alpha, u.lattice)
    return propagate_outward(seeds, lam, u)


def _sign_changes(f: GridFunction) -> int:
    s = np.sign(f.mantissa[:-1].real)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _shoot(lam: float, u: GridFunction, alpha: float, chi_seed=1.0):
    phi = _phi(lam, u, alpha)
    chi = propagate_inward(lam, u, seeds=(0.0, chi_seed))
    mid = u.lattice.mid
    w = wronskian(chi, phi, mid, scaled=True)
    x = u.lattice.points[u.lattice.pos(mid)]
    scale = _pair_norm(chi, mid) * _pair_norm(phi, mid) * ((1.0 - u.lattice.q) / x)
    return complex(w / scale).real, phi, chi


def shooting_function(lam, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                      chi_seed: float = 1.0) -> float:
    """W(chi, phi) at the midpoint, divided by the positive factor
    (1-q)/x * |(chi(x), chi(x/q))| * |(phi(x), phi(x/q))|.

    The result lies in [-1, 1], is continuous in lambda and vanishes exactly
    at the eigenvalues of the truncated problem.  Only positive factors are
    used, so no sign flips are introduced by the normalisation.
    """
    _lattice_of(u, lattice)
    if chi_seed <= 0:
        raise ValidationError("chi seed must be positive")
    return _shoot(_real_lambda(lam), u, alpha, chi_seed)[0]


def eigencount(lam, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0) -> int:
    """Number of eigenvalues of the truncated problem below lambda (sign changes of phi)."""
    _lattice_of(u, lattice)
    return _sign_changes(_phi(_real_lambda(lam), u, alpha))


def _bisect(fn, lo, hi, f_lo, f_hi, tol, max_iter=200):
    """Bisect to width <= tol, then take the secant point of the final bracket."""
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid, mid, mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    if f_hi != f_lo:
        root = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        root = min(max(root, lo), hi)
    else:
        root = 0.5 * (lo + hi)
    return lo, hi, root


def find_eigenvalues(lambda_min: float, lambda_max: float, grid_points: int = 512, tol: float = 1e-10,
                     u: GridFunction = None, lattice: LatticeSpec = None, alpha: float = 0.0) -> SpectrumResult:
    """Scan the shooting function on a uniform grid, bisect every sign change to width <= tol.

    Each grid cell is also checked with the node count of phi; a cell holding
    two or more roots triggers a warning and one local refinement by 8.
    """
    if u is None:
        raise PreconditionError("a tabulated potential is required")
    lat = _lattice_of(u, lattice)
    if not lambda_min < lambda_max:
        raise PreconditionError("lambda_min must be smaller than lambda_max")
    if grid_points < 16:
        raise PreconditionError("grid_points must be at least 16")
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    if not u.is_real:
        raise PreconditionError("eigenvalue search needs a real potential")

    def sample(lam):
        s, phi, _ = _shoot(lam, u, alpha)
        return s, _sign_changes(phi)

    def s_only(lam):
        return _shoot(lam, u, alpha)[0]

    def count_only(lam):
        # shifted so that the sign flips where the count passes target
        return eigencount(lam, u, alpha=alpha) - target - 0.5

    notes = []
    roots = []

    def resolve_cell(a, b, sa, sb, ca, cb, refine):
        nonlocal target
        n_roots = cb - ca
        crossing = (sa < 0) != (sb < 0) and sa != 0 and sb != 0
        if n_roots <= 0 and not crossing:
            return
        if n_roots >= 2:
            if refine:
                notes.append(f"cell [{a:.17g}, {b:.17g}] holds {n_roots} roots; refining by 8")
                sub = np.linspace(a, b, 9)
                vals = [(sa, ca)] + [sample(x) for x in sub[1:-1]] + [(sb, cb)]
                for j in range(8):
                    resolve_cell(sub[j], sub[j + 1], vals[j][0], vals[j + 1][0],
                                 vals[j][1], vals[j + 1][1], False)
            else:
                notes.append(f"cell [{a:.17g}, {b:.17g}] still holds {n_roots} roots after refinement")
                target = ca
                _, _, root = _bisect(count_only, a, b, -0.5, 0.5, tol)
                roots.append((root, (a, b)))
            return
        if crossing:
            if n_roots != 1:
                notes.append(f"sign change without node-count change in [{a:.17g}, {b:.17g}]")
            _, _, root = _bisect(s_only, a, b, sa, sb, tol)
        else:
            notes.append(f"node count changes without a sign change in [{a:.17g}, {b:.17g}]")
            target = ca
            _, _, root = _bisect(count_only, a, b, -0.5, 0.5, tol)
        roots.append((root, (a, b)))

    target = 0
    grid = np.linspace(lambda_min, lambda_max, grid_points)
    samples = [sample(x) for x in grid]
    for i in range(grid_points - 1):
        resolve_cell(float(grid[i]), float(grid[i + 1]), samples[i][0], samples[i + 1][0],
                     samples[i][1], samples[i + 1][1], True)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    pairs = []
    for lam_n, bracket in sorted(roots):
        r = residue(lam_n, u, alpha=alpha)
        pairs.append(EigenPair(lam_n, r, eigenfunction(lam_n, r, u, alpha=alpha), bracket))
    return SpectrumResult(tuple(pairs), lat, float(alpha), float(lambda_min), float(lambda_max),
                          int(grid_points), float(tol), warnings=tuple(notes), u=u)


def _normalised_profile(f: GridFunction, g: GridFunction) -> np.ndarray:
    """log of |W_n(f, g)| / ((1-q)/x |(f_n, f_{n-1})| |(g_n, g_{n-1})|) for n_outer+1 .. n_inner."""
    lat = f.lattice
    wm, wl = wronskian_profile(f, g)
    with np.errstate(divide="ignore"):
        lw = np.log(np.abs(wm)) + wl
    la, lb = f.log_abs(), g.log_abs()
    na = 0.5 * np.logaddexp(2 * la[1:], 2 * la[:-1])
    nb = 0.5 * np.logaddexp(2 * lb[1:], 2 * lb[:-1])
    return lw - (np.log((1.0 - lat.q) / lat.points[1:]) + na + nb)


def match_index(chi: GridFunction, phi: GridFunction) -> int:
    """Index where chi and phi are closest to parallel.

    W(chi, phi) is the same at every index, so its normalised size is
    smallest where both solutions are large, i.e. in the bulk of the
    eigenfunction.  Outward of the bulk phi carries rounding-amplified growth
    and inward of it chi does, so that is where the two are matched.
    """
    prof = _normalised_profile(chi, phi)[1:]      # skip the pair containing chi(n_outer) = 0
    return int(chi.lattice.n_outer + 2 + int(np.argmin(prof)))


def _matched(lam: float, u: GridFunction, alpha: float, stale_tol: float) -> GridFunction:
    """phi inward of the match index, c*chi outward of it, c fitted on (k, k-1)."""
    _, phi, chi = _shoot(lam, u, alpha)
    k_idx = match_index(chi, phi)
    s = math.exp(_normalised_profile(chi, phi)[k_idx - u.lattice.n_outer - 1])
    if abs(s) > stale_tol:
        raise StaleEigenvalueError(
            f"lambda={lam!r} is not an eigenvalue: normalised W(chi, phi) = {s:.3e} at index {k_idx}")
    lat = u.lattice
    num = phi.scaled(k_idx) * chi.scaled(k_idx) + phi.scaled(k_idx - 1) * chi.scaled(k_idx - 1)
    den = chi.scaled(k_idx) * chi.scaled(k_idx) + chi.scaled(k_idx - 1) * chi.scaled(k_idx - 1)
    c = num / den
    k = lat.pos(k_idx)
    mant = np.array(phi.mantissa, dtype=float)
    logs = np.array(phi.logscale)
    mant[:k] = chi.mantissa[:k].real * c.mantissa.real
    logs[:k] = chi.logscale[:k] + c.log
    return GridFunction(lat, mant, logs).renormalized()


def residue(lambda_n, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
            stale_tol: float = STALE_TOL) -> float:
    """r_n = 1 / sum phi(., lambda_n)^2 over the interior.

    Beyond the midpoint phi is replaced by the matched decaying solution, which
    is what phi would be without the rounding-driven blow-up.
    """
    _lattice_of(u, lattice)
    f = _matched(_real_lambda(lambda_n), u, alpha, stale_tol)
    norm = interior_pairing(f, f, scaled=True)
    return float(complex(1.0 / norm).real)


def eigenfunction(lambda_n, r_n: float, u: GridFunction, lattice: LatticeSpec = None,
                  alpha: float = 0.0, stale_tol: float = STALE_TOL) -> GridFunction:
    """psi_n = sqrt(r_n) phi(., lambda_n), with the matched tail."""
    _lattice_of(u, lattice)
    if not r_n > 0:
        raise PreconditionError("residue must be positive")
    f = _matched(_real_lambda(lambda_n), u, alpha, stale_tol)
    return (f * math.sqrt(r_n)).resolved()


def _neville(xs, ys, x0=0.0):
    p = list(ys)
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = ((x0 - xs[i + k]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + k])
    return p[0]


def residue_from_m(lambda_n, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                   nus=(1e-2, 1e-3, 1e-4)) -> complex:
    """Residue of m at lambda_n: i*nu*m(lambda_n + i nu) extrapolated to nu = 0."""
    _lattice_of(u, lattice)
    lam = _real_lambda(lambda_n)
    ys = [1j * nu * m_function(lam + 1j * nu, u, method=Method.DECAYING_SOLUTION, alpha=alpha).m
          for nu in nus]
    return _neville(list(nus), ys)


def gram_matrix(spectrum: SpectrumResult, K: int) -> np.ndarray:
    """Matrix of sums psi_m psi_n over the interior; symmetric by construction."""
    if not 1 <= K <= len(spectrum.pairs):
        raise PreconditionError(f"K={K} outside 1..{len(spectrum.pairs)}")
    psis = [p.psi_n for p in spectrum.pairs[:K]]
    G = np.zeros((K, K))
    for i in range(K):
        for j in range(i, K):
            G[i, j] = G[j, i] = float(np.real(interior_pairing(psis[i], psis[j])))
    return G


def oracle_matrix(u: GridFunction, lattice: LatticeSpec = None, boundary_alpha: float = 0.0):
    """Diagonal and off-diagonal of the symmetrised truncated operator.

    Unknowns are f at n_outer+1 .. n_inner-1; f(n_outer) = 0 and the inner
    end is closed by f(n_inner) = rho f(n_inner - 1), the two-point version
    of the boundary condition used for phi.  ``off[k]`` couples unknowns k
    and k+1.  Both off-diagonal halves are formed independently from the
    stencil and compared.
    """
    lat = _lattice_of(u, lattice)
    if lat.size > 4096:
        raise PreconditionError("dense oracle is limited to windows of 4096 points")
    q = lat.q
    n = lat.indices[1:-1].astype(float)
    x = q ** n
    w = (1.0 - q) * x
    sa, ca = math.sin(boundary_alpha), math.cos(boundary_alpha)
    N = lat.n_inner
    den = sa - q ** (N - 1) * ca
    if den == 0.0:
        raise PreconditionError("boundary angle makes the inner closure singular")
    rho = (sa - q ** N * ca) / den
    diag = u.values.real[1:-1] + (1.0 + q) * q ** (-2.0 * n - 1.0)
    diag[-1] -= rho * q ** (-2.0 * N + 1.0)
    # stencil rows: L f(n) = u f(n) - [f(n-1) - (1+q)/q f(n) + f(n+1)/q] / x^2
    lower = -(1.0 / x[1:] ** 2) * np.sqrt(w[1:] / w[:-1])           # row n, column n-1
    upper = -(1.0 / (q * x[:-1] ** 2)) * np.sqrt(w[:-1] / w[1:])    # row n-1, column n
    off = -q ** (-2.0 * n[1:] + 0.5)
    scale = np.abs(off)
    if np.any(np.abs(lower - upper) > 1e-12 * scale) or np.any(np.abs(lower - off) > 1e-12 * scale):
        raise NumericFailure("oracle matrix is not symmetric; stencil symmetrisation is wrong")
    return diag, off


def sturm_count(diag: np.ndarray, off: np.ndarray, lam) -> np.ndarray:
    """Number of eigenvalues below each entry of ``lam`` (negative LDL^T pivots)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    count = np.zeros(lam.shape, dtype=int)
    tiny = np.finfo(float).tiny
    p = diag[0] - lam
    for i in range(len(diag)):
        if i:
            p = diag[i] - lam - off[i - 1] ** 2 / p
        p = np.where(p == 0.0, -tiny, p)
        count += p < 0
    return count


def dense_oracle(u: GridFunction, lattice: LatticeSpec = None, boundary_alpha: float = 0.0,
                 k: int = None) -> np.ndarray:
    """The lowest ``k`` (default all) eigenvalues of the truncated problem, ascending."""
    diag, off = oracle_matrix(u, lattice, boundary_alpha)
    size = len(diag)
    k = size if k is None else int(k)
    if not 0 <= k <= size:
        raise PreconditionError(f"k must lie in 0..{size}")
    radius = np.abs(np.concatenate(([0.0], off))) + np.abs(np.concatenate((off, [0.0])))
    lo = np.full(k, float(np.min(diag - radius)))
    hi = np.full(k, float(np.max(diag + radius)))
    target = np.arange(k)
    for _ in range(2100):
        mid = 0.5 * (lo + hi)
        done = (mid == lo) | (mid == hi) | (hi - lo <= 4 * np.finfo(float).eps * np.maximum(abs(lo), abs(hi)))
        if np.all(done):
            break
        below = sturm_count(diag, off, mid) > target
        hi = np.where(below & ~done, mid, hi)
        lo = np.where(~below & ~done, mid, lo)
    return 0.5 * (lo + hi)


def pole_pairing(lambda_n, u: GridFunction, lattice: LatticeSpec = None, alpha: float = 0.0,
                 offset=1j) -> complex:
    """sum over the interior of w psi(., lambda_n + offset) phi(., lambda_n); equals 1/offset.

    phi(., lambda_n) carries the matched decaying tail, as in ``residue``.
    """
    _lattice_of(u, lattice)
    lam = _real_lambda(lambda_n)
    f = _matched(lam, u, alpha, STALE_TOL)
    p = decaying_psi(lam + complex(offset), u, alpha=alpha)
    return complex(interior_pairing(p, f, scaled=True))
