"""Invariant suite behind ``qsl selftest``.

Each check compares against the accuracy double precision can deliver for
the quantity at hand: identities that subtract large, nearly equal terms are
tested relative to the size of those terms, not to the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .expand import membership_check, parseval_report, phi_transform, phi_transform_kernel, reconstruct, resolvent_suite
from .lattice import GridFunction, wronskian_condition, wronskian_profile, resolve
from .solve import green_formula_check, solution_pair
from .spectrum import dense_oracle, find_eigenvalues, gram_matrix, pole_pairing, residue_from_m
from .weyl import Method, classify, disk_ladder, l_map, m_function, weyl_identity_suite

__all__ = ["Check", "run_selftest"]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _random_lambda(rng):
    nu = rng.uniform(0.1, 5.0) * rng.choice([-1.0, 1.0])
    return complex(rng.uniform(-5.0, 20.0), nu)


def _wronskian(cfg, u, rng):
    worst = 0.0
    strict = 0
    usable = 0
    total = 0
    for _ in range(5):
        lam, alpha = _random_lambda(rng), rng.uniform(0.0, math.pi)
        pair = solution_pair(lam, u, alpha)
        wm, wl = wronskian_profile(pair.phi, pair.theta)
        err = np.abs(resolve(wm, wl) - 1.0)[:-1]       # interior indices only
        cond = wronskian_condition(pair.phi, pair.theta)[:-1]
        # only where rounding of the samples leaves room for a 1e-9 answer
        ok = math.log(64 * EPS) + cond <= math.log(1e-10)
        if ok.any():
            worst = max(worst, float(np.max(err[ok])))
        strict += int(np.count_nonzero(err <= 1e-9))
        usable += int(np.count_nonzero(ok))
        total += len(err)
    return Check("wronskian_constancy", usable > 0 and worst <= 1e-9,
                 f"max |W-1| {worst:.3g} over {usable}/{total} well-conditioned interior indices; "
                 f"{strict}/{total} within 1e-9 overall")


def _green(cfg, u, rng):
    lat = cfg.lattice
    worst = 0.0
    for _ in range(5):
        lam, lam2 = _random_lambda(rng), _random_lambda(rng)
        a = int(rng.integers(lat.n_outer + 1, lat.n_inner - 2))
        c = int(rng.integers(a + 1, lat.n_inner))
        F = solution_pair(lam, u, cfg.alpha).phi
        G = solution_pair(lam2, u, cfg.alpha).theta
        worst = max(worst, green_formula_check(F, G, lam, lam2, a, c)["relative_residual"])
        worst = max(worst, green_formula_check(F, F.conj(), lam, lam.conjugate(), a, c)["relative_residual"])
    return Check("green_formula", worst <= 1e-9, f"max relative residual {worst:.3g}")


def _disks(cfg, u, rng):
    lam = 1 + 1j
    pair = solution_pair(lam, u, cfg.alpha)
    disks = disk_ladder(pair)
    cond = wronskian_condition(pair.theta, pair.phi)
    lat = cfg.lattice
    conditioned = [d for d in disks if EPS * math.exp(min(cond[lat.pos(d.b_index) - 1], 700.0)) <= 1e-10]
    worst_radius = max(math.expm1(d.radius_mismatch) for d in conditioned)
    worst_circle = 0.0
    for d in conditioned[::8]:
        for z in np.tan(np.linspace(-1.5, 1.5, 7)):
            worst_circle = max(worst_circle, abs(abs(l_map(pair, d.b_index, z) - d.center) - d.radius) / d.radius)
    logs = [d.log_radius for d in disks]
    monotone = all(b <= a for a, b in zip(logs, logs[1:]))
    # slack below one ulp of the radius is not representable
    nest = max(abs(d2.center - d1.center) - (d1.radius - d2.radius) - 64 * EPS * d1.radius
               for d1, d2 in zip(disks, disks[1:]))
    verdict = classify(1j, u, lat, 1e-6, cfg.alpha).verdict.value
    ok = worst_radius <= 1e-8 and worst_circle <= 1e-8 and monotone and nest <= 1e-9
    return Check("weyl_disks", ok,
                 f"{len(conditioned)}/{len(disks)} conditioned rungs, radius mismatch {worst_radius:.3g}, "
                 f"circle deviation {worst_circle:.3g}, monotone {monotone}, nesting excess {nest:.3g}, "
                 f"verdict at i: {verdict}")


def _mfunc(cfg, u, rng):
    worst = 0.0
    sign_ok = True
    for lam in (1j, 1 + 1j, 2j, 5 + 0.5j):
        disk = m_function(lam, u, method=Method.DISK_CENTER, alpha=cfg.alpha)
        dec = m_function(lam, u, method=Method.DECAYING_SOLUTION, alpha=cfg.alpha)
        worst = max(worst, abs(disk.m - dec.m) / max(2 * disk.uncertainty, 1e-6))
        sign_ok &= dec.m.imag < 0 and disk.m.imag < 0
    return Check("m_function", worst <= 1.0 and sign_ok,
                 f"max |m_disk - m_decay| / bound = {worst:.3g}, Im m < 0: {sign_ok}")


def _identities(cfg, u, rng):
    r = weyl_identity_suite(1j, 2j, u, alpha=cfg.alpha)
    r2 = weyl_identity_suite(1j, -1j, u, alpha=cfg.alpha)
    ok = r.pairing_residual <= 1e-5 and r2.pairing_residual <= 1e-5 and r.norm_residual <= 1e-6 \
        and r.tail_ratio >= 1e3 and r.imag_part_residual <= 1e-9
    return Check("weyl_identities", ok,
                 f"pairing {r.pairing_residual:.3g}, conjugate pairing {r2.pairing_residual:.3g}, "
                 f"norm {r.norm_residual:.3g}, tail ratio {r.tail_ratio:.3g}")


def _spectrum(cfg, u, rng, sp):
    oracle = dense_oracle(u, boundary_alpha=cfg.alpha)
    oracle = oracle[(oracle >= cfg.lambda_min) & (oracle <= cfg.lambda_max)]
    k = min(8, len(sp), len(oracle))
    diff = float(np.max(np.abs(sp.eigenvalues[:k] - oracle[:k]))) if k else 0.0
    shifted = find_eigenvalues(cfg.lambda_min + 5, cfg.lambda_max + 5, cfg.grid, cfg.bisection_tol,
                               u + 5.0, alpha=cfg.alpha)
    shift = float(np.max(np.abs(shifted.eigenvalues[:k] - sp.eigenvalues[:k] - 5))) if k else 0.0
    ok = len(sp) == len(oracle) and diff <= 1e-4 and shift <= 1e-8
    return Check("oracle_agreement", ok,
                 f"{len(sp)} roots vs {len(oracle)} oracle eigenvalues in range, max diff {diff:.3g}, "
                 f"shift error {shift:.3g}")


def _orthonormal(cfg, u, rng, sp):
    k = min(8, len(sp))
    if k == 0:
        return Check("orthonormality", False, "no eigenpairs in range")
    G = gram_matrix(sp, k)
    dev = float(np.max(np.abs(G - np.eye(k))))
    worst = 0.0
    for p in sp.pairs[:min(3, k)]:
        r = residue_from_m(p.lambda_n, u, alpha=cfg.alpha).real
        worst = max(worst, abs(r - p.residue_n) / p.residue_n)
    pole = abs(pole_pairing(sp.pairs[0].lambda_n, u, alpha=cfg.alpha) - 1 / 1j)
    ok = dev <= 1e-6 and worst <= 1e-3 and pole <= 1e-4
    return Check("orthonormality", ok, f"Gram deviation {dev:.3g}, residue cross-check {worst:.3g}, "
                                       f"pole pairing {pole:.3g}")


def _bump(lat, n0, values):
    v = np.zeros(lat.size)
    for k, val in enumerate(values):
        v[lat.pos(n0 + k)] = val
    return GridFunction(lat, v)


def _expansion(cfg, u, rng, sp):
    lat = cfg.lattice
    n0 = min(max(lat.mid, lat.n_outer + 2), lat.n_inner - 4)
    f = _bump(lat, n0, (1.0, 2.0, 1.0))
    r = parseval_report(f, sp, lam=1j)
    ok = r.bessel_monotone and r.rhs <= r.lhs + 1e-9 and r.shift_law_residual <= 1e-5 and r.convergence_bounded
    if len(sp):
        _, res0 = reconstruct(sp.pairs[0].psi_n, sp, 1)
        ok &= res0 <= 1e-6 and membership_check(sp.pairs[0].psi_n, u, alpha=cfg.alpha).member
    else:
        res0 = math.nan
    return Check("expansion", bool(ok),
                 f"Bessel sums monotone {r.bessel_monotone}, gap/lhs {r.gap / r.lhs:.3g} with K={r.K}, "
                 f"shift law {r.shift_law_residual:.3g}, psi_0 reconstruction {res0:.3g}")


def _resolvent(cfg, u, rng):
    lat = cfg.lattice
    worst = np.zeros(4)
    strict = True
    for _ in range(5):
        length = int(rng.integers(1, 6))
        n0 = int(rng.integers(lat.n_outer + 2, lat.n_inner - 1 - length))
        f = _bump(lat, n0, rng.normal(size=length))
        r = resolvent_suite(f, 1 + 1j, u, alpha=cfg.alpha)
        a = phi_transform(f, 1 + 1j, u, alpha=cfg.alpha).values
        b = phi_transform_kernel(f, 1 + 1j, u, alpha=cfg.alpha).values
        split = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
        worst = np.maximum(worst, [r.stencil, r.representation, r.kernel_form, split])
        strict &= r.bound_strict
    ok = worst[0] <= 1e-9 and worst[1] <= 1e-8 and worst[2] <= 1e-8 and worst[3] <= 1e-9 and strict
    return Check("resolvent", bool(ok),
                 f"stencil {worst[0]:.3g}, Phi representation {worst[1]:.3g}, kernel form {worst[2]:.3g}, "
                 f"split vs kernel {worst[3]:.3g}, norm bound strict {strict}")


def run_selftest(cfg: RunConfig = None, seed: int = 20240101) -> list[Check]:
    cfg = cfg or RunConfig()
    u = cfg.potential_on_lattice()
    rng = np.random.default_rng(seed)
    checks = [_wronskian(cfg, u, rng), _green(cfg, u, rng), _disks(cfg, u, rng),
              _mfunc(cfg, u, rng), _identities(cfg, u, rng)]
    sp = find_eigenvalues(cfg.lambda_min, cfg.lambda_max, cfg.grid, cfg.bisection_tol, u, alpha=cfg.alpha)
    checks += [_spectrum(cfg, u, rng, sp), _orthonormal(cfg, u, rng, sp), _expansion(cfg, u, rng, sp),
               _resolvent(cfg, u, rng)]
    return checks
