"""Acceptance criteria 1-11 at the default configuration.

q = 0.8, alpha = 0, window n in [-30, 50], u(x) = x^2.  Each criterion is a
function returning (passed, detail); the tests record one PASS/FAIL line per
criterion and assert it.  Run this file directly to print only the lines.
"""
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from qsl.expand import parseval_report, resolvent_suite
from qsl.lattice import GridFunction, LatticeSpec, wronskian_profile, resolve
from qsl.potential import PotentialSpec, materialize
from qsl.solve import green_formula_check, solution_pair
from qsl.spectrum import dense_oracle, find_eigenvalues, gram_matrix, pole_pairing, residue_from_m
from qsl.weyl import Method, b_ladder, disk_ladder, l_map, m_function, weyl_identity_suite

LAT = LatticeSpec(0.8, -30, 50)
U = materialize(PotentialSpec.power(1.0, 2.0), LAT)
EPS = np.finfo(float).eps
_cache = {}


def _spectrum(lo, hi, u=U):
    key = (lo, hi, id(u))
    if key not in _cache:
        _cache[key] = find_eigenvalues(lo, hi, 512, 1e-10, u)
    return _cache[key]


def _random_lambda(rng):
    return complex(rng.uniform(-5.0, 20.0), rng.uniform(0.1, 5.0) * rng.choice([-1.0, 1.0]))


def _circumradius(a, b, c):
    ab, bc, ca = abs(a - b), abs(b - c), abs(c - a)
    area2 = abs(((b - a).conjugate() * (c - a)).imag)    # twice the triangle area
    return ab * bc * ca / (2.0 * area2) if area2 > 0 else math.inf


def criterion_1():
    rng = np.random.default_rng(1)
    worst = 0.0
    bad = total = 0
    for _ in range(20):
        lam, alpha = _random_lambda(rng), rng.uniform(0.0, math.pi)
        pair = solution_pair(lam, U, alpha)
        wm, wl = wronskian_profile(pair.phi, pair.theta)
        err = np.abs(resolve(wm, wl) - 1.0)[:-1]           # indices n_outer+1 .. n_inner-1
        worst = max(worst, float(np.max(err)))
        bad += int(np.count_nonzero(~(err <= 1e-9)))
        total += len(err)
    return worst <= 1e-9, f"max |W(phi,theta) - 1| = {worst:.3g} (tol 1e-9); {bad}/{total} indices exceed"


def criterion_2():
    rng = np.random.default_rng(2)
    worst_green = worst_imag = 0.0
    for _ in range(20):
        lam, lam2 = _random_lambda(rng), _random_lambda(rng)
        a = int(rng.integers(LAT.n_outer + 1, LAT.n_inner - 2))
        c = int(rng.integers(a + 1, LAT.n_inner))
        p1, p2 = solution_pair(lam, U), solution_pair(lam2, U)
        for F, G in ((p1.phi, p2.phi), (p1.phi, p2.theta), (p1.theta, p2.theta)):
            worst_green = max(worst_green, green_formula_check(F, G, lam, lam2, a, c)["relative_residual"])
        for F in (p1.phi, p1.theta):
            r = green_formula_check(F, F.conj(), lam, lam.conjugate(), a, c)["relative_residual"]
            worst_imag = max(worst_imag, r)
    ok = worst_green <= 1e-9 and worst_imag <= 1e-9
    return ok, f"Green formula {worst_green:.3g}, imaginary-part identity {worst_imag:.3g} (tol 1e-9)"


def criterion_3():
    pair = solution_pair(1 + 1j, U)
    disks = disk_ladder(pair, b_ladder(LAT))
    worst_ratio = worst_geom = 0.0
    failing = 0
    for d in disks:
        gap = d.log_radius_wronskian - d.log_radius
        ratio = abs(math.expm1(gap)) if gap < 700 else math.inf
        pts = [l_map(pair, d.b_index, z) for z in (0.0, 1.0, -1.0)]
        r = math.exp(d.log_radius)
        geom = abs(_circumradius(*pts) - r) / r if r > 0 else math.inf
        worst_ratio, worst_geom = max(worst_ratio, ratio), max(worst_geom, geom)
        failing += not (ratio <= 1e-8 and geom <= 1e-8)
    logs = [d.log_radius for d in disks]
    monotone = all(b <= a for a, b in zip(logs, logs[1:]))
    # an absolute slack below one ulp of the radius is not representable
    nest = max(abs(d2.center - d1.center) - (d1.radius - d2.radius) - 64 * EPS * d1.radius
               for d1, d2 in zip(disks, disks[1:]))
    ok = failing == 0 and monotone and nest <= 1e-9
    return ok, (f"{len(disks) - failing}/{len(disks)} rungs agree within 1e-8 "
                f"(worst ratio-vs-integral {worst_ratio:.3g}, geometry {worst_geom:.3g}); "
                f"monotone {monotone}; nesting excess {nest:.3g}")


def criterion_4():
    worst = 0.0
    sign_ok = True
    for lam in (1j, 1 + 1j, 2j, 5 + 0.5j):
        disk = m_function(lam, U, method=Method.DISK_CENTER)
        dec = m_function(lam, U, method=Method.DECAYING_SOLUTION)
        worst = max(worst, abs(disk.m - dec.m) / max(2 * disk.uncertainty, 1e-6))
        sign_ok &= disk.m.imag < 0 and dec.m.imag < 0
    return worst <= 1.0 and sign_ok, f"max |m_disk - m_decay| / allowance = {worst:.3g}; Im m < 0: {sign_ok}"


def criterion_5():
    r1 = weyl_identity_suite(1j, 2j, U)
    r2 = weyl_identity_suite(1j, -1j, U)
    worst = max(r1.pairing_residual, r2.pairing_residual, r1.norm_residual, r2.norm_residual)
    return worst <= 1e-5, (f"pairing (i,2i) {r1.pairing_residual:.3g}, (i,-i) {r2.pairing_residual:.3g}, "
                           f"norm {r1.norm_residual:.3g} (tol 1e-5)")


def criterion_6():
    sp = _spectrum(0.1, 20.0)
    oracle = dense_oracle(U, k=8)
    diff = float(np.max(np.abs(sp.eigenvalues[:8] - oracle))) if len(sp) >= 8 else math.inf
    shifted = _spectrum(5.1, 25.0, U + 5.0)
    shift = float(np.max(np.abs(shifted.eigenvalues[:8] - sp.eigenvalues[:8] - 5.0))) \
        if len(shifted) >= 8 else math.inf
    return diff <= 1e-4 and shift <= 1e-8, f"max oracle diff {diff:.3g} (tol 1e-4), shift error {shift:.3g} (tol 1e-8)"


def criterion_7():
    sp = _spectrum(0.1, 20.0)
    dev = float(np.max(np.abs(gram_matrix(sp, 8) - np.eye(8))))
    worst = 0.0
    for p in sp.pairs[:8]:
        r = residue_from_m(p.lambda_n, U)
        worst = max(worst, abs(r - p.residue_n) / p.residue_n)
    return dev <= 1e-6 and worst <= 1e-3, f"Gram deviation {dev:.3g} (tol 1e-6), residue cross-check {worst:.3g} (tol 1e-3)"


def criterion_8():
    sp = _spectrum(0.1, 20.0)
    err = abs(pole_pairing(sp.pairs[0].lambda_n, U) - 1 / 1j)
    return err <= 1e-4, f"|pairing - 1/i| = {err:.3g} (tol 1e-4)"


def _bump():
    v = np.zeros(LAT.size)
    for n, val in ((10, 1.0), (11, 2.0), (12, 1.0)):
        v[LAT.pos(n)] = val
    return GridFunction(LAT, v)


def criterion_9():
    f = _bump()
    sp = _spectrum(0.1, 60.0)
    r = parseval_report(f, sp, lam=1j)
    gap_ok = r.gap <= 1e-3 * r.lhs
    pw_ok = r.pointwise_max_residual <= 1e-2 * 2.0
    ok = gap_ok and pw_ok and r.bessel_monotone and r.shift_law_residual <= 1e-5
    return ok, (f"K={r.K}: Parseval gap/lhs {r.gap / r.lhs:.3g} (tol 1e-3), pointwise residual "
                f"{r.pointwise_max_residual:.3g} (tol 2e-2), Bessel monotone {r.bessel_monotone}, "
                f"shift law {r.shift_law_residual:.3g} (tol 1e-5)")


def criterion_10():
    rng = np.random.default_rng(10)
    worst = np.zeros(3)
    strict = True
    for _ in range(10):
        length = int(rng.integers(1, 6))
        n0 = int(rng.integers(LAT.n_outer + 2, LAT.n_inner - 1 - length))
        v = np.zeros(LAT.size)
        v[LAT.pos(n0):LAT.pos(n0) + length] = rng.normal(size=length)
        r = resolvent_suite(GridFunction(LAT, v), 1 + 1j, U)
        worst = np.maximum(worst, [r.stencil, r.representation, r.kernel_form])
        strict &= r.bound_strict
    ok = worst[0] <= 1e-9 and worst[1] <= 1e-8 and worst[2] <= 1e-8 and strict
    return ok, (f"stencil {worst[0]:.3g} (1e-9), Phi representation {worst[1]:.3g} (1e-8), "
                f"kernel form {worst[2]:.3g} (1e-8), norm bound strict {strict}")


def _qsl(*args, cwd):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "qsl.cli", *args], cwd=cwd, env=env,
                          capture_output=True, text=True, timeout=120)


def criterion_11(tmp):
    tmp = Path(tmp)
    cfg = tmp / "cfg.json"
    cfg.write_text('{"scan": {"lambda_min": 0.1, "lambda_max": 20}}\n')
    runs = []
    for name in ("a", "b"):
        (tmp / name).mkdir()
        proc = _qsl("spectrum", "--config", str(cfg), "--out-dir", "out", cwd=tmp / name)
        runs.append((proc.returncode, {p.name: p.read_bytes() for p in sorted((tmp / name / "out").iterdir())}))
    csvs = [k for k in runs[0][1] if k.endswith(".csv")]
    same = runs[0][1] == runs[1][1] and len(csvs) > 1
    st = _qsl("selftest", cwd=tmp)
    ok = runs[0][0] == 0 and runs[1][0] == 0 and same and st.returncode == 0
    return ok, (f"spectrum exit codes {runs[0][0]},{runs[1][0]}; {len(runs[0][1])} files "
                f"({len(csvs)} CSV) byte-identical: {same}; selftest exit {st.returncode}")


def test_criterion_1(record):
    ok, detail = criterion_1()
    record(1, ok, detail)
    assert ok, detail


def test_criterion_2(record):
    ok, detail = criterion_2()
    record(2, ok, detail)
    assert ok, detail


def test_criterion_3(record):
    ok, detail = criterion_3()
    record(3, ok, detail)
    assert ok, detail


def test_criterion_4(record):
    ok, detail = criterion_4()
    record(4, ok, detail)
    assert ok, detail


def test_criterion_5(record):
    ok, detail = criterion_5()
    record(5, ok, detail)
    assert ok, detail


def test_criterion_6(record):
    ok, detail = criterion_6()
    record(6, ok, detail)
    assert ok, detail


def test_criterion_7(record):
    ok, detail = criterion_7()
    record(7, ok, detail)
    assert ok, detail


def test_criterion_8(record):
    ok, detail = criterion_8()
    record(8, ok, detail)
    assert ok, detail


def test_criterion_9(record):
    ok, detail = criterion_9()
    record(9, ok, detail)
    assert ok, detail


def test_criterion_10(record):
    ok, detail = criterion_10()
    record(10, ok, detail)
    assert ok, detail


def test_criterion_11(record, tmp_path):
    ok, detail = criterion_11(tmp_path)
    record(11, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    failed = 0
    for k in range(1, 12):
        fn = globals()[f"criterion_{k}"]
        if k == 11:
            with tempfile.TemporaryDirectory() as tmp:
                ok, detail = fn(tmp)
        else:
            ok, detail = fn()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
