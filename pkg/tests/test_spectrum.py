import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsl.errors import PreconditionError, StaleEigenvalueError
from qsl.lattice import GridFunction
from qsl.solve import apply_L, fundamental_data
from qsl.spectrum import (dense_oracle, eigencount, eigenfunction, find_eigenvalues, gram_matrix, match_index,
                          oracle_matrix, pole_pairing, residue, residue_from_m, shooting_function, sturm_count)


def stencil_matrix(u, alpha):
    """Truncated operator assembled column by column from apply_L, then symmetrised."""
    lat = u.lattice
    seeds = fundamental_data(alpha, lat.q)[0].seeds(lat)
    rho = seeds[0] / seeds[1]
    M = lat.size - 2
    A = np.zeros((M, M))
    for j in range(M):
        e = np.zeros(lat.size)
        e[j + 1] = 1.0
        if j == M - 1:
            e[-1] = rho
        A[:, j] = apply_L(GridFunction(lat, e), u).values[1:-1]
    d = np.sqrt(lat.weights[1:-1])
    B = d[:, None] * A / d[None, :]
    return B


@pytest.mark.parametrize("alpha", [0.0, 0.7, 2.5])
def test_oracle_matrix_matches_stencil_assembly(u, alpha):
    B = stencil_matrix(u, alpha)
    assert np.allclose(B, B.T, rtol=0, atol=1e-12 * np.abs(B).max())
    diag, off = oracle_matrix(u, boundary_alpha=alpha)
    assert np.allclose(np.diag(B), diag, rtol=1e-12)
    assert np.allclose(np.diag(B, -1), off, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.7])
def test_sturm_bisection_matches_lapack(u, alpha):
    B = stencil_matrix(u, alpha)
    ref = np.linalg.eigvalsh(0.5 * (B + B.T))[:10]
    got = dense_oracle(u, boundary_alpha=alpha, k=10)
    # LAPACK's error bound is eps * ||B|| ~ 1e-6; in practice both agree far better
    assert np.max(np.abs(got - ref)) < 1e-8


def test_sturm_count_is_monotone(u):
    diag, off = oracle_matrix(u)
    grid = np.linspace(-1, 50, 200)
    c = sturm_count(diag, off, grid)
    assert np.all(np.diff(c) >= 0) and c[0] == 0


def test_shooting_matches_oracle(spectrum20, u):
    oracle = dense_oracle(u)
    oracle = oracle[(oracle >= 0.1) & (oracle <= 20.0)]
    assert len(spectrum20) == len(oracle) == 13
    assert np.max(np.abs(spectrum20.eigenvalues - oracle)) < 1e-9


@pytest.mark.parametrize("alpha", [0.3, 1.2])
def test_shooting_matches_oracle_with_angle(u, alpha):
    sp = find_eigenvalues(0.1, 15.0, 512, 1e-10, u, alpha=alpha)
    oracle = dense_oracle(u, boundary_alpha=alpha)
    oracle = oracle[(oracle >= 0.1) & (oracle <= 15.0)]
    assert len(sp) == len(oracle)
    assert np.max(np.abs(sp.eigenvalues - oracle)) < 1e-8


def test_node_count_agrees_with_sturm(u):
    diag, off = oracle_matrix(u)
    for lam in (0.3, 2.0, 7.77, 19.0):
        assert eigencount(lam, u) == sturm_count(diag, off, lam)[0]


def test_shooting_function_range_and_sign_change(spectrum20, u):
    for p in spectrum20.pairs[:4]:
        lo, hi = p.bracket
        s_lo, s_hi = shooting_function(lo, u), shooting_function(hi, u)
        assert -1 <= s_lo <= 1 and -1 <= s_hi <= 1
        assert s_lo * s_hi < 0


@settings(max_examples=8, deadline=None)
@given(st.floats(-3, 10))
def test_constant_shift_moves_spectrum(spectrum20, u, c):
    sp = find_eigenvalues(0.1 + c, 20.0 + c, 512, 1e-10, u + c)
    k = min(len(sp), len(spectrum20))
    assert k >= 8
    assert np.max(np.abs(sp.eigenvalues[:k] - spectrum20.eigenvalues[:k] - c)) < 1e-8


def test_orthonormal_eigenfunctions(spectrum20):
    G = gram_matrix(spectrum20, len(spectrum20))
    assert np.array_equal(G, G.T)
    assert np.max(np.abs(G - np.eye(len(spectrum20)))) < 1e-10
    for p in spectrum20.pairs:
        assert p.norm == pytest.approx(1.0, abs=1e-12)
        assert p.psi_n.lattice.size == 81


def test_residues_match_m_poles(spectrum20, u):
    for p in spectrum20.pairs[:6]:
        assert p.residue_n > 0
        r = residue_from_m(p.lambda_n, u)
        assert abs(r - p.residue_n) / p.residue_n < 1e-3


def test_pole_pairing(spectrum20, u):
    for p in spectrum20.pairs[:3]:
        assert abs(pole_pairing(p.lambda_n, u) - 1 / 1j) < 1e-10


def test_eigenfunction_recomputation(spectrum20, u):
    p = spectrum20.pairs[2]
    assert residue(p.lambda_n, u) == pytest.approx(p.residue_n, rel=1e-12)
    f = eigenfunction(p.lambda_n, p.residue_n, u)
    assert np.allclose(f.values, p.psi_n.values, atol=1e-12)


def test_stale_eigenvalue_rejected(spectrum20, u):
    lam = 0.5 * (spectrum20.pairs[0].lambda_n + spectrum20.pairs[1].lambda_n)
    with pytest.raises(StaleEigenvalueError):
        residue(lam, u)


def test_match_index_inside_window(spectrum20, u):
    from qsl.solve import propagate_inward, solution_pair
    lam = spectrum20.pairs[5].lambda_n
    k = match_index(propagate_inward(lam, u), solution_pair(lam, u).phi)
    assert u.lattice.n_outer < k < u.lattice.n_inner


def test_coarse_grid_still_finds_every_root(spectrum20, u):
    with pytest.warns(Warning, match="holds 2 roots"):
        sp = find_eigenvalues(0.1, 20.0, 16, 1e-10, u)
    assert sp.warnings
    assert np.allclose(sp.eigenvalues, spectrum20.eigenvalues, atol=1e-9)


def test_deterministic(spectrum20, u):
    again = find_eigenvalues(0.1, 20.0, 512, 1e-10, u)
    assert np.array_equal(again.eigenvalues, spectrum20.eigenvalues)
    assert [p.bracket for p in again.pairs] == [p.bracket for p in spectrum20.pairs]


def test_preconditions(u):
    with pytest.raises(PreconditionError):
        find_eigenvalues(5.0, 1.0, 512, 1e-10, u)
    with pytest.raises(PreconditionError):
        find_eigenvalues(0.1, 1.0, 512, 1e-10, u * 1j)
    with pytest.raises(PreconditionError):
        find_eigenvalues(0.1, 1.0, 512, 1e-10, None)
    with pytest.raises(PreconditionError):
        gram_matrix(find_eigenvalues(0.1, 1.0, 64, 1e-10, u), 5)
