from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from refinery.fockspace import (
    CapacityError,
    ModeLayout,
    apply_bilinear,
    build_density_density,
    build_one_body,
    build_two_body_tensor,
    enumerate_basis,
    hermiticity_error,
    permute_modes,
)


def random_hermitian(rng, M, complex_=True):
    A = rng.standard_normal((M, M)) + (1j * rng.standard_normal((M, M)) if complex_ else 0)
    return (A + A.conj().T) / 2


def embed_oracle(basis, M, H_full):
    idx = oracles.sector(basis, M)
    return H_full[np.ix_(idx, idx)]


def test_dimension_and_order():
    basis = enumerate_basis(ModeLayout(3, 5), [2, 1, 3])
    assert basis.dimension == math.comb(5, 2) * 5 * math.comb(5, 3)
    states = basis.states
    # Species 0 is the most significant digit: lexicographic order.
    assert [tuple(s) for s in states] == sorted(tuple(s) for s in states)
    assert all(bin(int(m)).count("1") == 2 for m in states[:, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_index_roundtrip(M, data):
    K = data.draw(st.integers(1, 3))
    particles = [data.draw(st.integers(0, M)) for _ in range(K)]
    basis = enumerate_basis(ModeLayout(K, M), particles)
    i = data.draw(st.integers(0, basis.dimension - 1))
    assert basis.index(basis.config(i)) == i
    np.testing.assert_array_equal(basis.indices(basis.states), np.arange(basis.dimension))


def test_missing_config_raises():
    basis = enumerate_basis(ModeLayout(1, 4), [2])
    with pytest.raises(KeyError):
        basis.index((0b0111,))


def test_capacity_error_reports_dimension():
    with pytest.raises(CapacityError) as exc:
        enumerate_basis(ModeLayout(2, 20), [10, 10], cap=1000)
    assert exc.value.dimension == math.comb(20, 10) ** 2


def test_apply_bilinear_matches_oracle():
    M = 5
    a = oracles.operators(M)
    for mask in range(2**M):
        for i in range(M):
            for j in range(M):
                ref = a[j].T @ a[i]
                col = ref[:, mask]
                res = apply_bilinear((mask,), 0, i, j)
                if res is None:
                    assert not np.any(col)
                else:
                    (new,), sign = res
                    assert col[new] == sign


@pytest.mark.parametrize("particles", [(1, 2), (2, 2), (0, 3)])
def test_one_body_matches_oracle(particles):
    rng = np.random.default_rng(1)
    M = 4
    hs = [random_hermitian(rng, M, complex_=False), random_hermitian(rng, M, complex_=False)]
    basis = enumerate_basis(ModeLayout(2, M), particles)
    H = build_one_body(basis, hs).toarray()
    ref = embed_oracle(basis, M, oracles.one_body(hs, M))
    assert np.max(np.abs(H - ref)) < 1e-12


def test_one_body_complex_shared():
    rng = np.random.default_rng(2)
    M = 4
    h = random_hermitian(rng, M)
    basis = enumerate_basis(ModeLayout(2, M), [2, 1])
    H = build_one_body(basis, h).toarray()
    ref = embed_oracle(basis, M, oracles.one_body([h, h], M).astype(complex))
    assert np.max(np.abs(H - ref)) < 1e-12
    assert hermiticity_error(H) < 1e-14


def test_density_density_matches_oracle():
    M, K = 3, 3
    couplings = {(0, 1): -2.0, (1, 2): np.array([1.0, 0.0, 3.0]), (0, 2): 0.5}
    basis = enumerate_basis(ModeLayout(K, M), [1, 2, 1])
    H = build_density_density(basis, couplings).toarray()
    ref = embed_oracle(basis, M, oracles.density_density(couplings, K, M))
    assert np.max(np.abs(H - ref)) < 1e-12


def test_density_density_rejects_unordered_pair():
    basis = enumerate_basis(ModeLayout(2, 3), [1, 1])
    with pytest.raises(ValueError):
        build_density_density(basis, {(1, 0): 1.0})


def _hermitian_tensor(rng, M):
    V = rng.standard_normal((M,) * 4)
    return (V + V.transpose(2, 3, 0, 1)) / 2


def test_two_body_matches_oracle():
    rng = np.random.default_rng(3)
    M, K = 3, 2
    V = _hermitian_tensor(rng, M)
    basis = enumerate_basis(ModeLayout(K, M), [1, 2])
    H = build_two_body_tensor(basis, V).toarray()
    ref = embed_oracle(basis, M, oracles.two_body(V, K, M))
    assert np.max(np.abs(H - ref)) < 1e-12


def test_two_body_three_species():
    rng = np.random.default_rng(4)
    M, K = 2, 3
    V = _hermitian_tensor(rng, M)
    basis = enumerate_basis(ModeLayout(K, M), [1, 1, 1])
    H = build_two_body_tensor(basis, V).toarray()
    ref = embed_oracle(basis, M, oracles.two_body(V, K, M))
    assert np.max(np.abs(H - ref)) < 1e-12


def test_two_body_rejects_non_hermitian():
    basis = enumerate_basis(ModeLayout(2, 2), [1, 1])
    V = np.zeros((2,) * 4)
    V[0, 0, 1, 0] = 1.0
    with pytest.raises(ValueError):
        build_two_body_tensor(basis, V)


@pytest.mark.parametrize("perm", [[1, 2, 3, 0], [3, 2, 1, 0], [0, 2, 1, 3]])
def test_permute_modes_matches_oracle(perm):
    M = 4
    basis = enumerate_basis(ModeLayout(2, M), [2, 1])
    U = permute_modes(basis, np.array(perm)).toarray()
    # Oracle: U a†_m U† = a†_{perm[m]}, so U|c1 c2 ..> = a†_{perm c1} a†_{perm c2} ..|0>.
    n = 2 * M
    eye = np.eye(n)
    idx = oracles.sector(basis, M)
    ref = np.zeros_like(U)
    for col, g in enumerate(idx):
        occ = [b for b in range(n) if (g >> b) & 1]
        cols = [eye[(b // M) * M + perm[b % M]] for b in occ]
        ref[:, col] = oracles.created_state(cols, n)[idx]
    assert np.max(np.abs(U - ref)) < 1e-12
    assert np.allclose(U @ U.T, np.eye(len(U)))


def test_translation_commutes_with_ring_hopping():
    M = 5
    h = np.zeros((M, M))
    for i in range(M):
        h[i, (i + 1) % M] = h[(i + 1) % M, i] = -1.0
    basis = enumerate_basis(ModeLayout(2, M), [2, 2])
    H = build_one_body(basis, h)
    T = permute_modes(basis, (np.arange(M) + 1) % M)
    assert abs(T @ H - H @ T).max() < 1e-12
