from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from refinery.evolution import ground_state
from refinery.models import (
    CLUSTER_TABLE,
    FINE_SPACING,
    HBARC,
    BuschParams,
    HubbardParams,
    LatticeGeometry,
    WoodsSaxonParams,
    busch_hamiltonian,
    busch_interaction_tensor,
    cluster_couplings,
    hermite_functions,
    hopping,
    hubbard_hamiltonian,
    hubbard_single_particle,
    woods_saxon_potential,
)


def test_hermite_functions_orthonormal():
    x = np.linspace(-12, 12, 4001)
    phi = hermite_functions(12, x)
    gram = phi @ phi.T * (x[1] - x[0])
    assert np.max(np.abs(gram - np.eye(12))) < 1e-10


def test_interaction_tensor_against_adaptive_quadrature():
    V = busch_interaction_tensor(6, g=1.0)
    for p, q, r, s in [(0, 0, 0, 0), (1, 1, 0, 0), (2, 3, 1, 4), (5, 5, 5, 5), (0, 2, 4, 2)]:
        f = lambda x: np.prod(hermite_functions(6, x)[[p, q, r, s]])  # noqa: E731
        ref, _ = quad(f, -np.inf, np.inf, epsabs=1e-14)
        assert abs(V[p, q, r, s] - ref) < 1e-12
    assert V[0, 0, 0, 0] == pytest.approx(1 / np.sqrt(2 * np.pi), abs=1e-14)


def test_interaction_tensor_symmetric():
    V = busch_interaction_tensor(5)
    for perm in [(1, 0, 2, 3), (2, 3, 0, 1), (0, 3, 2, 1)]:
        assert np.max(np.abs(V - V.transpose(perm))) < 1e-14


def test_insufficient_quadrature_detected():
    with pytest.raises(ArithmeticError):
        busch_interaction_tensor(10, order=8)


def test_busch_noninteracting_spectrum():
    H, basis = busch_hamiltonian(BuschParams(K=3, n_max=4, g=0.0))
    E = np.sort(H.diagonal())
    assert E[0] == pytest.approx(1.5)
    assert H.nnz == basis.dimension


def test_busch_low_resolution_energy():
    H, _ = busch_hamiltonian(BuschParams(K=2, n_max=2))
    E, _ = ground_state(H)
    assert E[0] == pytest.approx(1.3782, abs=5e-4)


def test_cluster_table_rows():
    assert cluster_couplings("1+1+1+1+1") == {
        (0, 4): 10.0, (1, 2): 10.0, (2, 4): 10.0, (3, 4): 10.0,
        (0, 1): 20.0, (1, 3): 20.0, (2, 3): 20.0,
    }
    assert cluster_couplings("5") == {(0, 1): -20.0, (1, 2): -20.0, (1, 3): -20.0, (3, 4): -20.0}
    assert cluster_couplings("3+2") == {(0, 1): -20.0, (1, 2): -20.0, (3, 4): -20.0, (1, 3): 20.0}
    assert len(CLUSTER_TABLE) == 7
    with pytest.raises(KeyError):
        cluster_couplings("6")


def test_hopping_units():
    assert FINE_SPACING == pytest.approx(HBARC / 150)
    assert hopping(938.92, 1.0) == pytest.approx(HBARC**2 / (2 * 938.92))


@pytest.mark.parametrize("d,L", [(1, 8), (2, 4), (3, 4)])
def test_free_dispersion(d, L):
    geo = LatticeGeometry(d, L)
    h = hubbard_single_particle(HubbardParams(geo)).toarray()
    t = hopping(938.92, geo.spacing)
    ks = 2 * np.pi * np.arange(L) / L
    one_d = 2 * t * (1 - np.cos(ks))
    ref = one_d
    for _ in range(d - 1):
        ref = np.add.outer(ref, one_d).ravel()
    assert np.allclose(np.linalg.eigvalsh(h), np.sort(ref), atol=1e-10)


def test_two_site_axis_has_single_bond():
    h = hubbard_single_particle(HubbardParams(LatticeGeometry(1, 2, 1.0), laplacian_term=False)).toarray()
    t = hopping(938.92, 1.0)
    assert np.allclose(h, [[0, -t], [-t, 0]])


def test_geometry_helpers():
    geo = LatticeGeometry(2, 4, 1.0)
    assert np.array_equal(geo.coords[5], [1, 1])
    assert geo.translation(0, 1)[0] == 4
    assert np.allclose(geo.positions().mean(axis=0), 0.0)
    c = geo.coarse()
    assert (c.L, c.spacing) == (2, 2.0)
    with pytest.raises(ValueError):
        LatticeGeometry(1, 5).coarse()


def test_woods_saxon_profile():
    geo = LatticeGeometry(3, 10)
    params = WoodsSaxonParams(A=40)
    v = woods_saxon_potential(geo, params)
    r = np.linalg.norm(geo.positions(), axis=1)
    assert params.radius == pytest.approx(1.5 * 40 ** (1 / 3))
    assert v.min() > -50.0 and v[np.argmin(r)] == v.min()
    near = np.argmin(np.abs(r - params.radius))
    assert v[near] == pytest.approx(-50 / (1 + np.exp((r[near] - params.radius) / 0.5)))
    with pytest.raises(ValueError):
        woods_saxon_potential(LatticeGeometry(2, 4), params)


def test_hubbard_contact_energy():
    # Two species pinned by a deep well on one site pay the contact energy once.
    geo = LatticeGeometry(1, 4, 1.0)
    V = np.array([-1e6, 0, 0, 0])
    params = HubbardParams(geo, couplings={(0, 1): -7.0}, potential=V, laplacian_term=False)
    H, basis = hubbard_hamiltonian(params, [1, 1])
    i = basis.index((1, 1))
    assert H[i, i] == pytest.approx(-2e6 - 7.0)
