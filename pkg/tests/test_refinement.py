from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from refinery.fockspace import ModeLayout, build_one_body, enumerate_basis
from refinery.models import BuschParams, LatticeGeometry, busch_hamiltonian
from refinery.refinement import (
    ShiftError,
    ShiftPolicy,
    circuit_prolong,
    gadget_unitary,
    make_basis_prolongation,
    make_lattice_prolongation,
    natural_fine_prolongation,
    prolong_state,
    resolve_shift,
    restrict_state,
    start_hamiltonian,
    verify_circuit_equivalence,
)


def bound_lattice(geo, K, particles):
    P = make_lattice_prolongation(geo, K=K)
    src = enumerate_basis(P.source_layout, particles)
    dst = enumerate_basis(P.target_layout, particles)
    return P.bind(src, dst)


CASES = [
    ("basis", lambda: make_basis_prolongation(3, 6, 2).bind(
        enumerate_basis(ModeLayout(2, 3), [1, 2]), enumerate_basis(ModeLayout(2, 6), [1, 2]))),
    ("lattice-1d", lambda: bound_lattice(LatticeGeometry(1, 3), 2, [2, 1])),
    ("lattice-2d", lambda: bound_lattice(LatticeGeometry(2, 2), 1, [2])),
    ("lattice-3d", lambda: bound_lattice(LatticeGeometry(3, 1), 2, [1, 1])),
]


@pytest.mark.parametrize("name,make", CASES)
def test_isometry_and_projector(name, make):
    P = make().matrix.toarray()
    assert np.max(np.abs(P.T @ P - np.eye(P.shape[1]))) < 1e-12
    Pi = P @ P.T
    assert np.max(np.abs(Pi @ Pi - Pi)) < 1e-10


@pytest.mark.parametrize("geo,particles", [(LatticeGeometry(1, 3), 2), (LatticeGeometry(2, 2), 2), (LatticeGeometry(2, 2), 3)])
def test_lift_matches_creation_operator_oracle(geo, particles):
    for P in (make_lattice_prolongation(geo), natural_fine_prolongation(geo)):
        src = enumerate_basis(P.source_layout, [particles])
        dst = enumerate_basis(P.target_layout, [particles])
        Pm = P.bind(src, dst).matrix.toarray()
        n_fine = P.p.shape[0]
        idx = dst.species_states[0].astype(np.int64)
        for col, mask in enumerate(src.species_states[0]):
            occ = [c for c in range(P.p.shape[1]) if (int(mask) >> c) & 1]
            ref = oracles.created_state([P.p[:, c] for c in occ], n_fine)
            assert np.max(np.abs(Pm[:, col] - ref[idx])) < 1e-12
            # Each amplitude is also det p[F, C].
            for row in np.nonzero(Pm[:, col])[0][:5]:
                F = [f for f in range(n_fine) if (int(idx[row]) >> f) & 1]
                assert Pm[row, col] == pytest.approx(oracles.det_by_permutations(P.p[np.ix_(F, occ)]), abs=1e-14)


def test_contiguous_layout_has_positive_signs():
    geo = LatticeGeometry(2, 2)
    bound = []
    for Q in (make_lattice_prolongation(geo), natural_fine_prolongation(geo)):
        bound.append(Q.bind(enumerate_basis(Q.source_layout, [2]), enumerate_basis(Q.target_layout, [2])))
    assert bound[0].signs_all_positive
    assert not bound[1].signs_all_positive


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_restrict_inverts_prolong(seed):
    rng = np.random.default_rng(seed)
    P = bound_lattice(LatticeGeometry(1, 3), 2, [1, 2])
    v = rng.standard_normal(P.matrix.shape[1])
    assert np.allclose(restrict_state(P, prolong_state(P, v)), v, atol=1e-12)


def test_start_hamiltonian_spectrum():
    H_low, b_low = busch_hamiltonian(BuschParams(K=2, n_max=3))
    _, b_high = busch_hamiltonian(BuschParams(K=2, n_max=6))
    P = make_basis_prolongation(3, 6, 2).bind(b_low, b_high)
    mu = 4.2
    S = start_hamiltonian(H_low, P, mu)
    dense = S.matmat(np.eye(S.shape[0]))
    got = np.linalg.eigvalsh(dense)
    low = np.linalg.eigvalsh(H_low.toarray()) - mu
    ref = np.sort(np.concatenate([low, np.zeros(S.shape[0] - len(low))]))
    assert np.max(np.abs(got - ref)) < 1e-10


def test_start_hamiltonian_lattice_spectrum():
    geo = LatticeGeometry(1, 3, 1.0)
    P = bound_lattice(geo, 2, [1, 1])
    rng = np.random.default_rng(0)
    h = rng.standard_normal((3, 3))
    H_low = build_one_body(P.source_basis, h + h.T)
    S = start_hamiltonian(H_low, P, -1.0).matmat(np.eye(P.matrix.shape[0]))
    low = np.linalg.eigvalsh(H_low.toarray()) + 1.0
    ref = np.sort(np.concatenate([low, np.zeros(len(S) - len(low))]))
    assert np.allclose(np.linalg.eigvalsh(S), ref, atol=1e-10)


def test_resolve_shift_policies():
    E = np.array([1.0, 2.0, 3.0])
    assert resolve_shift(policy=ShiftPolicy("auto_gap"), energies=E) == 2.0
    assert resolve_shift(policy=ShiftPolicy("offset", 5.0), energies=E) == 6.0
    levels = [-10.0, -5.0, -1.0, 2.0]
    assert resolve_shift(policy=ShiftPolicy("auto_homo_lumo"), levels=levels, particles=2) == -3.0
    with pytest.raises(ShiftError):
        resolve_shift(policy=ShiftPolicy("explicit", 0.5), energies=E)
    with pytest.raises(ValueError):
        ShiftPolicy("nonsense")
    with pytest.raises(ValueError):
        resolve_shift(policy=ShiftPolicy("auto_homo_lumo"), energies=E)


def test_gadget_action_exact():
    U, seq = gadget_unitary()
    assert len(seq) == 4
    s = 1 / np.sqrt(2)
    assert np.allclose(U @ [1, 0, 0, 0], [1, 0, 0, 0], atol=1e-15)
    assert np.allclose(U @ [0, 0, 1, 0], [0, s, s, 0], atol=1e-15)
    assert np.allclose(U @ U.T, np.eye(4))


def test_gadget_wrong_angle_rejected():
    with pytest.raises(AssertionError):
        gadget_unitary(0.3)


@pytest.mark.parametrize("geo", [LatticeGeometry(1, 4), LatticeGeometry(2, 2), LatticeGeometry(3, 1)])
def test_circuit_matches_fermionic_lift(geo):
    report = verify_circuit_equivalence(geo)
    assert report.passed, str(report)
    assert report.max_deviation < 1e-10


def test_one_site_3d_superposition():
    state = circuit_prolong(LatticeGeometry(3, 1), 1)
    nz = np.nonzero(np.abs(state) > 1e-12)[0]
    assert sorted(nz) == [1 << b for b in range(8)]
    assert np.allclose(state[nz], 8**-0.5)


def test_wrong_angle_locates_mismatch():
    report = verify_circuit_equivalence(LatticeGeometry(1, 2), angle=0.5)
    assert not report.passed
    assert report.first_mismatch is not None
    assert "FAIL" in str(report)
