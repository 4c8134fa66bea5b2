"""Prolongation/restriction between resolutions, energy shifts, and the two-qubit gadget.

A prolongation is stored as a single-particle isometry ``p`` (fine modes x
coarse modes, identical for every species). Its action on Fock space is the
second-quantized lift: each created coarse mode becomes the superposition of
fine modes in its column of ``p``. When the children of every coarse mode are
contiguous in the fine mode order, the lift never reorders creation operators
and all amplitudes are products of positive weights.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .fockspace import FockBasis, ModeLayout
from .models import LatticeGeometry


class ShiftError(ValueError):
    """The energy shift does not place the target state below zero."""


@dataclass(frozen=True, eq=False)
class Prolongation:
    p: np.ndarray = field(repr=False)
    source_layout: ModeLayout
    target_layout: ModeLayout
    kind: str  # "basis" or "lattice"
    source_basis: FockBasis | None = field(default=None, repr=False)
    target_basis: FockBasis | None = field(default=None, repr=False)

    def bind(self, source_basis: FockBasis, target_basis: FockBasis) -> "Prolongation":
        """Attach Fock bases so the prolongation can act on many-body vectors."""
        if source_basis.layout.modes != self.p.shape[1] or target_basis.layout.modes != self.p.shape[0]:
            raise ValueError("basis mode counts do not match the single-particle map")
        if source_basis.particles != target_basis.particles:
            raise ValueError("prolongation conserves particle numbers per species")
        return Prolongation(self.p, self.source_layout, self.target_layout, self.kind, source_basis, target_basis)

    @cached_property
    def _species_lifts(self) -> tuple[list[sp.csr_matrix], bool]:
        if self.source_basis is None or self.target_basis is None:
            raise ValueError("prolongation is not bound to Fock bases; call bind() first")
        mats, positive = [], True
        for src, dst in zip(self.source_basis.species_states, self.target_basis.species_states):
            m, pos = _lift_species(self.p, src, dst)
            mats.append(m)
            positive &= pos
        return mats, positive

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Sparse Fock-space matrix of P (target dim x source dim)."""
        mats, _ = self._species_lifts
        out = mats[0]
        for m in mats[1:]:
            out = sp.kron(out, m, format="csr")
        return out.tocsr()

    @cached_property
    def matrix_adjoint(self) -> sp.csr_matrix:
        return self.matrix.conj().T.tocsr()

    @property
    def signs_all_positive(self) -> bool:
        """True if no lifted amplitude picked up a fermionic minus sign."""
        return self._species_lifts[1]


def _lift_species(p: np.ndarray, src: np.ndarray, dst: np.ndarray) -> tuple[sp.csr_matrix, bool]:
    """Second-quantized lift of ``p`` on one species: <F|P|C> = det p[F, C]."""
    n_high, n_low = p.shape
    children = [np.nonzero(p[:, c])[0] for c in range(n_low)]
    rows, cols, vals = [], [], []
    positive = True
    for col, mask in enumerate(src):
        occ = [c for c in range(n_low) if (int(mask) >> c) & 1]
        for choice in itertools.product(*[children[c] for c in occ]):
            if len(set(choice)) < len(choice):
                continue
            amp = math.prod(p[f, c] for f, c in zip(choice, occ))
            inversions = sum(1 for a in range(len(choice)) for b in range(a + 1, len(choice)) if choice[a] > choice[b])
            if inversions % 2:
                amp = -amp
                positive = False
            rows.append(sum(1 << f for f in choice))
            cols.append(col)
            vals.append(amp)
    rows = np.searchsorted(dst, np.array(rows, dtype=np.uint64))
    m = sp.csr_matrix((np.array(vals), (rows, np.array(cols))), shape=(len(dst), len(src)))
    return m, positive


def make_basis_prolongation(n_low: int, n_high: int, K: int) -> Prolongation:
    """Embed oscillator orbital n of the small basis as orbital n of the large one."""
    if n_low > n_high:
        raise ValueError("n_low must not exceed n_high")
    p = np.eye(n_high, n_low)
    return Prolongation(p, ModeLayout(K, n_low), ModeLayout(K, n_high), "basis")


def fine_layout(coarse_geometry: LatticeGeometry, coarse_layout: ModeLayout | None = None, K: int = 1) -> ModeLayout:
    """Fine-lattice mode order with the 2^d children of each coarse mode contiguous.

    Fine mode ``c * 2^d + delta`` is child ``delta`` (row-major over {0,1}^d,
    first axis most significant) of coarse mode ``c``.
    """
    d, Lc = coarse_geometry.d, coarse_geometry.L
    coarse_layout = coarse_layout or ModeLayout(K, coarse_geometry.n_sites)
    cc = coarse_geometry.coords[coarse_layout.site_of_mode]
    deltas = np.array(list(np.ndindex(*(2,) * d)))
    fine_coords = 2 * cc[:, None, :] + deltas[None, :, :]
    sites = np.ravel_multi_index(fine_coords.reshape(-1, d).T, (2 * Lc,) * d)
    return ModeLayout(coarse_layout.species, len(sites), sites)


def make_lattice_prolongation(
    coarse_geometry: LatticeGeometry, K: int = 1, coarse_layout: ModeLayout | None = None
) -> Prolongation:
    """Distribute each coarse site equally over its 2^d fine children {2r + delta}."""
    d = coarse_geometry.d
    coarse_layout = coarse_layout or ModeLayout(K, coarse_geometry.n_sites)
    target = fine_layout(coarse_geometry, coarse_layout)
    nc, nb = coarse_geometry.n_sites, 2**d
    p = np.zeros((nc * nb, nc))
    for c in range(nc):
        p[c * nb : (c + 1) * nb, c] = nb**-0.5
    return Prolongation(p, coarse_layout, target, "lattice")


def natural_fine_prolongation(coarse_geometry: LatticeGeometry, K: int = 1) -> Prolongation:
    """The same lattice map expressed in plain row-major site order on both grids.

    Children are not contiguous for d > 1, so multi-particle lifts can pick up
    minus signs; useful as a contrast to :func:`make_lattice_prolongation`.
    """
    P = make_lattice_prolongation(coarse_geometry, K)
    p_sites = np.zeros_like(P.p)
    p_sites[P.target_layout.site_of_mode] = P.p
    n = p_sites.shape[0]
    return Prolongation(p_sites, ModeLayout(K, P.p.shape[1]), ModeLayout(K, n), "lattice")


def prolong_state(P: Prolongation, psi_low: np.ndarray) -> np.ndarray:
    psi_low = np.asarray(psi_low)
    if psi_low.shape[0] != P.matrix.shape[1]:
        raise ValueError("state does not live in the coarse basis")
    return P.matrix @ psi_low


def restrict_state(P: Prolongation, psi_high: np.ndarray) -> np.ndarray:
    psi_high = np.asarray(psi_high)
    if psi_high.shape[0] != P.matrix.shape[0]:
        raise ValueError("state does not live in the fine basis")
    return P.matrix_adjoint @ psi_high


def start_hamiltonian(H_low, P: Prolongation, mu: float) -> LinearOperator:
    """v -> P (H_low - mu) P† v on the fine space, applied without forming it."""
    H_low = sp.csr_matrix(H_low)
    Pm, Pt = P.matrix, P.matrix_adjoint
    n = Pm.shape[0]
    dtype = np.result_type(H_low.dtype, Pm.dtype)

    def mv(v):
        w = Pt @ v
        return Pm @ (H_low @ w - mu * w)

    return LinearOperator((n, n), matvec=mv, rmatvec=mv, matmat=mv, dtype=dtype)


# -- energy shift --------------------------------------------------------------


@dataclass(frozen=True)
class ShiftPolicy:
    """How to pick the shift mu.

    ``explicit`` uses ``value``; ``auto_gap`` takes the first excited energy of
    H_low; ``auto_homo_lumo`` the midpoint of the highest occupied and lowest
    unoccupied single-particle levels; ``offset`` places mu ``value`` above
    the target energy of H_low.
    """

    mode: str = "auto_gap"
    value: float | None = None

    def __post_init__(self):
        if self.mode not in ("explicit", "auto_gap", "auto_homo_lumo", "offset"):
            raise ValueError(f"unknown shift policy {self.mode!r}")
        if self.mode in ("explicit", "offset") and self.value is None:
            raise ValueError(f"shift policy {self.mode!r} needs a value")


def resolve_shift(
    H_low=None,
    policy: ShiftPolicy = ShiftPolicy(),
    particles: int | None = None,
    levels: Sequence[float] | None = None,
    energies: Sequence[float] | None = None,
) -> float:
    """Resolve ``policy`` to a number and check that the target sits below zero.

    ``energies`` (ascending many-body energies of H_low) may be passed to avoid
    re-diagonalizing. For single-particle problems pass the ascending
    ``levels`` and the occupation ``particles``; the target energy is then the
    highest occupied level.
    """
    if levels is not None:
        levels = np.sort(np.asarray(levels, dtype=float))
        if particles is None or not 0 < particles < len(levels):
            raise ValueError("single-particle shift needs 0 < particles < number of levels")
        e_target, e_next = levels[particles - 1], levels[particles]
    else:
        if energies is None:
            from .evolution import ground_state

            energies, _ = ground_state(H_low, k=2)
        e_target, e_next = float(energies[0]), float(energies[1])
    if policy.mode == "explicit":
        mu = float(policy.value)
    elif policy.mode == "offset":
        mu = e_target + float(policy.value)
    elif policy.mode == "auto_gap":
        mu = e_next
    else:
        if levels is None:
            raise ValueError("auto_homo_lumo needs single-particle levels")
        mu = 0.5 * (e_target + e_next)
    if not e_target - mu < 0:
        raise ShiftError(f"shift mu={mu:.6g} does not exceed target energy {e_target:.6g}")
    return mu


# -- two-qubit gadget ----------------------------------------------------------


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


_I2 = np.eye(2)
# Basis |q1 q2>, q1 most significant.
CNOT_12 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
CNOT_21 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=float)


def gadget_circuit(angle: float = np.pi / 4) -> list[tuple[str, np.ndarray]]:
    """Gate sequence in application order as (label, 4x4 matrix)."""
    return [
        (f"Ry({angle:.6g}) q2", np.kron(_I2, ry(angle))),
        ("CNOT q1->q2", CNOT_12),
        (f"Ry({-angle:.6g}) q2", np.kron(_I2, ry(-angle))),
        ("CNOT q2->q1", CNOT_21),
    ]


def gadget_unitary(angle: float = np.pi / 4, check: bool = True) -> tuple[np.ndarray, list[tuple[str, np.ndarray]]]:
    """Compose the two-rotation, two-CNOT circuit that splits |10> into (|10>+|01>)/sqrt2."""
    seq = gadget_circuit(angle)
    U = np.eye(4)
    for _, g in seq:
        U = g @ U
    if check:
        e00, e10, e01 = np.eye(4)[0], np.eye(4)[2], np.eye(4)[1]
        if np.max(np.abs(U @ e00 - e00)) > 1e-12:
            raise AssertionError("gadget does not fix |00>")
        if np.max(np.abs(U @ e10 - (e10 + e01) / np.sqrt(2))) > 1e-12:
            raise AssertionError("gadget does not split |10> evenly")
    return U, seq


def _apply_two_qubit(state: np.ndarray, U: np.ndarray, q1: int, q2: int, n: int) -> np.ndarray:
    # Statevector index = sum_m bit_m 2^m, so qubit m is tensor axis n-1-m.
    t = state.reshape((2,) * n)
    a1, a2 = n - 1 - q1, n - 1 - q2
    t = np.moveaxis(t, (a1, a2), (0, 1)).reshape(4, -1)
    t = (U @ t).reshape((2, 2) + (2,) * (n - 2))
    return np.moveaxis(t, (0, 1), (a1, a2)).reshape(-1)


@dataclass
class EquivalenceReport:
    max_deviation: float
    passed: bool
    states_checked: int
    first_mismatch: tuple | None = None  # (coarse mask, fine mask, circuit amp, lifted amp)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        s = f"{status} max deviation {self.max_deviation:.3e} over {self.states_checked} states"
        if self.first_mismatch is not None:
            c, f, a, b = self.first_mismatch
            s += f"; first mismatch coarse={c:b} fine={f:b} circuit={a:.6g} lifted={b:.6g}"
        return s


def circuit_prolong(coarse_geometry: LatticeGeometry, coarse_mask: int, angle: float = np.pi / 4) -> np.ndarray:
    """Run the gadget axis by axis on a qubit register; returns the fine statevector.

    Coarse qubit ``c`` starts on fine qubit ``c * 2^d`` with ancillas at the
    other child positions. Processing axis ``a`` pairs each child whose
    offsets along axes >= a are zero with its neighbor one step along ``a``.
    """
    d, nc = coarse_geometry.d, coarse_geometry.n_sites
    nb = 2**d
    n = nc * nb
    if n > 16:
        raise ValueError("circuit check limited to 16 fine qubits")
    U, _ = gadget_unitary(angle, check=False)
    state = np.zeros(2**n, dtype=complex)
    start = sum(1 << (c * nb) for c in range(nc) if (coarse_mask >> c) & 1)
    state[start] = 1.0
    deltas = list(np.ndindex(*(2,) * d))
    for axis in range(d):
        for c in range(nc):
            for delta in deltas:
                if any(delta[b] for b in range(axis, d)):
                    continue
                partner = list(delta)
                partner[axis] = 1
                q1 = c * nb + np.ravel_multi_index(delta, (2,) * d)
                q2 = c * nb + np.ravel_multi_index(tuple(partner), (2,) * d)
                state = _apply_two_qubit(state, U, int(q1), int(q2), n)
    return state


def verify_circuit_equivalence(
    coarse_geometry: LatticeGeometry,
    test_states: Sequence[int] | None = None,
    angle: float = np.pi / 4,
    tol: float = 1e-10,
) -> EquivalenceReport:
    """Compare the qubit circuit with the fermionic lift on coarse occupation masks.

    ``test_states`` are single-species coarse bitmasks; by default every
    occupation pattern is checked.
    """
    from .fockspace import enumerate_basis

    nc = coarse_geometry.n_sites
    P = make_lattice_prolongation(coarse_geometry)
    if test_states is None:
        test_states = range(2**nc)
    worst, first = 0.0, None
    count = 0
    for mask in test_states:
        mask = int(mask)
        N = bin(mask).count("1")
        src = enumerate_basis(ModeLayout(1, nc), [N])
        dst = enumerate_basis(ModeLayout(1, P.p.shape[0]), [N])
        lifted = P.bind(src, dst)
        psi = np.zeros(src.dimension)
        psi[src.index((mask,))] = 1.0
        fine = prolong_state(lifted, psi)
        expected = np.zeros(2 ** P.p.shape[0], dtype=complex)
        expected[dst.species_states[0].astype(np.int64)] = fine
        got = circuit_prolong(coarse_geometry, mask, angle)
        diff = np.abs(got - expected)
        dev = float(diff.max())
        if dev > worst:
            worst = dev
        if dev > tol and first is None:
            i = int(np.argmax(diff))
            first = (mask, i, complex(got[i]).real, complex(expected[i]).real)
        count += 1
    return EquivalenceReport(worst, worst <= tol, count, first)

