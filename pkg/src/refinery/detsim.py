"""Non-interacting fast path: evolve occupied orbitals, combine overlaps as determinants.

For C = 0 every eigenstate is a Slater determinant per species, so a
many-body overlap is a product of |det| of orbital overlap matrices. The
start operator used here is the one-body interpolation p (h_low - mu) p†,
which coincides with the Fock-space start operator for a single particle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .evolution import EvolutionResult, Schedule, evolve, evolve_converged
from .models import LatticeGeometry


class FermiDegeneracyError(ValueError):
    """The filling splits a degenerate multiplet at the Fermi surface."""


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """Occupied orbitals per species, each an (M, N_k) block of orthonormal columns.

    Species that share a block object also share its propagation.
    """

    orbitals: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "orbitals", tuple(self.orbitals))
        dims = {o.shape[0] for o in self.orbitals}
        if len(dims) > 1:
            raise ValueError("all species must live on the same single-particle space")
        for o in self.orbitals:
            err = np.max(np.abs(o.conj().T @ o - np.eye(o.shape[1]))) if o.shape[1] else 0.0
            if err > 1e-8:
                raise ValueError(f"orbitals are not orthonormal (error {err:.2e})")

    @classmethod
    def orthonormalized(cls, blocks: Sequence[np.ndarray]) -> "OrbitalSet":
        cache: dict[int, np.ndarray] = {}
        out = []
        for b in blocks:
            if id(b) not in cache:
                q, _ = np.linalg.qr(np.asarray(b))
                cache[id(b)] = q
            out.append(cache[id(b)])
        return cls(tuple(out))

    @classmethod
    def shared(cls, block: np.ndarray, K: int) -> "OrbitalSet":
        """K species occupying the same orbitals."""
        return cls.orthonormalized([block] * K)

    @property
    def occupations(self) -> tuple[int, ...]:
        return tuple(o.shape[1] for o in self.orbitals)

    @property
    def dimension(self) -> int:
        return self.orbitals[0].shape[0]

    def groups(self) -> list[tuple[np.ndarray, list[int]]]:
        """Distinct blocks with the species indices that use them."""
        seen: dict[int, int] = {}
        out: list[tuple[np.ndarray, list[int]]] = []
        for k, o in enumerate(self.orbitals):
            if id(o) in seen:
                out[seen[id(o)]][1].append(k)
            else:
                seen[id(o)] = len(out)
                out.append((o, [k]))
        return out


def lattice_isometry(coarse: LatticeGeometry) -> sp.csr_matrix:
    """Single-particle map from coarse sites to fine sites, both in row-major order.

    Each coarse site r spreads with amplitude 2^(-d/2) over fine sites 2r + delta.
    """
    d, Lc = coarse.d, coarse.L
    deltas = np.array(list(np.ndindex(*(2,) * d)))
    fine = 2 * coarse.coords[:, None, :] + deltas[None, :, :]
    rows = np.ravel_multi_index(fine.reshape(-1, d).T, (2 * Lc,) * d)
    cols = np.repeat(np.arange(coarse.n_sites), 2**d)
    vals = np.full(len(rows), 2.0 ** (-d / 2))
    return sp.csr_matrix((vals, (rows, cols)), shape=((2 * Lc) ** d, coarse.n_sites))


def start_block(h_low, p, mu: float) -> sp.csr_matrix:
    h_low = sp.csr_matrix(h_low)
    p = sp.csr_matrix(p)
    shifted = h_low - mu * sp.identity(h_low.shape[0], format="csr")
    return (p @ shifted @ p.conj().T).tocsr()


def sp_interpolated(
    x: float,
    h_low,
    h_high,
    p,
    mu: float,
    convention: str = "flow",
    schedule: Schedule | None = None,
) -> sp.csr_matrix:
    """Single-particle interpolated Hamiltonian.

    ``flow``: x is lambda and the result is
    (1 - lambda)(p (h_low - mu) p† + mu) + lambda h_high.
    ``evolution``: x is a time in ``schedule`` and the result is
    cos^2 p (h_low - mu) p† + sin^2 (h_high - mu).
    """
    h_high = sp.csr_matrix(h_high)
    n = h_high.shape[0]
    eye = sp.identity(n, format="csr")
    start = start_block(h_low, p, mu)
    if convention == "flow":
        if x == 1:
            return h_high.copy()
        return ((1 - x) * (start + mu * eye) + x * h_high).tocsr()
    if convention == "evolution":
        if schedule is None:
            raise ValueError("evolution convention needs a schedule")
        a, b = schedule.weights(x)
        return (a * start + b * (h_high - mu * eye)).tocsr()
    raise ValueError(f"unknown convention {convention!r}")


def determinant_overlap(A: OrbitalSet, B: OrbitalSet) -> float:
    """prod_k |det(A_k† B_k)|^2."""
    if A.occupations != B.occupations or A.dimension != B.dimension:
        raise ValueError("orbital sets have different shapes")
    value = 1.0
    for a, b in zip(A.orbitals, B.orbitals):
        if a.shape[1]:
            value *= abs(np.linalg.det(a.conj().T @ b)) ** 2
    return float(value)


def _overlap_fn(target: OrbitalSet, groups, widths):
    def f(block):
        value, start = 1.0, 0
        for (tgt_block, species), w in zip(groups, widths):
            part = block[:, start : start + w]
            start += w
            if w:
                value *= (abs(np.linalg.det(tgt_block.conj().T @ part)) ** 2) ** len(species)
        return float(value)

    return f


def evolve_orbitals(
    orbitals: OrbitalSet,
    schedule: Schedule | float,
    h_low,
    h_high,
    p,
    mu: float,
    target: OrbitalSet | None = None,
    converge: bool = False,
    **kwargs,
) -> tuple[OrbitalSet, EvolutionResult]:
    """Evolve every occupied orbital under the one-body interpolated Hamiltonian.

    Blocks shared by several species are propagated once. With ``target`` the
    recorded overlap is the determinant overlap with it; the target must group
    species the same way as ``orbitals``. If ``converge`` is set, ``schedule``
    may be a plain T and the step count is doubled until the overlap settles.
    """
    h_high = sp.csr_matrix(h_high)
    H_start = start_block(h_low, p, mu)
    H_end = (h_high - mu * sp.identity(h_high.shape[0], format="csr")).tocsr()
    groups = orbitals.groups()
    widths = [g[0].shape[1] for g in groups]
    block = np.hstack([g[0] for g in groups])
    if target is not None:
        tgroups = target.groups()
        if [s for _, s in tgroups] != [s for _, s in groups]:
            raise ValueError("target groups species differently from the evolved orbitals")
        overlap = _overlap_fn(target, tgroups, widths)
    else:
        overlap = lambda b: 1.0  # noqa: E731
    if converge:
        T = schedule.T if isinstance(schedule, Schedule) else float(schedule)
        steps = schedule.steps if isinstance(schedule, Schedule) else 512
        res = evolve_converged(block, T, H_start, H_end, steps=steps, overlap=overlap, **kwargs)
    else:
        res = evolve(block, schedule, H_start, H_end, overlap=overlap, **kwargs)
    out: list[np.ndarray | None] = [None] * len(orbitals.orbitals)
    start = 0
    for (_, species), w in zip(groups, widths):
        piece = res.final_state[:, start : start + w]
        start += w
        for k in species:
            out[k] = piece
    return OrbitalSet(tuple(out)), res


@dataclass
class Filling:
    levels: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    N: int

    @property
    def homo(self) -> float:
        return float(self.levels[self.N - 1])

    @property
    def lumo(self) -> float:
        return float(self.levels[self.N])

    @property
    def gap(self) -> float:
        return self.lumo - self.homo

    @property
    def occupied(self) -> np.ndarray:
        return self.vectors[:, : self.N]


def fill_lowest(h, N: int, degeneracy_tol: float = 1e-6) -> Filling:
    """Diagonalize a single-particle matrix and occupy its lowest ``N`` levels."""
    A = h.toarray() if sp.issparse(h) else np.asarray(h)
    levels, vectors = np.linalg.eigh(A)
    if not 0 < N < len(levels):
        raise ValueError(f"cannot place {N} particles in {len(levels)} levels")
    if levels[N] - levels[N - 1] < degeneracy_tol * max(1.0, abs(levels[N])):
        raise FermiDegeneracyError(
            f"filling {N} levels splits a degenerate multiplet at {levels[N - 1]:.6g}; choose another geometry"
        )
    return Filling(levels, vectors, N)


@dataclass
class HFResult:
    energy: float
    rms_radius: float | None


def hf_energy(orbitals: OrbitalSet, h, positions: np.ndarray | None = None) -> HFResult:
    """Sum of occupied orbital energies; with site ``positions`` also the rms radius."""
    energy, r2, count = 0.0, 0.0, 0
    rsq = None if positions is None else np.sum(np.asarray(positions) ** 2, axis=1)
    for o in orbitals.orbitals:
        energy += float(np.real(np.sum(o.conj() * (h @ o))))
        if rsq is not None:
            r2 += float(np.sum(rsq[:, None] * np.abs(o) ** 2))
        count += o.shape[1]
    rms = float(np.sqrt(r2 / count)) if rsq is not None and count else None
    return HFResult(energy, rms)
