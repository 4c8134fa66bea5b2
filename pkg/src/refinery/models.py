"""Benchmark Hamiltonians: Busch model, multi-species Hubbard lattices, Woods-Saxon.

Units: the Busch model uses oscillator units (length sqrt(hbar/m omega),
energy hbar omega). Lattice models use MeV for energies and masses and fm
for lengths, with hbar = c = 1 restored through ``HBARC``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .fockspace import (
    DEFAULT_DIMENSION_CAP,
    CapacityError,
    FockBasis,
    ModeLayout,
    build_density_density,
    build_one_body,
    build_two_body_tensor,
    enumerate_basis,
)

HBARC = 197.3269804  # MeV fm
NUCLEON_MASS = 938.92  # MeV
FINE_SPACING = HBARC / 150.0  # fm, (150 MeV)^-1

# Two-body couplings (MeV) for the cluster ground states; species are 1-based.
CLUSTER_TABLE: dict[str, dict[float, tuple[tuple[int, int], ...]]] = {
    "1+1+1+1+1": {10.0: ((1, 5), (2, 3), (3, 5), (4, 5)), 20.0: ((1, 2), (2, 4), (3, 4))},
    "2+1+1+1": {-20.0: ((1, 2),), 10.0: ((1, 5), (2, 3), (3, 5), (4, 5)), 20.0: ((2, 4), (3, 4))},
    "2+2+1": {-20.0: ((1, 2), (3, 4)), 10.0: ((1, 5), (2, 3), (3, 5), (4, 5)), 20.0: ((2, 4),)},
    "3+1+1": {-20.0: ((1, 2), (2, 3)), 10.0: ((1, 5),), 20.0: ((2, 4),)},
    "3+2": {-20.0: ((1, 2), (2, 3), (4, 5)), 20.0: ((2, 4),)},
    "4+1": {-20.0: ((1, 2), (2, 3), (2, 4)), 20.0: ((4, 5),)},
    "5": {-20.0: ((1, 2), (2, 3), (2, 4), (4, 5))},
}

NUCLIDES = {"He4": 4, "O16": 16, "Mg24": 24, "Si28": 28, "Ca40": 40}


def cluster_couplings(row: str) -> dict[tuple[int, int], float]:
    """0-based ``{(j, k): C_jk}`` for one row of the cluster table."""
    try:
        table = CLUSTER_TABLE[row]
    except KeyError:
        raise KeyError(f"unknown cluster {row!r}; choose from {list(CLUSTER_TABLE)}") from None
    return {(j - 1, k - 1): C for C, pairs in table.items() for j, k in pairs}


# -- Busch model ---------------------------------------------------------------


@dataclass(frozen=True)
class BuschParams:
    K: int = 2
    n_max: int = 10
    g: float = 1.0

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.K < 2:
            raise ValueError("K must be >= 2")


def hermite_functions(n_max: int, x, gaussian: bool = True) -> np.ndarray:
    """Oscillator eigenfunctions phi_0..phi_{n_max-1} at points ``x``.

    Uses the normalized three-term recurrence, which never forms raw Hermite
    polynomials. With ``gaussian=False`` the common factor exp(-x^2/2) is
    omitted.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max,) + x.shape)
    out[0] = np.pi**-0.25 * (np.exp(-0.5 * x**2) if gaussian else 1.0)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _four_orbital_integrals(n_max: int, order: int) -> np.ndarray:
    # Substituting y = sqrt(2) x turns exp(-2x^2) into the Gauss-Hermite weight.
    y, w = np.polynomial.hermite.hermgauss(order)
    h = hermite_functions(n_max, y / np.sqrt(2.0), gaussian=False)
    return np.einsum("i,pi,qi,ri,si->pqrs", w, h, h, h, h, optimize=True) / np.sqrt(2.0)


def busch_interaction_tensor(n_max: int, g: float = 1.0, order: int | None = None) -> np.ndarray:
    """V[p,q,r,s] = g ∫ phi_p phi_q phi_r phi_s dx."""
    order = order or 2 * n_max + 4
    I = _four_orbital_integrals(n_max, order)
    check = _four_orbital_integrals(n_max, 2 * order)
    if np.max(np.abs(I - check)) > 1e-12:
        raise ArithmeticError(f"quadrature order {order} insufficient for n_max={n_max}")
    return g * I


def busch_layout(params: BuschParams) -> ModeLayout:
    return ModeLayout(params.K, params.n_max)


def busch_hamiltonian(params: BuschParams, cap: int = DEFAULT_DIMENSION_CAP) -> tuple[sp.csr_matrix, FockBasis]:
    """Oscillator energies plus pairwise contact interaction, one particle per species."""
    basis = enumerate_basis(busch_layout(params), [1] * params.K, cap=cap)
    h = np.diag(np.arange(params.n_max) + 0.5)
    H = build_one_body(basis, h)
    if params.g != 0:
        H = H + build_two_body_tensor(basis, busch_interaction_tensor(params.n_max, params.g))
    return H.tocsr(), basis


# -- lattices ------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeGeometry:
    """Periodic cubic lattice with ``L`` sites per axis and spacing in fm."""

    d: int
    L: int
    spacing: float = FINE_SPACING

    @property
    def n_sites(self) -> int:
        return self.L**self.d

    @property
    def coords(self) -> np.ndarray:
        """Integer site coordinates in row-major order, shape ``(n_sites, d)``."""
        return np.array(np.unravel_index(np.arange(self.n_sites), (self.L,) * self.d)).T

    def positions(self) -> np.ndarray:
        """Site positions in fm relative to the grid centroid, minimal image."""
        box = self.L * self.spacing
        x = (self.coords - (self.L - 1) / 2.0) * self.spacing
        return (x + box / 2) % box - box / 2

    def coarse(self) -> "LatticeGeometry":
        if self.L % 2:
            raise ValueError("fine lattice needs an even number of sites per axis")
        return LatticeGeometry(self.d, self.L // 2, 2 * self.spacing)

    def translation(self, axis: int = 0, shift: int = 1) -> np.ndarray:
        """Site permutation ``site -> translated site``."""
        c = self.coords.copy()
        c[:, axis] = (c[:, axis] + shift) % self.L
        return np.ravel_multi_index(c.T, (self.L,) * self.d)


def hopping(mass: float, spacing: float) -> float:
    """1/(2 m b^2) in MeV for mass in MeV and spacing in fm."""
    return HBARC**2 / (2.0 * mass * spacing**2)


@dataclass(frozen=True)
class HubbardParams:
    geometry: LatticeGeometry
    mass: float = NUCLEON_MASS
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    potential: np.ndarray | None = None  # per-site MeV, excluding the Laplacian term
    laplacian_term: bool = True

    def __post_init__(self):
        for j, k in self.couplings:
            if not j < k:
                raise ValueError(f"coupling key {(j, k)} must have j < k")
        if self.potential is not None and np.shape(self.potential) != (self.geometry.n_sites,):
            raise ValueError("potential needs one value per site")


def hubbard_single_particle(params: HubbardParams) -> sp.csr_matrix:
    """Nearest-neighbor hopping -1/(2mb^2) plus on-site potential, site order.

    With ``laplacian_term`` the diagonal gets d/(mb^2), completing the
    finite-difference Laplacian. Neighbor pairs are counted once, so an
    ``L = 2`` axis has a single bond.
    """
    geo = params.geometry
    t = hopping(params.mass, geo.spacing)
    n = geo.n_sites
    diag = np.zeros(n)
    if params.potential is not None:
        diag += np.asarray(params.potential, dtype=float)
    if params.laplacian_term:
        diag += 2.0 * geo.d * t
    pairs = set()
    for axis in range(geo.d):
        for shift in (1, -1):
            target = geo.translation(axis, shift)
            for i, j in zip(range(n), target):
                if i != j:
                    pairs.add((i, int(j)))
    rows, cols = (np.array(a, dtype=np.int64) for a in zip(*sorted(pairs))) if pairs else (np.zeros(0, int),) * 2
    H = sp.csr_matrix((np.full(len(rows), -t), (rows, cols)), shape=(n, n))
    return (H + sp.diags(diag)).tocsr()


@dataclass(frozen=True)
class WoodsSaxonParams:
    V0: float = 50.0  # MeV depth
    R0: float = 1.5  # fm
    alpha: float = 0.5  # fm
    A: int = 40

    def __post_init__(self):
        if self.alpha <= 0 or self.V0 <= 0:
            raise ValueError("alpha and V0 must be positive")

    @property
    def radius(self) -> float:
        return self.R0 * self.A ** (1.0 / 3.0)


def woods_saxon_potential(geometry: LatticeGeometry, params: WoodsSaxonParams) -> np.ndarray:
    """-V0 / (1 + exp((|r| - R)/alpha)) on each site, centered on the grid centroid."""
    if geometry.d != 3:
        raise ValueError("Woods-Saxon benchmark is three-dimensional")
    r = np.linalg.norm(geometry.positions(), axis=1)
    return -params.V0 / (1.0 + np.exp((r - params.radius) / params.alpha))


def hubbard_hamiltonian(
    params: HubbardParams,
    particles: Sequence[int],
    layout: ModeLayout | None = None,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> tuple[sp.csr_matrix, FockBasis]:
    """One-body lattice Hamiltonian plus on-site density-density couplings.

    ``layout`` fixes the mode order (defaults to site order); its species
    count must match ``particles``.
    """
    geo = params.geometry
    K = len(particles)
    layout = layout or ModeLayout(K, geo.n_sites)
    try:
        basis = enumerate_basis(layout, particles, cap=cap)
    except CapacityError as err:
        if geo.d > 1:
            raise CapacityError(err.dimension, err.cap, "use detsim for non-interacting 3D systems") from None
        raise
    h = layout.to_modes(hubbard_single_particle(params))
    H = build_one_body(basis, h)
    if params.couplings:
        H = H + build_density_density(basis, params.couplings)
    return H.tocsr(), basis
