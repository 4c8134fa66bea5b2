"""Multi-species fermionic occupation bases and sparse operator assembly.

Each species owns a contiguous block of ``M`` modes and carries a fixed
particle number. A configuration is one bitmask per species (bit ``i`` set
means mode ``i`` is occupied). Signs follow a Jordan-Wigner convention that
counts only occupied modes of the same species; species are treated as
distinguishable, so operators of different species commute.

The basis is the tensor product of the per-species bases, each sorted by
bitmask value, with species 0 most significant. This is the lexicographic
order of the concatenated masks and lets multi-species operators be
assembled from per-species pieces by index arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_DIMENSION_CAP = 2**24


class CapacityError(RuntimeError):
    """Requested Fock space exceeds the configured dimension cap."""

    def __init__(self, dimension: int, cap: int, hint: str = ""):
        self.dimension = dimension
        self.cap = cap
        msg = f"Fock dimension {dimension} exceeds cap {cap}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)


@dataclass(frozen=True)
class ModeLayout:
    """Assignment of physical mode labels to mode indices, shared by all species.

    ``site_of_mode[m]`` is the physical label (e.g. lattice site in row-major
    order, or oscillator quantum number) stored at mode index ``m``.
    """

    species: int
    modes: int
    site_of_mode: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.modes > 64:
            raise ValueError("at most 64 modes per species are supported")
        if self.site_of_mode is None:
            object.__setattr__(self, "site_of_mode", np.arange(self.modes))
        perm = np.asarray(self.site_of_mode, dtype=np.int64)
        if perm.shape != (self.modes,) or not np.array_equal(np.sort(perm), np.arange(self.modes)):
            raise ValueError("site_of_mode must be a permutation of range(modes)")
        object.__setattr__(self, "site_of_mode", perm)

    @property
    def mode_of_site(self) -> np.ndarray:
        inv = np.empty_like(self.site_of_mode)
        inv[self.site_of_mode] = np.arange(self.modes)
        return inv

    def to_modes(self, h):
        """Reorder a site-indexed single-particle matrix (or vector) into mode order."""
        idx = self.site_of_mode
        if getattr(h, "ndim", 2) == 1:
            return np.asarray(h)[idx]
        if sp.issparse(h):
            return h.tocsr()[idx][:, idx]
        return np.asarray(h)[np.ix_(idx, idx)]

    def to_sites(self, v: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_modes` for vectors or column blocks."""
        out = np.empty_like(v)
        out[self.site_of_mode] = v
        return out


def _species_masks(modes: int, n: int) -> np.ndarray:
    masks = [sum(1 << i for i in occ) for occ in itertools.combinations(range(modes), n)]
    return np.sort(np.array(masks, dtype=np.uint64))


def popcount(x) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Fixed-particle-number occupation basis for ``K`` species."""

    layout: ModeLayout
    particles: tuple[int, ...]
    species_states: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def species_dims(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.species_states)

    @property
    def dimension(self) -> int:
        return math.prod(self.species_dims)

    def __len__(self) -> int:
        return self.dimension

    @property
    def strides(self) -> tuple[int, ...]:
        dims = self.species_dims
        return tuple(math.prod(dims[k + 1 :]) for k in range(len(dims)))

    @property
    def states(self) -> np.ndarray:
        """All configurations as a ``(dim, K)`` array of bitmasks, in basis order."""
        grids = np.meshgrid(*self.species_states, indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def config(self, index: int) -> tuple[int, ...]:
        digits = np.unravel_index(index, self.species_dims)
        return tuple(int(s[d]) for s, d in zip(self.species_states, digits))

    def species_index(self, k: int, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        pos = np.searchsorted(self.species_states[k], masks)
        pos = np.minimum(pos, len(self.species_states[k]) - 1)
        if np.any(self.species_states[k][pos] != masks):
            raise KeyError("configuration not in basis")
        return pos

    def index(self, config: Sequence[int]) -> int:
        """Position of a configuration (tuple of per-species masks)."""
        return int(self.indices(np.asarray(config, dtype=np.uint64)[None, :])[0])

    def indices(self, configs: np.ndarray) -> np.ndarray:
        configs = np.asarray(configs, dtype=np.uint64)
        out = np.zeros(len(configs), dtype=np.int64)
        for k, stride in enumerate(self.strides):
            out += self.species_index(k, configs[:, k]) * stride
        return out


def enumerate_basis(
    layout: ModeLayout, particles: Sequence[int] | int, cap: int = DEFAULT_DIMENSION_CAP
) -> FockBasis:
    """All configurations with ``particles[k]`` fermions in species ``k``."""
    if np.isscalar(particles):
        particles = [int(particles)] * layout.species
    particles = tuple(int(n) for n in particles)
    if len(particles) != layout.species:
        raise ValueError("need one particle number per species")
    for n in particles:
        if not 0 <= n <= layout.modes:
            raise ValueError(f"particle number {n} outside [0, {layout.modes}]")
    dim = math.prod(math.comb(layout.modes, n) for n in particles)
    if dim > cap:
        raise CapacityError(dim, cap)
    cache: dict[int, np.ndarray] = {}
    states = []
    for n in particles:
        if n not in cache:
            cache[n] = _species_masks(layout.modes, n)
        states.append(cache[n])
    return FockBasis(layout, particles, tuple(states))


def _between_mask(i: int, j: int) -> int:
    lo, hi = min(i, j), max(i, j)
    return ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)


def apply_bilinear(config: Sequence[int], species: int, i: int, j: int):
    """Move a particle of ``species`` from mode ``i`` to mode ``j``.

    Returns ``(new_config, sign)`` for ``a†_j a_i`` acting on the configuration,
    or ``None`` if the result vanishes.
    """
    occ = int(config[species])
    if not (occ >> i) & 1:
        return None
    if i != j and (occ >> j) & 1:
        return None
    new = (occ & ~(1 << i)) | (1 << j)
    sign = -1 if bin(new & _between_mask(i, j)).count("1") % 2 else 1
    out = list(config)
    out[species] = new
    return tuple(out), sign


def _hop_vectorized(masks: np.ndarray, i: int, j: int):
    """Vectorized ``a†_j a_i`` on an array of single-species masks."""
    bi, bj = np.uint64(1 << i), np.uint64(1 << j)
    ok = (masks & bi) != 0
    if i != j:
        ok &= (masks & bj) == 0
    src = masks[ok]
    new = (src & ~bi) | bj
    parity = popcount(new & np.uint64(_between_mask(i, j))) & 1
    return np.nonzero(ok)[0], new, 1 - 2 * parity


def _species_transitions(states: np.ndarray, modes: int):
    """All nonvanishing ``a†_p a_r`` matrix elements on one species' basis.

    Returns arrays ``(row, col, sign, p, r)``.
    """
    rows, cols, signs, ps, rs = [], [], [], [], []
    for r in range(modes):
        for p in range(modes):
            col, new, sign = _hop_vectorized(states, r, p)
            if len(col) == 0:
                continue
            rows.append(np.searchsorted(states, new))
            cols.append(col)
            signs.append(sign)
            ps.append(np.full(len(col), p))
            rs.append(np.full(len(col), r))
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, empty, empty
    return tuple(np.concatenate(a) for a in (rows, cols, signs, ps, rs))


def _embed(basis: FockBasis, species: Sequence[int], rows, cols, vals) -> sp.csr_matrix:
    """Lift an operator on a subset of species to the full tensor-product basis.

    ``rows``/``cols`` index the sub-space ordered like ``species`` (first
    listed most significant); identities act on the remaining species.
    """
    dims = basis.species_dims
    strides = basis.strides
    sub_dims = [dims[k] for k in species]
    sub_rows = np.unravel_index(rows, sub_dims)
    sub_cols = np.unravel_index(cols, sub_dims)
    r_off = sum(d.astype(np.int64) * strides[k] for d, k in zip(sub_rows, species))
    c_off = sum(d.astype(np.int64) * strides[k] for d, k in zip(sub_cols, species))
    others = [k for k in range(len(dims)) if k not in species]
    if others:
        grids = np.meshgrid(*[np.arange(dims[k]) * strides[k] for k in others], indexing="ij")
        base = sum(g.reshape(-1) for g in grids)
    else:
        base = np.zeros(1, dtype=np.int64)
    R = (base[:, None] + r_off[None, :]).reshape(-1)
    C = (base[:, None] + c_off[None, :]).reshape(-1)
    V = np.broadcast_to(vals, (len(base), len(vals))).reshape(-1)
    n = basis.dimension
    return sp.csr_matrix((V, (R, C)), shape=(n, n))


def _per_species(h, K: int) -> list:
    if isinstance(h, (list, tuple)):
        if len(h) != K:
            raise ValueError("need one single-particle matrix per species")
        return list(h)
    return [h] * K


def build_one_body(basis: FockBasis, h) -> sp.csr_matrix:
    """Σ_k Σ_ij h_k[i,j] a†_{i,k} a_{j,k} on ``basis``.

    ``h`` is one ``M x M`` matrix shared by all species or a list of them.
    """
    K, M = basis.layout.species, basis.layout.modes
    hs = _per_species(h, K)
    dtype = np.result_type(*[np.asarray(x.toarray() if sp.issparse(x) else x).dtype for x in hs], float)
    n = basis.dimension
    out = sp.csr_matrix((n, n), dtype=dtype)
    for k, hk in enumerate(hs):
        hk = hk.toarray() if sp.issparse(hk) else np.asarray(hk)
        if hk.shape != (M, M):
            raise ValueError(f"species {k}: expected {M}x{M} matrix, got {hk.shape}")
        rows, cols, signs, p, r = _species_transitions(basis.species_states[k], M)
        vals = hk[p, r] * signs
        keep = vals != 0
        out = out + _embed(basis, [k], rows[keep], cols[keep], vals[keep])
    return out.tocsr()


def build_density_density(basis: FockBasis, couplings: Mapping[tuple[int, int], float | np.ndarray]) -> sp.csr_matrix:
    """Diagonal Σ_{r, j<k} C_{jk}(r) n_{r,j} n_{r,k}.

    ``couplings`` maps 0-based species pairs ``(j, k)`` with ``j < k`` to a
    scalar or a per-mode array.
    """
    states = basis.states
    diag = np.zeros(basis.dimension)
    M = basis.layout.modes
    for (j, k), C in couplings.items():
        if not j < k:
            raise ValueError(f"coupling key {(j, k)} must have j < k")
        both = states[:, j] & states[:, k]
        C = np.asarray(C, dtype=float)
        if C.ndim == 0:
            diag += float(C) * popcount(both)
        else:
            if C.shape != (M,):
                raise ValueError("per-mode coupling must have one entry per mode")
            for r in np.nonzero(C)[0]:
                diag += C[r] * ((both >> np.uint64(r)) & np.uint64(1)).astype(float)
    return sp.diags(diag, format="csr")


def build_two_body_tensor(basis: FockBasis, V, atol: float = 1e-10) -> sp.csr_matrix:
    """Σ_{j<k} Σ_pqrs V[p,q,r,s] a†_{p,j} a†_{q,k} a_{s,k} a_{r,j}.

    ``V`` is one ``M^4`` array shared by all species pairs or a mapping from
    0-based pairs to arrays. Because the two species differ, the normal-ordered
    product factorizes as (a†_p a_r)_j (a†_q a_s)_k.
    """
    K, M = basis.layout.species, basis.layout.modes
    if isinstance(V, Mapping):
        pairs = dict(V)
    else:
        pairs = {(j, k): V for j in range(K) for k in range(j + 1, K)}
    n = basis.dimension
    out = sp.csr_matrix((n, n))
    trans = {}
    for (j, k), Vjk in pairs.items():
        Vjk = np.asarray(Vjk)
        if Vjk.shape != (M,) * 4:
            raise ValueError("two-body tensor must have shape (M, M, M, M)")
        if np.max(np.abs(Vjk - np.conj(Vjk.transpose(2, 3, 0, 1))), initial=0.0) > atol:
            raise ValueError("two-body tensor violates V[p,q,r,s] = conj(V[r,s,p,q])")
        for s_ in (j, k):
            if s_ not in trans:
                trans[s_] = _species_transitions(basis.species_states[s_], M)
        rj, cj, sj, pj, qj_r = trans[j]
        rk, ck, sk, pk, rk_s = trans[k]
        vals = Vjk[pj[:, None], pk[None, :], qj_r[:, None], rk_s[None, :]] * (sj[:, None] * sk[None, :])
        keep = vals != 0
        dk = basis.species_dims[k]
        rows = (rj[:, None] * dk + rk[None, :])[keep]
        cols = (cj[:, None] * dk + ck[None, :])[keep]
        if out.dtype != np.result_type(out.dtype, vals.dtype):
            out = out.astype(np.result_type(out.dtype, vals.dtype))
        out = out + _embed(basis, [j, k], rows, cols, vals[keep])
    return out.tocsr()


def permute_modes(basis: FockBasis, mode_perm: np.ndarray) -> sp.csr_matrix:
    """Fock operator of the single-particle mode permutation ``m -> mode_perm[m]``.

    Applied to all species. The sign is the parity of reordering the created
    modes back into ascending order.
    """
    mode_perm = np.asarray(mode_perm)
    M = basis.layout.modes
    mats = []
    for states in basis.species_states:
        new = np.zeros_like(states)
        sign = np.ones(len(states), dtype=np.int64)
        occ_lists = [[m for m in range(M) if (int(s) >> m) & 1] for s in states]
        for idx, occ in enumerate(occ_lists):
            targets = [int(mode_perm[m]) for m in occ]
            inv = sum(1 for a in range(len(targets)) for b in range(a + 1, len(targets)) if targets[a] > targets[b])
            sign[idx] = -1 if inv % 2 else 1
            new[idx] = sum(1 << t for t in targets)
        rows = np.searchsorted(states, new)
        d = len(states)
        mats.append(sp.csr_matrix((sign.astype(float), (rows, np.arange(d))), shape=(d, d)))
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.tocsr()


def hermiticity_error(H) -> float:
    """max|H - H†| / max|H| (0 for the zero operator)."""
    H = sp.csr_matrix(H)
    scale = abs(H).max() if H.nnz else 0.0
    if scale == 0:
        return 0.0
    D = H - H.conj().T
    return (abs(D).max() if D.nnz else 0.0) / scale
