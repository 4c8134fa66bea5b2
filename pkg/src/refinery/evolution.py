"""Adiabatic evolution, eigensolvers, spectral flow and gap measurement.

The adiabatic Hamiltonian is

    H(t) = cos^2(theta) H_start + sin^2(theta) H_end,   theta = pi t / (2 T),

integrated with the exponential midpoint rule: one Krylov exponential of
H(t + h/2) per step of size h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator, eigsh

DENSE_CUTOFF = 2048


class KrylovConvergenceError(ArithmeticError):
    pass


class NormDriftError(ArithmeticError):
    pass


class EigensolverError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Schedule:
    T: float
    steps: int = 512

    def __post_init__(self):
        if self.T < 0 or self.steps < 1:
            raise ValueError("need T >= 0 and steps >= 1")

    def theta(self, t: float) -> float:
        return np.pi * t / (2 * self.T) if self.T > 0 else np.pi / 2

    def weights(self, t: float) -> tuple[float, float]:
        """(start weight, end weight); exactly (1, 0) at t=0 and (0, 1) at t=T."""
        if t <= 0:
            return 1.0, 0.0
        if t >= self.T:
            return 0.0, 1.0
        c = np.cos(self.theta(t))
        return c * c, 1.0 - c * c


def _as_apply(A) -> Callable[[np.ndarray], np.ndarray]:
    if callable(A) and not hasattr(A, "shape"):
        return A
    if sp.issparse(A):
        A = A.tocsr()
        if A.dtype != np.complex128:
            A = A.astype(np.complex128)
        return A.__matmul__
    if isinstance(A, np.ndarray):
        A = A.astype(np.complex128)
        return A.__matmul__
    return aslinearoperator(A).matvec


def interpolated_apply(t: float, schedule: Schedule, H_start, H_end, v: np.ndarray) -> np.ndarray:
    """H(t) v with the cos^2/sin^2 weights of ``schedule``."""
    a, b = schedule.weights(t)
    out = None
    if a:
        out = a * _as_apply(H_start)(v)
    if b:
        w = b * _as_apply(H_end)(v)
        out = w if out is None else out + w
    if out is None:
        out = np.zeros_like(v)
    if out.shape != v.shape:
        raise ValueError("dimension mismatch between operator and vector")
    return out


def krylov_expm(
    apply: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    dt: float,
    tol: float = 1e-10,
    max_dim: int = 120,
) -> tuple[np.ndarray, float, int]:
    """exp(-i dt A) v for Hermitian A via Lanczos with full reorthogonalization.

    The subspace grows until the a-posteriori error estimate
    ``|v| * beta_m * |[exp(-i dt T_m) e_1]_m|`` drops below ``tol``. Returns
    the result, the largest Ritz value magnitude seen (a norm estimate) and
    the subspace dimension used.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0 or dt == 0:
        return v.astype(np.complex128, copy=True), 0.0, 0
    n = v.shape[0]
    V = np.empty((max_dim + 1, n), dtype=np.complex128)
    V[0] = v / beta0
    alphas: list[float] = []
    betas: list[float] = []
    for j in range(max_dim):
        w = np.asarray(apply(V[j]), dtype=np.complex128)
        a = np.vdot(V[j], w).real
        w = w - a * V[j]
        if j:
            w -= betas[-1] * V[j - 1]
        basis = V[: j + 1]
        w -= (basis.conj() @ w) @ basis
        w -= (basis.conj() @ w) @ basis
        b = np.linalg.norm(w)
        alphas.append(a)
        evals, evecs = la.eigh_tridiagonal(np.array(alphas), np.array(betas)) if j else (np.array(alphas), np.ones((1, 1)))
        y = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        norm_est = float(np.max(np.abs(evals)))
        err = beta0 * b * abs(y[-1])
        if err < tol or b < 1e-13 * max(1.0, norm_est):
            return beta0 * (y @ V[: j + 1]), norm_est, j + 1
        betas.append(b)
        V[j + 1] = w / b
    raise KrylovConvergenceError(f"Krylov exponential not converged at dimension {max_dim} (error estimate {err:.3e})")


@dataclass
class EvolutionResult:
    times: np.ndarray
    norms: np.ndarray
    overlaps: np.ndarray
    final_state: np.ndarray = field(repr=False)
    steps: int
    norm_estimate: float = 0.0

    @property
    def final_overlap(self) -> float:
        return float(self.overlaps[-1])

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - 1.0)))


def evolve(
    psi0: np.ndarray,
    schedule: Schedule,
    H_start,
    H_end,
    target: np.ndarray | None = None,
    overlap: Callable[[np.ndarray], float] | None = None,
    samples: int = 64,
    tol: float = 1e-10,
    check_norm: bool = True,
) -> EvolutionResult:
    """Integrate i dpsi/dt = H(t) psi from t=0 to T.

    ``psi0`` may be a vector or a block of column vectors (orbitals), each
    propagated by the same H(t). Overlaps are recorded on ``samples`` evenly
    spaced intervals (plus t=0) using ``overlap(state)`` or, if a ``target``
    vector is given, |<target|state>|^2.
    """
    if overlap is None:
        if target is None:
            raise ValueError("need a target state or an overlap function")
        target = np.asarray(target)
        overlap = lambda s: float(abs(np.vdot(target, s)) ** 2)  # noqa: E731
    apply_start, apply_end = _as_apply(H_start), _as_apply(H_end)
    psi = np.array(psi0, dtype=np.complex128)
    block = psi.ndim == 2
    norm0 = np.linalg.norm(psi, axis=0)
    if np.any(np.abs(norm0 - 1.0) > 1e-10):
        raise ValueError("initial state must be normalized")
    steps = schedule.steps
    h = schedule.T / steps
    every = max(1, steps // samples)
    times, norms, overlaps = [0.0], [1.0], [overlap(psi)]
    norm_est = 0.0
    for n in range(steps):
        a, b = schedule.weights((n + 0.5) * h)

        def H(v, a=a, b=b):
            return a * apply_start(v) + b * apply_end(v)

        if block:
            for c in range(psi.shape[1]):
                psi[:, c], est, _ = krylov_expm(H, psi[:, c], h, tol=tol)
                norm_est = max(norm_est, est)
        else:
            psi, est, _ = krylov_expm(H, psi, h, tol=tol)
            norm_est = max(norm_est, est)
        if (n + 1) % every == 0 or n + 1 == steps:
            nrm = np.linalg.norm(psi, axis=0)
            times.append((n + 1) * h)
            norms.append(float(nrm[np.argmax(np.abs(nrm - 1.0))]) if block else float(nrm))
            overlaps.append(overlap(psi))
    result = EvolutionResult(np.array(times), np.array(norms), np.array(overlaps), psi, steps, norm_est)
    if check_norm:
        allowed = 1e-8 * (1.0 + schedule.T * norm_est)
        if result.max_norm_drift > allowed:
            raise NormDriftError(f"norm drift {result.max_norm_drift:.3e} exceeds {allowed:.3e}")
    return result


def evolve_converged(
    psi0: np.ndarray,
    T: float,
    H_start,
    H_end,
    steps: int = 512,
    change_tol: float = 1e-5,
    max_steps: int = 1 << 15,
    **kwargs,
) -> EvolutionResult:
    """Run :func:`evolve`, doubling the step count until the final overlap settles."""
    prev = evolve(psi0, Schedule(T, steps), H_start, H_end, **kwargs)
    if T == 0:
        return prev
    while True:
        steps *= 2
        if steps > max_steps:
            raise KrylovConvergenceError(f"final overlap not converged with {max_steps} steps")
        cur = evolve(psi0, Schedule(T, steps), H_start, H_end, **kwargs)
        if abs(cur.final_overlap - prev.final_overlap) < change_tol:
            return cur
        prev = cur


# -- eigensolvers --------------------------------------------------------------


def _dense(H) -> np.ndarray:
    if sp.issparse(H):
        return H.toarray()
    if isinstance(H, np.ndarray):
        return H
    op = aslinearoperator(H)
    return op.matmat(np.eye(op.shape[0], dtype=op.dtype))


def norm_estimate(H) -> float:
    """Upper bound on the spectral norm for matrices, power estimate otherwise."""
    if sp.issparse(H):
        return float(sp.linalg.norm(H, 1)) if H.nnz else 0.0
    if isinstance(H, np.ndarray):
        return float(np.linalg.norm(H, 1))
    op = aslinearoperator(H)
    v = np.random.default_rng(1).standard_normal(op.shape[0])
    est = 0.0
    for _ in range(30):
        w = op.matvec(v / np.linalg.norm(v))
        est = max(est, float(np.linalg.norm(w)))
        v = w
        if not np.any(v):
            break
    return est


def ground_state(H, k: int = 1, dense_cutoff: int = DENSE_CUTOFF, rtol: float = 1e-9, seed: int = 0):
    """Lowest ``k`` eigenpairs of a Hermitian operator, ascending.

    Dense diagonalization up to ``dense_cutoff``; above it an implicitly
    restarted Lanczos solver with a seeded start vector. Every returned pair
    satisfies |Hv - Ev| <= rtol * |H|_est.
    """
    n = H.shape[0]
    k = min(k, n)
    if n <= dense_cutoff:
        A = _dense(H)
        evals, evecs = np.linalg.eigh((A + A.conj().T) / 2)
        evals, evecs = evals[:k], evecs[:, :k]
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        ncv = min(n - 1, max(2 * k + 20, 40))
        evals, evecs = eigsh(H, k=k, which="SA", v0=v0, ncv=ncv, tol=1e-13, maxiter=20 * n)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    op = aslinearoperator(H)
    scale = max(norm_estimate(H), float(np.max(np.abs(evals))) if k else 0.0, 1e-300)
    res = np.linalg.norm(op.matmat(evecs) - evecs * evals, axis=0) if k else np.zeros(0)
    if np.any(res > rtol * scale):
        raise EigensolverError(f"eigenpair residual {res.max():.3e} exceeds {rtol * scale:.3e}")
    return evals, evecs


@dataclass
class SpectralFlow:
    lambdas: np.ndarray
    energies: np.ndarray  # (n_lambda, k), ascending per row
    labels: list | None = None

    @property
    def step_changes(self) -> np.ndarray:
        return np.abs(np.diff(self.energies, axis=0))

    @property
    def max_step(self) -> float:
        return float(self.step_changes.max()) if len(self.lambdas) > 1 else 0.0

    @property
    def median_step(self) -> float:
        return float(np.median(self.step_changes)) if len(self.lambdas) > 1 else 0.0


def spectral_flow(H_start_full, H_end, lambdas, k: int = 10, dense_cutoff: int = DENSE_CUTOFF) -> SpectralFlow:
    """Lowest ``k`` eigenvalues of (1 - lam) H_start_full + lam H_end on a grid."""
    lambdas = np.asarray(lambdas, dtype=float)
    n = H_end.shape[0]
    out = np.empty((len(lambdas), min(k, n)))
    if n <= dense_cutoff:
        A, B = _dense(H_start_full), _dense(H_end)
        for i, lam in enumerate(lambdas):
            M = (1 - lam) * A + lam * B
            out[i] = np.linalg.eigvalsh((M + M.conj().T) / 2)[:k]
        return SpectralFlow(lambdas, out)
    A, B = aslinearoperator(H_start_full), aslinearoperator(H_end)
    for i, lam in enumerate(lambdas):
        M = LinearOperator((n, n), matvec=lambda v, lam=lam: (1 - lam) * A.matvec(v) + lam * B.matvec(v), dtype=np.result_type(A.dtype, B.dtype))
        out[i], _ = ground_state(M, k=k, dense_cutoff=0)
    return SpectralFlow(lambdas, out)


# -- gap excluding translational modes -----------------------------------------


@dataclass
class GapResult:
    gap: float | None  # None if no zero-momentum excitation inside the search window
    E0: float
    energies: np.ndarray
    phases: np.ndarray  # eigenvalue of the translation for each state
    ground_is_zero_momentum: bool
    flagged: list[int] = field(default_factory=list)
    vectors: np.ndarray | None = field(default=None, repr=False)  # momentum-resolved eigenvectors

    @property
    def zero_momentum(self) -> np.ndarray:
        return np.abs(np.angle(self.phases)) < 1e-3


def gap_excluding_translations(
    H,
    translation,
    k_search: int = 24,
    degeneracy_tol: float = 1e-8,
    min_expectation: float = 0.99,
) -> GapResult:
    """Gap from the zero-momentum ground state to the next zero-momentum state.

    Each of the lowest ``k_search`` eigenstates is labeled by its translation
    eigenvalue. Degenerate multiplets are re-diagonalized with the translation
    so that momentum-mixed eigenvectors get clean labels; a state whose
    |<T>| stays below ``min_expectation`` is flagged.
    """
    evals, evecs = ground_state(H, k=k_search)
    evecs = evecs.astype(np.complex128)
    T = aslinearoperator(translation)
    phases = np.empty(len(evals), dtype=complex)
    flagged: list[int] = []
    i = 0
    while i < len(evals):
        j = i
        while j + 1 < len(evals) and evals[j + 1] - evals[i] <= degeneracy_tol:
            j += 1
        Vb = evecs[:, i : j + 1]
        Tb = Vb.conj().T @ T.matmat(Vb)
        if j > i:
            Tb, Z = la.schur(Tb, output="complex")
            evecs[:, i : j + 1] = Vb @ Z
        vals = np.diag(Tb)
        for off, ph in enumerate(vals):
            if abs(ph) < min_expectation:
                flagged.append(i + off)
        phases[i : j + 1] = vals
        i = j + 1
    zero = np.abs(np.angle(phases)) < 1e-3
    idx = np.nonzero(zero)[0]
    if len(idx) == 0:
        raise EigensolverError("no zero-momentum state among the lowest eigenstates")
    E0 = float(evals[idx[0]])
    gap = float(evals[idx[1]] - E0) if len(idx) > 1 else None
    return GapResult(gap, E0, evals, phases, bool(zero[0]), flagged, evecs)
