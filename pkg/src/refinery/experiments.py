"""Benchmark experiments: configuration, problem setup and T sweeps."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import __version__
from .detsim import OrbitalSet, start_block, determinant_overlap, evolve_orbitals, fill_lowest, lattice_isometry
from .evolution import (
    EigensolverError,
    EvolutionResult,
    GapResult,
    Schedule,
    SpectralFlow,
    evolve,
    evolve_converged,
    gap_excluding_translations,
    ground_state,
    spectral_flow,
)
from .fockspace import permute_modes
from .models import (
    CLUSTER_TABLE,
    NUCLEON_MASS,
    NUCLIDES,
    BuschParams,
    HubbardParams,
    LatticeGeometry,
    WoodsSaxonParams,
    busch_hamiltonian,
    cluster_couplings,
    hubbard_hamiltonian,
    hubbard_single_particle,
    woods_saxon_potential,
)
from .records import RunRecord, Table
from .refinement import (
    EquivalenceReport,
    ShiftPolicy,
    gadget_unitary,
    make_basis_prolongation,
    make_lattice_prolongation,
    prolong_state,
    resolve_shift,
    start_hamiltonian,
    verify_circuit_equivalence,
)

FAMILIES = ("busch", "woods_saxon", "hubbard_cluster", "spectral_flow", "gadget_check")
EVOLUTION_FAMILIES = ("busch", "woods_saxon", "hubbard_cluster")


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_WS_KEYS = {
    "nuclide": (_strs, ("Ca40",)),
    "L": (int, 10),
    "V0": (float, 50.0),
    "R0": (float, 1.5),
    "V0_coarse": (float, 40.0),
    "R0_coarse": (float, 1.8),
    "alpha": (float, 0.5),
    "mass": (float, NUCLEON_MASS),
    "species": (int, 4),
    "flow_points": (int, 21),
    "flow_levels": (int, 20),
}

SCHEMAS: dict[str, dict[str, tuple[Callable, object]]] = {
    "busch": {"K": (_ints, (2,)), "n_low": (int, 2), "n_high": (int, 10), "g": (float, 1.0)},
    "woods_saxon": _WS_KEYS,
    "spectral_flow": _WS_KEYS,
    "hubbard_cluster": {
        "cluster": (_strs, tuple(CLUSTER_TABLE)),
        "L": (int, 10),
        "mass": (float, NUCLEON_MASS),
        "k_search": (int, 24),
    },
    "gadget_check": {"angle": (float, math.pi / 4), "dims": (_ints, (1, 2, 3))},
}

DEFAULT_SWEEPS = {
    "busch": (1.0, 2.0, 5.0, 10.0, 20.0, 40.0),
    "woods_saxon": (0.0, 0.1, 0.25, 0.5, 1.0, 1.5),
    "hubbard_cluster": (0.0, 0.25, 0.5, 1.0, 2.0, 4.0),
}

# Shift used by "auto": the first excited level for the oscillator basis, the
# continuum threshold for Woods-Saxon, and 20 MeV above the coarse ground
# state for the clusters (their coarse spectra have near-degenerate
# translational partners right above the ground state).
AUTO_SHIFT = {
    "busch": ShiftPolicy("auto_gap"),
    "woods_saxon": ShiftPolicy("explicit", 0.0),
    "spectral_flow": ShiftPolicy("explicit", 0.0),
    "hubbard_cluster": ShiftPolicy("offset", 20.0),
}


def parse_shift(text: str, family: str) -> ShiftPolicy:
    """``auto``, ``gap``, ``homo_lumo``, ``offset:<MeV>`` or a number."""
    text = str(text).strip()
    if text == "auto":
        if family not in AUTO_SHIFT:
            raise ConfigError(f"family {family!r} takes no shift")
        return AUTO_SHIFT[family]
    if text == "gap":
        return ShiftPolicy("auto_gap")
    if text == "homo_lumo":
        return ShiftPolicy("auto_homo_lumo")
    if text.startswith("offset:"):
        return ShiftPolicy("offset", float(text.split(":", 1)[1]))
    try:
        return ShiftPolicy("explicit", float(text))
    except ValueError:
        raise ConfigError(f"cannot parse shift {text!r}") from None


@dataclass
class ExperimentConfig:
    family: str
    params: dict[str, object] = field(default_factory=dict)
    T_sweep: tuple[float, ...] = ()
    t_units: str = "absolute"  # or "inverse_gap": T values multiply 1/dE
    steps: int = 512
    converge: bool = True
    mu: str = "auto"
    out: Path | None = None
    seed: int = 0
    spectral_flow: bool = False
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        schema = SCHEMAS[self.family]
        for key, (_, default) in schema.items():
            self.params.setdefault(key, default)
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"unknown keys for {self.family}: {', '.join(sorted(unknown))}")
        if self.family in EVOLUTION_FAMILIES:
            if not self.T_sweep:
                self.T_sweep = DEFAULT_SWEEPS[self.family]
            if any(T < 0 for T in self.T_sweep):
                raise ConfigError("T_sweep values must be >= 0")
        if self.t_units not in ("absolute", "inverse_gap"):
            raise ConfigError("t_units must be 'absolute' or 'inverse_gap'")
        if self.steps < 1 or self.workers < 1:
            raise ConfigError("steps and workers must be positive")
        positive = ("n_low", "n_high", "L", "V0", "R0", "V0_coarse", "R0_coarse", "alpha", "mass", "species",
                    "flow_points", "flow_levels", "k_search")
        for key in positive:
            if key in self.params and not self.params[key] > 0:
                raise ConfigError(f"{key} must be positive")
        if self.family in AUTO_SHIFT:
            parse_shift(self.mu, self.family)
        for name in self.params.get("nuclide", ()):
            if name not in NUCLIDES:
                raise ConfigError(f"unknown nuclide {name!r}; choose from {', '.join(NUCLIDES)}")
        for name in self.params.get("cluster", ()):
            if name not in CLUSTER_TABLE:
                raise ConfigError(f"unknown cluster {name!r}; choose from {', '.join(CLUSTER_TABLE)}")
        return self


_COMMON = {
    "t_sweep": ("T_sweep", _floats),
    "t_units": ("t_units", str),
    "steps": ("steps", int),
    "converge": ("converge", _bool),
    "mu": ("mu", str),
    "out": ("out", Path),
    "seed": ("seed", int),
    "spectral_flow": ("spectral_flow", _bool),
    "workers": ("workers", int),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``[family]`` followed by ``key = value`` lines (``#`` starts a comment)."""
    family = None
    cfg_kwargs: dict[str, object] = {}
    params: dict[str, object] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            if family is not None:
                raise ConfigError(f"line {n}: only one [family] section allowed")
            family = line[1:-1].strip()
            if family not in FAMILIES:
                raise ConfigError(f"line {n}: unknown family {family!r}")
            continue
        if family is None:
            raise ConfigError(f"line {n}: expected a [family] header first")
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"line {n}: expected key = value")
        try:
            if key in _COMMON:
                attr, conv = _COMMON[key]
                cfg_kwargs[attr] = conv(value)
            elif key in SCHEMAS[family]:
                params[key] = SCHEMAS[family][key][0](value)
            else:
                raise ConfigError(f"line {n}: unknown key {key!r} for {family}")
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(f"line {n}: bad value for {key}: {err}") from None
    if family is None:
        raise ConfigError("missing [family] header")
    return ExperimentConfig(family, params, **cfg_kwargs)


# -- problems ------------------------------------------------------------------


@dataclass
class Problem:
    """A prepared refinement run: everything except the total time T."""

    label: str
    mu: float
    E0_low: float
    E0_high: float
    dE: float
    initial_overlap: float
    extra: dict = field(default_factory=dict)

    def run(self, T: float, steps: int = 512, converge: bool = True) -> EvolutionResult:
        raise NotImplementedError


@dataclass
class FockProblem(Problem):
    psi0: np.ndarray = field(default=None, repr=False)
    target: np.ndarray = field(default=None, repr=False)
    H_start: object = field(default=None, repr=False)
    H_end: object = field(default=None, repr=False)

    def run(self, T: float, steps: int = 512, converge: bool = True) -> EvolutionResult:
        if converge:
            return evolve_converged(self.psi0, T, self.H_start, self.H_end, steps=steps, target=self.target)
        return evolve(self.psi0, Schedule(T, steps), self.H_start, self.H_end, target=self.target)


@dataclass
class OrbitalProblem(Problem):
    orbitals: OrbitalSet = field(default=None, repr=False)
    target: OrbitalSet = field(default=None, repr=False)
    h_low: sp.csr_matrix = field(default=None, repr=False)
    h_high: sp.csr_matrix = field(default=None, repr=False)
    p: sp.csr_matrix = field(default=None, repr=False)

    def run(self, T: float, steps: int = 512, converge: bool = True) -> EvolutionResult:
        sched = Schedule(T, steps)
        _, res = evolve_orbitals(self.orbitals, sched, self.h_low, self.h_high, self.p, self.mu,
                                 target=self.target, converge=converge)
        return res

    def flow(self, points: int = 21, levels: int = 20) -> SpectralFlow:
        """Single-particle spectral flow from the prolonged coarse to the fine Hamiltonian."""
        n = self.h_high.shape[0]
        start_full = start_block(self.h_low, self.p, self.mu) + self.mu * sp.identity(n, format="csr")
        return spectral_flow(start_full, self.h_high, np.linspace(0.0, 1.0, points), k=levels)


def _shifted(H, mu: float) -> sp.csr_matrix:
    return (H - mu * sp.identity(H.shape[0], format="csr")).tocsr()


def prepare_busch(K: int = 2, n_low: int = 2, n_high: int = 10, g: float = 1.0,
                  policy: ShiftPolicy | None = None) -> FockProblem:
    policy = policy or AUTO_SHIFT["busch"]
    H_low, b_low = busch_hamiltonian(BuschParams(K, n_low, g))
    H_high, b_high = busch_hamiltonian(BuschParams(K, n_high, g))
    E_low, V_low = ground_state(H_low, k=2)
    E_high, V_high = ground_state(H_high, k=2)
    mu = resolve_shift(policy=policy, energies=E_low)
    P = make_basis_prolongation(n_low, n_high, K).bind(b_low, b_high)
    psi0 = prolong_state(P, V_low[:, 0])
    target = V_high[:, 0]
    return FockProblem(
        label=f"K={K}", mu=mu, E0_low=float(E_low[0]), E0_high=float(E_high[0]),
        dE=float(E_high[1] - E_high[0]), initial_overlap=float(abs(np.vdot(target, psi0)) ** 2),
        extra={"dim_low": b_low.dimension, "dim_high": b_high.dimension},
        psi0=psi0, target=target, H_start=start_hamiltonian(H_low, P, mu), H_end=_shifted(H_high, mu),
    )


def _translation_operator(basis, geometry: LatticeGeometry) -> sp.csr_matrix:
    layout = basis.layout
    sites = geometry.translation(0, 1)
    mode_perm = layout.mode_of_site[sites[layout.site_of_mode]]
    return permute_modes(basis, mode_perm)


def _zero_momentum_ground(H, basis, geometry, k_search: int) -> tuple[GapResult, np.ndarray]:
    gap = gap_excluding_translations(H, _translation_operator(basis, geometry), k_search=k_search)
    i = int(np.argmax(gap.zero_momentum))
    return gap, gap.vectors[:, i]


def prepare_hubbard(cluster: str = "5", L: int = 10, mass: float = NUCLEON_MASS, k_search: int = 24,
                    policy: ShiftPolicy | None = None) -> FockProblem:
    """One nucleon per species on a periodic 1D chain, coarse chain of L/2 sites at spacing 2b."""
    policy = policy or AUTO_SHIFT["hubbard_cluster"]
    couplings = cluster_couplings(cluster)
    K = 5
    fine = LatticeGeometry(1, L)
    coarse = fine.coarse()
    P0 = make_lattice_prolongation(coarse, K=K)
    H_low, b_low = hubbard_hamiltonian(HubbardParams(coarse, mass, couplings), [1] * K, layout=P0.source_layout)
    H_high, b_high = hubbard_hamiltonian(HubbardParams(fine, mass, couplings), [1] * K, layout=P0.target_layout)
    gap_low, psi_low = _zero_momentum_ground(H_low, b_low, coarse, min(k_search, 8))
    gap_high, target = _zero_momentum_ground(H_high, b_high, fine, k_search)
    if gap_high.gap is None:
        raise EigensolverError(f"no zero-momentum excitation among the lowest {k_search} states; raise k_search")
    above = [e for e in gap_low.energies if e > gap_low.E0 + 1e-8]
    mu = resolve_shift(policy=policy, energies=[gap_low.E0] + above[:1])
    P = P0.bind(b_low, b_high)
    psi0 = prolong_state(P, psi_low)
    return FockProblem(
        label=cluster, mu=mu, E0_low=gap_low.E0, E0_high=gap_high.E0, dE=gap_high.gap,
        initial_overlap=float(abs(np.vdot(target, psi0)) ** 2),
        extra={
            "dim_low": b_low.dimension,
            "dim_high": b_high.dimension,
            "ground_zero_momentum": gap_high.ground_is_zero_momentum,
            "flagged_states": len(gap_high.flagged),
        },
        psi0=psi0, target=target, H_start=start_hamiltonian(H_low, P, mu), H_end=_shifted(H_high, mu),
    )


def woods_saxon_hamiltonians(
    L: int = 10,
    V0: float = 50.0,
    R0: float = 1.5,
    V0_coarse: float = 40.0,
    R0_coarse: float = 1.8,
    alpha: float = 0.5,
    mass: float = NUCLEON_MASS,
    A: int = 40,
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, LatticeGeometry]:
    """(h_low, h_high, p, fine geometry) for one nucleon species, row-major site order."""
    fine = LatticeGeometry(3, L)
    coarse = fine.coarse()
    v_high = woods_saxon_potential(fine, WoodsSaxonParams(V0, R0, alpha, A))
    v_low = woods_saxon_potential(coarse, WoodsSaxonParams(V0_coarse, R0_coarse, alpha, A))
    h_high = hubbard_single_particle(HubbardParams(fine, mass, potential=v_high))
    h_low = hubbard_single_particle(HubbardParams(coarse, mass, potential=v_low))
    return h_low, h_high, lattice_isometry(coarse), fine


def prepare_woods_saxon(nuclide: str = "Ca40", L: int = 10, V0: float = 50.0, R0: float = 1.5,
                        V0_coarse: float = 40.0, R0_coarse: float = 1.8, alpha: float = 0.5,
                        mass: float = NUCLEON_MASS, species: int = 4,
                        policy: ShiftPolicy | None = None) -> OrbitalProblem:
    policy = policy or AUTO_SHIFT["woods_saxon"]
    A = NUCLIDES[nuclide]
    if A % species:
        raise ValueError(f"{A} nucleons do not split evenly over {species} species")
    N = A // species
    h_low, h_high, p, fine = woods_saxon_hamiltonians(L, V0, R0, V0_coarse, R0_coarse, alpha, mass, A)
    low = fill_lowest(h_low, N)
    high = fill_lowest(h_high, N)
    mu = resolve_shift(policy=policy, levels=low.levels, particles=N)
    orbitals = OrbitalSet.shared(p @ low.occupied, species)
    target = OrbitalSet.shared(high.occupied, species)
    return OrbitalProblem(
        label=nuclide, mu=mu, E0_low=species * float(low.levels[:N].sum()),
        E0_high=species * float(high.levels[:N].sum()), dE=high.gap,
        initial_overlap=determinant_overlap(orbitals, target),
        extra={"N_per_species": N, "coarse_homo_lumo_gap": low.gap, "sp_dim": h_high.shape[0]},
        orbitals=orbitals, target=target, h_low=h_low, h_high=h_high, p=p,
    )


# -- runners -------------------------------------------------------------------


def _map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sweep_problem(problem: Problem, cfg: ExperimentConfig) -> list[tuple[float, EvolutionResult]]:
    scale = 1.0 / problem.dE if cfg.t_units == "inverse_gap" else 1.0
    times = [float(T) * scale for T in cfg.T_sweep]
    results = _map(lambda T: problem.run(T, cfg.steps, cfg.converge), times, cfg.workers)
    return list(zip(times, results))


def _record_problem(rec: RunRecord, problem: Problem) -> None:
    pre = f"{problem.label}."
    for key in ("mu", "E0_low", "E0_high", "dE", "initial_overlap"):
        rec.parameters[pre + key] = float(getattr(problem, key))
    for key, val in problem.extra.items():
        rec.parameters[pre + key] = val.item() if isinstance(val, np.generic) else val


def _base_record(cfg: ExperimentConfig) -> RunRecord:
    rec = RunRecord(cfg.family, version=__version__)
    for key, val in cfg.params.items():
        rec.parameters[f"param.{key}"] = ",".join(map(str, val)) if isinstance(val, tuple) else val
    if cfg.family in EVOLUTION_FAMILIES:
        rec.parameters["T_sweep"] = ",".join("%.17g" % T for T in cfg.T_sweep)
        rec.parameters["t_units"] = cfg.t_units
        rec.parameters["steps"] = cfg.steps
        rec.parameters["converge"] = cfg.converge
    if cfg.family in AUTO_SHIFT:
        pol = parse_shift(cfg.mu, cfg.family)
        rec.parameters["shift_policy"] = pol.mode if pol.value is None else f"{pol.mode}:{pol.value!r}"
    rec.parameters["seed"] = cfg.seed
    return rec


def _evolution_table(unit: str, label: str) -> Table:
    return Table([label, f"T_1/{unit}", "overlap", f"E0_low_{unit}", f"E0_high_{unit}", f"mu_{unit}",
                  f"dE_{unit}", "steps", "max_norm_drift"])


def _fill(table: Table, problem: Problem, sweep) -> None:
    for T, res in sweep:
        table.add(problem.label, T, res.final_overlap, problem.E0_low, problem.E0_high, problem.mu, problem.dE,
                  res.steps, res.max_norm_drift)


def run_busch(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    t0 = time.perf_counter()
    rec = _base_record(cfg)
    table = _evolution_table("hbar_omega", "case")
    pol = parse_shift(cfg.mu, "busch")
    for K in cfg.params["K"]:
        prob = prepare_busch(K, cfg.params["n_low"], cfg.params["n_high"], cfg.params["g"], pol)
        _record_problem(rec, prob)
        _fill(table, prob, _sweep_problem(prob, cfg))
    rec.tables["main"] = table
    rec.wall_clock = time.perf_counter() - t0
    return rec


def _ws_kwargs(cfg: ExperimentConfig) -> dict:
    keys = ("L", "V0", "R0", "V0_coarse", "R0_coarse", "alpha", "mass", "species")
    return {k: cfg.params[k] for k in keys}


def _flow_table(rec: RunRecord, prob: OrbitalProblem, cfg: ExperimentConfig, table: Table) -> None:
    flow = prob.flow(cfg.params["flow_points"], cfg.params["flow_levels"])
    N = prob.extra["N_per_species"]
    for i, lam in enumerate(flow.lambdas):
        for lvl, e in enumerate(flow.energies[i]):
            table.add(prob.label, float(lam), lvl, float(e), lvl < N)
    steps = flow.step_changes[:, :N]
    rec.parameters[f"{prob.label}.flow_max_step_MeV"] = float(steps.max())
    rec.parameters[f"{prob.label}.flow_median_step_MeV"] = float(np.median(steps))


def _new_flow_table() -> Table:
    return Table(["nuclide", "lambda", "level", "energy_MeV", "occupied"])


def run_woods_saxon(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    t0 = time.perf_counter()
    rec = _base_record(cfg)
    table = _evolution_table("MeV", "nuclide")
    flow_table = _new_flow_table()
    pol = parse_shift(cfg.mu, "woods_saxon")
    for name in cfg.params["nuclide"]:
        prob = prepare_woods_saxon(name, policy=pol, **_ws_kwargs(cfg))
        _record_problem(rec, prob)
        _fill(table, prob, _sweep_problem(prob, cfg))
        if cfg.spectral_flow:
            _flow_table(rec, prob, cfg, flow_table)
    rec.tables["main"] = table
    if cfg.spectral_flow:
        rec.tables["flow"] = flow_table
    rec.wall_clock = time.perf_counter() - t0
    return rec


def run_spectral_flow(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    t0 = time.perf_counter()
    rec = _base_record(cfg)
    table = _new_flow_table()
    pol = parse_shift(cfg.mu, "spectral_flow")
    for name in cfg.params["nuclide"]:
        prob = prepare_woods_saxon(name, policy=pol, **_ws_kwargs(cfg))
        _record_problem(rec, prob)
        _flow_table(rec, prob, cfg, table)
    rec.tables["main"] = table
    rec.wall_clock = time.perf_counter() - t0
    return rec


def run_hubbard_cluster(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    t0 = time.perf_counter()
    rec = _base_record(cfg)
    table = _evolution_table("MeV", "cluster")
    pol = parse_shift(cfg.mu, "hubbard_cluster")
    for row in cfg.params["cluster"]:
        prob = prepare_hubbard(row, cfg.params["L"], cfg.params["mass"], cfg.params["k_search"], pol)
        _record_problem(rec, prob)
        _fill(table, prob, _sweep_problem(prob, cfg))
    rec.tables["main"] = table
    rec.wall_clock = time.perf_counter() - t0
    return rec


GADGET_LATTICES = {1: LatticeGeometry(1, 4, 1.0), 2: LatticeGeometry(2, 2, 1.0), 3: LatticeGeometry(3, 1, 1.0)}


@dataclass
class GadgetReport:
    unitary_deviation: float
    equivalence: dict[int, EquivalenceReport]
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.unitary_deviation <= self.tol and all(r.passed for r in self.equivalence.values())

    def lines(self) -> list[str]:
        status = "PASS" if self.unitary_deviation <= self.tol else "FAIL"
        out = [f"{status} gadget action max deviation {self.unitary_deviation:.3e}"]
        out += [f"d={d}: {r}" for d, r in self.equivalence.items()]
        return out


def gadget_check(angle: float = math.pi / 4, dims=(1, 2, 3), tol: float = 1e-10) -> GadgetReport:
    U, _ = gadget_unitary(angle, check=False)
    e00, e01, e10 = np.eye(4)[0], np.eye(4)[1], np.eye(4)[2]
    dev = max(np.max(np.abs(U @ e00 - e00)), np.max(np.abs(U @ e10 - (e10 + e01) / np.sqrt(2))))
    reports = {d: verify_circuit_equivalence(GADGET_LATTICES[d], angle=angle, tol=tol) for d in dims}
    return GadgetReport(float(dev), reports, tol)


def run_gadget_check(cfg: ExperimentConfig) -> tuple[RunRecord, GadgetReport]:
    cfg.validate()
    t0 = time.perf_counter()
    rec = _base_record(cfg)
    report = gadget_check(cfg.params["angle"], cfg.params["dims"])
    table = Table(["d", "coarse_sites", "states_checked", "max_deviation", "passed"])
    for d, r in report.equivalence.items():
        table.add(d, GADGET_LATTICES[d].n_sites, r.states_checked, r.max_deviation, r.passed)
    rec.parameters["gadget_deviation"] = report.unitary_deviation
    rec.parameters["passed"] = report.passed
    rec.tables["main"] = table
    rec.wall_clock = time.perf_counter() - t0
    return rec, report


RUNNERS = {
    "busch": run_busch,
    "woods_saxon": run_woods_saxon,
    "hubbard_cluster": run_hubbard_cluster,
    "spectral_flow": run_spectral_flow,
}
