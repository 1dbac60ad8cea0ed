"""Harmonic-interaction benchmark cases with published reference energies."""
import time
from dataclasses import dataclass

from .fock import ConfigurationBasis, Statistics
from .grid import build_grid
from .mctdh import HamiltonianSpec
from .model import InteractionKind, InteractionSpec, PotentialSpec
from .oracle import HimSpec, him_exact_energy
from .solver import RunConfig, initial_guess, relax

BOSON_K0 = 0.05555555556
FERMION_K0 = 0.5


@dataclass(frozen=True)
class HimCase:
    kind: Statistics
    N: int
    M: int
    K0: float
    reference: float
    slow: bool = False

    @property
    def label(self):
        return f"{self.kind.value} N={self.N} M={self.M}"


HIM_CASES = (
    HimCase(Statistics.BOSON, 10, 1, BOSON_K0, 7.071067812008208),
    HimCase(Statistics.BOSON, 10, 2, BOSON_K0, 7.038769026440956),
    HimCase(Statistics.BOSON, 10, 3, BOSON_K0, 7.038350652543779),
    HimCase(Statistics.BOSON, 10, 4, BOSON_K0, 7.038348425047187, slow=True),
    HimCase(Statistics.BOSON, 10, 5, BOSON_K0, 7.038348415486683, slow=True),
    HimCase(Statistics.FERMION, 2, 3, FERMION_K0, 3.103244922155683),
    HimCase(Statistics.FERMION, 2, 4, FERMION_K0, 3.098082754434019),
    HimCase(Statistics.FERMION, 2, 5, FERMION_K0, 3.098082754434124),
    HimCase(Statistics.FERMION, 2, 6, FERMION_K0, 3.098076216222958),
    HimCase(Statistics.FERMION, 5, 6, FERMION_K0, 29.93368010792828, slow=True),
    HimCase(Statistics.FERMION, 8, 9, FERMION_K0, 95.08244224010051, slow=True),
)


def him_problem(kind, N, M, K0, n_points=128, x_min=-8.0, x_max=8.0):
    grid = build_grid(n_points, x_min, x_max)
    basis = ConfigurationBasis(kind, N, M)
    spec = HamiltonianSpec(PotentialSpec(), InteractionSpec(InteractionKind.HIM, K0))
    return grid, basis, spec


def run_him_case(case, seed=0, time_final=20.0, dtau=0.1):
    """Relax one benchmark case; returns (final state, trajectory, wall seconds)."""
    grid, basis, spec = him_problem(case.kind, case.N, case.M, case.K0)
    config = RunConfig(time_final=time_final, integration_stepsize=dtau, output_timestep=1.0,
                       keep_snapshots=False)
    start = time.perf_counter()
    state, trajectory = relax(initial_guess(grid, basis, seed=seed), spec, config)
    return state, trajectory, time.perf_counter() - start


def exact_energy(case):
    return him_exact_energy(HimSpec(case.kind, case.N, 1.0, case.K0))
