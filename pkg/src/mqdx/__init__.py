"""Multiconfigurational time-dependent Hartree engine for 1D bosons and fermions."""
from .analysis import (correlations_x, density_k, density_x, g1, g2, momentum_grid,
                       natural_occupations)
from .errors import (ConfigurationError, ContractError, DomainError, InfeasibleBasisError,
                     MqdxError, ParseError, RestartError, SolverError, UnsupportedKernelError)
from .fock import (ConfigurationBasis, Statistics, build_hamiltonian_matrix, enumerate_configs,
                   transition_density_elements)
from .grid import Grid, build_grid, inner_product, kinetic_apply
from .mctdh import (HamiltonianSpec, ManyBodyState, coefficient_rhs, energy, energy_breakdown,
                    mean_field_operators, one_body_integrals, orbital_rhs)
from .model import (InteractionKind, InteractionSpec, PotentialKind, PotentialSpec,
                    evaluate_interaction, evaluate_potential, ramp_height)
from .oracle import (HimSpec, him_exact_energy, noninteracting_reference_density,
                     two_particle_grid_oracle)
from .solver import (PROPAGATE, RELAX, RunConfig, Trajectory, davidson_ground, initial_guess,
                     interpolate_state, propagate, relax, sil_step)

__version__ = "0.1.0"
