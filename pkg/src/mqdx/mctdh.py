"""Orbital-space integrals, mean fields, equations of motion and energies."""
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ContractError
from .fock import hamiltonian_sparse, transition_density_elements
from .grid import gram_matrix, kinetic_diagonal
from .model import (InteractionKind, InteractionSpec, PotentialKind, PotentialSpec,
                    evaluate_potential, interaction_matrix)

RHO_FLOOR = 1e-8


@dataclass(frozen=True)
class HamiltonianSpec:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigurationError(f"mass must be positive, got {self.mass}")


@dataclass(eq=False)
class ManyBodyState:
    """M orbitals sampled on the grid (rows of `orbitals`) plus CI coefficients."""

    grid: object
    basis: object
    orbitals: np.ndarray
    coefficients: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.orbitals = np.asarray(self.orbitals, dtype=complex)
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        M = self.basis.n_orbitals
        if self.orbitals.shape != (M, self.grid.n_points):
            raise ContractError(
                f"orbitals have shape {self.orbitals.shape}, expected {(M, self.grid.n_points)}")
        if self.coefficients.shape != (self.basis.size,):
            raise ContractError(
                f"coefficients have shape {self.coefficients.shape}, "
                f"expected ({self.basis.size},)")

    @property
    def n_particles(self):
        return self.basis.n_particles

    @property
    def n_orbitals(self):
        return self.basis.n_orbitals

    def copy(self):
        return replace(self, orbitals=self.orbitals.copy(),
                       coefficients=self.coefficients.copy())

    def gram(self):
        return gram_matrix(self.grid, self.orbitals)

    def orthonormality_error(self):
        return np.abs(self.gram() - np.eye(self.n_orbitals)).max()

    def norm_error(self):
        return abs(np.vdot(self.coefficients, self.coefficients).real - 1.0)


@lru_cache(maxsize=8)
def _kernel(interaction, grid):
    return interaction_matrix(interaction, grid) * grid.spacing


def potential_on_grid(spec, grid, t):
    return evaluate_potential(spec.potential, grid.points, t)


def static_potential(spec, grid):
    """Time-independent part of the potential on the grid (the bare trap for a ramped barrier)."""
    pot = spec.potential
    if pot.kind is PotentialKind.HO1D_TD_GAUSS:
        pot = PotentialSpec(PotentialKind.HO1D, pot.omega, pot.trap_center)
    return evaluate_potential(pot, grid.points, 0.0)


_EIGEN_CACHE = {}


def one_body_eigensystem(grid, mass, v0):
    """Eigenpairs (energies, U) of the grid operator T + diag(v0); U is real orthogonal."""
    v0 = np.ascontiguousarray(v0, dtype=float)
    key = (grid.n_points, grid.x_min, grid.x_max, float(mass), v0.tobytes())
    hit = _EIGEN_CACHE.get(key)
    if hit is None:
        n = grid.n_points
        T = np.fft.ifft(kinetic_diagonal(grid, mass)[:, None] * np.fft.fft(np.eye(n), axis=0),
                        axis=0)
        T = 0.5 * (T + T.conj().T).real
        hit = np.linalg.eigh(T + np.diag(v0))
        if len(_EIGEN_CACHE) >= 8:
            _EIGEN_CACHE.pop(next(iter(_EIGEN_CACHE)))
        _EIGEN_CACHE[key] = hit
    return hit


def one_body_apply(orbitals, grid, spec, t):
    """(T + V(t)) applied to each orbital row."""
    tk = kinetic_diagonal(grid, spec.mass)
    kin = np.fft.ifft(tk * np.fft.fft(orbitals, axis=-1), axis=-1)
    return kin + potential_on_grid(spec, grid, t) * orbitals


def one_body_integrals(state, spec, t=None):
    t = state.time if t is None else t
    h_phi = one_body_apply(state.orbitals, state.grid, spec, t)
    h = gram_pair(state.grid, state.orbitals, h_phi)
    return 0.5 * (h + h.conj().T)


def gram_pair(grid, bra, ket):
    return (bra.conj() @ ket.T) * grid.spacing


def mean_field_operators(state, interaction):
    """W_sl(x) = int dx' conj(phi_s(x')) W(x, x') phi_l(x'), shape (M, M, n)."""
    return _mean_fields(state.orbitals, state.grid, interaction)


def _mean_fields(orbitals, grid, interaction):
    M, n = orbitals.shape
    pair = orbitals.conj()[:, None, :] * orbitals[None, :, :]
    if interaction.w0 == 0.0:
        return np.zeros((M, M, n), dtype=complex)
    if interaction.kind is InteractionKind.CONTACT:
        return interaction.w0 * pair
    K = _kernel(interaction, grid)
    return (pair.reshape(M * M, n) @ K.T).reshape(M, M, n)


def two_body_integrals(state, mean_fields=None, interaction=None):
    """W[k, s, q, l] = <phi_k| W_sl |phi_q>."""
    if mean_fields is None:
        mean_fields = mean_field_operators(state, interaction)
    return _two_body(state.orbitals, state.grid, mean_fields)


def _two_body(orbitals, grid, mean_fields):
    M, n = orbitals.shape
    pair = (orbitals.conj()[:, None, :] * orbitals[None, :, :]).reshape(M * M, n)
    W = (pair @ mean_fields.reshape(M * M, n).T) * grid.spacing
    return W.reshape(M, M, M, M).transpose(0, 2, 1, 3)


def integrals(state, spec, t=None):
    t = state.time if t is None else t
    h = one_body_integrals(state, spec, t)
    W = _two_body(state.orbitals, state.grid,
                  _mean_fields(state.orbitals, state.grid, spec.interaction))
    return h, W


def configuration_hamiltonian(state, spec, t=None):
    h, W = integrals(state, spec, t)
    return hamiltonian_sparse(state.basis, h, W)


def coefficient_rhs(state, spec, t=None, prefactor=-1j):
    """dC/dt = prefactor * H(t) C; prefactor -1j propagates, -1 relaxes."""
    H = configuration_hamiltonian(state, spec, t)
    return prefactor * (H @ state.coefficients)


def regularized_inverse(rho1, n_particles, floor=RHO_FLOOR):
    evals, evecs = np.linalg.eigh(rho1)
    evals = np.maximum(evals, floor * n_particles)
    return (evecs / evals) @ evecs.conj().T


class OrbitalEquation:
    """Right-hand side of the orbital equations with frozen density matrices.

    The coefficients (hence rho1, rho2) are held fixed; orbitals, one-body
    potential and mean fields are re-evaluated at every call.
    """

    def __init__(self, grid, basis, coefficients, spec, prefactor=-1j):
        self.grid = grid
        self.spec = spec
        self.prefactor = prefactor
        self.n_orbitals = basis.n_orbitals
        rho1, rho2 = transition_density_elements(basis, coefficients, check_norm=False)
        self.rho1 = rho1
        rho_inv = regularized_inverse(rho1, basis.n_particles)
        M = self.n_orbitals
        # R[j, s, l, q] = sum_k rho_inv[j, k] rho2[k, s, l, q]
        self.reduced = (rho_inv @ rho2.reshape(M, M ** 3)).reshape(M, M, M, M)
        # same tensor laid out as [(j, q), (s, l)]
        self._reduced_jq = np.ascontiguousarray(
            self.reduced.transpose(0, 3, 1, 2).reshape(M * M, M * M))
        self.interacting = spec.interaction.w0 != 0.0
        self.kinetic = kinetic_diagonal(grid, spec.mass)

    def bracket(self, orbitals, t):
        """h phi_j + sum R_jslq W_sl phi_q, before projection."""
        M, n = orbitals.shape
        out = np.fft.ifft(self.kinetic * np.fft.fft(orbitals, axis=-1), axis=-1)
        out += potential_on_grid(self.spec, self.grid, t) * orbitals
        if self.interacting:
            mf = _mean_fields(orbitals, self.grid, self.spec.interaction)
            # A[j, q, x] = sum_sl R_jslq W_sl(x)
            A = (self._reduced_jq @ mf.reshape(M * M, n)).reshape(M, M, n)
            out += np.einsum("jqx,qx->jx", A, orbitals)
        return out

    def __call__(self, orbitals, t):
        F = self.bracket(orbitals, t)
        overlaps = (orbitals.conj() @ F.T) * self.grid.spacing
        return self.prefactor * (F - overlaps.T @ orbitals)

    def stiffness(self, orbitals, t):
        """Rough bound on the largest eigenvalue magnitude of the generator."""
        bound = self.kinetic.max() + np.abs(potential_on_grid(self.spec, self.grid, t)).max()
        if self.interacting:
            mf = _mean_fields(orbitals, self.grid, self.spec.interaction)
            diag = np.einsum("jslj->jsl", self.reduced)
            local = np.abs(np.einsum("jsl,slx->jx", diag, mf)).max()
            bound += local
        return bound


def orbital_rhs(state, spec, t=None, prefactor=-1j):
    """d phi_j / dt = prefactor * P [h phi_j + sum_k,s,l,q rho_inv_jk rho_kslq W_sl phi_q]."""
    t = state.time if t is None else t
    eq = OrbitalEquation(state.grid, state.basis, state.coefficients, spec, prefactor)
    return eq(state.orbitals, t)


def energy_components(state, spec, t=None):
    t = state.time if t is None else t
    grid = state.grid
    rho1, rho2 = transition_density_elements(state.basis, state.coefficients, check_norm=False)
    phi = state.orbitals
    tk = kinetic_diagonal(grid, spec.mass)
    t_phi = np.fft.ifft(tk * np.fft.fft(phi, axis=-1), axis=-1)
    v_phi = potential_on_grid(spec, grid, t) * phi
    t_mat = gram_pair(grid, phi, t_phi)
    v_mat = gram_pair(grid, phi, v_phi)
    W = _two_body(phi, grid, _mean_fields(phi, grid, spec.interaction))
    kinetic = np.sum(rho1 * t_mat)
    potential = np.sum(rho1 * v_mat)
    interaction = 0.5 * np.einsum("kslq,ksql->", rho2, W)
    return kinetic, potential, interaction


def energy(state, spec, t=None):
    """Total energy <Psi|H|Psi> from the reduced density matrices (real part)."""
    return float(sum(energy_components(state, spec, t)).real)


def energy_breakdown(state, spec, t=None):
    kin, pot, inter = energy_components(state, spec, t)
    return float(kin.real), float(pot.real), float(inter.real)
