"""Closed-form and brute-force reference solutions."""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, DomainError
from .fock import Statistics
from .grid import ho_eigenfunction, kinetic_diagonal
from .model import InteractionKind, evaluate_interaction, evaluate_potential

ORACLE_GRID_LIMIT = 128
DENSE_ORACLE_LIMIT = 64


@dataclass(frozen=True)
class HimSpec:
    kind: Statistics
    N: int
    omega: float = 1.0
    K0: float = 0.0
    D: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", Statistics(self.kind))
        if self.N < 1:
            raise ConfigurationError(f"N must be positive, got {self.N}")
        if self.D != 1:
            raise ConfigurationError("only D = 1 is supported")

    @property
    def delta_squared(self):
        return self.omega ** 2 + 2 * self.N * self.K0


def him_relative_frequency(spec):
    d2 = spec.delta_squared
    if not d2 > 0:
        raise DomainError(f"relative modes unbound: omega^2 + 2 N K0 = {d2}")
    return math.sqrt(d2)


def him_exact_energy(spec):
    """Ground-state energy of N harmonically interacting particles in a harmonic trap.

    The centre of mass oscillates at omega, the N - 1 relative modes at
    delta_N. Bosons put every relative mode in its ground state; fermions fill
    relative-mode quanta up to the Fermi level.
    """
    delta = him_relative_frequency(spec)
    N = spec.N
    if spec.kind is Statistics.BOSON:
        rel = 0.5 * (N - 1) * delta
    else:
        rel = 0.5 * (N * N - 1) * delta
    return spec.D * (rel + 0.5 * spec.omega)


def him_mean_field_energy(N, omega, K0):
    """Single-orbital (Gross-Pitaevskii) energy for HIM bosons."""
    return 0.5 * N * math.sqrt(omega ** 2 + 2 * K0 * (N - 1))


def _one_body_matrix(grid, spec, t):
    n = grid.n_points
    T = np.fft.ifft(kinetic_diagonal(grid, spec.mass)[:, None] * np.fft.fft(np.eye(n), axis=0),
                    axis=0)
    T = 0.5 * (T + T.conj().T).real
    return T + np.diag(evaluate_potential(spec.potential, grid.points, t))


def _pair_interaction(grid, interaction):
    x = grid.points
    if interaction.kind is InteractionKind.CONTACT:
        return np.diag(np.full(x.size, interaction.w0 / grid.spacing))
    return evaluate_interaction(interaction, x[:, None], x[None, :])


def two_particle_grid_oracle(grid, spec, kind, t=0.0):
    """Lowest eigenpair of the two-particle grid Hamiltonian in the (anti)symmetric sector.

    Returns (E0, pair_density) where pair_density[i, j] is the diagonal
    two-body density at (x_i, x_j), normalized to integrate to N(N-1) = 2.
    """
    kind = Statistics(kind)
    n = grid.n_points
    if n > ORACLE_GRID_LIMIT:
        raise ConfigurationError(
            f"two-particle oracle refuses {n} points (limit {ORACLE_GRID_LIMIT})")
    h1 = _one_body_matrix(grid, spec, t)
    W = _pair_interaction(grid, spec.interaction)

    # (anti)symmetrized product basis |ij> +- |ji>, i <= j (i < j for fermions)
    iu, ju = np.triu_indices(n, k=1 if kind is Statistics.FERMION else 0)
    sign = -1.0 if kind is Statistics.FERMION else 1.0
    norm = np.where(iu == ju, 1.0, 1.0 / math.sqrt(2.0))
    m = iu.size
    rows = np.concatenate([iu * n + ju, ju * n + iu])
    cols = np.concatenate([np.arange(m), np.arange(m)])
    vals = np.concatenate([norm, sign * norm])
    same = iu == ju
    keep = np.concatenate([np.ones(m, bool), ~same])
    P = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n * n, m))

    eye = sp.identity(n, format="csr")
    h1s = sp.csr_matrix(h1)
    H = sp.kron(h1s, eye) + sp.kron(eye, h1s) + sp.diags(W.ravel())
    Hs = (P.T @ H @ P).tocsc()
    if n <= DENSE_ORACLE_LIMIT:
        evals, evecs = sla.eigh(Hs.toarray(), subset_by_index=[0, 0])
        e0, v = evals[0], evecs[:, 0]
    else:
        evals, evecs = spla.eigsh(Hs, k=1, which="SA", tol=1e-12)
        e0, v = evals[0], evecs[:, 0]
    psi = (P @ v).reshape(n, n)
    psi /= np.linalg.norm(psi)
    pair_density = 2.0 * np.abs(psi) ** 2 / grid.spacing ** 2
    return float(e0), pair_density


def noninteracting_reference_density(grid, N, kind, omega=1.0, center=0.0):
    """Normalized density of N noninteracting particles in the harmonic ground state."""
    if N < 1:
        raise ConfigurationError(f"N must be positive, got {N}")
    kind = Statistics(kind)
    x = grid.points
    levels = 1 if kind is Statistics.BOSON else N
    rho = sum(np.abs(ho_eigenfunction(x, j, omega=omega, center=center)) ** 2
              for j in range(levels))
    return rho / (rho.sum() * grid.spacing)
