"""Periodic 1D grid with FFT kinetic energy and flat quadrature."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError


@dataclass(frozen=True, eq=False)
class Grid:
    n_points: int
    x_min: float
    x_max: float
    spacing: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False)
    momenta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigurationError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ConfigurationError(f"degenerate interval [{self.x_min}, {self.x_max})")
        n = int(self.n_points)
        length = self.x_max - self.x_min
        spacing = length / n
        points = self.x_min + spacing * np.arange(n)
        momenta = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / length
        points.flags.writeable = False
        momenta.flags.writeable = False
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "momenta", momenta)

    @property
    def length(self):
        return self.x_max - self.x_min

    def same_as(self, other):
        return (self.n_points == other.n_points and self.x_min == other.x_min
                and self.x_max == other.x_max)


def build_grid(n_points, x_min, x_max):
    return Grid(n_points, float(x_min), float(x_max))


def _check_length(grid, f):
    if f.shape[-1] != grid.n_points:
        raise ContractError(
            f"array length {f.shape[-1]} does not match grid size {grid.n_points}")


def kinetic_apply(grid, f, mass=1.0):
    """Apply -1/(2m) d^2/dx^2 spectrally along the last axis of `f`."""
    f = np.asarray(f)
    _check_length(grid, f)
    if mass <= 0:
        raise ContractError(f"mass must be positive, got {mass}")
    return np.fft.ifft(kinetic_diagonal(grid, mass) * np.fft.fft(f, axis=-1), axis=-1)


def kinetic_diagonal(grid, mass=1.0):
    return grid.momenta ** 2 / (2.0 * mass)


def inner_product(grid, f, g):
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise ContractError(f"shape mismatch {f.shape} vs {g.shape}")
    _check_length(grid, f)
    return np.vdot(f, g) * grid.spacing


def gram_matrix(grid, orbitals):
    """Overlap matrix S_jk = <phi_j, phi_k> for orbitals stacked as rows."""
    return (orbitals.conj() @ orbitals.T) * grid.spacing


def ho_eigenfunction(x, n, omega=1.0, mass=1.0, center=0.0):
    """Normalized harmonic-oscillator eigenfunction, evaluated by the stable Hermite recurrence."""
    xi = np.sqrt(mass * omega) * (np.asarray(x, dtype=float) - center)
    prefactor = (mass * omega / np.pi) ** 0.25
    psi_prev = np.zeros_like(xi)
    psi = prefactor * np.exp(-0.5 * xi ** 2)
    for k in range(1, n + 1):
        psi, psi_prev = np.sqrt(2.0 / k) * xi * psi - np.sqrt((k - 1) / k) * psi_prev, psi
    return psi
