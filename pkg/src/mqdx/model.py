"""One-body potentials and two-body interaction kernels."""
import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UnsupportedKernelError


class PotentialKind(enum.Enum):
    HO1D = "HO1D"
    HO1D_TD_GAUSS = "HO1D+td_gauss"


class InteractionKind(enum.Enum):
    CONTACT = "delta"
    HIM = "HIM"
    REGC = "regC"


@dataclass(frozen=True)
class PotentialSpec:
    """Harmonic trap, optionally with a linearly ramped Gaussian barrier.

    Field order follows the input-deck parameters: omega (parameter1),
    trap_center (2), v_max (3), tau (4), barrier_center (5), barrier_sigma (6).
    """

    kind: PotentialKind = PotentialKind.HO1D
    omega: float = 1.0
    trap_center: float = 0.0
    v_max: float = 0.0
    tau: float = 1.0
    barrier_center: float = 0.0
    barrier_sigma: float = 1.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ConfigurationError(f"trap frequency must be positive, got {self.omega}")
        if self.kind is PotentialKind.HO1D_TD_GAUSS:
            if self.tau <= 0:
                raise ConfigurationError(f"quench time tau must be positive, got {self.tau}")
            if self.barrier_sigma <= 0:
                raise ConfigurationError(
                    f"barrier width must be positive, got {self.barrier_sigma}")
            if self.v_max < 0:
                raise ConfigurationError(f"barrier height must be >= 0, got {self.v_max}")

    @property
    def time_dependent(self):
        return self.kind is PotentialKind.HO1D_TD_GAUSS and self.v_max != 0.0


@dataclass(frozen=True)
class InteractionSpec:
    kind: InteractionKind = InteractionKind.CONTACT
    w0: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind is InteractionKind.REGC and not self.alpha > 0:
            raise ConfigurationError("regularized Coulomb needs alpha > 0")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigurationError("interaction parameters alpha, beta must be >= 0")


def ramp_height(v_max, tau, t):
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    return v_max * t / tau if t < tau else v_max


def evaluate_potential(spec, x, t=0.0):
    x = np.asarray(x, dtype=float)
    v = 0.5 * spec.omega ** 2 * (x - spec.trap_center) ** 2
    if spec.kind is PotentialKind.HO1D_TD_GAUSS:
        height = ramp_height(spec.v_max, spec.tau, t)
        v = v + height * np.exp(-(x - spec.barrier_center) ** 2 / (2.0 * spec.barrier_sigma ** 2))
    return v


def evaluate_interaction(spec, x, x_prime):
    if spec.kind is InteractionKind.CONTACT:
        raise UnsupportedKernelError(
            "contact interaction has no pointwise kernel; use the local mean-field path")
    r = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    if spec.kind is InteractionKind.HIM:
        return spec.w0 * r ** 2
    return spec.w0 / np.sqrt(r ** 2 + spec.alpha * np.exp(-spec.beta * np.abs(r)))


def interaction_matrix(spec, grid):
    """Kernel W(x_i, x_j) on the grid; contact becomes delta_ij / dx."""
    if spec.kind is InteractionKind.CONTACT:
        return np.eye(grid.n_points) * (spec.w0 / grid.spacing)
    x = grid.points
    return evaluate_interaction(spec, x[:, None], x[None, :])
