"""Time-integration drivers: relaxation, propagation and their building blocks."""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .analysis import natural_occupations
from .errors import ConfigurationError, SolverError
from .grid import gram_matrix, ho_eigenfunction
from .mctdh import (ManyBodyState, OrbitalEquation, configuration_hamiltonian,
                    energy as state_energy, one_body_eigensystem, potential_on_grid,
                    static_potential)

log = logging.getLogger(__name__)

RELAX = complex(-1.0, 0.0)
PROPAGATE = complex(0.0, -1.0)
# |lambda * h| kept below this for classic RK4 (real-axis limit 2.785, imaginary 2.828)
RK4_STABILITY = 2.5
# accepted steps before a raised substep factor is halved again
CALM_STEPS = 5
# per-step Gram drift above which a propagation orbital step is redone with more substeps
GRAM_DRIFT_TOL = 1e-6


class Guess(enum.Enum):
    HAND = "HAND"
    BINR = "BINR"


class CoefficientsIntegrator(enum.Enum):
    DAV = "DAV"
    MCS = "MCS"


@dataclass
class RunConfig:
    job_prefactor: complex = RELAX
    time_begin: float = 0.0
    time_final: float = 20.0
    output_timestep: float = 1.0
    integration_stepsize: float = 0.1
    guess: Guess = Guess.HAND
    binary_start_time: float = 0.0
    coefficients_integrator: CoefficientsIntegrator = CoefficientsIntegrator.DAV
    orbital_integrator: str = "RK"
    krylov_dim: int = 12
    davidson_tol: float = 1e-12
    keep_snapshots: bool = True
    # "exponential": static one-body part integrated exactly (ETDRK4); "classic": plain RK4
    orbital_scheme: str = "exponential"

    def __post_init__(self):
        if not self.time_final > self.time_begin:
            raise ConfigurationError("time_final must exceed time_begin")
        if not self.output_timestep > 0 or not self.integration_stepsize > 0:
            raise ConfigurationError("output_timestep and integration_stepsize must be positive")
        if self.orbital_integrator != "RK":
            raise ConfigurationError(f"unsupported orbital integrator {self.orbital_integrator!r}")
        if self.orbital_scheme not in ("exponential", "classic"):
            raise ConfigurationError(f"unknown orbital scheme {self.orbital_scheme!r}")

    @property
    def n_steps(self):
        return int(round((self.time_final - self.time_begin) / self.integration_stepsize))

    @property
    def output_every(self):
        return max(1, int(round(self.output_timestep / self.integration_stepsize)))


@dataclass
class TrajectoryRecord:
    time: float
    occupations: np.ndarray  # normalized, ascending
    energy: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def append(self, state, energy, keep_snapshot=True):
        if self.records and not state.time > self.records[-1].time:
            raise SolverError(f"non-increasing record time {state.time}")
        occ, _ = natural_occupations(state)
        self.records.append(TrajectoryRecord(state.time, occ[::-1].copy(), energy))
        if keep_snapshot:
            self.snapshots.append((state.time, state.copy()))

    @property
    def times(self):
        return np.array([r.time for r in self.records])

    @property
    def energies(self):
        return np.array([r.energy for r in self.records])

    @property
    def occupations(self):
        return np.array([r.occupations for r in self.records])

    def snapshot_at(self, t, atol=1e-9):
        for ts, s in self.snapshots:
            if abs(ts - t) <= atol:
                return s
        raise KeyError(t)


# ---------------------------------------------------------------- linear algebra

def _diagonal(H):
    if isinstance(H, np.ndarray):
        return np.real(np.diag(H))
    if sp.issparse(H):
        return np.real(H.diagonal())
    return None


def davidson_ground(H, guess, tol=1e-12, max_iter=200, max_subspace=40, keep=6):
    """Lowest eigenpair of a hermitian matrix by Davidson iteration.

    `H` may be a dense array, a sparse matrix or anything supporting ``H @ v``.
    Convergence requires ``||H c - E c|| <= tol * max(1, |E|)``. The search
    space is thick-restarted with the `keep` lowest Ritz vectors.
    """
    guess = np.asarray(guess, dtype=complex)
    dim = guess.shape[0]
    if not np.any(guess):
        raise SolverError("Davidson guess vector is zero")
    if dim == 1:
        e = complex((H @ np.ones(1, dtype=complex))[0]).real
        return e, np.ones(1, dtype=complex) * (guess[0] / abs(guess[0]))
    diag = _diagonal(H)
    diag_min = diag.min() if diag is not None else -np.inf
    max_subspace = min(max_subspace, dim)
    keep = min(keep, max_subspace - 1)

    V = np.zeros((dim, max_subspace), dtype=complex)
    AV = np.zeros_like(V)
    V[:, 0] = guess / np.linalg.norm(guess)
    AV[:, 0] = H @ V[:, 0]
    k = 1
    best = np.inf
    for _ in range(max_iter):
        S = V[:, :k].conj().T @ AV[:, :k]
        S = 0.5 * (S + S.conj().T)
        evals, evecs = np.linalg.eigh(S)
        theta, y = evals[0], evecs[:, 0]
        x = V[:, :k] @ y
        r = AV[:, :k] @ y - theta * x
        res = np.linalg.norm(r)
        best = min(best, res)
        if res <= tol * max(1.0, abs(theta)) or k == dim:
            return float(theta), x / np.linalg.norm(x)
        if diag is not None and theta < diag_min:
            # (D - theta)^-1 only helps while it is sign-definite
            denom = np.maximum(diag - theta, 1e-8)
            t = r / denom
        else:
            t = r.copy()
        if k >= max_subspace:
            n_keep = min(keep, k)
            Y = evecs[:, :n_keep]
            V[:, :n_keep] = V[:, :k] @ Y
            AV[:, :n_keep] = AV[:, :k] @ Y
            k = n_keep
        for _ in range(2):
            t -= V[:, :k] @ (V[:, :k].conj().T @ t)
        tn = np.linalg.norm(t)
        if tn < 1e-14 * max(1.0, np.linalg.norm(r)):
            # preconditioned correction fell inside the subspace; use the bare residual
            t = r.copy()
            for _ in range(2):
                t -= V[:, :k] @ (V[:, :k].conj().T @ t)
            tn = np.linalg.norm(t)
            if tn < 1e-14:
                return float(theta), x / np.linalg.norm(x)
        V[:, k] = t / tn
        AV[:, k] = H @ V[:, k]
        k += 1
    raise SolverError(f"Davidson did not converge in {max_iter} iterations", residual=best)


def _krylov_coefficients(alpha, beta, dt):
    T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
    evals, evecs = np.linalg.eigh(T)
    return evecs @ (np.exp(-1j * evals * dt) * evecs[0].conj())


def sil_step(H, C, dt, krylov_dim=12, tol=1e-12):
    """exp(-i H dt) C by short iterative Lanczos.

    The Krylov space grows until the a-posteriori error estimate drops below
    `tol` (relative to |C|) or reaches `krylov_dim`; if the estimate is still
    too large, dt is split in two.
    """
    C = np.asarray(C, dtype=complex)
    if dt == 0.0:
        return C.copy()
    dim = C.shape[0]
    norm = np.linalg.norm(C)
    if norm == 0.0:
        return C.copy()
    m = min(krylov_dim, dim)
    V = np.zeros((m, dim), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = C / norm
    scale = 0.0
    for j in range(m):
        w = H @ V[j]
        alpha[j] = np.vdot(V[j], w).real
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        # full reorthogonalization, the space is tiny
        w -= (V[:j + 1].conj() @ w) @ V[:j + 1]
        beta[j] = np.linalg.norm(w)
        scale = max(scale, abs(alpha[j]), beta[j])
        c = _krylov_coefficients(alpha[:j + 1], beta[:j], dt)
        if beta[j] <= 1e-13 * max(scale, 1.0):
            return norm * (c @ V[:j + 1])
        error = beta[j] * abs(c[-1])
        if error <= tol:
            return norm * (c @ V[:j + 1])
        if j + 1 < m:
            V[j + 1] = w / beta[j]
    if abs(dt) > 1e-8:
        half = sil_step(H, C, dt / 2, krylov_dim, tol)
        return sil_step(H, half, dt / 2, krylov_dim, tol)
    return norm * (c @ V)


# ---------------------------------------------------------------- orbitals

def gram_schmidt(grid, orbitals):
    q, r = np.linalg.qr(orbitals.T * math.sqrt(grid.spacing))
    q *= np.sign(np.real(np.diag(r)))[None, :] + (np.real(np.diag(r)) == 0)
    return q.T / math.sqrt(grid.spacing)


def orthonormalize(grid, orbitals):
    """Symmetric (Loewdin) orthonormalization; minimal change for nearly orthonormal sets."""
    S = gram_matrix(grid, orbitals)
    evals, evecs = np.linalg.eigh(S)
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
    return inv_sqrt.T @ orbitals


def rk4_step(f, y, t, h):
    k1 = f(y, t)
    k2 = f(y + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(y + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(y + h * k3, t + h)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _substeps(eq, orbitals, t, h):
    return max(1, int(math.ceil(abs(h) * eq.stiffness(orbitals, t) / RK4_STABILITY)))


def integrate_orbitals(eq, orbitals, t, h, n_sub):
    dt = h / n_sub
    y = orbitals
    for i in range(n_sub):
        y = rk4_step(eq, y, t + i * dt, dt)
    return y


def _etd_coefficients(z, n_contour=64):
    """phi-type weights of the Cox-Matthews scheme, averaged over a unit circle around each z."""
    r = np.exp(1j * np.pi * (np.arange(n_contour) + 0.5) / n_contour * 2)
    w = z[:, None] + r[None, :]
    ew = np.exp(w)
    ew2 = np.exp(0.5 * w)
    half = ((ew2 - 1.0) / w).mean(axis=1)  # (e^{z/2} - 1) / z
    f1 = ((-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w ** 3).mean(axis=1)
    f2 = ((2.0 + w + ew * (w - 2.0)) / w ** 3).mean(axis=1)
    f3 = ((-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w ** 3).mean(axis=1)
    return half, f1, f2, f3


class ExponentialRK4:
    """Fourth-order exponential Runge-Kutta step (Cox-Matthews) for the orbital equations.

    The generator is split as prefactor * h0 + N(phi), with h0 = T + V0 the static
    one-body operator diagonalized once on the grid. Equilibria of the full
    equation are equilibria of the scheme, so relaxation converges to the same
    fixed point as with any consistent integrator.
    """

    def __init__(self, eq, v0, h):
        self.eq = eq
        energies, U = one_body_eigensystem(eq.grid, eq.spec.mass, v0)
        self.U = U
        self.v0 = v0
        self.h = h
        z = eq.prefactor * energies * h
        half, f1, f2, f3 = _etd_coefficients(z)
        self.E = np.exp(z)
        self.E2 = np.exp(0.5 * z)
        self.Q = h * half
        self.F1, self.F2, self.F3 = h * f1, h * f2, h * f3

    def _h0(self, y):
        kin = np.fft.ifft(self.eq.kinetic * np.fft.fft(y, axis=-1), axis=-1)
        return kin + self.v0 * y

    def nonlinear(self, y, t):
        return self.eq(y, t) - self.eq.prefactor * self._h0(y)

    def _to(self, y):
        return y @ self.U

    def _from(self, a):
        return a @ self.U.T

    def step(self, y, t):
        h = self.h
        u = self._to(y)
        nu = self._to(self.nonlinear(y, t))
        a = self.E2 * u + self.Q * nu
        na = self._to(self.nonlinear(self._from(a), t + 0.5 * h))
        b = self.E2 * u + self.Q * na
        nb = self._to(self.nonlinear(self._from(b), t + 0.5 * h))
        c = self.E2 * a + self.Q * (2.0 * nb - nu)
        nc = self._to(self.nonlinear(self._from(c), t + h))
        out = self.E * u + self.F1 * nu + 2.0 * self.F2 * (na + nb) + self.F3 * nc
        return self._from(out)


def _nonlinear_substeps(eq, orbitals, t, h, v0):
    """Substeps keeping |h| times the non-static part of the generator inside RK4 stability."""
    bound = np.abs(potential_on_grid(eq.spec, eq.grid, t) - v0).max()
    if eq.interacting:
        bound += eq.stiffness(orbitals, t) - eq.kinetic.max() \
            - np.abs(potential_on_grid(eq.spec, eq.grid, t)).max()
    return max(1, int(math.ceil(abs(h) * bound / RK4_STABILITY)))


class OrbitalStepper:
    """Advances orbitals by h with a frozen-coefficient equation, in n_sub equal substeps."""

    def __init__(self, eq, scheme, v0):
        self.eq = eq
        self.scheme = scheme
        self.v0 = v0
        self._cache = {}

    def substeps(self, orbitals, t, h):
        if self.scheme == "classic":
            return _substeps(self.eq, orbitals, t, h)
        return _nonlinear_substeps(self.eq, orbitals, t, h, self.v0)

    def __call__(self, orbitals, t, h, n_sub):
        if self.scheme == "classic":
            return integrate_orbitals(self.eq, orbitals, t, h, n_sub)
        dt = h / n_sub
        if dt not in self._cache:
            self._cache[dt] = ExponentialRK4(self.eq, self.v0, dt)
        stepper = self._cache[dt]
        y = orbitals
        for i in range(n_sub):
            y = stepper.step(y, t + i * dt)
        return y


# ---------------------------------------------------------------- initial state

def initial_guess(grid, basis, kind=Guess.HAND, seed=0, noise=1e-2):
    """Lowest harmonic-oscillator eigenfunctions with seeded noise, uniform coefficients."""
    if Guess(kind) is not Guess.HAND:
        raise ConfigurationError("initial_guess only builds HAND guesses; BINR reads a restart")
    rng = np.random.default_rng(seed)
    x = grid.points
    center = 0.5 * (grid.x_min + grid.x_max)
    M, n = basis.n_orbitals, grid.n_points
    orbitals = np.array([ho_eigenfunction(x, j, center=center) for j in range(M)], dtype=complex)
    if noise:
        envelope = np.exp(-0.25 * (x - center) ** 2)
        orbitals += noise * envelope * (rng.standard_normal((M, n))
                                        + 1j * rng.standard_normal((M, n)))
    orbitals = gram_schmidt(grid, orbitals)
    coefficients = np.ones(basis.size, dtype=complex) / math.sqrt(basis.size)
    return ManyBodyState(grid, basis, orbitals, coefficients, 0.0)


def interpolate_state(state, new_grid):
    """Fourier (zero-padding) interpolation of the orbitals onto a finer grid."""
    old = state.grid
    if not (math.isclose(old.x_min, new_grid.x_min) and math.isclose(old.x_max, new_grid.x_max)):
        raise ConfigurationError(
            f"box extents differ: [{old.x_min}, {old.x_max}) vs [{new_grid.x_min}, {new_grid.x_max})")
    if new_grid.n_points < old.n_points:
        raise ConfigurationError("interpolation only refines the grid")
    if new_grid.n_points == old.n_points:
        out = state.copy()
        out.grid = new_grid
        return out
    n_old, n_new = old.n_points, new_grid.n_points
    spec_old = np.fft.fft(state.orbitals, axis=-1)
    spec_new = np.zeros((state.n_orbitals, n_new), dtype=complex)
    half = n_old // 2
    if n_old % 2 == 0:
        spec_new[:, :half] = spec_old[:, :half]
        spec_new[:, n_new - half + 1:] = spec_old[:, half + 1:]
        spec_new[:, half] = 0.5 * spec_old[:, half]
        spec_new[:, n_new - half] = 0.5 * spec_old[:, half]
    else:
        spec_new[:, :half + 1] = spec_old[:, :half + 1]
        spec_new[:, n_new - half:] = spec_old[:, half + 1:]
    orbitals = np.fft.ifft(spec_new, axis=-1) * (n_new / n_old)
    orbitals = orthonormalize(new_grid, orbitals)
    return ManyBodyState(new_grid, state.basis, orbitals, state.coefficients.copy(), state.time)


# ---------------------------------------------------------------- drivers

def _check_finite(state, what):
    if not (np.all(np.isfinite(state.orbitals)) and np.all(np.isfinite(state.coefficients))):
        raise SolverError(f"non-finite {what} at t={state.time}", time=state.time)


def relax(state0, spec, config, on_record=None):
    """Imaginary-time relaxation alternating Davidson diagonalization and RK4 orbital steps."""
    # a ramped potential is frozen at its value at time_begin
    t_ham = config.time_begin
    state = state0.copy()
    state.time = config.time_begin
    trajectory = Trajectory()
    dtau = config.integration_stepsize
    boost = 1
    calm = 0
    for step in range(config.n_steps + 1):
        H = configuration_hamiltonian(state, spec, t_ham)
        try:
            e, c = davidson_ground(H, state.coefficients, tol=config.davidson_tol)
        except SolverError as err:
            raise SolverError(f"Davidson failed at tau={state.time}: {err}",
                              residual=err.residual, time=state.time) from err
        state.coefficients = c
        if not math.isfinite(e):
            raise SolverError(f"non-finite energy at tau={state.time}", time=state.time)
        if step % config.output_every == 0 or step == config.n_steps:
            trajectory.append(state, e, config.keep_snapshots)
            if on_record is not None:
                on_record(state, e, trajectory)
        if step == config.n_steps:
            break

        eq = OrbitalEquation(state.grid, state.basis, state.coefficients, spec, RELAX)
        stepper = OrbitalStepper(eq, config.orbital_scheme,
                                 potential_on_grid(spec, state.grid, t_ham))
        base = stepper.substeps(state.orbitals, t_ham, dtau)
        while True:
            with np.errstate(over="ignore", invalid="ignore"):
                trial = stepper(state.orbitals, t_ham, dtau, base * boost)
            ok = bool(np.all(np.isfinite(trial)))
            e_new = np.inf
            if ok:
                trial = gram_schmidt(state.grid, trial)
                candidate = ManyBodyState(state.grid, state.basis, trial, state.coefficients,
                                          state.time + dtau)
                e_new = state_energy(candidate, spec, t_ham)
                ok = e_new <= e + 1e-10 * max(1.0, abs(e))
            if ok:
                break
            if boost >= 256:
                raise SolverError(f"orbital step keeps failing at tau={state.time}",
                                  time=state.time)
            boost *= 2
            calm = 0
            log.debug("relax: raising orbital substep factor to %d at tau=%g (dE=%.3g)", boost,
                      state.time, e_new - e if np.isfinite(e_new) else np.inf)
        calm += 1
        if boost > 1 and calm >= CALM_STEPS:
            boost //= 2
            calm = 0
        state = candidate
        state.time = config.time_begin + (step + 1) * dtau
        _check_finite(state, "orbitals")
    return state, trajectory


def propagate(state0, spec, config, on_record=None):
    """Real-time propagation: Strang splitting of Lanczos coefficients and RK4 orbitals."""
    state = state0.copy()
    state.time = config.time_begin
    trajectory = Trajectory()
    dt = config.integration_stepsize
    H = configuration_hamiltonian(state, spec, state.time)
    v_static = static_potential(spec, state.grid)
    boost = 1
    calm = 0
    for step in range(config.n_steps + 1):
        if step % config.output_every == 0 or step == config.n_steps:
            e = float(np.vdot(state.coefficients, H @ state.coefficients).real)
            if not math.isfinite(e):
                raise SolverError(f"non-finite energy at t={state.time}", time=state.time)
            trajectory.append(state, e, config.keep_snapshots)
            if on_record is not None:
                on_record(state, e, trajectory)
        if step == config.n_steps:
            break
        t = state.time
        c_half = sil_step(H, state.coefficients, 0.5 * dt, config.krylov_dim)
        eq = OrbitalEquation(state.grid, state.basis, c_half, spec, PROPAGATE)
        stepper = OrbitalStepper(eq, config.orbital_scheme, v_static)
        base = stepper.substeps(state.orbitals, t, dt)
        while True:
            with np.errstate(over="ignore", invalid="ignore"):
                trial = stepper(state.orbitals, t, dt, base * boost)
            drift = np.abs(gram_matrix(state.grid, trial) - np.eye(state.n_orbitals)).max()
            if (np.all(np.isfinite(trial)) and drift < GRAM_DRIFT_TOL) or boost >= 256:
                break
            boost *= 2
            calm = 0
            log.debug("propagate: raising orbital substep factor to %d at t=%g (drift=%.3g)",
                      boost, t, drift)
        calm += 1
        if boost > 1 and calm >= CALM_STEPS:
            boost //= 2
            calm = 0
        orbitals = orthonormalize(state.grid, trial)
        t_next = config.time_begin + (step + 1) * dt
        state = ManyBodyState(state.grid, state.basis, orbitals, c_half, t_next)
        H = configuration_hamiltonian(state, spec, t_next)
        c = sil_step(H, c_half, 0.5 * dt, config.krylov_dim)
        state.coefficients = c / np.linalg.norm(c)
        _check_finite(state, "state")
    return state, trajectory

