"""Observables derived from a many-body state."""
import numpy as np

from .fock import transition_density_elements

CORRELATION_DTYPE = np.dtype([
    ("x", float), ("x_prime", float),
    ("rho_x", float), ("rho_xp", float),
    ("rho1_re", float), ("rho1_im", float),
    ("rho2_diag", float),
])


def _rho1(state):
    rho1, _ = transition_density_elements(state.basis, state.coefficients, check_norm=False)
    return 0.5 * (rho1 + rho1.conj().T)


def _orbital_density(rho1, orbitals):
    # sum_kq rho_kq conj(phi_k(x)) phi_q(x)
    return np.einsum("kq,kx,qx->x", rho1, orbitals.conj(), orbitals).real


def density_x(state):
    """Normalized real-space density, integrating to one."""
    return _orbital_density(_rho1(state), state.orbitals) / state.n_particles


def momentum_grid(grid):
    return np.fft.fftshift(grid.momenta)


def momentum_orbitals(state):
    """Continuous Fourier transforms of the orbitals sampled at ascending momenta."""
    grid = state.grid
    phase = np.exp(-1j * grid.momenta * grid.x_min)
    spectra = np.fft.fft(state.orbitals, axis=-1) * phase * grid.spacing / np.sqrt(2 * np.pi)
    return np.fft.fftshift(spectra, axes=-1)


def density_k(state):
    """Momentum density on `momentum_grid(state.grid)`, integrating to one with dk = 2 pi / L."""
    return _orbital_density(_rho1(state), momentum_orbitals(state)) / state.n_particles


def natural_occupations(state):
    """Normalized natural occupations (descending) and the natural orbitals as rows."""
    rho1 = _rho1(state) / state.n_particles
    evals, evecs = np.linalg.eigh(rho1)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    natural = evecs.conj().T @ state.orbitals
    return evals, natural


def one_body_matrix(state):
    """rho1(x, x') = sum_kq rho_kq conj(phi_k(x')) phi_q(x), trace N."""
    phi = state.orbitals
    return phi.T @ _rho1(state).T @ phi.conj()


def two_body_diagonal(state):
    """rho2(x, x') = <Psi+(x) Psi+(x') Psi(x') Psi(x)>, integrating to N(N-1)."""
    _, rho2 = transition_density_elements(state.basis, state.coefficients, check_norm=False)
    M, n = state.orbitals.shape
    pair = (state.orbitals.conj()[:, None, :] * state.orbitals[None, :, :]).reshape(M * M, n)
    G = rho2.transpose(0, 3, 1, 2).reshape(M * M, M * M)
    return (pair.T @ G @ pair).real


def correlations_x(state):
    """Pair records over the full grid product, row-major in x then x'."""
    x = state.grid.points
    n = x.size
    dens = density_x(state) * state.n_particles
    r1 = one_body_matrix(state)
    r2 = two_body_diagonal(state)
    out = np.empty(n * n, dtype=CORRELATION_DTYPE)
    out["x"] = np.repeat(x, n)
    out["x_prime"] = np.tile(x, n)
    out["rho_x"] = np.repeat(dens, n)
    out["rho_xp"] = np.tile(dens, n)
    out["rho1_re"] = r1.real.ravel()
    out["rho1_im"] = r1.imag.ravel()
    out["rho2_diag"] = r2.ravel()
    return out


def g1(records, cutoff=1e-12):
    """|g1(x, x')| from record fields; NaN where either density is below cutoff."""
    denom = np.sqrt(np.clip(records["rho_x"] * records["rho_xp"], 0.0, None))
    num = np.hypot(records["rho1_re"], records["rho1_im"])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.minimum(records["rho_x"], records["rho_xp"]) > cutoff,
                        num / denom, np.nan)


def g2(records, cutoff=1e-12):
    denom = records["rho_x"] * records["rho_xp"]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.minimum(records["rho_x"], records["rho_xp"]) > cutoff,
                        records["rho2_diag"] / denom, np.nan)
