import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from mqdx.analysis import density_x
from mqdx.errors import ConfigurationError, SolverError
from mqdx.fock import ConfigurationBasis, Statistics
from mqdx.grid import build_grid
from mqdx.mctdh import HamiltonianSpec, energy
from mqdx.model import InteractionKind, InteractionSpec, PotentialKind, PotentialSpec
from mqdx.oracle import two_particle_grid_oracle
from mqdx.solver import (PROPAGATE, RunConfig, Trajectory, davidson_ground, initial_guess,
                         interpolate_state, propagate, relax, sil_step)
from support import random_hermitian

PROPS = settings(max_examples=100, derandomize=True, deadline=None)
BOS, FER = Statistics.BOSON, Statistics.FERMION
CONTACT = InteractionSpec(InteractionKind.CONTACT, 1.0)


def test_davidson_diagonal():
    e, c = davidson_ground(np.diag([1.0, 2.0, 3.0]), np.array([0.3, 0.5, 0.8]))
    assert e == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(c[0]) - 1) < 1e-12


def test_davidson_random_hermitian_against_dense():
    rng = np.random.default_rng(12)
    H = random_hermitian(50, rng)
    e, c = davidson_ground(H, rng.standard_normal(50))
    evals = np.linalg.eigvalsh(H)
    assert e == pytest.approx(evals[0], abs=1e-10)
    assert np.linalg.norm(H @ c - e * c) <= 1e-12 * max(1, abs(e))
    assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-14)


def test_davidson_scalar_and_errors():
    e, c = davidson_ground(np.array([[4.2]]), np.array([2.0]))
    assert e == 4.2 and c.shape == (1,) and abs(c[0]) == 1
    with pytest.raises(SolverError):
        davidson_ground(np.eye(3), np.zeros(3))
    rng = np.random.default_rng(3)
    with pytest.raises(SolverError) as info:
        davidson_ground(random_hermitian(60, rng), np.ones(60), max_iter=3)
    assert info.value.residual > 0


def test_sil_diagonal_phases():
    C = np.array([0.6, 0.8j])
    out = sil_step(np.diag([1.3, -0.4]), C, 0.7)
    np.testing.assert_allclose(out, C * np.exp(-1j * np.array([1.3, -0.4]) * 0.7), atol=1e-13)
    np.testing.assert_array_equal(sil_step(np.diag([1.0, 2.0]), C, 0.0), C)


def test_sil_against_dense_expm():
    rng = np.random.default_rng(5)
    H = random_hermitian(20, rng)
    C = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    C /= np.linalg.norm(C)
    out = sil_step(H, C, 0.01)
    np.testing.assert_allclose(out, scipy.linalg.expm(-1j * 0.01 * H) @ C, atol=1e-10)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


def test_sil_happy_breakdown():
    # C lives in a two-dimensional invariant subspace
    H = np.diag([1.0, 2.0, 3.0, 4.0])
    C = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2)
    out = sil_step(H, C, 0.3)
    np.testing.assert_allclose(out, np.exp(-1j * np.diag(H) * 0.3) * C, atol=1e-13)


@PROPS
@given(st.integers(2, 30), st.floats(0.0, 0.5), st.integers(0, 2 ** 32 - 1))
def test_sil_unitary_and_accurate(n, dt, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(n, rng)
    C = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    C /= np.linalg.norm(C)
    out = sil_step(H, C, dt)
    assert abs(np.linalg.norm(out) - 1) <= 1e-12
    np.testing.assert_allclose(out, scipy.linalg.expm(-1j * dt * H) @ C, atol=1e-9)


@PROPS
@given(st.integers(2, 40), st.integers(0, 2 ** 32 - 1))
def test_davidson_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(n, rng)
    e, _ = davidson_ground(H, rng.standard_normal(n) + 0j)
    assert e == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-10 * max(1, abs(e)))


@pytest.mark.parametrize("kind, N, M", [(BOS, 3, 1), (BOS, 4, 3), (FER, 3, 5)])
def test_initial_guess(kind, N, M):
    grid = build_grid(64, -8, 8)
    basis = ConfigurationBasis(kind, N, M)
    a = initial_guess(grid, basis, seed=17)
    b = initial_guess(grid, basis, seed=17)
    np.testing.assert_allclose(a.gram(), np.eye(M), atol=1e-10)
    assert np.array_equal(a.orbitals, b.orbitals)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert not np.array_equal(a.orbitals, initial_guess(grid, basis, seed=18).orbitals)
    if M == 1:
        np.testing.assert_array_equal(a.coefficients, [1.0])


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(time_begin=1.0, time_final=1.0)
    with pytest.raises(ConfigurationError):
        RunConfig(output_timestep=0.0)
    with pytest.raises(ConfigurationError):
        RunConfig(orbital_integrator="ABM")
    with pytest.raises(ConfigurationError):
        RunConfig(orbital_scheme="euler")


def test_relax_noninteracting():
    grid = build_grid(64, -8, 8)
    state, traj = relax(initial_guess(grid, ConfigurationBasis(BOS, 5, 1), seed=2),
                        HamiltonianSpec(), RunConfig(time_final=10.0))
    assert traj.energies[-1] == pytest.approx(2.5, abs=1e-8)
    assert np.all(np.diff(traj.times) > 0)
    np.testing.assert_allclose(np.diff(traj.times), 1.0, atol=1e-12)
    assert traj.snapshot_at(10.0) is not None


@pytest.mark.xfail(strict=True, reason="six orbitals truncate the contact cusp: the variational "
                   "optimum sits 5.3e-4 above the grid oracle (see test below)")
def test_relax_contact_pair_matches_grid_oracle():
    grid = build_grid(32, -8, 8)
    spec = HamiltonianSpec(interaction=CONTACT)
    state, traj = relax(initial_guess(grid, ConfigurationBasis(BOS, 2, 6), seed=0), spec,
                        RunConfig(time_final=30.0, keep_snapshots=False))
    e_ref, _ = two_particle_grid_oracle(grid, spec, BOS)
    assert traj.energies[-1] == pytest.approx(e_ref, abs=1e-4)
    assert np.all(np.diff(traj.energies[1:]) <= 1e-9)
    assert state.orthonormality_error() < 1e-8 and state.norm_error() < 1e-10


def test_relax_contact_pair_is_variational_and_exact_in_full_space():
    grid = build_grid(16, -6, 6)
    spec = HamiltonianSpec(interaction=CONTACT)
    e_ref, _ = two_particle_grid_oracle(grid, spec, BOS)
    energies = []
    for M in (4, 8, 16):
        _, traj = relax(initial_guess(grid, ConfigurationBasis(BOS, 2, M), seed=0), spec,
                        RunConfig(time_final=30.0, keep_snapshots=False))
        energies.append(traj.energies[-1])
    assert energies[0] > energies[1] > e_ref - 1e-12
    # sixteen orbitals span the whole grid space
    assert energies[2] == pytest.approx(e_ref, abs=1e-9)


def test_relax_energy_defect_shrinks_with_step():
    grid = build_grid(64, -8, 8)
    spec = HamiltonianSpec(interaction=InteractionSpec(InteractionKind.HIM, 0.5))
    basis = ConfigurationBasis(BOS, 3, 2)

    def run(dtau):
        cfg = RunConfig(time_final=1.0, integration_stepsize=dtau, keep_snapshots=False,
                        orbital_scheme="classic")
        return relax(initial_guess(grid, basis, seed=3), spec, cfg)[1].energies[-1]

    ref = run(0.0125)
    coarse, fine = abs(run(0.1) - ref), abs(run(0.05) - ref)
    assert fine < coarse


@pytest.fixture(scope="module")
def trapped_pair():
    grid = build_grid(64, -8, 8)
    spec = HamiltonianSpec(interaction=CONTACT)
    state, _ = relax(initial_guess(grid, ConfigurationBasis(BOS, 2, 3), seed=4), spec,
                     RunConfig(time_final=20.0, keep_snapshots=False))
    return state, spec


def test_propagate_ground_state_is_stationary(trapped_pair):
    state, spec = trapped_pair
    rho0 = density_x(state)
    cfg = RunConfig(PROPAGATE, time_final=10.0, integration_stepsize=0.01, output_timestep=1.0)
    final, traj = propagate(state, spec, cfg)
    for _, snap in traj.snapshots:
        assert np.abs(density_x(snap) - rho0).max() <= 1e-6
    assert np.ptp(traj.energies) <= 1e-6 * abs(traj.energies[0])
    assert final.orthonormality_error() <= 1e-8 and final.norm_error() <= 1e-8


def test_propagate_quench_unitarity_and_parity(trapped_pair):
    state, spec0 = trapped_pair
    kick = state.copy()
    spec = HamiltonianSpec(PotentialSpec(PotentialKind.HO1D_TD_GAUSS, v_max=5.0, tau=2.0,
                                         barrier_sigma=0.5), spec0.interaction)
    cfg = RunConfig(PROPAGATE, time_final=10.0, integration_stepsize=0.01, output_timestep=1.0)
    final, traj = propagate(kick, spec, cfg)
    dx = state.grid.spacing
    for t, snap in traj.snapshots:
        assert snap.norm_error() <= 1e-8 and snap.orthonormality_error() <= 1e-8
        rho = density_x(snap)
        mirrored = np.roll(rho[::-1], 1)  # x -> -x on the periodic grid
        assert np.sum(np.abs(rho - mirrored)) * dx <= 1e-4
    late = traj.energies[traj.times >= 2.0]
    assert np.ptp(late) <= 1e-5 * abs(late.mean())


def test_interpolation():
    coarse = build_grid(64, -8, 8)
    fine = build_grid(128, -8, 8)
    spec = HamiltonianSpec()
    state, _ = relax(initial_guess(coarse, ConfigurationBasis(BOS, 1, 1), seed=0), spec,
                     RunConfig(time_final=10.0, keep_snapshots=False))
    up = interpolate_state(state, fine)
    assert abs(energy(up, spec) - energy(state, spec)) <= 1e-8
    np.testing.assert_allclose(np.sum(np.abs(up.orbitals) ** 2, axis=1) * fine.spacing, 1.0,
                               atol=1e-12)
    np.testing.assert_array_equal(up.coefficients, state.coefficients)
    same = interpolate_state(state, build_grid(64, -8, 8))
    np.testing.assert_array_equal(same.orbitals, state.orbitals)
    with pytest.raises(ConfigurationError):
        interpolate_state(state, build_grid(128, -9, 9))


def test_trajectory_rejects_unordered_times():
    grid = build_grid(16, -4, 4)
    s = initial_guess(grid, ConfigurationBasis(BOS, 1, 1))
    traj = Trajectory()
    traj.append(s, 0.0)
    with pytest.raises(SolverError):
        traj.append(s, 0.0)
