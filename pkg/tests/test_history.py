import numpy as np
import pytest

from memevo import (
    ExtendedHistoryVector,
    InitialState,
    WeightedField,
    build_operator,
    evolve_history,
    history_grid,
    init_history,
    solve_direct,
)
from memevo.history import history_source_samples


def _scenario(exp_kernel, rng, T, dt, N=4):
    op = build_operator("explicit-list", N, lambdas=[1.0, 4.0, 9.0, 16.0][:N])
    u0 = rng.standard_normal(N)
    v0 = rng.standard_normal(N)
    grid = history_grid(exp_kernel, T, dt)
    phi = u0[:, None] * np.exp(-grid.points)[None, :]
    eta0 = init_history(u0, phi, grid)
    return op, ExtendedHistoryVector(u0, v0, eta0)


def test_init_history_validation(exp_kernel, rng):
    grid = history_grid(exp_kernel, 1.0, 1e-2)
    with pytest.raises(ValueError):
        init_history(np.ones(2), np.ones((2, grid.n - 1)), grid)


def test_grid_alignment_enforced(exp_kernel, rng):
    op, z = _scenario(exp_kernel, rng, 1.0, 1e-2)
    with pytest.raises(ValueError, match="aligned"):
        evolve_history(z, op, exp_kernel, 1.0, 5e-3)


def test_transport_only_exact_shift(exp_kernel, rng):
    """With the wave update frozen the field is a pure right translation:
    eta^t(s) = eta0(s - t) for s > t and 0 for s <= t, exactly."""
    T, dt = 0.5, 1e-2
    op, z = _scenario(exp_kernel, rng, T, dt, N=2)
    J = int(round(T / dt))
    eta0 = z.eta.values.copy()
    _, fin = evolve_history(z, op, exp_kernel, T, dt, freeze_wave=True)
    expect = np.zeros_like(eta0)
    expect[:, J:] = eta0[:, :-J]
    assert np.array_equal(fin.eta.values, expect)


def test_representation_reconstruction(exp_kernel, rng):
    """eta^t(s) = u(t) - u(t-s) for s <= t and eta0(s-t) + u(t) - u0 beyond,
    reconstructed from the stored trajectory; exact on the aligned grid."""
    T, dt = 1.0, 1e-3
    op, z = _scenario(exp_kernel, rng, T, dt)
    eta0 = z.eta.values.copy()
    traj, fin = evolve_history(z, op, exp_kernel, T, dt)
    J = int(round(T / dt))
    uT = traj.u[:, -1]
    rec = np.empty_like(eta0)
    # s_i = (i+1) dt <= t: u(T) - u(T - s_i)
    rec[:, :J] = uT[:, None] - traj.u[:, J - 1 :: -1]
    rec[:, J:] = eta0[:, : eta0.shape[1] - J] + (uT - traj.u[:, 0])[:, None]
    assert np.max(np.abs(rec - fin.eta.values)) <= 1e-8


def test_snapshot_segments_match_single_run(exp_kernel, rng):
    T, dt = 1.0, 1e-2
    op, z = _scenario(exp_kernel, rng, T, dt)
    zc = ExtendedHistoryVector(z.u.copy(), z.v.copy(), z.eta.copy())
    traj_a, fin_a = evolve_history(z, op, exp_kernel, T, dt)
    traj_b, fin_b = evolve_history(
        zc, op, exp_kernel, T, dt, snapshot_times=(0.25, 0.5)
    )
    assert np.array_equal(traj_a.u, traj_b.u)
    assert np.array_equal(traj_a.v, traj_b.v)
    assert np.array_equal(fin_a.eta.values, fin_b.eta.values)
    assert set(traj_b.diagnostics["snapshots"]) == {0.25, 0.5}


def test_offgrid_snapshot_rejected(exp_kernel, rng):
    op, z = _scenario(exp_kernel, rng, 1.0, 1e-2)
    with pytest.raises(ValueError, match="snapshot"):
        evolve_history(z, op, exp_kernel, 1.0, 1e-2, snapshot_times=(0.255,))


def test_energy_nonincreasing(exp_kernel, rng):
    T, dt = 2.0, 1e-3
    op, z = _scenario(exp_kernel, rng, T, dt)
    traj, _ = evolve_history(z, op, exp_kernel, T, dt, stride=10)
    E = traj.diagnostics["E"]
    assert np.all(np.diff(E) <= 1e-12 * E[0])


def test_source_samples_match_closed_form(exp_kernel):
    """phi0 = e^{-s} against mu = e^{-s} gives F(t) = e^{-t}/2 exactly."""
    T, dt = 1.0, 1e-3
    J = int(round(T / dt))
    grid = history_grid(exp_kernel, T, dt)
    s_nodes = np.concatenate([[0.0], grid.points])
    phi = np.exp(-s_nodes)[None, :]
    F0 = history_source_samples(phi, grid, exp_kernel, J)
    ref = 0.5 * np.exp(-np.arange(J + 1) * dt)
    assert np.max(np.abs(F0[0] - ref)) <= 1e-6
    with pytest.raises(ValueError):
        history_source_samples(phi[:, :-1], grid, exp_kernel, J)


def test_matches_direct_formulation(exp_kernel, rng):
    T, dt = 2.0, 1e-3
    op, z = _scenario(exp_kernel, rng, T, dt)
    traj_h, _ = evolve_history(z, op, exp_kernel, T, dt, stride=100)
    grid = z.eta.grid
    J = int(round(T / dt))
    phi_nodes = np.concatenate(
        [z.u[:, None], z.u[:, None] - z.eta.values], axis=1
    )
    F0 = history_source_samples(phi_nodes, grid, exp_kernel, J)
    traj_d = solve_direct(InitialState(z.u, z.v, F0), op, exp_kernel, T, dt)
    gap = np.max(np.abs(traj_h.u - traj_d.u)) / np.max(np.abs(traj_d.u))
    assert gap <= 1e-3
