import numpy as np
import pytest
from scipy.integrate import solve_ivp

from memevo import InitialState, build_operator, cfl_limit, history_grid, solve_direct
from memevo.history import history_source_samples


def _exp_scenario(exp_kernel, rng, T, dt, N=4):
    op = build_operator("explicit-list", N, lambdas=[1.0, 4.0, 9.0, 16.0][:N])
    u0 = rng.standard_normal(N)
    v0 = rng.standard_normal(N)
    J = int(round(T / dt))
    grid = history_grid(exp_kernel, T, dt)
    s_nodes = np.concatenate([[0.0], grid.points])
    phi = u0[:, None] * np.exp(-s_nodes)[None, :]
    F0 = history_source_samples(phi, grid, exp_kernel, J)
    return op, InitialState(u0, v0, F0)


def _ode_reference(op, k, u0, v0, T, times):
    """Reduce the unit-exponential-kernel dynamics to an ODE system.

    With mu = e^{-s} the total memory term w = conv + F0 obeys
    w' = -w + u, w(0) = u0/2 for the past phi0(s) = e^{-s} u0."""
    lam = op.lambdas

    def rhs(t, y):
        n = lam.size
        u, v, w = y[:n], y[n : 2 * n], y[2 * n :]
        return np.concatenate([v, -lam * (k.alpha * u - w), -w + u])

    y0 = np.concatenate([u0, v0, 0.5 * u0])
    sol = solve_ivp(rhs, (0.0, T), y0, t_eval=times, rtol=1e-11, atol=1e-13,
                    method="DOP853")
    return sol.y[: lam.size]


def test_cfl_limit_formula(exp_kernel, op4):
    assert cfl_limit(op4, exp_kernel) == pytest.approx(
        2.0 / np.sqrt(16.0 * exp_kernel.alpha)
    )


def test_cfl_violation_rejected(exp_kernel, op4, rng):
    op, st = _exp_scenario(exp_kernel, rng, T=1.0, dt=0.5)
    with pytest.raises(ValueError, match="unstable"):
        solve_direct(st, op, exp_kernel, 1.0, 0.5)


def test_input_validation(exp_kernel, op4, rng):
    op, st = _exp_scenario(exp_kernel, rng, T=1.0, dt=1e-2)
    with pytest.raises(ValueError):
        solve_direct(st, op, exp_kernel, 1.0, -1e-2)
    with pytest.raises(ValueError):
        solve_direct(st, op, exp_kernel, 1.0, 3e-3)  # dt does not divide T
    bad = InitialState(st.u0, st.v0, st.F0[:, :-3])
    with pytest.raises(ValueError, match="F0"):
        solve_direct(bad, op, exp_kernel, 1.0, 1e-2)
    bad2 = InitialState(st.u0[:2], st.v0, st.F0)
    with pytest.raises(ValueError):
        solve_direct(bad2, op, exp_kernel, 1.0, 1e-2)


def test_agrees_with_ode_reduction(exp_kernel, rng):
    T, dt = 2.0, 1e-3
    op, st = _exp_scenario(exp_kernel, rng, T, dt)
    traj = solve_direct(st, op, exp_kernel, T, dt)
    ref = _ode_reference(op, exp_kernel, st.u0, st.v0, T, traj.times)
    gap = np.max(np.abs(traj.u - ref)) / np.max(np.abs(ref))
    assert gap <= 1e-4


def test_second_order_convergence(exp_kernel, rng):
    T = 1.0
    op, st1 = _exp_scenario(exp_kernel, rng, T, 2e-3)
    rng2 = np.random.default_rng(1234)
    op, st2 = _exp_scenario(exp_kernel, rng2, T, 1e-3)
    assert np.allclose(st1.u0, st2.u0)
    t1 = solve_direct(st1, op, exp_kernel, T, 2e-3)
    t2 = solve_direct(st2, op, exp_kernel, T, 1e-3)
    ref = _ode_reference(op, exp_kernel, st1.u0, st1.v0, T, t1.times)
    scale = np.max(np.abs(ref))
    e1 = np.max(np.abs(t1.u - ref)) / scale
    ref2 = _ode_reference(op, exp_kernel, st1.u0, st1.v0, T, t2.times)
    e2 = np.max(np.abs(t2.u - ref2)) / scale
    assert 3.0 <= e1 / e2 <= 5.0


def test_wave_energy_diagnostic(exp_kernel, rng):
    T, dt = 0.5, 1e-3
    op, st = _exp_scenario(exp_kernel, rng, T, dt)
    traj = solve_direct(st, op, exp_kernel, T, dt)
    e = traj.diagnostics["wave_energy"]
    assert e.shape == traj.times.shape
    e0 = 0.5 * (op.lambdas @ st.u0**2 + st.v0 @ st.v0)
    assert e[0] == pytest.approx(e0)
