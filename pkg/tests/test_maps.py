import numpy as np
import pytest

from memevo import (
    KernelSpec,
    PastHistory,
    StateFunction,
    WeightedField,
    build_kernel,
    build_operator,
    classify_limit_behavior,
    gamma_map,
    lambda_map,
    midpoint_grid,
    pi_map,
    proper_initial_state,
    zeta_from_xi,
)
from memevo.maps import read_state_function_csv, write_state_function_csv
from memevo.spectral import weighted_norm


def test_two_route_identity_linear_kernel():
    """Lambda phi and -Gamma(Pi phi) agree for constant phi on the linear
    kernel; both reduce to the tail mass M(t)."""
    k = build_kernel(KernelSpec(family="linear"))
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    h = 2e-4
    n = int(round(1.0 / h))
    grid = midpoint_grid(1.0, n)
    phi = PastHistory(np.ones((1, n)), grid)
    t_nodes = np.arange(n + 1) * h
    route_a = lambda_map(phi, k, t_nodes, classify=False).F
    ps = pi_map(WeightedField(phi.phi, grid, "mu"), k, op)
    route_b = -gamma_map(ps.xi, t_nodes).F
    assert np.max(np.abs(route_a - route_b)) <= 1e-6
    # both equal the closed-form tail mass
    assert np.max(np.abs(route_a - k.tailmass(t_nodes))) <= 1e-6


def test_lambda_map_constant_history(exp_kernel):
    """F(t) = M(t) u for phi == u."""
    h = 1e-3
    n = int(round(exp_kernel.ell_eff / h))
    grid = midpoint_grid(n * h, n)
    phi = PastHistory(2.0 * np.ones((1, n)), grid)
    t = np.array([0.0, 0.5, 1.0, 3.0])
    sf = lambda_map(phi, exp_kernel, t, classify=False)
    assert np.max(np.abs(sf.F[0] - 2.0 * exp_kernel.tailmass(t))) <= 1e-6


def test_lambda_map_lattice_matches_generic(exp_kernel, rng):
    h = 1e-2
    n = 500
    grid = midpoint_grid(n * h, n)
    phi = PastHistory(rng.standard_normal((2, n)), grid)
    t_aligned = np.arange(20) * h
    fa = lambda_map(phi, exp_kernel, t_aligned, classify=False).F
    # reference: the plain quadrature sum the non-lattice path uses
    fb = np.empty_like(fa)
    for j, t in enumerate(t_aligned):
        fb[:, j] = h * (phi.phi @ exp_kernel.mu(t + grid.points))
    assert np.max(np.abs(fa - fb)) <= 1e-10
    # non-uniform times take the generic path; same rule, same values
    t_odd = np.array([0.0, 0.013, 0.11, 0.42])
    fo = lambda_map(phi, exp_kernel, t_odd, classify=False).F
    for j, t in enumerate(t_odd):
        assert np.allclose(fo[:, j], h * (phi.phi @ exp_kernel.mu(t + grid.points)))


def test_gamma_map_tail_sums(exp_kernel):
    g = midpoint_grid(1.0, 10)
    xi = WeightedField(np.ones((1, 10)), g, "nu")
    sf = gamma_map(xi, np.array([0.0, 0.35, 0.95, 2.0]))
    assert sf.F[0] == pytest.approx([-1.0, -0.7, -0.1, 0.0])


def test_pi_contraction_randomized(exp_kernel, rng):
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    h = 1e-2
    n = int(round(exp_kernel.ell_eff / h))
    grid = midpoint_grid(n * h, n)
    for _ in range(20):
        eta = WeightedField(rng.standard_normal((1, n)), grid, "mu")
        ps = pi_map(eta, exp_kernel, op)  # raises if the contraction fails
        assert weighted_norm(ps.xi, op, exp_kernel) <= (
            weighted_norm(eta, op, exp_kernel) + 1e-10
        )


def test_pi_equality_on_constants():
    """For eta == u the contraction is an equality; moderate resolution
    version (the tight tolerance lives in the acceptance suite)."""
    k = build_kernel(KernelSpec(family="exponential", a=1.0, kappa=1.0), eps_tail=1e-10)
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    h = 1e-3
    n = int(round(k.L_trunc / h))
    grid = midpoint_grid(n * h, n)
    eta = WeightedField(np.ones((1, n)), grid, "mu")
    ps = pi_map(eta, k, op)
    gap = abs(weighted_norm(ps.xi, op, k) - weighted_norm(eta, op, k))
    assert gap <= 1e-6


def test_proper_initial_state_zero_history(exp_kernel):
    """phi0 == u0 gives F = M(t) u0 and a vanishing proper state."""
    u0 = np.array([2.0])
    g = midpoint_grid(4.0, 400)
    sf = StateFunction(
        t_grid=np.linspace(0, 5, 6),
        F=2.0 * exp_kernel.tailmass(np.linspace(0, 5, 6))[None, :],
        deriv=lambda t: -2.0 * exp_kernel.mu(np.atleast_1d(t)),
    )
    xi0 = proper_initial_state(u0, sf, exp_kernel, g)
    assert np.max(np.abs(xi0.values)) <= 1e-12


def test_proper_initial_state_from_samples(exp_kernel):
    """Sampled F = e^{-t}/2 (the exponential past phi0 = e^{-s}) recovers
    xi0(tau) = mu(tau)u0 + DF(tau) = e^{-tau}/2."""
    u0 = np.array([1.0])
    h = 1e-3
    g = midpoint_grid(2.0, 2000)
    t = np.arange(2002) * h
    sf = StateFunction(t_grid=t, F=(0.5 * np.exp(-t))[None, :])
    xi0 = proper_initial_state(u0, sf, exp_kernel, g)
    ref = 0.5 * np.exp(-g.points)
    assert np.max(np.abs(xi0.values[0] - ref)) <= 1e-5


def test_proper_initial_state_coverage_error(exp_kernel):
    u0 = np.array([1.0])
    g = midpoint_grid(2.0, 200)
    sf = StateFunction(t_grid=np.linspace(0, 1, 11), F=np.zeros((1, 11)))
    with pytest.raises(ValueError, match="cover"):
        proper_initial_state(u0, sf, exp_kernel, g)


def test_zeta_matches_gamma(exp_kernel, rng):
    g = midpoint_grid(1.0, 100)
    xi = WeightedField(rng.standard_normal((2, 100)), g, "nu")
    for tau0 in (0.0, 0.3, 0.77):
        z = zeta_from_xi(xi, tau0)
        f = gamma_map(xi, np.array([tau0])).F[:, 0]
        assert np.allclose(z, -f)
    with pytest.raises(ValueError):
        zeta_from_xi(xi, 1.5)


def test_classification_closed_forms():
    assert classify_limit_behavior(lambda t: np.atleast_1d(np.exp(-t))) == "limit-exists"
    assert classify_limit_behavior(lambda t: np.atleast_1d(0.0)) == "limit-exists"
    assert (
        classify_limit_behavior(lambda t: np.atleast_1d(np.sin(1.0 / t)))
        == "bounded-no-limit"
    )
    assert classify_limit_behavior(lambda t: np.atleast_1d(-np.log(t))) == "unbounded"
    # first-order convergence: variations halve level by level
    assert classify_limit_behavior(lambda t: np.atleast_1d(1.0 + 5.0 * t)) == "limit-exists"


def test_state_function_csv_roundtrip(tmp_path, rng):
    t = np.linspace(0.0, 1.0, 33)
    F = rng.standard_normal((3, 33))
    sf = StateFunction(t_grid=t, F=F)
    path = tmp_path / "sf.csv"
    write_state_function_csv(path, sf)
    back = read_state_function_csv(path)
    assert np.allclose(back.t_grid, t)
    assert np.allclose(back.F, F)
    header = open(path).readline().strip()
    assert header == "# memevo-csv v1"
