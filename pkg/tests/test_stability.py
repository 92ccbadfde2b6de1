import numpy as np
import pytest

from memevo import (
    ExtendedStateVector,
    StabilityConfig,
    WeightedField,
    build_operator,
    decay_study,
    fit_decay_rate,
    functionals,
    midpoint_grid,
    proof_constants,
    state_grid,
)
from memevo.stability import rho_profile


def _state(exp_kernel, u, v, xi_vals=None, n=200):
    g = midpoint_grid(exp_kernel.ell_eff, n)
    vals = np.zeros((len(u), n)) if xi_vals is None else xi_vals
    return ExtendedStateVector(np.asarray(u, float), np.asarray(v, float),
                               WeightedField(vals, g, "nu"))


def test_functionals_trivial_cases(exp_kernel):
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    cfg = StabilityConfig(delta=1.0, beta=1.0)
    E, p1, p2, phi, psi = functionals(_state(exp_kernel, [0.0], [0.0]), op, exp_kernel, cfg)
    assert (E, p1, p2, phi, psi) == (0.0, 0.0, 0.0, 0.0, 0.0)
    # v = 0 kills both cross terms
    E, p1, p2, phi, psi = functionals(_state(exp_kernel, [2.0], [0.0]), op, exp_kernel, cfg)
    assert p1 == 0.0 and p2 == 0.0 and E == pytest.approx(2.0)
    # u = v = 1, lambda = 1, xi = 0
    E, p1, p2, phi, psi = functionals(_state(exp_kernel, [1.0], [1.0]), op, exp_kernel, cfg)
    assert E == pytest.approx(1.0)
    assert p2 == pytest.approx(1.0)
    assert p1 == 0.0


def test_psi_equivalent_to_energy(exp_kernel, rng):
    """(1/2)E <= Psi <= (3/2)E whenever eps <= 1/(2 c3)."""
    op = build_operator("explicit-list", 2, lambdas=[1.0, 4.0])
    cfg = StabilityConfig(delta=1.0, beta=1.0)
    for _ in range(25):
        z = _state(exp_kernel, rng.standard_normal(2), rng.standard_normal(2),
                   rng.standard_normal((2, 200)) * exp_kernel.mu(
                       midpoint_grid(exp_kernel.ell_eff, 200).points))
        E, _, _, _, psi = functionals(z, op, exp_kernel, cfg)
        assert 0.5 * E - 1e-12 <= psi <= 1.5 * E + 1e-12


def test_functionals_quadratic_scaling(exp_kernel, rng):
    op = build_operator("explicit-list", 2, lambdas=[1.0, 4.0])
    cfg = StabilityConfig(delta=1.0, beta=1.0)
    z = _state(exp_kernel, rng.standard_normal(2), rng.standard_normal(2),
               rng.standard_normal((2, 200)))
    c = 3.0
    zc = ExtendedStateVector(c * z.u, c * z.v,
                             WeightedField(c * z.xi.values, z.xi.grid, "nu"))
    a = functionals(z, op, exp_kernel, cfg)
    b = functionals(zc, op, exp_kernel, cfg)
    assert np.allclose(np.asarray(b), c**2 * np.asarray(a))


def test_proof_constants_recomputed(exp_kernel):
    op = build_operator("explicit-list", 2, lambdas=[2.0, 5.0])
    beta, delta = 1.0, 0.7
    cs = proof_constants(op, exp_kernel, beta, delta)
    m0 = exp_kernel.total_mass
    mb = float(exp_kernel.tailmass(beta))
    c0 = max(np.sqrt(m0), 1.0) / np.sqrt(2.0)
    c1 = (m0 * (1 + 3 / mb) + m0 / (2 * beta**2 * 2.0 * mb)) / mb
    c2 = 3 * c1 + m0 + 0.5
    c3 = c0 * (3 / mb + 1)
    eps = min(delta / (2 * c2), 1 / (2 * c3))
    assert cs["c0"] == pytest.approx(c0)
    assert cs["c1"] == pytest.approx(c1)
    assert cs["c2"] == pytest.approx(c2)
    assert cs["c3"] == pytest.approx(c3)
    assert cs["eps"] == pytest.approx(eps)
    assert cs["omega"] == pytest.approx(eps / 3.0)
    assert cs["K"] == pytest.approx(np.sqrt(3.0))


def test_rho_profile():
    tau = np.array([0.0, 0.5, 1.0, 2.0])
    assert np.allclose(rho_profile(tau, 1.0), [0.0, 0.5, 1.0, 1.0])


def test_resolve_beta_bounds(exp_kernel):
    cfg = StabilityConfig(delta=1.0, beta=100.0)
    with pytest.raises(ValueError):
        cfg.resolve_beta(exp_kernel)
    default = StabilityConfig(delta=1.0).resolve_beta(exp_kernel)
    assert default == pytest.approx(0.5 * exp_kernel.ell_eff)


def test_fit_decay_rate_synthetic():
    t = np.linspace(0.0, 10.0, 401)
    rep = fit_decay_rate(t, np.exp(-2.0 * t))
    assert rep.omega_fit == pytest.approx(1.0, abs=1e-10)
    assert rep.K_fit == pytest.approx(1.0, abs=1e-8)
    assert rep.residual <= 1e-12
    assert rep.decaying
    flat = fit_decay_rate(t, np.ones_like(t))
    assert not flat.decaying
    assert flat.omega_fit == 0.0
    with pytest.raises(ValueError):
        fit_decay_rate(t[:3], np.exp(-t[:3]))


def test_decay_study_end_to_end(exp_kernel, rng, tmp_path):
    op = build_operator("explicit-list", 4, lambdas=[1.0, 4.0, 9.0, 16.0])
    T, dt = 5.0, 1e-3
    g = state_grid(exp_kernel, T, dt)
    u0 = rng.standard_normal(4)
    v0 = rng.standard_normal(4)
    xi0 = WeightedField(exp_kernel.mu(g.points)[None, :] * u0[:, None], g, "nu")
    cfg = StabilityConfig(delta=1.0, beta=1.0)
    csv_path = tmp_path / "margins.csv"
    report, ineq, traj = decay_study(
        ExtendedStateVector(u0, v0, xi0), op, exp_kernel, cfg, T, dt,
        stride=10, margins_csv=str(csv_path),
    )
    assert report.decaying and report.omega_fit > 0
    assert report.omega_proof > 0
    assert report.suf  # exponential kernel satisfies the derivative condition
    assert ineq.all_hold
    for name, frac in ineq.fractions.items():
        assert frac >= 0.99, name
    assert csv_path.exists()
    header = open(csv_path).readline()
    assert header.startswith("t,")
    # fitted envelope dominated by the proof bound: omega_fit >= omega_proof
    assert report.omega_fit >= report.omega_proof
    import json

    js = json.loads(report.to_json())
    assert js["margins_csv_path"] == str(csv_path)


def test_verify_inequalities_needs_rho_series(exp_kernel, rng):
    from memevo import evolve_state, verify_inequalities

    op = build_operator("explicit-list", 1, lambdas=[1.0])
    g = state_grid(exp_kernel, 0.5, 1e-2)
    z = ExtendedStateVector(np.array([1.0]), np.array([0.0]),
                            WeightedField(np.zeros((1, g.n)), g, "nu"))
    traj, _ = evolve_state(z, op, exp_kernel, 0.5, 1e-2)
    with pytest.raises(ValueError, match="rho"):
        verify_inequalities(traj, op, exp_kernel, StabilityConfig(delta=1.0, beta=1.0))
