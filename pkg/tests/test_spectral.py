import numpy as np
import pytest

from memevo import (
    WeightedField,
    build_operator,
    extended_norm,
    midpoint_grid,
    node_grid,
    norm,
    weighted_norm,
)
from memevo.spectral import ModalOperator


def test_dirichlet_eigenvalues():
    op = build_operator("dirichlet-laplacian-interval", 5)
    assert np.array_equal(op.lambdas, np.array([1.0, 4.0, 9.0, 16.0, 25.0]))
    assert op.N == 5


def test_explicit_list():
    op = build_operator("explicit-list", 3, lambdas=[0.5, 0.5, 2.0])
    assert np.array_equal(op.lambdas, np.array([0.5, 0.5, 2.0]))


@pytest.mark.parametrize(
    "call",
    [
        lambda: build_operator("nosuch", 2),
        lambda: build_operator("explicit-list", 2, lambdas=[1.0]),
        lambda: build_operator("explicit-list", 2, lambdas=[-1.0, 1.0]),
        lambda: build_operator("explicit-list", 2, lambdas=[2.0, 1.0]),
        lambda: build_operator("dirichlet-laplacian-interval", 0),
        lambda: ModalOperator(lambdas=np.empty(0), domain_tag="x"),
    ],
)
def test_bad_operators_rejected(call):
    with pytest.raises(ValueError):
        call()


def test_norms_hand_values():
    op = build_operator("explicit-list", 2, lambdas=[1.0, 4.0])
    u = np.array([3.0, 4.0])
    assert norm(u, op, "H") == pytest.approx(5.0)
    assert norm(u, op, "V") == pytest.approx(np.sqrt(9.0 + 64.0))
    assert norm(u, op, "Vstar") == pytest.approx(np.sqrt(9.0 + 4.0))
    with pytest.raises(ValueError):
        norm(u, op, "W")
    with pytest.raises(ValueError):
        norm(np.ones(3), op, "H")


def test_grids():
    g = midpoint_grid(1.0, 4)
    assert np.allclose(g.points, [0.125, 0.375, 0.625, 0.875])
    n = node_grid(1.0, 4)
    assert np.allclose(n.points, [0.25, 0.5, 0.75, 1.0])
    assert g.width == n.width == 0.25


def test_weighted_field_validation():
    g = midpoint_grid(1.0, 4)
    with pytest.raises(ValueError):
        WeightedField(np.ones((2, 3)), g, "mu")
    with pytest.raises(ValueError):
        WeightedField(np.ones((2, 4)), g, "sigma")


def test_weighted_norm_constant_field(exp_kernel):
    """For eta == 1 the mu-weighted norm is sqrt(M(0)) up to quadrature and
    truncation error (midpoint rule, second order)."""
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    n = 20000
    g = midpoint_grid(exp_kernel.ell_eff, n)
    f = WeightedField(np.ones((1, n)), g, "mu")
    ref = np.sqrt(exp_kernel.total_mass - exp_kernel.tailmass(exp_kernel.ell_eff))
    assert weighted_norm(f, op, exp_kernel) == pytest.approx(float(ref), abs=1e-7)


def test_weighted_norm_nu_weight():
    from memevo import KernelSpec, build_kernel

    k = build_kernel(KernelSpec(family="linear"))
    op = build_operator("explicit-list", 1, lambdas=[2.0])
    n = 10000
    g = midpoint_grid(1.0, n)
    # xi = 1 - tau: int nu * xi^2 = int (1 - tau) = 1/2, times lambda = 2
    f = WeightedField((1.0 - g.points)[None, :], g, "nu")
    assert weighted_norm(f, op, k) == pytest.approx(1.0, abs=1e-9)


def test_extended_norm_pythagorean(exp_kernel, rng):
    op = build_operator("explicit-list", 2, lambdas=[1.0, 4.0])
    g = midpoint_grid(exp_kernel.ell_eff, 500)
    f = WeightedField(rng.standard_normal((2, 500)), g, "mu")
    u = rng.standard_normal(2)
    v = rng.standard_normal(2)
    total = extended_norm(u, v, f, op, exp_kernel)
    parts = (
        norm(u, op, "V") ** 2
        + norm(v, op, "H") ** 2
        + weighted_norm(f, op, exp_kernel) ** 2
    )
    assert total == pytest.approx(np.sqrt(parts))
