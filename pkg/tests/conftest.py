import numpy as np
import pytest

from memevo import KernelSpec, build_kernel, build_operator


@pytest.fixture(scope="session")
def exp_kernel():
    """Unit exponential kernel, the workhorse with closed forms everywhere."""
    return build_kernel(KernelSpec(family="exponential", a=1.0, kappa=1.0))


@pytest.fixture(scope="session")
def op4():
    return build_operator("explicit-list", 4, lambdas=[1.0, 4.0, 9.0, 16.0])


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
