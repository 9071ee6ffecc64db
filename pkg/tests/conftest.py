import numpy as np
import pytest

from isoform import generators as gen


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture(scope="session")
def tetra():
    return gen.platonic("tetra")


@pytest.fixture(scope="session")
def octa():
    return gen.platonic("octa")


@pytest.fixture(scope="session")
def icosa():
    return gen.platonic("icosa")


@pytest.fixture(scope="session")
def jessen():
    return gen.jessen()


@pytest.fixture(scope="session")
def grid5():
    return gen.square_domain(5)


@pytest.fixture(scope="session")
def cylinder():
    real, report = gen.homogeneous_cylinder(gen.CylinderParams())
    return real, report
