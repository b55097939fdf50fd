import numpy as np
import pytest

from bergman_lab.domains import Annulus, Ball, Polydisc
from bergman_lab.kernels import closed_form_kernel, laurent_kernel, numeric_kernel
from bergman_lab.quadrature import build_rule

# Sampling stays at desk scale: angular quadrature aliasing decays like
# |z|^(2*order+1), so random points keep a radius cap per dimension.
DISC_MARGIN = 0.4
BIDISC_MARGIN = 0.55


@pytest.fixture(scope="session")
def disc():
    return Ball(1)


@pytest.fixture(scope="session")
def ball2():
    return Ball(2)


@pytest.fixture(scope="session")
def bidisc():
    return Polydisc(2)


@pytest.fixture(scope="session")
def annulus():
    return Annulus(0.5)


@pytest.fixture(scope="session")
def disc_kernel(disc):
    return closed_form_kernel(disc)


@pytest.fixture(scope="session")
def ball2_kernel(ball2):
    return closed_form_kernel(ball2)


@pytest.fixture(scope="session")
def bidisc_kernel(bidisc):
    return closed_form_kernel(bidisc)


@pytest.fixture(scope="session")
def annulus_kernel(annulus):
    return laurent_kernel(annulus, 15)


@pytest.fixture(scope="session")
def disc_rule(disc):
    return build_rule(disc, 36)


@pytest.fixture(scope="session")
def bidisc_rule(bidisc):
    return build_rule(bidisc, 14)


@pytest.fixture(scope="session")
def annulus_rule(annulus):
    return build_rule(annulus, 40)


@pytest.fixture(scope="session")
def numeric_disc_kernel(disc):
    return numeric_kernel(disc, build_rule(disc, 40), 30)


def rng_for(test_name: str) -> np.random.Generator:
    """One deterministic generator per test, seeded from the test's name."""
    seed = abs(hash(test_name)) % (2 ** 31)
    return np.random.default_rng(seed)


@pytest.fixture
def rng(request):
    return np.random.default_rng(sum(map(ord, request.node.name)) % (2 ** 31))


def unit_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    raw = rng.normal(size=(count, dim, 2))
    dirs = raw[..., 0] + 1j * raw[..., 1]
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
