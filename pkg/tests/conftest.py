import pytest

from cmc1_forge import monodromy, surface
from cmc1_forge.recipes import dihedral_recipe, tetrahedral_recipe, torus_recipe


@pytest.fixture(scope="session")
def dihedral31():
    return dihedral_recipe(3, 1)


@pytest.fixture(scope="session")
def tetra1():
    return tetrahedral_recipe(1)


@pytest.fixture(scope="session")
def torus():
    return torus_recipe()


@pytest.fixture(scope="session")
def dihedral_kill(dihedral31):
    return monodromy.kill_period(dihedral31, 0.02)


@pytest.fixture(scope="session")
def torus_kill(torus):
    return monodromy.kill_period(torus, 0.002)


@pytest.fixture(scope="session")
def dihedral_patch(dihedral31, dihedral_kill):
    return surface.build_fundamental_patch(dihedral31, dihedral_kill, surface.build_mesh(dihedral31, 12))


@pytest.fixture(scope="session")
def torus_patch(torus, torus_kill):
    return surface.build_fundamental_patch(torus, torus_kill, surface.build_mesh(torus, 12))
