import numpy as np
import pytest

from ibcsim.components.coefficients import complete_coefficients, make_dirichlet
from ibcsim.components.geometry import MapSpec, Sector, SectorGrid, build_link
from ibcsim.components.model import ModelSpec


def point_halfline_model(
    coefficients,
    h: float = 0.25,
    length: float = 1.0,
    mass: float = 1.0,
    hbar: float = 1.0,
    convention: str = "explicit",
    fiber_dim: int = 1,
    potential=None,
) -> ModelSpec:
    """Point sector 0 fed by the endpoint x = 0 of the interval sector 1 on [0, length]."""
    point = SectorGrid(Sector(id=0, kind="point", fiber_dim=fiber_dim), [])
    line = SectorGrid(
        Sector(
            id=1,
            kind="interval",
            lower=[0.0],
            upper=[length],
            physical_faces=["0-"],
            mass_factors=[mass],
            fiber_dim=fiber_dim,
        ),
        h,
        convention,
    )
    link = build_link(line, "0-", point, MapSpec(), coefficients, hbar=hbar)
    potentials = {1: potential(line.nodes[:, 0])} if potential is not None else None
    return ModelSpec([point, line], [link], hbar=hbar, potentials=potentials)


def line_halfplane_model(coefficients, a: float = 1.0, height: float = 1.0, h: float = 0.25) -> ModelSpec:
    line = SectorGrid(Sector(id=0, kind="interval", lower=[-a], upper=[a]), h, "explicit")
    plane = SectorGrid(
        Sector(id=1, kind="box", lower=[-a, 0.0], upper=[a, height], physical_faces=["1-"]),
        h,
        "explicit",
    )
    link = build_link(plane, "1-", line, MapSpec(), coefficients)
    return ModelSpec([line, plane], [link])


def interval_model(
    lower: float, upper: float, h: float, potential=None, mass: float = 1.0, hbar: float = 1.0
) -> ModelSpec:
    """A single interval sector between two far walls."""
    grid = SectorGrid(
        Sector(id=0, kind="interval", lower=[lower], upper=[upper], mass_factors=[mass]),
        h,
        "explicit",
    )
    potentials = {0: potential(grid.nodes[:, 0])} if potential is not None else None
    return ModelSpec([grid], [], hbar=hbar, potentials=potentials)


def random_hermitian(rng: np.random.Generator, r: int) -> np.ndarray:
    A = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return (A + A.conj().T) / 2.0


def random_invertible(rng: np.random.Generator, r: int) -> np.ndarray:
    A = 0.4 * (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))
    return A + 2.0 * np.eye(r)


def random_dirichlet_set(rng: np.random.Generator, r: int, K: float = 2.0):
    alpha = random_invertible(rng, r)
    gamma = np.linalg.inv(alpha.conj().T) @ random_hermitian(rng, r)
    return make_dirichlet(alpha, gamma, K)


def random_robin_set(rng: np.random.Generator, r: int, K: float = 2.0):
    beta = random_invertible(rng, r)
    alpha = beta @ random_hermitian(rng, r)
    delta = np.linalg.inv(beta.conj().T) @ random_hermitian(rng, r)
    return complete_coefficients(alpha, beta, delta, K)


@pytest.fixture(scope="session")
def point_halfline():
    return point_halfline_model


@pytest.fixture(scope="session")
def line_halfplane():
    return line_halfplane_model


@pytest.fixture(scope="session")
def interval():
    return interval_model


@pytest.fixture(scope="session")
def dirichlet_set():
    return random_dirichlet_set


@pytest.fixture(scope="session")
def robin_set():
    return random_robin_set


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
