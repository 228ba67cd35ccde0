from __future__ import annotations

import numpy as np
import pytest

from willmore_lab.surface import make_clifford_torus, make_flat_torus, make_geodesic_sphere


ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        verdict: dict[int, bool] = {}
        for line in ACCEPTANCE_LINES:
            item = int(line.split("[", 1)[1].split("]", 1)[0])
            verdict[item] = verdict.get(item, True) and line.startswith("PASS")
        terminalreporter.write_line("")
        for item in sorted(verdict):
            terminalreporter.write_line(f"criterion {item:2d}: {'PASS' if verdict[item] else 'FAIL'}")


@pytest.fixture(scope="session")
def clifford32():
    return make_clifford_torus(32)


@pytest.fixture(scope="session")
def clifford64():
    return make_clifford_torus(64)


@pytest.fixture(scope="session")
def flat06():
    return make_flat_torus(0.6, 48)


@pytest.fixture(scope="session")
def sphere_half():
    return make_geodesic_sphere(np.eye(4)[0], np.pi / 2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n=None):
    shape = (4,) if n is None else (n, 4)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def random_tangent(rng, p):
    g = rng.standard_normal(4)
    g -= (g @ p) * p
    return g / np.linalg.norm(g)
