import numpy as np
import pytest
from hypothesis import settings

from capres.netmodel import Branch, Bus, Network, bundled_path, load_network

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def bw33():
    return load_network(bundled_path("bw33"))


@pytest.fixture(scope="session")
def syn7():
    return load_network(bundled_path("syn7"))


@pytest.fixture
def two_bus():
    return Network(
        buses=(Bus(0), Bus(1, 100.0, 60.0)),
        branches=(Branch(0, 1, 0.1, 0.05),),
        v_nom=12.66,
    )


def random_tree(rng: np.random.Generator, n: int, v_nom: float = 12.66) -> Network:
    """Random radial feeder: bus b > 0 hangs off a uniformly chosen earlier bus."""
    buses = [Bus(0)] + [Bus(b, float(rng.uniform(0, 500)), float(rng.uniform(0, 400))) for b in range(1, n)]
    branches = tuple(
        Branch(int(rng.integers(0, b)), b, float(rng.uniform(0.01, 1.5)), float(rng.uniform(0.01, 1.5)))
        for b in range(1, n)
    )
    return Network(tuple(buses), branches, v_nom)


# criterion number -> (passed, detail); filled by test_acceptance, printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
