import numpy as np
import pytest

import hyperfill as hf

# one line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def interval8():
    return hf.unit_cube_space(1, 8)


@pytest.fixture(scope="session")
def plain6(interval8):
    return hf.build_filling(interval8, 0, 6)


@pytest.fixture(scope="session")
def interval10():
    return hf.unit_cube_space(1, 10)


@pytest.fixture(scope="session")
def cantor6(interval10):
    return hf.cantor_mask(interval10, 6)


@pytest.fixture(scope="session")
def pair6(interval10, cantor6):
    return hf.build_nested_filling(interval10, cantor6, 0, 6)


@pytest.fixture(scope="session")
def pair8(interval10, cantor6):
    return hf.build_nested_filling(interval10, cantor6, 0, 8)


@pytest.fixture(scope="session")
def subpair(interval10, cantor6):
    sub, emb = hf.subspace(interval10, cantor6)
    return sub, emb


@pytest.fixture(scope="session")
def cantor_attractor():
    space, _ = hf.ifs_attractor(hf.middle_thirds_system(8))
    return space


@pytest.fixture(scope="session")
def tiny_filling():
    space = hf.unit_cube_space(1, 4)
    return hf.build_filling(space, 0, 2)


def tent_batch(space, count, seed):
    from hyperfill.verify import random_tent_functions
    rng = np.random.default_rng(seed)
    return random_tent_functions(space, count, rng)
