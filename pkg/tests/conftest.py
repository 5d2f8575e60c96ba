import time

import pytest

from singpot import bounds, tables


@pytest.fixture(scope="session")
def sweep():
    """Default three-family sweep, shared by the bound tests."""
    start = time.perf_counter()
    pts = bounds.default_sweep()
    return pts, time.perf_counter() - start


@pytest.fixture(scope="session")
def table64():
    start = time.perf_counter()
    table = tables.build_table(64, 1e-3)
    return table, time.perf_counter() - start


@pytest.fixture(scope="session")
def table16():
    return tables.build_table(16, 1e-3)
