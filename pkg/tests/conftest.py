import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vemprec import generate_voronoi_mesh  # noqa: E402


@pytest.fixture(scope="session")
def voronoi100():
    return generate_voronoi_mesh(100, 100, 42)


@pytest.fixture(scope="session")
def raw_voronoi100():
    return generate_voronoi_mesh(100, 0, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def record(request):
    """record(criterion_id, ok, detail) -> stores one acceptance line."""
    store = request.config.stash[_ACCEPTANCE]

    def _record(cid: int, ok: bool, detail: str) -> None:
        store[cid] = (bool(ok), detail)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(store):
        ok, detail = store[cid]
        terminalreporter.write_line(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
