"""Pytest configuration and shared fixtures for test suite."""

import json
import os
import sys
from pathlib import Path

import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from median_dual import build_dual  # noqa: E402
from pocset_core import Element  # noqa: E402
from scenarios import chain, compass, compass_pocset, cube, path3, pompom, square  # noqa: E402


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep POCMEM_* settings from the outer shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("POCMEM_"):
            monkeypatch.delenv(key, raising=False)
    yield


@pytest.fixture
def square_pocset():
    """Two transverse tags; Γ is a 4-cycle."""
    return square()


@pytest.fixture
def path3_pocset():
    """``a < b``; Γ is a path on three vertices."""
    return path3()


@pytest.fixture
def chain3():
    """``a < b < c``."""
    return chain(3)


@pytest.fixture
def cube3():
    return cube(3)


@pytest.fixture
def pompom3():
    return pompom(3)


@pytest.fixture
def compass_p():
    """The compass poc-set: n < s* and e < w*."""
    return compass_pocset()


@pytest.fixture
def compass_graph(compass_p):
    return build_dual(compass_p)


@pytest.fixture(scope="session")
def compass60():
    """Compass realization with overlapping arcs (8 visible states)."""
    return compass(60)


@pytest.fixture(scope="session")
def compass30():
    """Compass realization with gaps between arcs (5 visible states)."""
    return compass(30)


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document to a temporary file and return its path."""

    def _write(name, document):
        path = tmp_path / name
        if isinstance(document, str):
            path.write_text(document, encoding="utf-8")
        else:
            path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def vertex():
    """Build a vertex from element names."""

    def _vertex(*names):
        return frozenset(Element.parse(name) for name in names)

    return _vertex
