"""
Shared fixtures: precision contexts and a throwaway results database.
"""
import pytest

from app.utils.numeric import make_context


@pytest.fixture(scope="session")
def ctx320():
    return make_context(320)


@pytest.fixture(scope="session")
def ctx128():
    return make_context(128)


@pytest.fixture
def db_url(tmp_path):
    return f"sqlite+aiosqlite:///{tmp_path / 'results.db'}"
