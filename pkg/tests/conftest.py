from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crowdmatch.demo import seed_mini_corpus
from crowdmatch.providers import default_registry
from crowdmatch.workspace import Workspace


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    return Workspace.init(tmp_path / "ws", project="test")


@pytest.fixture
def registry():
    return default_registry()


@pytest.fixture
def mini_workspace(tmp_path, registry) -> Workspace:
    """The bundled demo corpus, fully embedded with the reference provider."""
    ws = Workspace.init(tmp_path / "mini", project="mini")
    seed_mini_corpus(ws)
    provider = registry.get("ref-384")
    ws.upsert_embeddings(provider, "issue")
    ws.upsert_embeddings(provider, "review")
    return ws
