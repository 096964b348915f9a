import os

import pytest
from hypothesis import HealthCheck, settings

from chronostore import database
from chronostore.docstore.store import DocStore
from chronostore.graph import TemporalGraph
from chronostore.synthetic import random_events

# Full-scale sweeps are opt-in; the default run uses reduced sizes.
ACCEPTANCE = os.environ.get("CHRONOSTORE_ACCEPTANCE") == "1"

settings.register_profile(
    "chronostore",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("chronostore")


def scale(reduced, full):
    return full if ACCEPTANCE else reduced


def build_graph(events, layouts=("st", "mt")) -> TemporalGraph:
    graph = TemporalGraph(DocStore(), layouts)
    graph.writer().apply_stream(events)
    return graph


@pytest.fixture(params=["st", "mt"])
def layout_name(request):
    return request.param


@pytest.fixture
def graph(layout_name):
    """An empty graph carrying one layout."""
    return TemporalGraph(DocStore(), (layout_name,))


@pytest.fixture
def both():
    """An empty graph carrying ST and MT side by side."""
    return TemporalGraph(DocStore(), ("st", "mt"))


@pytest.fixture
def stream():
    return random_events(seed=7, vertices=30, events=400)


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CHRONOSTORE_DATA_DIR", str(tmp_path / "data"))
    return tmp_path / "data"


@pytest.fixture(autouse=True)
def _no_open_store():
    yield
    database.close_store()
