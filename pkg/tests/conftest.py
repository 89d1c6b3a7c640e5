import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skgrec.graph import (  # noqa: E402
    EdgeKind,
    EdgeRecord,
    EntityRecord,
    KnowledgeGraph,
    PaperRecord,
    SubType,
    TopType,
    save_graph,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_graph():
    """Two papers, three entities, one citation, two mentions."""
    papers = {
        "p1": PaperRecord(paper_id="p1", title="Paper one", abstract="about tasks"),
        "p2": PaperRecord(paper_id="p2", title="Paper two", abstract="about methods"),
    }
    entities = {
        "e1": EntityRecord(entity_id="e1", surface="image segmentation", top_type=TopType.TASK),
        "e2": EntityRecord(entity_id="e2", surface="u-net", top_type=TopType.METHOD),
        "e3": EntityRecord(entity_id="e3", surface="dice score", top_type=TopType.METRIC),
    }
    edges = [
        EdgeRecord(source="p1", target="p2", kind=EdgeKind.CITES),
        EdgeRecord(source="p1", target="e1", kind=EdgeKind.MENTIONS),
        EdgeRecord(source="p2", target="e2", kind=EdgeKind.MENTIONS),
    ]
    return KnowledgeGraph(papers=papers, entities=entities).with_edges(edges)


@pytest.fixture
def tiny_graph():
    return make_graph()


@pytest.fixture
def tiny_corpus_file(tmp_path, tiny_graph):
    path = tmp_path / "corpus.json"
    save_graph(tiny_graph, str(path))
    return str(path)


FIXTURES = Path(__file__).parent / "fixtures"
