import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from treedecide.tree import load_tree, parse_tree

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def two_leaf():
    return load_tree(DATA / "two_leaf.json")


@pytest.fixture(scope="session")
def balanced():
    """Four options on a balanced tree: internal nodes 0, 1, 4; leaves 2, 3, 5, 6."""
    return load_tree(DATA / "balanced_four.json")


@pytest.fixture(scope="session")
def five():
    """Five options: internal nodes 0, 1, 4, 6; leaves 2, 3, 5, 7, 8."""
    return load_tree(DATA / "five_options.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def caterpillar_document(n: int) -> dict:
    doc = {"option": f"o{n - 1}"}
    for k in range(n - 2, -1, -1):
        doc = {"left": {"option": f"o{k}"}, "right": doc}
    return doc


def balanced_document(depth: int, prefix: str = "o") -> dict:
    if depth == 0:
        return {"option": prefix}
    return {"left": balanced_document(depth - 1, prefix + "0"), "right": balanced_document(depth - 1, prefix + "1")}


def _label(doc, counter=None):
    counter = counter if counter is not None else [0]
    if "option" in doc:
        counter[0] += 1
        return {"option": f"o{counter[0]}"}
    return {"left": _label(doc["left"], counter), "right": _label(doc["right"], counter)}


def _shape(leaves: int):
    if leaves == 1:
        return st.just({"option": None})
    return st.integers(1, leaves - 1).flatmap(
        lambda k: st.tuples(_shape(k), _shape(leaves - k)).map(lambda lr: {"left": lr[0], "right": lr[1]})
    )


def tree_documents(min_leaves: int = 2, max_leaves: int = 7):
    """Hypothesis strategy for labelled tree documents with a bounded leaf count."""
    return st.integers(min_leaves, max_leaves).flatmap(_shape).map(_label)


def trees(min_leaves: int = 2, max_leaves: int = 7):
    return tree_documents(min_leaves, max_leaves).map(parse_tree)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
