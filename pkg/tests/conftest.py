import sys

import numpy as np
import pytest

import corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_generate_tests(metafunc):
    if "corpus_graph" in metafunc.fixturenames:
        items = corpus.graphs(max_n=64)
        metafunc.parametrize("corpus_graph", [g for _, g in items], ids=[n for n, _ in items])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
