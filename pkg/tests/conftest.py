# tests/conftest.py
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from domains.curricula import base_library, fig3_pair  # noqa: E402
from grammar.library import Library  # noqa: E402
from lang.primitives import PRIMITIVES  # noqa: E402
from lang.program import parse_program  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale reproductions")


def parse(text: str):
    return parse_program(text, PRIMITIVES)


@pytest.fixture
def fig3_library() -> Library:
    return base_library("fig3")


@pytest.fixture
def list_library() -> Library:
    return base_library("list")


@pytest.fixture
def fig3_tasks():
    return fig3_pair()


@pytest.fixture
def tiny_library() -> Library:
    """Three productions over int: enough to enumerate exhaustively."""
    return Library.uniform([PRIMITIVES["+"], PRIMITIVES["0"], PRIMITIVES["1"]])


def sample_programs(library: Library, requests, count: int, seed: int, max_size: int = None,
                    max_depth: int = 8, distinct: bool = False):
    """Up to `count` (request, program) draws cycling through `requests`; deep draws are skipped."""
    from grammar.library import SamplingDepthExceeded

    rng = np.random.default_rng(seed)
    drawn, seen = [], set()
    for attempt in range(count * 50):
        if len(drawn) == count:
            break
        request = requests[attempt % len(requests)]
        try:
            program = library.sample(request, rng, max_depth)
        except SamplingDepthExceeded:
            continue
        if max_size is not None and program.size() > max_size:
            continue
        if distinct and program in seen:
            continue
        seen.add(program)
        drawn.append((request, program))
    return drawn
