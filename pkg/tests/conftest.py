import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from phylorank.tree_core import parse_newick  # noqa: E402

# 11 leaves whose lambda values are 1 (x5), 2, 3, 4, 5, 10
ELEVEN_LEAF = "((((a,b),(c,d)),(e,f)),(((g,h),i),(j,k)));"
# 9 leaves; the ((E,F),G) clade is the reference vertex
NINE_LEAF = "((((E,F),G),(H,I)),((A,B),(C,D)));"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def eleven_leaf():
    return parse_newick(ELEVEN_LEAF)


@pytest.fixture
def nine_leaf():
    return parse_newick(NINE_LEAF)


@pytest.fixture
def balanced4():
    return parse_newick("((A,B),(C,D));")


@pytest.fixture
def caterpillar4():
    return parse_newick("(((A,B),C),D);")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
