import os
from pathlib import Path

import numpy as np
import pytest

from translit.dataset import build_vocab, load_pairs

DATA = Path(__file__).parent / "data"


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="run multi-hour desk-scale training checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow") or os.environ.get("TRANSLIT_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def en_ipa_50():
    return load_pairs(DATA / "en_ipa_50.tsv")


@pytest.fixture(scope="session")
def tiny_vocabs():
    return build_vocab(["abcd"]), build_vocab(["xyz"])


# ---------------------------------------------------------------- acceptance summary

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's verdict, then assert it."""
    def record(number, name, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} {name}: {detail}"
        _CRITERIA[request.node.nodeid] = (number, line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    lines = dict(_CRITERIA.values())
    for outcome in ("failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and nodeid not in _CRITERIA:
                number = nodeid.split("::test_c")[-1].split("_")[0]
                tag = "SKIP" if outcome == "skipped" else "FAIL"
                lines[number] = f"criterion {number} {tag} {nodeid.split('::')[-1]}"
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(lines, key=lambda n: int(n)):
            terminalreporter.write_line(lines[number])
