import os
import sys

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from quasilab.kernel import FiniteAlgebra, Signature  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--deep", action="store_true", help="run the gated deep reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--deep") or os.environ.get("QUASILAB_DEEP") == "1":
        return
    skip = pytest.mark.skip(reason="deep reproduction; enable with --deep or QUASILAB_DEEP=1")
    for item in items:
        if "deep" in item.keywords:
            item.add_marker(skip)


SIGS = [
    Signature((("f", 2),)),
    Signature((("f", 2), ("g", 1))),
    Signature((("g", 1), ("c", 0))),
    Signature((("m", 3),)),
]


@st.composite
def algebras(draw, sizes=(2, 3), sigs=None):
    """Random small algebras over a few fixed signatures."""
    sig = draw(st.sampled_from(sigs or SIGS))
    n = draw(st.sampled_from(sizes))
    tables = {}
    for name, ar in sig.ops:
        cells = draw(st.lists(st.integers(0, n - 1), min_size=n ** ar, max_size=n ** ar))
        tables[name] = np.array(cells, dtype=np.int32)
    return FiniteAlgebra("r", sig, [str(i) for i in range(n)], tables)


# ---------------------------------------------------------------- acceptance ledger

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _CRITERIA[num] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[num]
        line = f"criterion {num:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a short result summary to the criterion line."""
    def put(text: str):
        request.node.criterion_detail = text
        print(f"criterion detail: {text}")
    return put
