import numpy as np
import pytest

from adapsca import _kernel_py
from adapsca.network import Deployment, Node, NodeKind

try:
    from adapsca import _kernel as _kernel_c
except ImportError:  # pragma: no cover - extension not built
    _kernel_c = None

KERNELS = [_kernel_py] + ([_kernel_c] if _kernel_c is not None else [])

_acceptance: dict[str, tuple[str, str]] = {}
_notes: dict[str, list[str]] = {}


def note(tag: str, text: str) -> None:
    """Attach a measured value to a criterion's summary line."""
    _notes.setdefault(tag, []).append(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(tag, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    tag, title = marker
    prev = _acceptance.get(tag, ("PASS", title))[0]
    outcome = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
    _acceptance[tag] = (outcome, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_acceptance, key=lambda t: int(t.lstrip("AC"))):
        outcome, title = _acceptance[tag]
        terminalreporter.write_line(f"{tag:>5} {outcome}  {title}")
        for text in _notes.get(tag, []):
            terminalreporter.write_line(f"{'':>5}       {text}")


@pytest.fixture(params=KERNELS, ids=lambda k: k.NAME)
def kernel(request):
    return request.param


def make_deployment(points, anchors, comm_range=30.0, area=(100.0, 100.0)):
    nodes = tuple(
        Node(i, (float(x), float(y)), NodeKind.ANCHOR if i in anchors else NodeKind.UNKNOWN)
        for i, (x, y) in enumerate(points)
    )
    return Deployment(area[0], area[1], comm_range, nodes)


@pytest.fixture
def line3():
    return make_deployment([(0, 0), (10, 0), (20, 0)], {0}, comm_range=15.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
