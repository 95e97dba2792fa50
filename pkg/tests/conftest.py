import numpy as np
import pytest

from pbm3d.fixtures import make_fixture
from pbm3d.polar import CameraImage


@pytest.fixture(scope="session")
def textured():
    return make_fixture("textured", 64, 0)


@pytest.fixture(scope="session")
def textured128():
    return make_fixture("textured", 128, 0)


def random_image(rng, shape=(16, 16)):
    return CameraImage(*rng.uniform(0, 1, (3, *shape)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, title, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title} -- {detail}")
