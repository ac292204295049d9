import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinann.dataset import synthetic_glyphs
from spinann.network import hardware as hw
from spinann.network.model import NetworkSpec, TrainSettings, quantize, train

settings.register_profile("default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def glyphs():
    """Training and evaluation glyph sets at the default sizes."""
    return synthetic_glyphs(0, 40), synthetic_glyphs(1, 10)


@pytest.fixture(scope="session")
def trained(glyphs):
    """Float and quantized 256-20-26 networks trained with the default settings."""
    tr, _ = glyphs
    spec = NetworkSpec((256, 20, 26), activation=hw.default_activation())
    net = train(tr.X, tr.one_hot(), spec, TrainSettings(seed=0))
    return net, quantize(net)


@pytest.fixture(scope="session")
def pipeline(trained):
    return hw.deploy(trained[1])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(n: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE[n] = line
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
