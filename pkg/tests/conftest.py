import numpy as np
import pytest

from fisheye_me import _kernels
from fisheye_me.projection import CameraModel
from fisheye_me.synth import PlanarScene, noise_texture, render_sequence, translation_for_steps

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_kernels, "USE_NUMBA", request.param == "numba")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def planar_pair(size=256, steps=(5, 0), seed=1, depth=1000.0, pitch=15.625):
    cam = CameraModel.circular(size)
    tex = noise_texture(512, 64, seed=seed)
    scene = PlanarScene(tex, pitch, depth, translation_for_steps(cam, depth, *steps))
    ref, target = render_sequence(scene, cam, 2)
    return cam, ref, target


@pytest.fixture(scope="session")
def planar_256():
    return planar_pair()
