import numpy as np
import pytest

from nmbg.geometry import Camera, look_at


def simple_camera(size=64, f=100.0, R=None, T=None):
    return Camera(f, f, size / 2, size / 2, np.eye(3) if R is None else R, np.zeros(3) if T is None else T,
                  size, size)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def orbit_camera(rng, width, height, distance=3.0, f=None):
    """Camera on a sphere around the origin looking at it."""
    while True:
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        if abs(d[1]) < 0.95:
            break
    pos = distance * d
    R = look_at(pos, np.zeros(3), [0.0, 1.0, 0.0])
    f = f or 0.9 * max(width, height)
    return Camera(f, f, width / 2, height / 2, R, -R @ pos, width, height)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scene_dir(tmp_path):
    """A tiny textured-cube scene written to disk with its manifest."""
    from nmbg.synthetic import textured_cube_scene, write_scene

    write_scene(tmp_path, textured_cube_scene(n_views=4, size=16, subdiv=3))
    return tmp_path


ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
