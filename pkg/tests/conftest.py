import pytest

from hsfsim.geom import RectPanel, Vec3
from hsfsim.scenario import Role, Scene, Wall, build_paper_scene, validate_scene

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def room_scene():
    return build_paper_scene()


def box_walls(lx, ly, lz, role=Role.PLAIN_WALL, tile_size=None):
    """Six inward-facing faces of an axis-aligned box anchored at the origin."""
    P = RectPanel
    faces = {
        "x0": P((0, 0, 0), (0, ly, 0), (0, 0, lz)),
        "x1": P((lx, ly, 0), (0, -ly, 0), (0, 0, lz)),
        "y0": P((lx, 0, 0), (-lx, 0, 0), (0, 0, lz)),
        "y1": P((0, ly, 0), (lx, 0, 0), (0, 0, lz)),
        "z0": P((0, 0, 0), (lx, 0, 0), (0, ly, 0)),
        "z1": P((0, 0, lz), (0, ly, 0), (lx, 0, 0)),
    }
    return [Wall(k, p, role, tile_size=tile_size) for k, p in faces.items()]


def shoebox(tx=(1.0, 1.2, 1.1), rx=(3.1, 2.2, 1.6), size=(4.0, 3.0, 2.5)):
    return validate_scene(Scene(tuple(box_walls(*size)), (), Vec3(*tx), (Vec3(*rx),)))
