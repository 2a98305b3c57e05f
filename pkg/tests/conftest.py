import numpy as np
import pytest

from cimpl.scenegen import DiffuseSpec, SceneSpec, SourceSpec, Trajectory, render_scene


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def static_scene():
    """Static white-noise source at 45 degrees, 10 dB above a diffuse floor."""
    spec = SceneSpec(
        [SourceSpec(Trajectory.static(45.0, 5.0), level_db=-20.0)],
        diffuse=DiffuseSpec(level_db=-30.0, n_plane_waves=64),
        duration=5.0,
        seed=11,
    )
    return render_scene(spec)


_REPORT = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per criterion, then assert."""
    lines = request.config.stash.setdefault(_REPORT, [])

    def check(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
