"""Shared fixtures; the expensive end-to-end protocol runs are session-scoped
so the module tests and the acceptance suite reuse the same results."""

import pytest

from gazebot import presets
from gazebot.bench import run_protocol
from gazebot.sim import NoiseConfig

MC_SEEDS = list(range(100, 110))

# verdict lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def zero_noise_reports():
    """Two runs of the clean benchmark with the same seed."""
    scene = presets.table_scene(seed=0)
    return [run_protocol(scene) for _ in range(2)]


@pytest.fixture(scope="session")
def noisy_gaze_reports():
    """Monte Carlo envelope: gaze sigma 5 px across ten seeds."""
    reports = []
    for seed in MC_SEEDS:
        scene = presets.table_scene(seed=seed, noise=NoiseConfig(gaze_sigma=5.0))
        reports.append(run_protocol(scene))
    return reports


@pytest.fixture(scope="session")
def short_session():
    """A 900-frame recorded session with sensor noise plus its live event log."""
    from gazebot.session import record_session

    scene = presets.table_scene(seed=21, noise=NoiseConfig(gaze_sigma=2.0))
    frames, live_log = record_session(scene, max_frames=900)
    return scene, frames, live_log
