import pytest

from aerialnav.expert import DelayedPolicy, ExpertPolicy, record_episode
from aerialnav.sim import GenerationConfig, generate_scene

OPEN = GenerationConfig(n_obstacles=(0, 0))


@pytest.fixture(scope="session")
def open_scenes():
    return [generate_scene(s, "easy", OPEN) for s in range(40)]


@pytest.fixture(scope="session")
def cluttered_scenes():
    return [generate_scene(s, "easy") for s in range(500, 560)]


@pytest.fixture(scope="session")
def expert_trajs(cluttered_scenes):
    return [record_episode(s, ExpertPolicy()) for s in cluttered_scenes]


@pytest.fixture(scope="session")
def delayed_open_trajs(open_scenes):
    return [record_episode(s, DelayedPolicy(ExpertPolicy(), 3)) for s in open_scenes]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
