import numpy as np
import pytest

from crane_rl.datasets import NoiseModel, generate_actuator_log, generate_fk_dataset
from crane_rl.plant import DEFAULT_CHAIN, default_geometry
from crane_rl.surrogate import train_actuator_net, train_forward_net

N_SWEEPS = 4


@pytest.fixture(scope="session")
def actuator_nets():
    """Actuator networks for joints 2 and 3 trained on default-noise logs."""
    out = {}
    for joint in (2, 3):
        g = default_geometry(joint)
        rng = np.random.default_rng(100 + joint)
        log = generate_actuator_log(g, N_SWEEPS, NoiseModel(), rng)
        out[joint] = train_actuator_net(log, joint, rng, geometry=g)
    return out


@pytest.fixture(scope="session")
def forward_net():
    """Forward network trained on 500 default-noise samples."""
    rng = np.random.default_rng(200)
    data = generate_fk_dataset(DEFAULT_CHAIN, 500, NoiseModel(), rng)
    return train_forward_net(data, rng, chain=DEFAULT_CHAIN)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
