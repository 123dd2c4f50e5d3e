"""Shared fixtures. Coarse bodies (3 cm grid, 3-ring dilation) keep the unit
tests fast; the acceptance module uses the default resolution."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hppm.pipeline import train_models
from hppm.shape_model import TrainingConfig
from hppm.synth import SynthBodySpec, synth_dataset, synth_sample
from hppm.templates import build_templates, load_merge_map

settings.register_profile("hppm", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hppm")

COARSE = SynthBodySpec(grid_spacing=0.03)


@pytest.fixture(scope="session")
def coarse_spec():
    return COARSE


@pytest.fixture(scope="session")
def coarse_rest():
    return synth_sample(COARSE)


@pytest.fixture(scope="session")
def coarse_templates(coarse_rest):
    return build_templates(coarse_rest.mesh, coarse_rest.weights, load_merge_map(), 3)


@pytest.fixture(scope="session")
def coarse_data():
    return synth_dataset(COARSE, range(40))


@pytest.fixture(scope="session")
def coarse_models(coarse_templates, coarse_data):
    bodies = [s.mesh.vertices for s in coarse_data[:30]]
    joints = [s.joints for s in coarse_data[:30]]
    return train_models(coarse_templates, bodies, joints, TrainingConfig(2.0, 4, 24))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# acceptance lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
