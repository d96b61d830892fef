import json

import numpy as np
import pytest

from dexlink import bundled_model_text
from dexlink.kinematics import load_hand_model


@pytest.fixture(scope="session")
def glove_doc():
    return bundled_model_text("glove21")


@pytest.fixture(scope="session")
def robot_doc():
    return bundled_model_text("leaphand16")


@pytest.fixture(scope="session")
def glove_model(glove_doc):
    return load_hand_model(glove_doc)


@pytest.fixture(scope="session")
def robot_model(robot_doc):
    return load_hand_model(robot_doc)


@pytest.fixture(scope="session")
def glove_json(glove_doc):
    return json.loads(glove_doc)


@pytest.fixture(scope="session")
def robot_json(robot_doc):
    return json.loads(robot_doc)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_q(model, rng, margin=0.0):
    """Uniform sample inside the model's joint limits."""
    lo, hi = model.lower + margin, model.upper - margin
    return lo + (hi - lo) * rng.random(model.dof_count)
