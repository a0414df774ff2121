import numpy as np
import pytest

from branchfreq.process_model import ProcessSpec, example2_spec


@pytest.fixture
def ex2():
    return example2_spec(0.25, 0.40, 0.35)


@pytest.fixture
def fission():
    return example2_spec(0.0, 1.0, 0.0)


@pytest.fixture
def identity_spec():
    return ProcessSpec.build([[(1.0, (1,))]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
