import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from coho_euler import InvariantMetric, RoundS3T2Profile, reductive_split, su2, warped_torus


@pytest.fixture
def su2_split():
    return reductive_split(su2(), [])


@pytest.fixture
def rigid_body_metric(su2_split):
    return InvariantMetric(su2_split, np.diag([1.0, 2.0, 3.0]))


@pytest.fixture
def round_s3_t2():
    return RoundS3T2Profile()


@pytest.fixture
def flat_torus():
    # flat 3-torus: two unit fibre circles over a unit base circle
    return warped_torus(1.0, [[0.0], [0.0]])
