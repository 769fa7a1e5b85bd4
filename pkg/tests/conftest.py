import json

import numpy as np
import pytest

from graze_lab.bodies import BodyPair, SupportBody

A411 = np.diag([4.0, 1.0, 1.0])
# first coefficient of the (4, 0) term for which diag(4,1,1) loses strict
# convexity at margin 1e-6, found by bisection: 0.082928794
BREAKING_EPS = 0.09
# planarity residual of the perturbed graze from (4, 0, 0), step 0.02;
# dense sampling (step 0.005) gives 0.0158454
PERTURBED_PLANARITY = 0.015840764525034908


@pytest.fixture(scope="session")
def ball1():
    return SupportBody.ball(1.0)


@pytest.fixture(scope="session")
def ellipsoid():
    return SupportBody.ellipsoid(A411)


@pytest.fixture(scope="session")
def perturbed():
    return SupportBody.perturbed(A411, [(4, 0, 0.05)])


@pytest.fixture(scope="session")
def ellipsoid_in_ball6(ellipsoid):
    return BodyPair(SupportBody.ball(6.0), ellipsoid)


@pytest.fixture
def body_files(tmp_path):
    files = {
        "ball1": {"kind": "ball", "radius": 1.0},
        "ball4": {"kind": "ball", "radius": 4.0},
        "ball6": {"kind": "ball", "radius": 6.0},
        "ellipsoid": {"kind": "ellipsoid", "matrix": A411.tolist()},
        "perturbed": {"kind": "perturbed_ellipsoid", "matrix": A411.tolist(),
                      "harmonics": [{"l": 4, "m": 0, "coef": 0.05}]},
    }
    out = {}
    for name, cfg in files.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        out[name] = path
    return out
