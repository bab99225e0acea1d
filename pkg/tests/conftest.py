import numpy as np
import pytest

from manifold1bit import ExperimentConfig, sample_manifold, sigma_delta_spec
from manifold1bit.harness import build_gmra_for, test_points_for, training_points_for

# The rate-distortion experiment configuration used throughout the suite:
# 2-sphere in R^20, 20,000 training points, GMRA to level 15, p=10,
# orders 2 and 4 at levels 6 and 12.  The oversampling sweep extends far
# enough that both levels visibly reach their approximation floors.
RD_SWEEP_CFG = ExperimentConfig(
    ambient_dim=20,
    manifold="sphere",
    intrinsic_dim=2,
    n_train=20000,
    n_test=100,
    j_max=15,
    levels=[6, 12],
    schemes=[sigma_delta_spec(2), sigma_delta_spec(4)],
    p=10,
    lambdas=[5, 25, 101, 401, 1601],
    ensemble="gaussian",
    seed=20260810,
    mu=0.05,
)


@pytest.fixture(scope="session")
def sphere_train():
    return training_points_for(RD_SWEEP_CFG)


@pytest.fixture(scope="session")
def sphere_gmra():
    return build_gmra_for(RD_SWEEP_CFG)


@pytest.fixture(scope="session")
def sphere_test100():
    return test_points_for(RD_SWEEP_CFG)


@pytest.fixture(scope="session")
def sphere_fresh1000():
    return sample_manifold("sphere", 1000, 20, seed=91, mu=0.05, d=2,
                           frame_seed=RD_SWEEP_CFG.seed)


@pytest.fixture(scope="session")
def circle_gmra():
    from manifold1bit import build_gmra
    pts = sample_manifold("circle", 4000, 3, seed=5, mu=0.0)
    return build_gmra(pts, 1, 6, seed=2), pts
