import numpy as np
import pytest

from myoloop.movements import (
    HAND_OPEN,
    POWER_GRASP,
    REST,
    WRIST_PRONATE,
    WRIST_SUPINATE,
)
from myoloop.subspace import CalibrationSet, fit_lda


@pytest.fixture
def stage_a_movements():
    return (REST, HAND_OPEN, POWER_GRASP, WRIST_PRONATE, WRIST_SUPINATE)


def gaussian_calibration(k=5, d=8, n=40, spread=6.0, seed=0, movements=None):
    """Well-separated Gaussian blobs; rest at the origin."""
    rng = np.random.default_rng(seed)
    if movements is None:
        movements = [REST] + [f"Movement {i}" for i in range(1, k)]
    classes = {}
    for i, movement in enumerate(movements):
        center = np.zeros(d)
        if movement != REST:
            center[(i - 1) % d] = spread
        classes[movement] = center + rng.standard_normal((n, d))
    return CalibrationSet(classes)


@pytest.fixture
def fitted_model():
    cal = gaussian_calibration()
    return fit_lda(cal), cal
