import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from failmap.dataset import Dataset, Meta


def make_dataset(features, ground_truth=None, prediction=None, error=None, flags=None):
    """Small-dataset helper with zero-filled metadata defaults."""
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    meta = Meta(
        ground_truth=np.asarray(ground_truth if ground_truth is not None else np.zeros(n), dtype=np.float64),
        prediction=np.asarray(prediction if prediction is not None else np.zeros(n), dtype=np.float64),
        error_measure=np.asarray(error if error is not None else np.zeros(n), dtype=np.float64),
        aux_flags={k: np.asarray(v, dtype=np.float64) for k, v in (flags or {}).items()},
    )
    names = [f"f{i}" for i in range(features.shape[1])]
    return Dataset(features=features, feature_names=names, meta=meta)


@pytest.fixture
def planted():
    from failmap.synth import generate_planted

    return generate_planted(seed=7)
