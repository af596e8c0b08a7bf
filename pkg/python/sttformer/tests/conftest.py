"""Shared fixtures for the sttformer test suite."""

import numpy as np
import pytest

from sttformer.core.tensor import get_dtype, precision_name, set_precision
from sttformer.data.synthetic import make_synthetic_dataset
from sttformer.model.config import tiny_config

# the plugin is auto-registered when installed; importing it keeps the
# fixture available from a plain checkout too
from sttformer.pytest_plugin import sttformer  # noqa: F401


@pytest.fixture(autouse=True)
def _restore_precision():
    # CLI commands set the process-wide precision
    previous = precision_name(get_dtype())
    yield
    set_precision(previous)


@pytest.fixture
def f64():
    set_precision("f64")
    yield np.float64


@pytest.fixture
def tiny_cfg():
    return tiny_config()


@pytest.fixture
def tiny_dataset(tiny_cfg):
    """Three classes, four samples each, shaped for ``tiny_config``."""
    return make_synthetic_dataset(
        tiny_cfg.num_classes, 4, tiny_cfg.num_frames, tiny_cfg.num_joints, seed=0
    )
