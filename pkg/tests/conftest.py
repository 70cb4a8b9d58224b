import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from circuit import BrickworkCircuit, Brick, ControlSide, GateKind  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cnot_circuit():
    """One left-controlled CNOT on two qubits."""
    return BrickworkCircuit(2, 1, [Brick(0, 0, GateKind.CNOT, ControlSide.LEFT)])


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config next to a fresh output directory and return its path."""

    def _write(**fields):
        body = {
            "experiment": "mi_scan",
            "p_grid": [0.1, 0.5, 0.9],
            "r_grid": [0.5],
            "n_qubits": [6],
            "n_realizations": 3,
            "master_seed": 7,
            "depth_factor": 1,
            "output_dir": str(tmp_path / "out"),
        }
        body.update(fields)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(body))
        return str(path)

    return _write
