import os
from typing import Any, Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils import config_hash, validate_chain_length, validate_probability


class Config:
    # Paths and runtime
    OUTPUT_DIR = os.environ.get('MPTZX_OUTPUT_DIR', 'output')
    LOG_DIR = os.environ.get('MPTZX_LOG_DIR', 'logs')
    LOG_LEVEL = os.environ.get('MPTZX_LOG_LEVEL', 'INFO')
    WORKERS = int(os.environ.get('MPTZX_WORKERS', '1'))
    LEDGER_NAME = 'runs.db'

    # Circuit
    DEPTH_FACTOR = 4  # depth = 4N full layers

    # Oracles
    SELFTEST_CASES = {'stabilizer': 100, 'zx': 50}

    # Fits
    NU = 4.0 / 3.0
    T_ALPHA = 0.05
    MIN_FIT_SIGMA = 1e-3
    COLLAPSE_NUS = [0.8, 4.0 / 3.0, 2.0]
    BOUNDARY_EXPONENTS = [1.75, 2.0]
    SMALL_P_MAX = 0.2

    # Telemetry
    DISTANCE_WINDOW = 0.25
    DISTANCE_BIN_WIDTH = 0.5

    # (p, r) points whose circuit and diagrams phase_diagram dumps
    SAMPLE_POINTS = [(0.15, 0.1), (0.7, 0.8), (0.95, 0.05)]

    REALIZATIONS = 200


class DeskConfig(Config):
    REALIZATIONS = 200


class FullScaleConfig(Config):
    REALIZATIONS = 2000
    SELFTEST_CASES = {'stabilizer': 500, 'zx': 1000}


# Configuration mapping
config = {
    'desk': DeskConfig,
    'full': FullScaleConfig,
    'default': DeskConfig
}


def get_config() -> type:
    return config.get(os.environ.get('MPTZX_PROFILE', 'default'), DeskConfig)


Experiment = Literal['mi_scan', 'perc_scan', 'phase_diagram', 'slc', 'distance_stats', 'collapse', 'boundary_fit']
I2_EXPERIMENTS = {'mi_scan', 'phase_diagram', 'collapse', 'boundary_fit'}


class ExperimentConfig(BaseModel):
    """Validated experiment description, parsed from the JSON config file"""

    model_config = ConfigDict(extra='forbid')

    experiment: Experiment
    p_grid: List[float] = Field(min_length=1)
    r_grid: List[float] = Field(min_length=1)
    n_qubits: List[int] = Field(min_length=1)
    n_realizations: int = Field(default_factory=lambda: get_config().REALIZATIONS, gt=1)
    master_seed: int = Field(ge=0, lt=2 ** 64)
    depth_factor: int = Field(default=Config.DEPTH_FACTOR, ge=1)
    initial_state: Literal['bell_pairs', 'product'] = 'bell_pairs'
    min_cut: bool = False
    nu: float = Field(default=Config.NU, gt=0)
    collapse_nus: List[float] = Field(default_factory=lambda: list(Config.COLLAPSE_NUS))
    boundary_exponents: List[float] = Field(default_factory=lambda: list(Config.BOUNDARY_EXPONENTS))
    alpha: float = Field(default=Config.T_ALPHA, gt=0, lt=1)
    window: float = Field(default=Config.DISTANCE_WINDOW, gt=0, le=1)
    small_p_max: float = Field(default=Config.SMALL_P_MAX, gt=0, le=1)
    output_dir: str = Field(default_factory=lambda: Config.OUTPUT_DIR)
    workers: int = Field(default_factory=lambda: Config.WORKERS, ge=1)

    @field_validator('p_grid', 'r_grid')
    @classmethod
    def _probabilities(cls, values: List[float]) -> List[float]:
        bad = [v for v in values if not validate_probability(v)]
        if bad:
            raise ValueError(f'values outside [0, 1]: {bad}')
        return sorted(set(values))

    @field_validator('n_qubits')
    @classmethod
    def _even_sizes(cls, values: List[int]) -> List[int]:
        bad = [n for n in values if not validate_chain_length(n)]
        if bad:
            raise ValueError(f'chain lengths must be even and >= 2: {bad}')
        return sorted(set(values))

    @model_validator(mode='after')
    def _thirds(self) -> 'ExperimentConfig':
        if self.experiment in I2_EXPERIMENTS:
            bad = [n for n in self.n_qubits if not validate_chain_length(n, needs_thirds=True)]
            if bad:
                raise ValueError(f'n_qubits must be divisible by 6 for I2 experiments: {bad}')
        return self

    def depth_for(self, n_qubits: int) -> int:
        return self.depth_factor * n_qubits

    def hashed(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')

    @property
    def config_hash(self) -> str:
        return config_hash(self.hashed())

    def as_experiment(self, experiment: str) -> 'ExperimentConfig':
        """The same grid as another experiment, e.g. to find data produced by ``mi_scan``"""
        return self.model_copy(update={'experiment': experiment})
